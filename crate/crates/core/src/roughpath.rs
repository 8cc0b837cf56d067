//! The lift `(W, A)` of a vector Weierstrass function: increments, Chen and
//! symmetric-part checks, Hölder-type seminorms on dyadic grids and
//! convergence of truncated lifts.
//!
//! Matrices are stored row-major as `Vec<Vec<f64>>`; `second[i][j]` is the
//! iterated integral of component `i` against component `j`. Norms of
//! vectors and matrices are max-abs norms.

use rayon::prelude::*;
use serde::Serialize;

use crate::csvout::CsvTable;
use crate::error::{Error, Result};
use crate::iterated::{calibrate_tail, eval_i_limit, IteratedKernel, TrigTable};
use crate::time::RationalTime;
use crate::weier::{eval_vector, eval_vector_limit, TruncationPolicy, VectorWeierstrass};

/// Largest dyadic depth accepted by grid sweeps.
pub const MAX_GRID_DEPTH: u32 = 14;

/// Rate assertions allow this factor over the predicted ratio.
pub const RATE_MARGIN: f64 = 1.25;

/// `(X_{s,t}, 𝕏_{s,t})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoughIncrement {
    pub first: Vec<f64>,
    pub second: Vec<Vec<f64>>,
    pub s: RationalTime,
    pub t: RationalTime,
}

impl RoughIncrement {
    pub fn zero(d: usize, s: RationalTime, t: RationalTime) -> Self {
        RoughIncrement {
            first: vec![0.0; d],
            second: vec![vec![0.0; d]; d],
            s,
            t,
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// `second + secondᵀ - first ⊗ first`, zero for geometric lifts.
    pub fn symmetric_defect(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.second[i][j] + self.second[j][i] - self.first[i] * self.first[j])
                    .collect()
            })
            .collect()
    }
}

pub fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn check_order(s: &RationalTime, t: &RationalTime) -> Result<()> {
    if s > t {
        return Err(Error::Ordering(format!("need s <= t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// Kernels for every ordered component pair at one truncation level.
#[derive(Clone, Debug)]
pub struct TruncatedLift {
    v: VectorWeierstrass,
    n_max: usize,
    kernels: Vec<IteratedKernel>,
}

impl TruncatedLift {
    pub fn new(v: &VectorWeierstrass, n_max: usize) -> Result<Self> {
        let cs = v.components();
        let mut kernels = Vec::with_capacity(cs.len() * cs.len());
        for ci in cs {
            for cj in cs {
                kernels.push(IteratedKernel::new(ci, cj, n_max)?);
            }
        }
        Ok(TruncatedLift {
            v: v.clone(),
            n_max,
            kernels,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn increment(&self, s: &RationalTime, t: &RationalTime) -> Result<RoughIncrement> {
        check_order(s, t)?;
        let d = self.v.dim();
        if s == t {
            return Ok(RoughIncrement::zero(d, s.clone(), t.clone()));
        }
        let ws = eval_vector(&self.v, self.n_max, s);
        let wt = eval_vector(&self.v, self.n_max, t);
        let first = wt.iter().zip(&ws).map(|(a, b)| a - b).collect();
        let tables_s: Vec<TrigTable> = self.v.components().iter().map(|c| TrigTable::new(c.b(), self.n_max, s)).collect();
        let tables_t: Vec<TrigTable> = self.v.components().iter().map(|c| TrigTable::new(c.b(), self.n_max, t)).collect();
        let second = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        self.kernels[i * d + j].eval_tables(self.n_max, &tables_s[i], &tables_t[i], &tables_s[j], &tables_t[j])
                    })
                    .collect()
            })
            .collect();
        Ok(RoughIncrement {
            first,
            second,
            s: s.clone(),
            t: t.clone(),
        })
    }
}

/// Lift of the level-`N` truncation over `[s, t]`.
pub fn lift_truncated(v: &VectorWeierstrass, n_max: usize, s: &RationalTime, t: &RationalTime) -> Result<RoughIncrement> {
    TruncatedLift::new(v, n_max)?.increment(s, t)
}

/// Lift of the full series: second level entrywise to the policy's
/// tolerance, first level summed exactly at rational times.
pub fn lift_limit(v: &VectorWeierstrass, policy: &TruncationPolicy, s: &RationalTime, t: &RationalTime) -> Result<RoughIncrement> {
    check_order(s, t)?;
    v.check_liftable()?;
    policy.validate(v.min_alpha())?;
    let (tol, eps_prime, max_n) = match *policy {
        TruncationPolicy::Fixed(n) => return lift_truncated(v, n, s, t),
        TruncationPolicy::Tolerance { tol, eps_prime, max_n } => (tol, eps_prime, max_n),
    };
    let d = v.dim();
    if s == t {
        return Ok(RoughIncrement::zero(d, s.clone(), t.clone()));
    }
    let ws = eval_vector_limit(v, s);
    let wt = eval_vector_limit(v, t);
    let first = wt.iter().zip(&ws).map(|(a, b)| a - b).collect();
    let cs = v.components();
    let mut second = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            second[i][j] = eval_i_limit(&cs[i], &cs[j], s, t, tol, eps_prime, max_n)?.value;
        }
    }
    Ok(RoughIncrement {
        first,
        second,
        s: s.clone(),
        t: t.clone(),
    })
}

/// `𝕏_{s,t} - 𝕏_{s,u} - 𝕏_{u,t} - X_{s,u} ⊗ X_{u,t}` for the level-`N` lift.
pub fn check_chen(v: &VectorWeierstrass, n_max: usize, s: &RationalTime, u: &RationalTime, t: &RationalTime) -> Result<Vec<Vec<f64>>> {
    if !(s <= u && u <= t) {
        return Err(Error::Ordering(format!("need s <= u <= t, got ({s}, {u}, {t})")));
    }
    let lift = TruncatedLift::new(v, n_max)?;
    let st = lift.increment(s, t)?;
    let su = lift.increment(s, u)?;
    let ut = lift.increment(u, t)?;
    let d = v.dim();
    Ok((0..d)
        .map(|i| {
            (0..d)
                .map(|j| st.second[i][j] - su.second[i][j] - ut.second[i][j] - su.first[i] * ut.first[j])
                .collect()
        })
        .collect())
}

/// `second[i][j] - second[j][i]`.
pub fn levy_area(inc: &RoughIncrement, i: usize, j: usize) -> Result<f64> {
    let d = inc.dim();
    if i >= d || j >= d {
        return Err(Error::param("index", format!("indices ({i}, {j}) out of range for dimension {d}")));
    }
    Ok(inc.second[i][j] - inc.second[j][i])
}

/// Description of a dyadic grid of pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub kind: String,
    pub depth: u32,
    pub pairs: u64,
}

impl GridSpec {
    pub fn dyadic(depth: u32) -> Self {
        let p = (1u64 << depth) + 1;
        GridSpec {
            kind: "dyadic".into(),
            depth,
            pairs: p * (p - 1) / 2,
        }
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} depth {} ({} pairs)", self.kind, self.depth, self.pairs)
    }
}

/// Lower estimate of the `(alpha, 2alpha)` rough seminorm over a finite grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RoughNormEstimate {
    pub holder_part: f64,
    pub area_part: f64,
    pub alpha_used: f64,
    pub grid_spec: GridSpec,
}

impl RoughNormEstimate {
    pub fn to_table(profile: &[RoughNormEstimate]) -> CsvTable {
        let mut table = CsvTable::new(["depth", "pairs", "holderPart", "areaPart", "alphaUsed"]);
        for e in profile {
            table.push([
                e.grid_spec.depth.to_string(),
                e.grid_spec.pairs.to_string(),
                e.holder_part.to_string(),
                e.area_part.to_string(),
                e.alpha_used.to_string(),
            ]);
        }
        table
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 || depth > MAX_GRID_DEPTH {
        return Err(Error::param("depth", format!("grid depth must lie in [1, {MAX_GRID_DEPTH}], got {depth}")));
    }
    Ok(())
}

fn dyadic_points(depth: u32) -> Vec<RationalTime> {
    (0..=(1u64 << depth)).map(|k| RationalTime::dyadic(k, depth).expect("depth checked")).collect()
}

// Coarsest depth at which both grid indices are present.
fn pair_depth(i: u64, j: u64, depth: u32) -> u32 {
    let tz = |k: u64| if k == 0 { depth } else { k.trailing_zeros().min(depth) };
    depth - tz(i).min(tz(j))
}

/// Per-point data for sweeps over a dyadic grid at a fixed truncation.
struct GridData {
    depth: u32,
    points: Vec<RationalTime>,
    /// tables[c][k]
    tables: Vec<Vec<TrigTable>>,
    /// prefix[c][k][m] = W_m of component c at point k
    prefix: Vec<Vec<Vec<f64>>>,
}

impl GridData {
    fn new(v: &VectorWeierstrass, n_max: usize, depth: u32) -> Self {
        let points = dyadic_points(depth);
        let tables: Vec<Vec<TrigTable>> = v
            .components()
            .iter()
            .map(|c| points.par_iter().map(|t| TrigTable::new(c.b(), n_max, t)).collect())
            .collect();
        let prefix = v
            .components()
            .iter()
            .zip(&tables)
            .map(|(c, tabs)| {
                let w = c.weights(n_max);
                let trig = |tab: &TrigTable, n: usize| match c.phase() {
                    crate::weier::Phase::Cosine => tab.cos[n],
                    crate::weier::Phase::Sine => tab.sin[n],
                };
                tabs.iter()
                    .map(|tab| {
                        let mut acc = crate::summation::CompensatedSum::new();
                        (0..=n_max)
                            .map(|n| {
                                acc.add(w[n] * trig(tab, n));
                                acc.value()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GridData {
            depth,
            points,
            tables,
            prefix,
        }
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    fn increment(&self, c: usize, level: usize, i: usize, j: usize) -> f64 {
        self.prefix[c][j][level] - self.prefix[c][i][level]
    }

    /// Fold `f(i, j)` over all pairs `i < j`, reducing per-depth maxima.
    fn sweep_max<const K: usize, F>(&self, f: F) -> Vec<[f64; K]>
    where
        F: Fn(usize, usize) -> [f64; K] + Sync,
    {
        let depth = self.depth;
        let n = self.len();
        let merge = |mut a: Vec<[f64; K]>, b: Vec<[f64; K]>| {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..K {
                    x[k] = x[k].max(y[k]);
                }
            }
            a
        };
        let per_depth = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut local = vec![[0.0f64; K]; depth as usize + 1];
                for j in i + 1..n {
                    let m = pair_depth(i as u64, j as u64, depth) as usize;
                    let vals = f(i, j);
                    for k in 0..K {
                        local[m][k] = local[m][k].max(vals[k]);
                    }
                }
                local
            })
            .reduce(|| vec![[0.0f64; K]; depth as usize + 1], merge);
        // sup over the grid at depth m includes every coarser pair
        let mut running = [0.0f64; K];
        per_depth
            .into_iter()
            .map(|x| {
                for k in 0..K {
                    running[k] = running[k].max(x[k]);
                }
                running
            })
            .collect()
    }
}

/// Off-diagonal kernels `(i, j)` with `i < j`.
fn upper_kernels(v: &VectorWeierstrass, n_max: usize) -> Result<Vec<(usize, usize, IteratedKernel)>> {
    let cs = v.components();
    let mut out = Vec::new();
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            out.push((i, j, IteratedKernel::new(&cs[i], &cs[j], n_max)?));
        }
    }
    Ok(out)
}

/// Truncation level a policy resolves to on a whole grid. A tolerance
/// policy calibrates its tail constant on all pairs of the depth-3 dyadic
/// grid and takes the largest level any component pair needs.
pub fn resolve_level(v: &VectorWeierstrass, policy: &TruncationPolicy) -> Result<usize> {
    policy.validate(v.min_alpha())?;
    match *policy {
        TruncationPolicy::Fixed(n) => Ok(n),
        TruncationPolicy::Tolerance { tol, eps_prime, max_n } => {
            let pts = dyadic_points(3);
            let cs = v.components();
            let mut level = 0;
            for ci in cs {
                for cj in cs {
                    let mut model = None::<crate::iterated::TailModel>;
                    for (k, s) in pts.iter().enumerate() {
                        for t in &pts[k + 1..] {
                            let m = calibrate_tail(ci, cj, eps_prime, s, t)?;
                            if model.as_ref().is_none_or(|old| m.constant > old.constant) {
                                model = Some(m);
                            }
                        }
                    }
                    level = level.max(model.expect("grid has pairs").required_level(tol, max_n)?);
                }
            }
            Ok(level)
        }
    }
}

/// Rough seminorm estimates on the dyadic grids of depth `1..=depth`.
///
/// The exponent is only required to be positive, so this also serves as a
/// negative control with `alpha` above the true regularity. Diagonal
/// second-level entries use `½ (ΔW_i)²` and entries below the diagonal use
/// `ΔW_i ΔW_j - 𝕏^{ij}`; both identities are exact for truncations.
pub fn rough_norm_profile(v: &VectorWeierstrass, policy: &TruncationPolicy, alpha: f64, depth: u32) -> Result<Vec<RoughNormEstimate>> {
    check_depth(depth)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("exponent must be positive, got {alpha}")));
    }
    let n_max = resolve_level(v, policy)?;
    let grid = GridData::new(v, n_max, depth);
    let kernels = upper_kernels(v, n_max)?;
    let d = v.dim();
    let h = 1.0 / (1u64 << depth) as f64;
    let maxima = grid.sweep_max::<2, _>(|i, j| {
        let width = (j - i) as f64 * h;
        let dw: Vec<f64> = (0..d).map(|c| grid.increment(c, n_max, i, j)).collect();
        let first = dw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut second = dw.iter().fold(0.0f64, |m, x| m.max(0.5 * x * x));
        for (a, b, k) in &kernels {
            let tabs = &grid.tables;
            let x = k.eval_tables(n_max, &tabs[*a][i], &tabs[*a][j], &tabs[*b][i], &tabs[*b][j]);
            second = second.max(x.abs()).max((dw[*a] * dw[*b] - x).abs());
        }
        [first / width.powf(alpha), second / width.powf(2.0 * alpha)]
    });
    Ok(maxima
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(m, [holder, area])| RoughNormEstimate {
            holder_part: holder,
            area_part: area,
            alpha_used: alpha,
            grid_spec: GridSpec::dyadic(m as u32),
        })
        .collect())
}

/// Requires `1/3 < alpha <= min alpha_i`.
pub fn check_norm_exponent(v: &VectorWeierstrass, alpha: f64) -> Result<()> {
    let min_alpha = v.min_alpha();
    if !(alpha > 1.0 / 3.0 && alpha <= min_alpha) {
        return Err(Error::param(
            "alpha",
            format!("alpha = {alpha} must lie in (1/3, min alpha_i = {min_alpha}]"),
        ));
    }
    Ok(())
}

/// Rough seminorm estimate for `1/3 < alpha <= min alpha_i`.
pub fn rough_norm(v: &VectorWeierstrass, policy: &TruncationPolicy, alpha: f64, depth: u32) -> Result<RoughNormEstimate> {
    check_norm_exponent(v, alpha)?;
    Ok(rough_norm_profile(v, policy, alpha, depth)?.pop().expect("depth >= 1"))
}

/// Per-depth growth threshold of [`grows_with_depth`].
pub const GROWTH_THRESHOLD: f64 = 1.1;

/// Heuristic flag for estimates that keep growing with depth: the mean
/// per-depth growth over the deeper half of the profile is at least
/// [`GROWTH_THRESHOLD`]. Exponents at or below the true regularity settle
/// to slower growth as the grid saturates.
pub fn grows_with_depth(values: &[f64]) -> bool {
    let half = values.len() / 2;
    if half < 2 {
        return false;
    }
    let (lo, hi) = (values[values.len() - 1 - half], values[values.len() - 1]);
    lo > 0.0 && (hi / lo).powf(1.0 / half as f64) >= GROWTH_THRESHOLD
}

/// Measured distances between truncated lifts and a deep reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceReport {
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub sup_first: Vec<f64>,
    pub sup_second: Vec<f64>,
    /// Fitted per-level decay ratio of `sup_first`; absent when not monotone.
    pub fitted_ratio_first: Option<f64>,
    /// Fitted per-level decay ratio of `sup_second`; absent when not monotone.
    pub fitted_ratio: Option<f64>,
    pub theoretical_rho: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub reference_n: usize,
    pub grid: GridSpec,
    /// `fitted_ratio <= theoretical_rho · RATE_MARGIN`.
    pub within_theory: bool,
    pub flags: Vec<String>,
}

impl ConvergenceReport {
    pub fn to_table(&self) -> CsvTable {
        let mut table = CsvTable::new(["N", "supFirst", "supSecond"]);
        for (k, n) in self.ns.iter().enumerate() {
            table.push([n.to_string(), self.sup_first[k].to_string(), self.sup_second[k].to_string()]);
        }
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| v.to_string());
        table
            .meta("fittedRatioFirst", opt(self.fitted_ratio_first))
            .meta("fittedRatio", opt(self.fitted_ratio))
            .meta("theoreticalRho", self.theoretical_rho)
            .meta("kappa", self.kappa)
            .meta("alpha", self.alpha)
            .meta("beta", self.beta)
            .meta("eps", self.eps)
            .meta("epsPrime", self.eps_prime)
            .meta("referenceN", self.reference_n)
            .meta("grid", &self.grid)
            .meta("withinTheory", self.within_theory);
        for flag in &self.flags {
            table.meta("flag", flag);
        }
        table
    }
}

/// Least-squares slope of `ln y` against `x`, returned as `exp(slope)`.
pub fn fit_ratio(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Fit(format!("need at least two points to fit, got {}", xs.len())));
    }
    if ys.iter().any(|&y| y.is_nan() || y <= 0.0) {
        return Err(Error::Fit("distances must be positive to fit a log-linear rate".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae have zero variance".into()));
    }
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok((sxy / sxx).exp())
}

/// Parameters of [`convergence_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceParams {
    pub ns: Vec<usize>,
    pub alpha: f64,
    pub eps: f64,
    pub beta: f64,
    pub eps_prime: f64,
    pub depth: u32,
}

/// Sup-distances over a dyadic grid between the level-`N` lift and the
/// reference lift at `N* = max(Ns) + 10`, with fitted decay ratios and the
/// predicted rate `rho = (max_i b_i^{-alpha_i + eps'})^kappa`,
/// `kappa = 1 - (alpha - eps)/beta`.
pub fn convergence_report(v: &VectorWeierstrass, p: &ConvergenceParams) -> Result<ConvergenceReport> {
    let ConvergenceParams {
        ref ns,
        alpha,
        eps,
        beta,
        eps_prime,
        depth,
    } = *p;
    if ns.len() < 2 {
        return Err(Error::Fit(format!("need at least two truncation levels to fit, got {}", ns.len())));
    }
    if !(eps > 0.0 && eps < alpha) {
        return Err(Error::param("eps", format!("eps = {eps} must lie in (0, alpha = {alpha})")));
    }
    if !(beta > alpha - eps && beta < alpha) {
        return Err(Error::param("beta", format!("beta = {beta} must lie in (alpha - eps, alpha)")));
    }
    if !(eps_prime > 0.0 && eps_prime < alpha) {
        return Err(Error::param("eps-prime", format!("eps' = {eps_prime} must lie in (0, alpha = {alpha})")));
    }
    check_depth(depth)?;
    let mut ns = ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let reference = *ns.last().expect("non-empty") + 10;
    let grid = GridData::new(v, reference, depth);
    let d = v.dim();
    let kernels = upper_kernels(v, reference)?;
    let levels = ns.clone();

    // Each pair yields, per requested level, max-abs first and second distances.
    let per_level: Vec<Vec<[f64; 2]>> = {
        let n = grid.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut local = vec![[0.0f64; 2]; levels.len()];
                let mut cross = vec![0.0f64; reference + 1];
                for j in i + 1..n {
                    let dw_ref: Vec<f64> = (0..d).map(|c| grid.increment(c, reference, i, j)).collect();
                    let mut cross_ref = Vec::with_capacity(kernels.len());
                    let mut cross_levels: Vec<Vec<f64>> = Vec::with_capacity(kernels.len());
                    for (a, b, k) in &kernels {
                        let tabs = &grid.tables;
                        let mut acc = 0.0;
                        for (m, slot) in cross.iter_mut().enumerate() {
                            acc += k.boundary_sum(m, &tabs[*a][i], &tabs[*a][j], &tabs[*b][i], &tabs[*b][j]);
                            *slot = acc;
                        }
                        cross_ref.push(cross[reference]);
                        cross_levels.push(levels.iter().map(|&m| cross[m]).collect());
                    }
                    for (li, &m) in levels.iter().enumerate() {
                        let dw: Vec<f64> = (0..d).map(|c| grid.increment(c, m, i, j)).collect();
                        let mut first = 0.0f64;
                        let mut second = 0.0f64;
                        for c in 0..d {
                            first = first.max((dw_ref[c] - dw[c]).abs());
                            second = second.max((0.5 * dw_ref[c] * dw_ref[c] - 0.5 * dw[c] * dw[c]).abs());
                        }
                        for (kk, (a, b, _)) in kernels.iter().enumerate() {
                            let x_ref = cross_ref[kk];
                            let x = cross_levels[kk][li];
                            second = second.max((x_ref - x).abs());
                            let lower_ref = dw_ref[*a] * dw_ref[*b] - x_ref;
                            let lower = dw[*a] * dw[*b] - x;
                            second = second.max((lower_ref - lower).abs());
                        }
                        local[li][0] = local[li][0].max(first);
                        local[li][1] = local[li][1].max(second);
                    }
                }
                local
            })
            .collect()
    };
    let mut sup_first = vec![0.0f64; levels.len()];
    let mut sup_second = vec![0.0f64; levels.len()];
    for local in &per_level {
        for (li, [f, s]) in local.iter().enumerate() {
            sup_first[li] = sup_first[li].max(*f);
            sup_second[li] = sup_second[li].max(*s);
        }
    }

    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let mut flags = Vec::new();
    let monotone = |ys: &[f64]| ys.windows(2).all(|w| w[1] <= w[0]);
    let fitted_ratio_first = if monotone(&sup_first) {
        fit_ratio(&xs, &sup_first).ok()
    } else {
        flags.push("level-one distances are not monotone, no fit".to_string());
        None
    };
    let fitted_ratio = if monotone(&sup_second) {
        fit_ratio(&xs, &sup_second).ok()
    } else {
        flags.push("level-two distances are not monotone, no fit".to_string());
        None
    };
    let kappa = 1.0 - (alpha - eps) / beta;
    let base = v
        .components()
        .iter()
        .map(|c| (c.b() as f64).powf(-c.alpha() + eps_prime))
        .fold(0.0f64, f64::max);
    let theoretical_rho = base.powf(kappa);
    let within_theory = fitted_ratio.is_some_and(|r| r <= theoretical_rho * RATE_MARGIN);
    Ok(ConvergenceReport {
        ns: levels,
        sup_first,
        sup_second,
        fitted_ratio_first,
        fitted_ratio,
        theoretical_rho,
        kappa,
        alpha,
        beta,
        eps,
        eps_prime,
        reference_n: reference,
        grid: GridSpec::dyadic(depth),
        within_theory,
        flags,
    })
}

/// `sup |𝔸_N(s,t)| / |t-s|^exponent` over the dyadic grid of the given depth.
pub fn area_scaling_constant(v: &VectorWeierstrass, n_max: usize, exponent: f64, depth: u32) -> Result<f64> {
    let alpha = 0.5 * exponent;
    Ok(rough_norm_profile(v, &TruncationPolicy::Fixed(n_max), alpha, depth)?
        .pop()
        .expect("depth >= 1")
        .area_part)
}
