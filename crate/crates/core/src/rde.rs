//! The controlled equation `dY = σ(Y) dW` driven by a vector Weierstrass
//! function: a classical RK4 solve against truncations and a second-order
//! rough step against the lift.
//!
//! Column `j` of the field, `σ_j(Y)`, multiplies `dW^j`. The default field
//! is `M(Y) = [[0, Y2/3], [Y1/2, 0]]`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::csvout::CsvTable;
use crate::error::{Error, Result};
use crate::roughpath::{lift_limit, RoughIncrement, TruncatedLift};
use crate::time::RationalTime;
use crate::weier::{Phase, TruncationPolicy, VectorWeierstrass};

/// Number of intervals of the output grid.
pub const OUTPUT_POINTS: usize = 1000;

/// Largest accepted `step · max frequency`.
pub const MAX_PHASE_PER_STEP: f64 = 1.0;

/// Vector fields `σ_j : R^n → R^n`, one per driver component.
pub trait VectorField: Sync {
    fn state_dim(&self) -> usize;
    fn drivers(&self) -> usize;
    /// `σ_j(y)`.
    fn sigma(&self, y: &[f64], j: usize) -> Vec<f64>;
    /// `Dσ_j(y) · v`.
    fn jacobian_apply(&self, y: &[f64], j: usize, v: &[f64]) -> Vec<f64>;
}

/// Linear fields `σ_j(Y) = K_j Y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BilinearField {
    matrices: Vec<Vec<Vec<f64>>>,
}

impl BilinearField {
    pub fn new(matrices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = matrices.first().map_or(0, |m| m.len());
        if n == 0 {
            return Err(Error::param("field", "need at least one nonempty matrix"));
        }
        if matrices.iter().any(|m| m.len() != n || m.iter().any(|row| row.len() != n)) {
            return Err(Error::param("field", format!("every K_j must be {n}x{n}")));
        }
        if matrices.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::param("field", "entries must be finite"));
        }
        Ok(BilinearField { matrices })
    }

    /// `M(Y) = [[0, Y2/3], [Y1/2, 0]]`: `σ_1 = (0, Y1/2)`, `σ_2 = (Y2/3, 0)`.
    pub fn figure3() -> Self {
        BilinearField {
            matrices: vec![vec![vec![0.0, 0.0], vec![0.5, 0.0]], vec![vec![0.0, 1.0 / 3.0], vec![0.0, 0.0]]],
        }
    }

    pub fn zero(state_dim: usize, drivers: usize) -> Self {
        BilinearField {
            matrices: vec![vec![vec![0.0; state_dim]; state_dim]; drivers],
        }
    }

    /// `dY = k Y dW` with one driver.
    pub fn scalar(k: f64) -> Self {
        BilinearField {
            matrices: vec![vec![vec![k]]],
        }
    }

    fn apply(&self, j: usize, v: &[f64]) -> Vec<f64> {
        self.matrices[j].iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }
}

impl VectorField for BilinearField {
    fn state_dim(&self) -> usize {
        self.matrices[0].len()
    }

    fn drivers(&self) -> usize {
        self.matrices.len()
    }

    fn sigma(&self, y: &[f64], j: usize) -> Vec<f64> {
        self.apply(j, y)
    }

    fn jacobian_apply(&self, _y: &[f64], j: usize, v: &[f64]) -> Vec<f64> {
        self.apply(j, v)
    }
}

/// Equation, driver, initial value and horizon.
#[derive(Clone, Debug)]
pub struct RdeProblem<F = BilinearField> {
    pub field: F,
    pub driver: VectorWeierstrass,
    pub y0: Vec<f64>,
    pub t_end: RationalTime,
    /// RK4 step; `None` selects [`default_step`].
    pub step: Option<f64>,
}

impl RdeProblem<BilinearField> {
    /// Figure 1 driver, `M(Y)` field, `Y(0) = (1, 0)` on `[0, 1]`.
    pub fn figure3() -> Self {
        RdeProblem {
            field: BilinearField::figure3(),
            driver: VectorWeierstrass::figure1(),
            y0: vec![1.0, 0.0],
            t_end: RationalTime::one(),
            step: None,
        }
    }
}

impl<F: VectorField> RdeProblem<F> {
    pub fn validate(&self) -> Result<()> {
        if self.field.drivers() != self.driver.dim() {
            return Err(Error::param(
                "field",
                format!("field has {} driver columns but the driver has dimension {}", self.field.drivers(), self.driver.dim()),
            ));
        }
        if self.y0.len() != self.field.state_dim() {
            return Err(Error::param("y0", format!("expected {} entries, got {}", self.field.state_dim(), self.y0.len())));
        }
        if self.y0.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("y0", "entries must be finite"));
        }
        if self.t_end.is_zero() || self.t_end > RationalTime::one() {
            return Err(Error::param("t-end", format!("must lie in (0, 1], got {}", self.t_end)));
        }
        if let Some(h) = self.step {
            check_step(h, self.t_end.to_f64())?;
        }
        Ok(())
    }
}

fn check_step(h: f64, t_end: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite() && h <= t_end) {
        return Err(Error::param("step", format!("step must lie in (0, t_end = {t_end}], got {h}")));
    }
    Ok(())
}

/// `π · max_i b_i^N`.
pub fn max_frequency(v: &VectorWeierstrass, n_max: usize) -> f64 {
    v.components()
        .iter()
        .map(|c| std::f64::consts::PI * (c.b() as f64).powi(n_max as i32))
        .fold(0.0, f64::max)
}

/// `min(1e-3, 0.1 · max_i b_i^-N)`.
pub fn default_step(v: &VectorWeierstrass, n_max: usize) -> f64 {
    let b = v.components().iter().map(|c| c.b()).max().unwrap_or(2) as f64;
    1e-3f64.min(0.1 * b.powi(-(n_max as i32)))
}

// Step count with t_end / K <= h, tolerant of rounding in t_end / h.
fn step_count(t_end: f64, h: f64) -> usize {
    ((t_end / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Solution samples on an increasing time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PathSample {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("samples are nonempty")
    }

    /// Largest entry magnitude over all samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Max-abs distance over common sample times.
    pub fn distance(&self, other: &PathSample) -> Result<f64> {
        if self.times != other.times {
            return Err(Error::param("samples", "paths are sampled on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    pub fn to_table(&self) -> CsvTable {
        let dim = self.values.first().map_or(0, |v| v.len());
        let header = std::iter::once("t".to_string()).chain((1..=dim).map(|i| format!("Y{i}")));
        let mut table = CsvTable::new(header);
        for (t, y) in self.times.iter().zip(&self.values) {
            let mut row = vec![*t];
            row.extend_from_slice(y);
            table.push_floats(&row);
        }
        table
    }
}

/// Walks the derivative of a truncated driver over the nodes `j · Δ` of a
/// uniform grid, with exact integer phases `b^n j Δ mod 2`.
struct UniformDriver {
    /// Per component and level: (residue, increment, modulus, weight).
    terms: Vec<Vec<(u128, u128, u128, f64)>>,
    phases: Vec<Phase>,
    q: f64,
}

impl UniformDriver {
    fn new(v: &VectorWeierstrass, n_max: usize, delta: &RationalTime) -> Result<Self> {
        let (p, q) = (delta.numer(), delta.denom());
        let m: BigUint = &q << 1usize;
        let m128 = m
            .to_u128()
            .filter(|m| m.checked_mul(2).is_some())
            .ok_or_else(|| Error::Unsupported(format!("grid spacing {delta} has too large a denominator")))?;
        let terms = v
            .components()
            .iter()
            .map(|c| {
                let ab = c.a() * c.b() as f64;
                let mut w = std::f64::consts::PI;
                let mut bn = p.clone() % &m;
                (0..=n_max)
                    .map(|_| {
                        let inc = bn.to_u128().expect("reduced modulo m");
                        let term = (0u128, inc, m128, w);
                        bn = (&bn * c.b()) % &m;
                        w *= ab;
                        term
                    })
                    .collect()
            })
            .collect();
        Ok(UniformDriver {
            terms,
            phases: v.components().iter().map(|c| c.phase()).collect(),
            q: q.to_f64().unwrap_or(f64::INFINITY),
        })
    }

    /// Derivatives at the current node, then moves to the next one.
    fn next(&mut self) -> Vec<f64> {
        let q = self.q;
        self.terms
            .iter_mut()
            .zip(&self.phases)
            .map(|(levels, phase)| {
                let mut acc = crate::summation::CompensatedSum::new();
                for (r, inc, m, w) in levels.iter_mut() {
                    acc.add(*w * phase.dtrig_pi(*r as f64 / q));
                    *r += *inc;
                    if *r >= *m {
                        *r -= *m;
                    }
                }
                acc.value()
            })
            .collect()
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(u, v)| u + a * v).collect()
}

fn drift<F: VectorField>(field: &F, y: &[f64], dw: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for (j, w) in dw.iter().enumerate() {
        for (o, s) in out.iter_mut().zip(field.sigma(y, j)) {
            *o += s * w;
        }
    }
    out
}

/// Classical RK4 for `Y' = Σ_j σ_j(Y) W'_{j,N}(t)`, sampled every
/// `ceil(K / OUTPUT_POINTS)` steps and at the end point.
pub fn solve_ode_truncated<F: VectorField>(p: &RdeProblem<F>, n_max: usize) -> Result<PathSample> {
    p.validate()?;
    let t_end = p.t_end.to_f64();
    let h_req = p.step.unwrap_or_else(|| default_step(&p.driver, n_max));
    check_step(h_req, t_end)?;
    let omega = max_frequency(&p.driver, n_max);
    let steps = step_count(t_end, h_req);
    let h = t_end / steps as f64;
    if h * omega > MAX_PHASE_PER_STEP {
        return Err(Error::StepTooLarge {
            step: h,
            frequency: omega,
            max_step: MAX_PHASE_PER_STEP / omega,
        });
    }
    let stride = steps.div_ceil(OUTPUT_POINTS);
    let delta = p.t_end.mul(&RationalTime::new(1, 2 * steps as u128)?);
    let mut driver = UniformDriver::new(&p.driver, n_max, &delta)?;

    let mut y = p.y0.clone();
    let mut times = vec![0.0];
    let mut values = vec![y.clone()];
    let mut d0 = driver.next();
    for k in 0..steps {
        let dm = driver.next();
        let d1 = driver.next();
        let k1 = drift(&p.field, &y, &d0);
        let k2 = drift(&p.field, &axpy(&y, 0.5 * h, &k1), &dm);
        let k3 = drift(&p.field, &axpy(&y, 0.5 * h, &k2), &dm);
        let k4 = drift(&p.field, &axpy(&y, h, &k3), &d1);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::StepTooLarge {
                step: h,
                frequency: omega,
                max_step: h / 2.0,
            });
        }
        d0 = d1;
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push(if k + 1 == steps { t_end } else { (k + 1) as f64 * h });
            values.push(y.clone());
        }
    }
    Ok(PathSample { times, values })
}

/// Endpoint Richardson quotient `|y_h - y_{h/2}| / |y_{h/2} - y_{h/4}|`,
/// about 16 for a fourth-order method.
pub fn richardson_ratio<F: VectorField + Clone>(p: &RdeProblem<F>, n_max: usize, h: f64) -> Result<f64> {
    let solve = |step: f64| {
        let mut q = p.clone();
        q.step = Some(step);
        solve_ode_truncated(&q, n_max).map(|s| s.last().to_vec())
    };
    let (y1, y2, y4) = (solve(h)?, solve(h / 2.0)?, solve(h / 4.0)?);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(dist(&y1, &y2) / dist(&y2, &y4))
}

/// Increments of a lift over `[k h, (k+1) h]` for a uniform partition, with
/// Chen composition over blocks of steps.
#[derive(Clone, Debug)]
pub struct LiftTable {
    pub times: Vec<RationalTime>,
    pub steps: Vec<RoughIncrement>,
}

impl LiftTable {
    pub fn new(v: &VectorWeierstrass, policy: &TruncationPolicy, t_end: &RationalTime, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("steps", "need at least one step"));
        }
        let times: Vec<RationalTime> = (0..=count)
            .map(|k| RationalTime::new(k as u128, count as u128).map(|u| t_end.mul(&u)))
            .collect::<Result<_>>()?;
        let steps = match *policy {
            TruncationPolicy::Fixed(n) => {
                let lift = TruncatedLift::new(v, n)?;
                times.par_windows(2).map(|w| lift.increment(&w[0], &w[1])).collect::<Result<Vec<_>>>()?
            }
            TruncationPolicy::Tolerance { .. } => {
                v.check_liftable()?;
                times.par_windows(2).map(|w| lift_limit(v, policy, &w[0], &w[1])).collect::<Result<Vec<_>>>()?
            }
        };
        Ok(LiftTable { times, steps })
    }

    /// Increment over `[times[i], times[j]]` by Chen's relation.
    pub fn compose(&self, i: usize, j: usize) -> Result<RoughIncrement> {
        if !(i <= j && j < self.times.len()) {
            return Err(Error::Ordering(format!("need i <= j <= {}, got ({i}, {j})", self.times.len() - 1)));
        }
        let d = self.steps[0].dim();
        let mut acc = RoughIncrement::zero(d, self.times[i].clone(), self.times[i].clone());
        for inc in &self.steps[i..j] {
            for a in 0..d {
                for b in 0..d {
                    acc.second[a][b] += inc.second[a][b] + acc.first[a] * inc.first[b];
                }
            }
            for a in 0..d {
                acc.first[a] += inc.first[a];
            }
            acc.t = inc.t.clone();
        }
        Ok(acc)
    }
}

/// `Y + Σ_j σ_j(Y) X^j + Σ_{i,j} Dσ_j(Y) σ_i(Y) 𝕏^{ij}`.
pub fn rough_step<F: VectorField>(field: &F, y: &[f64], inc: &RoughIncrement) -> Vec<f64> {
    let d = inc.dim();
    let mut out = y.to_vec();
    let sigmas: Vec<Vec<f64>> = (0..d).map(|j| field.sigma(y, j)).collect();
    for j in 0..d {
        for (o, s) in out.iter_mut().zip(&sigmas[j]) {
            *o += s * inc.first[j];
        }
        for (row, sigma_i) in inc.second.iter().zip(&sigmas) {
            let x = row[j];
            if x != 0.0 {
                for (o, s) in out.iter_mut().zip(field.jacobian_apply(y, j, sigma_i)) {
                    *o += s * x;
                }
            }
        }
    }
    out
}

/// Second-order rough step on the uniform partition with `t_end / K <= step`.
pub fn solve_rough<F: VectorField>(p: &RdeProblem<F>, source: &TruncationPolicy, step: f64) -> Result<PathSample> {
    p.validate()?;
    let t_end = p.t_end.to_f64();
    check_step(step, t_end)?;
    if matches!(source, TruncationPolicy::Tolerance { .. }) {
        p.driver.check_liftable()?;
    }
    let steps = step_count(t_end, step);
    let table = LiftTable::new(&p.driver, source, &p.t_end, steps)?;
    let mut y = p.y0.clone();
    let mut times = vec![0.0];
    let mut values = vec![y.clone()];
    for (k, inc) in table.steps.iter().enumerate() {
        y = rough_step(&p.field, &y, inc);
        times.push(table.times[k + 1].to_f64());
        values.push(y.clone());
    }
    Ok(PathSample { times, values })
}

/// One row of [`approximation_gap`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub n_prev: usize,
    pub n: usize,
    pub gap: f64,
}

/// Sup-distance between RK4 paths at consecutive levels, all solved with
/// one step so that they share a sample grid.
pub fn approximation_gap<F: VectorField + Clone>(p: &RdeProblem<F>, ns: &[usize], step: Option<f64>) -> Result<Vec<GapRow>> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("Ns", "levels must be strictly increasing"));
    }
    if ns.len() < 2 {
        return Ok(Vec::new());
    }
    let top = *ns.last().expect("nonempty");
    let mut q = p.clone();
    q.step = Some(step.or(p.step).unwrap_or_else(|| default_step(&p.driver, top)));
    let paths: Vec<PathSample> = ns.iter().map(|&n| solve_ode_truncated(&q, n)).collect::<Result<_>>()?;
    ns.windows(2)
        .zip(paths.windows(2))
        .map(|(n, w)| {
            Ok(GapRow {
                n_prev: n[0],
                n: n[1],
                gap: w[0].distance(&w[1])?,
            })
        })
        .collect()
}

pub fn gap_table(rows: &[GapRow]) -> CsvTable {
    let mut table = CsvTable::new(["N_prev", "N", "gap"]);
    for r in rows {
        table.push([r.n_prev.to_string(), r.n.to_string(), r.gap.to_string()]);
    }
    table
}
