//! Closed-form iterated integrals of truncated Weierstrass sums.
//!
//! For frequencies `A = b1^n`, `B = b2^l` the elementary integral
//!
//! ```text
//! J(s,t) = ∫_s^t (cos(Aπr) - cos(Aπs)) d cos(Bπr)
//! ```
//!
//! equals `½(cos Aπt - cos Aπs)²` when `A = B`, and otherwise
//!
//! ```text
//! J = B/(2(A+B)) Δcos((A+B)π·) + B/(2(B-A)) Δcos((B-A)π·) - cos(Aπs) Δcos(Bπ·)
//! ```
//!
//! with `Δf = f(t) - f(s)`. For the sine phase the first sign flips and the
//! last factor becomes `sin(Aπs) Δsin(Bπ·)`. The truncated iterated integral
//! is `I^N = Σ_{n,l<=N} a1^n a2^l J^{n,l}`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::csvout::CsvTable;
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;
use crate::time::{sincos_pi, RationalTime};
use crate::weier::{Phase, WeierstrassComponent};

/// How two integer bases relate multiplicatively.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaseRelation {
    /// `b1 == b2`.
    EqualPower,
    /// `b1 = common^q1`, `b2 = common^q2` with `common` minimal.
    Dependent { common: u64, q1: u32, q2: u32 },
    /// `ln b1 / ln b2` is irrational.
    Independent,
}

impl BaseRelation {
    /// Whether `b1^n == b2^l`.
    pub fn powers_equal(&self, n: usize, ell: usize) -> bool {
        match *self {
            BaseRelation::EqualPower => n == ell,
            BaseRelation::Dependent { q1, q2, .. } => n as u64 * q1 as u64 == ell as u64 * q2 as u64,
            BaseRelation::Independent => n == 0 && ell == 0,
        }
    }
}

// Exponent q with b == base^q, if any.
fn exact_log(b: u64, base: u64) -> Option<u32> {
    let mut x = b;
    let mut q = 0;
    while x > 1 {
        if !x.is_multiple_of(base) {
            return None;
        }
        x /= base;
        q += 1;
    }
    Some(q)
}

/// Classify two bases by exact integer search over candidate common bases.
pub fn classify_bases(b1: u64, b2: u64) -> Result<BaseRelation> {
    if b1 < 2 || b2 < 2 {
        return Err(Error::param("b", format!("bases must be >= 2, got ({b1}, {b2})")));
    }
    if b1 == b2 {
        return Ok(BaseRelation::EqualPower);
    }
    for common in 2..=b1.min(b2) {
        if let (Some(q1), Some(q2)) = (exact_log(b1, common), exact_log(b2, common)) {
            return Ok(BaseRelation::Dependent { common, q1, q2 });
        }
    }
    Ok(BaseRelation::Independent)
}

/// Indices and bases of one elementary integral `J^{n,l}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrequencyPair {
    pub n: usize,
    pub ell: usize,
    pub b1: u64,
    pub b2: u64,
}

/// `(sin, cos)` of `b^k π t` for `k = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigTable {
    pub sin: Vec<f64>,
    pub cos: Vec<f64>,
}

impl TrigTable {
    pub fn new(base: u64, n_max: usize, t: &RationalTime) -> Self {
        let (sin, cos) = t.phases(base).take(n_max + 1).map(sincos_pi).unzip();
        TrigTable { sin, cos }
    }

    pub fn len(&self) -> usize {
        self.cos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cos.is_empty()
    }
}

// B/(2(A+B)) and B/(2(B-A)), from exact integer powers.
fn coefficients(pow_a: &BigUint, pow_b: &BigUint) -> (f64, f64) {
    let small = |x: &BigUint| x.to_u64().filter(|&v| v < (1u64 << 53));
    if let (Some(a), Some(b)) = (small(pow_a), small(pow_b)) {
        let (a, b) = (a as f64, b as f64);
        return (b / (2.0 * (a + b)), b / (2.0 * (b - a)));
    }
    let sum = (pow_a + pow_b).to_f64().unwrap_or(f64::INFINITY);
    let diff = if pow_b >= pow_a {
        (pow_b - pow_a).to_f64().unwrap_or(f64::INFINITY)
    } else {
        -(pow_a - pow_b).to_f64().unwrap_or(f64::INFINITY)
    };
    let b = pow_b.to_f64().unwrap_or(f64::INFINITY);
    if b.is_finite() && sum.is_finite() && diff.is_finite() {
        return (b / (2.0 * sum), b / (2.0 * diff));
    }
    // Rescale both powers before converting.
    let shift = pow_a.bits().max(pow_b.bits()).saturating_sub(900) as usize;
    let a = (pow_a >> shift).to_f64().unwrap_or(0.0);
    let bb = (pow_b >> shift).to_f64().unwrap_or(0.0);
    let d = if pow_b >= pow_a {
        ((pow_b - pow_a) >> shift).to_f64().unwrap_or(0.0)
    } else {
        -((pow_a - pow_b) >> shift).to_f64().unwrap_or(0.0)
    };
    (bb / (2.0 * (a + bb)), bb / (2.0 * d))
}

/// One elementary integral from trig values at `s` and `t`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn elementary(
    phase: Phase,
    equal: bool,
    kp: f64,
    km: f64,
    (sas, cas): (f64, f64),
    (sat, cat): (f64, f64),
    (sbs, cbs): (f64, f64),
    (sbt, cbt): (f64, f64),
) -> f64 {
    match (phase, equal) {
        (Phase::Cosine, true) => 0.5 * (cat - cas) * (cat - cas),
        (Phase::Sine, true) => 0.5 * (sat - sas) * (sat - sas),
        (Phase::Cosine, false) => {
            let (pt, qt) = (cat * cbt, sat * sbt);
            let (ps, qs) = (cas * cbs, sas * sbs);
            kp * ((pt - qt) - (ps - qs)) + km * ((pt + qt) - (ps + qs)) - cas * (cbt - cbs)
        }
        (Phase::Sine, false) => {
            let (pt, qt) = (cat * cbt, sat * sbt);
            let (ps, qs) = (cas * cbs, sas * sbs);
            -kp * ((pt - qt) - (ps - qs)) + km * ((pt + qt) - (ps + qs)) - sas * (sbt - sbs)
        }
    }
}

fn check_order(s: &RationalTime, t: &RationalTime) -> Result<()> {
    if s > t {
        return Err(Error::Ordering(format!("need s <= t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// Closed-form `J^{n,l}(s, t)` for the given phase.
pub fn eval_j(pair: &FrequencyPair, phase: Phase, s: &RationalTime, t: &RationalTime) -> Result<f64> {
    check_order(s, t)?;
    if s == t {
        return Ok(0.0);
    }
    let relation = classify_bases(pair.b1, pair.b2)?;
    let equal = relation.powers_equal(pair.n, pair.ell);
    let pow_a = num_traits::pow(BigUint::from(pair.b1), pair.n);
    let pow_b = num_traits::pow(BigUint::from(pair.b2), pair.ell);
    let (kp, km) = if equal { (0.0, 0.0) } else { coefficients(&pow_a, &pow_b) };
    let xa_s = s.phase_of_multiple(&pow_a);
    let xa_t = t.phase_of_multiple(&pow_a);
    let xb_s = s.phase_of_multiple(&pow_b);
    let xb_t = t.phase_of_multiple(&pow_b);
    Ok(elementary(
        phase,
        equal,
        kp,
        km,
        sincos_pi(xa_s),
        sincos_pi(xa_t),
        sincos_pi(xb_s),
        sincos_pi(xb_t),
    ))
}

/// Precomputed weights and coefficients for `I^N` between two components.
///
/// Building one costs `O(N²)` big-integer operations; evaluating it at a
/// pair of trig tables is `O(N²)` floating-point work with no allocation.
#[derive(Clone, Debug)]
pub struct IteratedKernel {
    phase: Phase,
    b1: u64,
    b2: u64,
    n_max: usize,
    w1: Vec<f64>,
    w2: Vec<f64>,
    equal: Vec<bool>,
    kp: Vec<f64>,
    km: Vec<f64>,
}

impl IteratedKernel {
    pub fn new(c1: &WeierstrassComponent, c2: &WeierstrassComponent, n_max: usize) -> Result<Self> {
        if c1.phase() != c2.phase() {
            return Err(Error::param("phase", "iterated integrals need both components in one phase"));
        }
        let relation = classify_bases(c1.b(), c2.b())?;
        let pow1: Vec<BigUint> = powers(c1.b(), n_max);
        let pow2: Vec<BigUint> = powers(c2.b(), n_max);
        let size = (n_max + 1) * (n_max + 1);
        let mut equal = Vec::with_capacity(size);
        let mut kp = Vec::with_capacity(size);
        let mut km = Vec::with_capacity(size);
        for (n, pa) in pow1.iter().enumerate() {
            for (ell, pb) in pow2.iter().enumerate() {
                let eq = relation.powers_equal(n, ell);
                let (p, m) = if eq { (0.0, 0.0) } else { coefficients(pa, pb) };
                equal.push(eq);
                kp.push(p);
                km.push(m);
            }
        }
        Ok(IteratedKernel {
            phase: c1.phase(),
            b1: c1.b(),
            b2: c2.b(),
            n_max,
            w1: c1.weights(n_max),
            w2: c2.weights(n_max),
            equal,
            kp,
            km,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn bases(&self) -> (u64, u64) {
        (self.b1, self.b2)
    }

    /// Trig tables for the first and second component at `t`.
    pub fn tables(&self, t: &RationalTime) -> (TrigTable, TrigTable) {
        (TrigTable::new(self.b1, self.n_max, t), TrigTable::new(self.b2, self.n_max, t))
    }

    #[inline]
    fn term(&self, n: usize, ell: usize, a_s: &TrigTable, a_t: &TrigTable, b_s: &TrigTable, b_t: &TrigTable) -> f64 {
        let k = n * (self.n_max + 1) + ell;
        elementary(
            self.phase,
            self.equal[k],
            self.kp[k],
            self.km[k],
            (a_s.sin[n], a_s.cos[n]),
            (a_t.sin[n], a_t.cos[n]),
            (b_s.sin[ell], b_s.cos[ell]),
            (b_t.sin[ell], b_t.cos[ell]),
        )
    }

    /// `I^M` for any `M <= n_max`, from tables built by [`Self::tables`].
    /// Summation order is `n` outer, `l` inner.
    pub fn eval_tables(&self, level: usize, a_s: &TrigTable, a_t: &TrigTable, b_s: &TrigTable, b_t: &TrigTable) -> f64 {
        let level = level.min(self.n_max);
        let mut acc = CompensatedSum::new();
        for n in 0..=level {
            let wn = self.w1[n];
            for ell in 0..=level {
                acc.add(wn * self.w2[ell] * self.term(n, ell, a_s, a_t, b_s, b_t));
            }
        }
        acc.value()
    }

    /// `I^N(s, t)` at the kernel's own level.
    pub fn eval(&self, s: &RationalTime, t: &RationalTime) -> Result<f64> {
        check_order(s, t)?;
        if s == t {
            return Ok(0.0);
        }
        let (a_s, b_s) = self.tables(s);
        let (a_t, b_t) = self.tables(t);
        Ok(self.eval_tables(self.n_max, &a_s, &a_t, &b_s, &b_t))
    }

    /// Terms with `max(n, l) == level`: the amount `I^level - I^(level-1)`.
    pub fn boundary_sum(&self, level: usize, a_s: &TrigTable, a_t: &TrigTable, b_s: &TrigTable, b_t: &TrigTable) -> f64 {
        let mut acc = CompensatedSum::new();
        for ell in 0..=level {
            acc.add(self.w1[level] * self.w2[ell] * self.term(level, ell, a_s, a_t, b_s, b_t));
        }
        for n in 0..level {
            acc.add(self.w1[n] * self.w2[level] * self.term(n, level, a_s, a_t, b_s, b_t));
        }
        acc.value()
    }

    /// `max |J^{n,l}| · b1^{-εn} b2^{-εl}` over `n, l <= n_max`.
    pub fn scaled_max(&self, eps: f64, a_s: &TrigTable, a_t: &TrigTable, b_s: &TrigTable, b_t: &TrigTable) -> f64 {
        let r1 = (self.b1 as f64).powf(-eps);
        let r2 = (self.b2 as f64).powf(-eps);
        let mut best = 0.0f64;
        let mut f1 = 1.0;
        for n in 0..=self.n_max {
            let mut f2 = 1.0;
            for ell in 0..=self.n_max {
                best = best.max(self.term(n, ell, a_s, a_t, b_s, b_t).abs() * f1 * f2);
                f2 *= r2;
            }
            f1 *= r1;
        }
        best
    }
}

fn powers(b: u64, n_max: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut x = BigUint::from(1u32);
    for _ in 0..=n_max {
        out.push(x.clone());
        x *= b;
    }
    out
}

/// `I^N(s, t) = ∫_s^t (W1_N(r) - W1_N(s)) dW2_N(r)`.
pub fn eval_i_truncated(
    c1: &WeierstrassComponent,
    c2: &WeierstrassComponent,
    n_max: usize,
    s: &RationalTime,
    t: &RationalTime,
) -> Result<f64> {
    check_order(s, t)?;
    if s == t {
        return Ok(0.0);
    }
    IteratedKernel::new(c1, c2, n_max)?.eval(s, t)
}

/// Pilot range for calibrating the tail constant.
pub const PILOT_LEVEL: usize = 20;

/// Value of the limit `I(s, t)` with the truncation that certified it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitValue {
    pub value: f64,
    pub n_used: usize,
    pub tail_bound: f64,
}

/// Geometric tail model `C · Σ_{max(n,l) > N} r1^n r2^l` with
/// `r_i = b_i^(ε' - alpha_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailModel {
    pub constant: f64,
    pub r1: f64,
    pub r2: f64,
}

impl TailModel {
    pub fn new(constant: f64, c1: &WeierstrassComponent, c2: &WeierstrassComponent, eps_prime: f64) -> Self {
        TailModel {
            constant,
            r1: c1.a() * (c1.b() as f64).powf(eps_prime),
            r2: c2.a() * (c2.b() as f64).powf(eps_prime),
        }
    }

    pub fn bound(&self, n: usize) -> f64 {
        let p1 = self.r1.powi(n as i32 + 1);
        let p2 = self.r2.powi(n as i32 + 1);
        self.constant / ((1.0 - self.r1) * (1.0 - self.r2)) * (p1 + p2 - p1 * p2)
    }

    /// Smallest `N <= cap` with `bound(N) <= tol`.
    pub fn required_level(&self, tol: f64, cap: usize) -> Result<usize> {
        (0..=cap).find(|&n| self.bound(n) <= tol).ok_or(Error::ToleranceUnreachable {
            requested: tol,
            reachable: self.bound(cap),
            cap,
        })
    }
}

/// Tail constant `2 · max_{n,l <= 20} |J^{n,l}(s,t)| b1^{-ε'n} b2^{-ε'l}`.
pub fn calibrate_tail(
    c1: &WeierstrassComponent,
    c2: &WeierstrassComponent,
    eps_prime: f64,
    s: &RationalTime,
    t: &RationalTime,
) -> Result<TailModel> {
    let kernel = IteratedKernel::new(c1, c2, PILOT_LEVEL)?;
    let (a_s, b_s) = kernel.tables(s);
    let (a_t, b_t) = kernel.tables(t);
    let constant = 2.0 * kernel.scaled_max(eps_prime, &a_s, &a_t, &b_s, &b_t);
    Ok(TailModel::new(constant, c1, c2, eps_prime))
}

/// `I(s, t)` to within `tol`, by truncating where the calibrated tail
/// bound drops below the tolerance.
pub fn eval_i_limit(
    c1: &WeierstrassComponent,
    c2: &WeierstrassComponent,
    s: &RationalTime,
    t: &RationalTime,
    tol: f64,
    eps_prime: f64,
    max_n: usize,
) -> Result<LimitValue> {
    check_order(s, t)?;
    let min_alpha = c1.alpha().min(c2.alpha());
    crate::weier::TruncationPolicy::Tolerance { tol, eps_prime, max_n }.validate(min_alpha)?;
    if s == t {
        return Ok(LimitValue {
            value: 0.0,
            n_used: 0,
            tail_bound: 0.0,
        });
    }
    let model = calibrate_tail(c1, c2, eps_prime, s, t)?;
    let n_used = model.required_level(tol, max_n)?;
    Ok(LimitValue {
        value: eval_i_truncated(c1, c2, n_used, s, t)?,
        n_used,
        tail_bound: model.bound(n_used),
    })
}

/// One row of [`bound_diagnostics`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub s: String,
    pub t: String,
    pub j: f64,
    pub bound_i: f64,
    pub bound_ii: f64,
    pub bound_iii: f64,
    pub bound_iv: f64,
    /// Scale indices with `b^{-(N+1)} < t - s <= b^{-N}`.
    pub scale1: usize,
    pub scale2: usize,
}

/// Observed constants of the four elementary-integral bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub pair: (usize, usize, u64, u64),
    pub eps: f64,
    pub rows: Vec<BoundRow>,
    /// Smallest multipliers making bounds (i)–(iv) hold over the sample.
    pub constants: [f64; 4],
    /// Constants provable from the integrand: `π²/2`, `2π`, `2π`.
    pub analytic: [f64; 3],
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn to_table(&self) -> CsvTable {
        let mut table = CsvTable::new(["n", "ell", "s", "t", "J", "bound_i", "bound_ii", "bound_iii", "bound_iv"]);
        for r in &self.rows {
            table.push([
                self.pair.0.to_string(),
                self.pair.1.to_string(),
                r.s.clone(),
                r.t.clone(),
                r.j.to_string(),
                r.bound_i.to_string(),
                r.bound_ii.to_string(),
                r.bound_iii.to_string(),
                r.bound_iv.to_string(),
            ]);
        }
        table.meta("b1", self.pair.2).meta("b2", self.pair.3).meta("eps", self.eps);
        table
    }
}

fn scale_index(b: u64, width: f64) -> usize {
    // largest N with width <= b^-N
    let mut n = 0usize;
    let mut scale = 1.0 / b as f64;
    while width <= scale && n < 4096 {
        n += 1;
        scale /= b as f64;
    }
    n
}

/// Evaluate bounds (i) `b1^n b2^l (t-s)²`, (ii) `b2^l (t-s)`,
/// (iii) `b1^n (t-s)` and (iv) `b1^{εn} b2^{εl}` against `|J|` on a sample.
pub fn bound_diagnostics(pair: &FrequencyPair, eps: f64, sample: &[(RationalTime, RationalTime)]) -> Result<BoundReport> {
    let pi = std::f64::consts::PI;
    let fa = (pair.b1 as f64).powi(pair.n as i32);
    let fb = (pair.b2 as f64).powi(pair.ell as i32);
    let mut rows = Vec::with_capacity(sample.len());
    let mut constants = [0.0f64; 4];
    for (s, t) in sample {
        let j = eval_j(pair, Phase::Cosine, s, t)?;
        let h = t.checked_sub(s)?.to_f64();
        let row = BoundRow {
            s: s.to_string(),
            t: t.to_string(),
            j,
            bound_i: fa * fb * h * h,
            bound_ii: fb * h,
            bound_iii: fa * h,
            bound_iv: (pair.b1 as f64).powf(eps * pair.n as f64) * (pair.b2 as f64).powf(eps * pair.ell as f64),
            scale1: scale_index(pair.b1, h),
            scale2: scale_index(pair.b2, h),
        };
        for (k, bound) in [row.bound_i, row.bound_ii, row.bound_iii, row.bound_iv].into_iter().enumerate() {
            let ratio = if bound > 0.0 {
                j.abs() / bound
            } else if j == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            constants[k] = constants[k].max(ratio);
        }
        rows.push(row);
    }
    let analytic = [0.5 * pi * pi, 2.0 * pi, 2.0 * pi];
    let names = ["(i)", "(ii)", "(iii)"];
    let violations = (0..3)
        .filter(|&k| constants[k] > analytic[k] * (1.0 + 1e-9))
        .map(|k| format!("bound {} constant {} exceeds {}", names[k], constants[k], analytic[k]))
        .collect();
    Ok(BoundReport {
        pair: (pair.n, pair.ell, pair.b1, pair.b2),
        eps,
        rows,
        constants,
        analytic,
        violations,
    })
}

/// Default `ε` for bound (iv).
pub fn default_bound_eps(c1: &WeierstrassComponent, c2: &WeierstrassComponent) -> f64 {
    0.5 * c1.alpha().min(c2.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weier::{eval_truncated, Amplitude, VectorWeierstrass};

    fn rt(s: &str) -> RationalTime {
        s.parse().unwrap()
    }

    fn fig1() -> (WeierstrassComponent, WeierstrassComponent) {
        let v = VectorWeierstrass::figure1();
        (v.components()[0].clone(), v.components()[1].clone())
    }

    #[test]
    fn classifies_bases() {
        assert_eq!(classify_bases(2, 8).unwrap(), BaseRelation::Dependent { common: 2, q1: 1, q2: 3 });
        assert_eq!(classify_bases(4, 8).unwrap(), BaseRelation::Dependent { common: 2, q1: 2, q2: 3 });
        assert_eq!(classify_bases(2, 3).unwrap(), BaseRelation::Independent);
        assert_eq!(classify_bases(9, 27).unwrap(), BaseRelation::Dependent { common: 3, q1: 2, q2: 3 });
        assert_eq!(classify_bases(6, 6).unwrap(), BaseRelation::EqualPower);
        assert!(classify_bases(1, 3).is_err());
    }

    #[test]
    fn classification_matches_brute_force() {
        for b1 in 2..=40u64 {
            for b2 in 2..=40u64 {
                let rel = classify_bases(b1, b2).unwrap();
                for n in 0..=12usize {
                    for ell in 0..=12usize {
                        let brute = num_traits::pow(BigUint::from(b1), n) == num_traits::pow(BigUint::from(b2), ell);
                        assert_eq!(rel.powers_equal(n, ell), brute, "{b1}^{n} vs {b2}^{ell}");
                    }
                }
            }
        }
    }

    #[test]
    fn elementary_integral_special_values() {
        let pair = FrequencyPair { n: 2, ell: 1, b1: 2, b2: 4 };
        let j = eval_j(&pair, Phase::Cosine, &RationalTime::zero(), &rt("1/8")).unwrap();
        assert!((j - 0.5).abs() < 1e-15, "{j}");
        let pair = FrequencyPair { n: 3, ell: 5, b1: 2, b2: 3 };
        assert_eq!(eval_j(&pair, Phase::Cosine, &rt("1/3"), &rt("1/3")).unwrap(), 0.0);
        assert!(eval_j(&pair, Phase::Cosine, &rt("1/2"), &rt("1/3")).is_err());
    }

    #[test]
    fn zeroth_level_over_unit_interval() {
        let (c1, c2) = fig1();
        let i = eval_i_truncated(&c1, &c2, 0, &RationalTime::zero(), &RationalTime::one()).unwrap();
        assert_eq!(i, 2.0);
    }

    #[test]
    fn kernel_matches_standalone_elementary_integrals() {
        let (c1, c2) = fig1();
        let (s, t) = (rt("1/7"), rt("5/9"));
        let kernel = IteratedKernel::new(&c1, &c2, 6).unwrap();
        let mut acc = CompensatedSum::new();
        for n in 0..=6 {
            for ell in 0..=6 {
                let j = eval_j(&FrequencyPair { n, ell, b1: 2, b2: 3 }, Phase::Cosine, &s, &t).unwrap();
                acc.add(c1.a().powi(n as i32) * c2.a().powi(ell as i32) * j);
            }
        }
        assert!((kernel.eval(&s, &t).unwrap() - acc.value()).abs() < 1e-13);
    }

    #[test]
    fn incremental_update_identity() {
        let (c1, c2) = fig1();
        let kernel = IteratedKernel::new(&c1, &c2, 15).unwrap();
        let (s, t) = (rt("3/32"), rt("13/27"));
        let (a_s, b_s) = kernel.tables(&s);
        let (a_t, b_t) = kernel.tables(&t);
        for level in 1..=15 {
            let full = kernel.eval_tables(level, &a_s, &a_t, &b_s, &b_t);
            let prev = kernel.eval_tables(level - 1, &a_s, &a_t, &b_s, &b_t);
            let edge = kernel.boundary_sum(level, &a_s, &a_t, &b_s, &b_t);
            assert!((full - prev - edge).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_part_is_product_of_increments() {
        let (c1, c2) = fig1();
        for phase in [Phase::Cosine, Phase::Sine] {
            let (c1, c2) = (c1.with_phase(phase), c2.with_phase(phase));
            for (s, t) in [("0", "1"), ("1/5", "2/3"), ("1/1024", "3/1024"), ("0.37", "0.91")] {
                let (s, t) = (rt(s), rt(t));
                let i12 = eval_i_truncated(&c1, &c2, 9, &s, &t).unwrap();
                let i21 = eval_i_truncated(&c2, &c1, 9, &s, &t).unwrap();
                let d1 = eval_truncated(&c1, 9, &t) - eval_truncated(&c1, 9, &s);
                let d2 = eval_truncated(&c2, 9, &t) - eval_truncated(&c2, 9, &s);
                assert!((i12 + i21 - d1 * d2).abs() < 1e-10, "{phase} {s} {t}");
                let i11 = eval_i_truncated(&c1, &c1, 9, &s, &t).unwrap();
                assert!((i11 - 0.5 * d1 * d1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn limit_at_coincident_times_is_zero() {
        let (c1, c2) = fig1();
        let t = rt("1/3");
        let v = eval_i_limit(&c1, &c2, &t, &t, 1e-8, 0.05, 64).unwrap();
        assert_eq!(v, LimitValue { value: 0.0, n_used: 0, tail_bound: 0.0 });
        assert!(eval_i_limit(&c1, &c2, &RationalTime::zero(), &t, 1e-8, 0.9, 64).is_err());
    }

    #[test]
    fn unreachable_tolerance_carries_best_bound() {
        let (c1, c2) = fig1();
        let err = eval_i_limit(&c1, &c2, &RationalTime::zero(), &RationalTime::one(), 1e-30, 0.05, 64).unwrap_err();
        match err {
            Error::ToleranceUnreachable { requested, reachable, cap } => {
                assert_eq!(requested, 1e-30);
                assert_eq!(cap, 64);
                assert!(reachable > 1e-30);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn tail_model_is_decreasing() {
        let (c1, c2) = fig1();
        let model = TailModel::new(3.0, &c1, &c2, 0.1);
        for n in 0..60 {
            assert!(model.bound(n + 1) < model.bound(n));
        }
        let total = 3.0 / ((1.0 - model.r1) * (1.0 - model.r2));
        assert!((model.bound(0) - total * (model.r1 + model.r2 - model.r1 * model.r2)).abs() < 1e-12);
    }

    #[test]
    fn zeroth_pair_bound_holds() {
        let pair = FrequencyPair { n: 0, ell: 0, b1: 2, b2: 3 };
        let sample: Vec<_> = (0..=16u64)
            .flat_map(|i| (i..=16).map(move |j| (RationalTime::dyadic(i, 4).unwrap(), RationalTime::dyadic(j, 4).unwrap())))
            .collect();
        let report = bound_diagnostics(&pair, 0.2, &sample).unwrap();
        assert!(report.rows.iter().all(|r| r.j.abs() <= 2.0));
        assert!(report.violations.is_empty());
    }

    #[test]
    fn bound_one_constant_on_dyadic_grid() {
        let pair = FrequencyPair { n: 3, ell: 3, b1: 2, b2: 2 };
        // 100 dyadic pairs (i/32, j/32) with i < j, taken in order
        let sample: Vec<_> = (0..32u64)
            .flat_map(|i| (i + 1..=32).map(move |j| (RationalTime::dyadic(i, 5).unwrap(), RationalTime::dyadic(j, 5).unwrap())))
            .take(100)
            .collect();
        assert_eq!(sample.len(), 100);
        let report = bound_diagnostics(&pair, 0.2, &sample).unwrap();
        assert!(report.constants[0] <= std::f64::consts::PI.powi(2) / 2.0);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn dependent_bases_off_resonance_stay_bounded() {
        // b1 = 4 = 2^2, b2 = 8 = 2^3: resonance only when 2n = 3l
        let sample: Vec<_> = ["0/1:1/1", "1/3:1/2", "1/7:6/7", "0.1:0.15", "1/1000:999/1000"]
            .iter()
            .map(|p| {
                let (s, t) = p.split_once(':').unwrap();
                (rt(s), rt(t))
            })
            .collect();
        let mut worst = 0.0f64;
        for n in 0..=12 {
            for ell in 0..=12 {
                if 2 * n == 3 * ell {
                    continue;
                }
                let report = bound_diagnostics(&FrequencyPair { n, ell, b1: 4, b2: 8 }, 0.2, &sample).unwrap();
                worst = worst.max(report.rows.iter().map(|r| r.j.abs()).fold(0.0, f64::max));
            }
        }
        // B/|B-A| <= 2 when the powers differ by a factor >= 2, so |J| <= 1 + 2 + 2
        assert!(worst <= 5.0, "{worst}");
    }

    #[test]
    fn bound_rows_report_scale_indices() {
        let pair = FrequencyPair { n: 1, ell: 1, b1: 2, b2: 3 };
        let report = bound_diagnostics(&pair, 0.2, &[(rt("0"), rt("1/8"))]).unwrap();
        assert_eq!(report.rows[0].scale1, 3);
        assert_eq!(report.rows[0].scale2, 1);
        let table = report.to_table();
        assert!(table.to_csv_string().starts_with("n,ell,s,t,J,bound_i,bound_ii,bound_iii,bound_iv\n"));
    }

    #[test]
    fn amplitude_irrelevant_to_j() {
        let c = WeierstrassComponent::cosine(3, Amplitude::A(0.9)).unwrap();
        let k = IteratedKernel::new(&c, &c, 0).unwrap();
        let j = eval_j(&FrequencyPair { n: 0, ell: 0, b1: 3, b2: 3 }, Phase::Cosine, &rt("0"), &rt("1/2")).unwrap();
        assert!((k.eval(&rt("0"), &rt("1/2")).unwrap() - j).abs() < 1e-16);
    }
}
