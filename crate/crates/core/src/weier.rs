//! Weierstrass components, their truncated sums and derivatives.
//!
//! A component is `W(t) = Σ_n a^n trig(b^n π t)` with integer `b >= 2`,
//! `0 < a < 1`, `ab > 1`, and `trig` either cosine or sine. The Hölder
//! exponent is `alpha = -ln a / ln b`, so `a = b^(-alpha)`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::CompensatedSum;
use crate::time::{sincos_pi, RationalTime, Residue};

/// Largest truncation level used by tolerance-driven policies unless raised.
pub const DEFAULT_MAX_N: usize = 64;

// Period search length for tail-exact summation at rational times.
const CYCLE_SEARCH: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Phase {
    #[default]
    #[serde(rename = "cos")]
    Cosine,
    #[serde(rename = "sin")]
    Sine,
}

impl Phase {
    /// `trig(π x)`.
    #[inline]
    pub fn trig_pi(self, x: f64) -> f64 {
        let (s, c) = sincos_pi(x);
        match self {
            Phase::Cosine => c,
            Phase::Sine => s,
        }
    }

    /// `trig'(π x)`, the derivative of `trig` evaluated at `π x`.
    #[inline]
    pub fn dtrig_pi(self, x: f64) -> f64 {
        let (s, c) = sincos_pi(x);
        match self {
            Phase::Cosine => -s,
            Phase::Sine => c,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Cosine => "cos",
            Phase::Sine => "sin",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cos" | "cosine" => Ok(Phase::Cosine),
            "sin" | "sine" => Ok(Phase::Sine),
            other => Err(Error::param("phase", format!("expected `cos` or `sin`, got `{other}`"))),
        }
    }
}

/// How the amplitude ratio is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Amplitude {
    /// `a = num/den` exactly.
    Ratio(u64, u64),
    A(f64),
    Alpha(f64),
}

/// One scalar Weierstrass function.
#[derive(Clone, Debug, PartialEq)]
pub struct WeierstrassComponent {
    b: u64,
    a: f64,
    alpha: f64,
    phase: Phase,
    ratio: Option<(u64, u64)>,
}

impl WeierstrassComponent {
    pub fn new(b: u64, amplitude: Amplitude, phase: Phase) -> Result<Self> {
        if b < 2 {
            return Err(Error::param("b", format!("base must be an integer >= 2, got {b}")));
        }
        let ln_b = (b as f64).ln();
        let (a, alpha, ratio) = match amplitude {
            Amplitude::Ratio(p, q) => {
                if q == 0 {
                    return Err(Error::param("a", "zero denominator"));
                }
                if p == 0 || p >= q {
                    return Err(Error::param("a", format!("a = {p}/{q} must lie in (0, 1)")));
                }
                if (p as u128) * (b as u128) <= q as u128 {
                    return Err(Error::param(
                        "a",
                        format!("a·b = {p}·{b}/{q} must exceed 1 (ab > 1)"),
                    ));
                }
                let a = p as f64 / q as f64;
                (a, -a.ln() / ln_b, Some((p, q)))
            }
            Amplitude::A(a) => {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::param("a", format!("a = {a} must lie in (0, 1)")));
                }
                if a * b as f64 <= 1.0 {
                    return Err(Error::param("a", format!("a·b = {} must exceed 1 (ab > 1)", a * b as f64)));
                }
                (a, -a.ln() / ln_b, None)
            }
            Amplitude::Alpha(alpha) => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::param("alpha", format!("alpha = {alpha} must lie in (0, 1)")));
                }
                ((b as f64).powf(-alpha), alpha, None)
            }
        };
        Ok(WeierstrassComponent {
            b,
            a,
            alpha,
            phase,
            ratio,
        })
    }

    pub fn cosine(b: u64, amplitude: Amplitude) -> Result<Self> {
        Self::new(b, amplitude, Phase::Cosine)
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Same parameters with a different phase.
    pub fn with_phase(&self, phase: Phase) -> Self {
        WeierstrassComponent { phase, ..self.clone() }
    }

    /// `a^n` for `n = 0..=n_max`, by repeated multiplication.
    pub fn weights(&self, n_max: usize) -> Vec<f64> {
        let mut w = Vec::with_capacity(n_max + 1);
        let mut x = 1.0;
        for _ in 0..=n_max {
            w.push(x);
            x *= self.a;
        }
        w
    }

    /// Uniform bound `1/(1-a)` on every truncation.
    pub fn sup_bound(&self) -> f64 {
        1.0 / (1.0 - self.a)
    }

    pub fn to_config(&self) -> ComponentConfig {
        ComponentConfig {
            b: self.b as f64,
            a: self.ratio.map(|(p, q)| format!("{p}/{q}")),
            alpha: if self.ratio.is_none() { Some(self.alpha) } else { None },
            phase: self.phase,
        }
    }
}

impl fmt::Display for WeierstrassComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio {
            Some((p, q)) => write!(f, "b={} a={}/{} alpha={} phase={}", self.b, p, q, self.alpha, self.phase),
            None => write!(f, "b={} a={} alpha={} phase={}", self.b, self.a, self.alpha, self.phase),
        }
    }
}

/// Parse `p/q` or a decimal into an amplitude specification.
pub fn parse_amplitude(s: &str) -> Result<Amplitude> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = p.trim().parse::<u64>().map_err(|_| Error::param("a", format!("bad numerator in `{s}`")))?;
        let q = q.trim().parse::<u64>().map_err(|_| Error::param("a", format!("bad denominator in `{s}`")))?;
        return Ok(Amplitude::Ratio(p, q));
    }
    s.parse::<f64>()
        .map(Amplitude::A)
        .map_err(|_| Error::param("a", format!("`{s}` is neither p/q nor a number")))
}

/// Validate raw parameters, where `b` may come from an untyped source.
pub fn validate_component(b: f64, amplitude: Amplitude, phase: Phase) -> Result<WeierstrassComponent> {
    if !b.is_finite() || b.fract() != 0.0 {
        return Err(Error::param("b", format!("base must be an integer, got {b}")));
    }
    if b < 2.0 {
        return Err(Error::param("b", format!("base must be >= 2, got {b}")));
    }
    if b > u32::MAX as f64 {
        return Err(Error::param("b", format!("base {b} is too large")));
    }
    WeierstrassComponent::new(b as u64, amplitude, phase)
}

/// Serializable component record: `{b, a: "p/q" | alpha, phase}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub phase: Phase,
}

impl ComponentConfig {
    pub fn build(&self) -> Result<WeierstrassComponent> {
        let amplitude = match (&self.a, self.alpha) {
            (Some(a), None) => parse_amplitude(a)?,
            (None, Some(alpha)) => Amplitude::Alpha(alpha),
            (Some(_), Some(_)) => return Err(Error::param("a", "give either `a` or `alpha`, not both")),
            (None, None) => return Err(Error::param("a", "one of `a` or `alpha` is required")),
        };
        validate_component(self.b, amplitude, self.phase)
    }
}

/// `d` components sharing one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorWeierstrass {
    components: Vec<WeierstrassComponent>,
}

impl VectorWeierstrass {
    pub fn new(components: Vec<WeierstrassComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::param("components", "at least one component is required"));
        };
        if components.iter().any(|c| c.phase != first.phase) {
            return Err(Error::param(
                "phase",
                "all components must share one phase; mixing sine and cosine is not supported",
            ));
        }
        Ok(VectorWeierstrass { components })
    }

    /// The two-component example: `(b, a) = (2, 18/25)` and `(3, 3/5)`.
    pub fn figure1() -> Self {
        let c1 = WeierstrassComponent::cosine(2, Amplitude::Ratio(18, 25)).expect("valid");
        let c2 = WeierstrassComponent::cosine(3, Amplitude::Ratio(3, 5)).expect("valid");
        VectorWeierstrass {
            components: vec![c1, c2],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[WeierstrassComponent] {
        &self.components
    }

    pub fn phase(&self) -> Phase {
        self.components[0].phase
    }

    pub fn min_alpha(&self) -> f64 {
        self.components.iter().map(|c| c.alpha).fold(f64::INFINITY, f64::min)
    }

    /// Rough lifts need `alpha_i > 1/3` for every component.
    pub fn check_liftable(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            if c.alpha <= 1.0 / 3.0 {
                return Err(Error::param(
                    "alpha",
                    format!("component {i} ({c}) has alpha <= 1/3; the second-level lift needs alpha > 1/3"),
                ));
            }
        }
        Ok(())
    }
}

/// Fixed truncation level or tolerance-driven tail cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TruncationPolicy {
    Fixed(usize),
    Tolerance { tol: f64, eps_prime: f64, max_n: usize },
}

impl TruncationPolicy {
    pub fn tolerance(tol: f64, eps_prime: f64) -> Self {
        TruncationPolicy::Tolerance {
            tol,
            eps_prime,
            max_n: DEFAULT_MAX_N,
        }
    }

    pub fn validate(&self, min_alpha: f64) -> Result<()> {
        if let TruncationPolicy::Tolerance { tol, eps_prime, .. } = *self {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::param("tol", format!("tolerance must be positive, got {tol}")));
            }
            if !(eps_prime > 0.0 && eps_prime < min_alpha) {
                return Err(Error::param(
                    "eps-prime",
                    format!("eps' = {eps_prime} must lie in (0, min alpha = {min_alpha})"),
                ));
            }
        }
        Ok(())
    }
}

/// `Σ_{n=0}^{N} a^n trig(b^n π t)`, summed in ascending `n` with compensation.
pub fn eval_truncated(c: &WeierstrassComponent, n_max: usize, t: &RationalTime) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut w = 1.0;
    for x in t.phases(c.b).take(n_max + 1) {
        acc.add(w * c.phase.trig_pi(x));
        w *= c.a;
    }
    acc.value()
}

/// [`eval_truncated`] at a float time, converted to a rational exactly.
pub fn eval_truncated_real(c: &WeierstrassComponent, n_max: usize, t: f64) -> Result<f64> {
    Ok(eval_truncated(c, n_max, &RationalTime::from_f64(t)?))
}

/// Termwise derivative `Σ a^n (b^n π) trig'(b^n π t)` of the truncated sum.
pub fn eval_derivative(c: &WeierstrassComponent, n_max: usize, t: &RationalTime) -> f64 {
    let mut acc = CompensatedSum::new();
    let ab = c.a * c.b as f64;
    let mut w = std::f64::consts::PI;
    for x in t.phases(c.b).take(n_max + 1) {
        acc.add(w * c.phase.dtrig_pi(x));
        w *= ab;
    }
    acc.value()
}

pub fn eval_derivative_real(c: &WeierstrassComponent, n_max: usize, t: f64) -> Result<f64> {
    Ok(eval_derivative(c, n_max, &RationalTime::from_f64(t)?))
}

/// `Σ_{n >= start} a^n trig(b^n π t)`.
///
/// At a rational time the residues `b^n p mod 2q` are eventually periodic.
/// Once a period is found the remainder is closed as a geometric series, so
/// the result carries only rounding error. Without a period inside the search
/// window the sum runs until the tail bound drops below `1e-18`.
pub fn eval_tail(c: &WeierstrassComponent, start: usize, t: &RationalTime) -> f64 {
    let mut seq = t.phases(c.b);
    for _ in 0..start {
        seq.advance();
    }
    let mut w = c.a.powi(start as i32);
    let mut seen: HashMap<Residue, usize> = HashMap::new();
    let mut terms: Vec<f64> = Vec::new();
    for k in 0..CYCLE_SEARCH {
        let res = seq.residue();
        if let Some(&j) = seen.get(&res) {
            let head: CompensatedSum = terms[..j].iter().copied().collect();
            let cycle: CompensatedSum = terms[j..].iter().copied().collect();
            let ratio = c.a.powi((k - j) as i32);
            return head.value() + cycle.value() / (1.0 - ratio);
        }
        seen.insert(res, k);
        terms.push(w * c.phase.trig_pi(seq.current()));
        w *= c.a;
        seq.advance();
    }
    let mut acc: CompensatedSum = terms.into_iter().collect();
    while w / (1.0 - c.a) > 1e-18 {
        acc.add(w * c.phase.trig_pi(seq.current()));
        w *= c.a;
        seq.advance();
    }
    acc.value()
}

/// The full series `W(t)`.
pub fn eval_limit(c: &WeierstrassComponent, t: &RationalTime) -> f64 {
    eval_tail(c, 0, t)
}

pub fn eval_vector(v: &VectorWeierstrass, n_max: usize, t: &RationalTime) -> Vec<f64> {
    v.components.iter().map(|c| eval_truncated(c, n_max, t)).collect()
}

pub fn eval_vector_limit(v: &VectorWeierstrass, t: &RationalTime) -> Vec<f64> {
    v.components.iter().map(|c| eval_limit(c, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    fn rt(s: &str) -> RationalTime {
        s.parse().unwrap()
    }

    fn c1() -> WeierstrassComponent {
        WeierstrassComponent::cosine(2, Amplitude::Ratio(18, 25)).unwrap()
    }

    fn c2() -> WeierstrassComponent {
        WeierstrassComponent::cosine(3, Amplitude::Ratio(3, 5)).unwrap()
    }

    #[test]
    fn exponents_of_the_example_components() {
        assert!((c1().alpha() - 0.473931).abs() < 5e-7);
        assert!((c2().alpha() - 0.464974).abs() < 5e-7);
    }

    #[test]
    fn amplitude_and_exponent_are_consistent() {
        for c in [c1(), c2()] {
            let a = (c.b() as f64).powf(-c.alpha());
            assert!((a - c.a()).abs() <= 2.0 * f64::EPSILON * c.a(), "{c}");
        }
        let c = WeierstrassComponent::cosine(3, Amplitude::Alpha(0.4)).unwrap();
        assert!((-c.a().ln() / 3f64.ln() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let err = WeierstrassComponent::cosine(2, Amplitude::Ratio(1, 2)).unwrap_err();
        assert!(err.to_string().contains("ab > 1"), "{err}");
        assert!(WeierstrassComponent::cosine(1, Amplitude::A(0.9)).is_err());
        assert!(WeierstrassComponent::cosine(2, Amplitude::A(1.0)).is_err());
        assert!(WeierstrassComponent::cosine(2, Amplitude::A(0.0)).is_err());
        assert!(WeierstrassComponent::cosine(2, Amplitude::Alpha(1.0)).is_err());
        let err = validate_component(2.5, Amplitude::A(0.7), Phase::Cosine).unwrap_err();
        assert!(err.to_string().contains("integer"), "{err}");
        let err = validate_component(1.0, Amplitude::A(0.7), Phase::Cosine).unwrap_err();
        assert!(err.to_string().contains("`b`"), "{err}");
    }

    #[test]
    fn mixed_phases_rejected() {
        let v = VectorWeierstrass::new(vec![c1(), c2().with_phase(Phase::Sine)]);
        assert!(v.is_err());
        assert!(VectorWeierstrass::new(vec![]).is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg: ComponentConfig = serde_json::from_str(r#"{"b": 2, "a": "18/25", "phase": "cos"}"#).unwrap();
        assert_eq!(cfg.build().unwrap(), c1());
        let cfg: ComponentConfig = serde_json::from_str(r#"{"b": 3, "alpha": 0.4, "phase": "sin"}"#).unwrap();
        let c = cfg.build().unwrap();
        assert_eq!(c.phase(), Phase::Sine);
        assert_eq!(c.to_config().build().unwrap(), c);
        let cfg: ComponentConfig = serde_json::from_str(r#"{"b": 2.5, "a": "3/4"}"#).unwrap();
        assert!(cfg.build().is_err());
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(eval_truncated(&c1(), 0, &RationalTime::zero()), 1.0);
        assert_eq!(eval_truncated(&c1(), 0, &RationalTime::one()), -1.0);
        assert!((eval_limit(&c1(), &RationalTime::zero()) - 25.0 / 7.0).abs() < 1e-14);
        assert!((eval_limit(&c1(), &RationalTime::one()) - 11.0 / 7.0).abs() < 1e-14);
        assert!((eval_limit(&c2(), &RationalTime::one()) + 2.5).abs() < 1e-14);
    }

    #[test]
    fn derivative_values() {
        assert_eq!(eval_derivative(&c1(), 0, &RationalTime::zero()), 0.0);
        let d = eval_derivative(&c1(), 1, &rt("1/2"));
        assert!((d + std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let c = c2();
        let h = 1e-6;
        let t = 0.3;
        let fd = (eval_truncated_real(&c, 3, t + h).unwrap() - eval_truncated_real(&c, 3, t - h).unwrap()) / (2.0 * h);
        let d = eval_derivative_real(&c, 3, t).unwrap();
        assert!(((d - fd) / d).abs() <= 1e-7, "{d} vs {fd}");
    }

    #[test]
    fn tail_exact_sum_matches_long_truncation() {
        for t in ["1/3", "2/7", "37/100", "5/1024", "1/81"] {
            let t = rt(t);
            for c in [c1(), c2(), c1().with_phase(Phase::Sine)] {
                let limit = eval_limit(&c, &t);
                let long = eval_truncated(&c, 200, &t);
                assert!((limit - long).abs() < 1e-13, "{c} at {t}: {limit} vs {long}");
                let split = eval_truncated(&c, 9, &t) + eval_tail(&c, 10, &t);
                assert!((limit - split).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reflection_about_one() {
        // cos(b^n π (2 - t)) = cos(b^n π t): the residue of 2 - t is 2q - r.
        let c = c2();
        for k in 1..64u32 {
            let t = RationalTime::new(k as u128, 64).unwrap();
            let q = t.denom();
            let qf = q.to_string().parse::<f64>().unwrap();
            let m = &q * 2u32;
            let mut r = (&m - &t.numer()) % &m;
            let mut acc = CompensatedSum::new();
            let mut w = 1.0;
            for _ in 0..=20 {
                let x = r.to_string().parse::<f64>().unwrap() / qf;
                acc.add(w * c.phase().trig_pi(x));
                w *= c.a();
                r = (r * 3u32) % &m;
            }
            assert!((acc.value() - eval_truncated(&c, 20, &t)).abs() < 1e-14);
        }
    }

    #[test]
    fn vector_is_componentwise() {
        let v = VectorWeierstrass::figure1();
        assert_eq!(eval_vector(&v, 0, &RationalTime::zero()), vec![1.0, 1.0]);
        let t = rt("37/100");
        let w = eval_vector(&v, 7, &t);
        assert_eq!(w, vec![eval_truncated(&c1(), 7, &t), eval_truncated(&c2(), 7, &t)]);
    }
}
