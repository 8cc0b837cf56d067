//! Iterated integrals `∫_s^t f_N(r) g_N'(r) dr` of absolutely summable
//! trigonometric series `f = Σ c_n e^{iα_n t}`, `g = Σ d_n e^{iβ_n t}` with
//! positive frequencies, in closed form.
//!
//! Truncation level `N` keeps the first `N` terms of each list.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::csvout::CsvTable;
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;
use crate::time::{sincos_pi, RationalTime};
use crate::weier::{Amplitude, WeierstrassComponent};

/// A positive frequency, exact when it is an integer multiple of π.
#[derive(Clone, Debug, PartialEq)]
pub enum Frequency {
    /// `k π`
    PiMultiple(BigUint),
    Real(f64),
}

impl Frequency {
    pub fn value(&self) -> f64 {
        match self {
            Frequency::PiMultiple(k) => k.to_f64().unwrap_or(f64::INFINITY) * std::f64::consts::PI,
            Frequency::Real(w) => *w,
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            Frequency::PiMultiple(k) => !k.is_zero(),
            Frequency::Real(w) => *w > 0.0 && w.is_finite(),
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::PiMultiple(k) => write!(f, "{k}π"),
            Frequency::Real(w) => write!(f, "{w}"),
        }
    }
}

/// `c e^{iωt}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: Complex64,
    pub frequency: Frequency,
}

/// Finite trigonometric series with positive frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    terms: Vec<Term>,
}

impl TrigSeries {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for (k, term) in terms.iter().enumerate() {
            if !term.frequency.is_positive() {
                return Err(Error::param("frequency", format!("term {k} has nonpositive frequency {}", term.frequency)));
            }
            if !(term.coefficient.re.is_finite() && term.coefficient.im.is_finite()) {
                return Err(Error::param("coefficient", format!("term {k} has a non-finite coefficient")));
            }
        }
        Ok(TrigSeries { terms })
    }

    /// `Σ_{n=0}^{N} a^n e^{i b^n π t}`, the complex Weierstrass sum.
    pub fn complex_weierstrass(b: u64, amplitude: Amplitude, n_max: usize) -> Result<Self> {
        let c = WeierstrassComponent::cosine(b, amplitude)?;
        let base = BigUint::from(b);
        let mut k = BigUint::from(1u32);
        let terms = c
            .weights(n_max)
            .into_iter()
            .map(|w| {
                let term = Term {
                    coefficient: Complex64::new(w, 0.0),
                    frequency: Frequency::PiMultiple(k.clone()),
                };
                k *= &base;
                term
            })
            .collect();
        TrigSeries::new(terms)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of the first `n` terms at `t`.
    pub fn eval(&self, n: usize, t: &RationalTime) -> Complex64 {
        let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
        for term in &self.terms[..n.min(self.len())] {
            let z = term.coefficient * cis(&term.frequency, t);
            re.add(z.re);
            im.add(z.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// Sum of `|c_n|` over terms `from..to`.
    fn abs_sum(&self, from: usize, to: usize) -> f64 {
        self.terms[from..to].iter().map(|t| t.coefficient.norm()).collect::<CompensatedSum>().value()
    }
}

fn cis(freq: &Frequency, t: &RationalTime) -> Complex64 {
    match freq {
        Frequency::PiMultiple(k) => {
            let (s, c) = sincos_pi(t.phase_of_multiple(k));
            Complex64::new(c, s)
        }
        Frequency::Real(w) => Complex64::from_polar(1.0, w * t.to_f64()),
    }
}

// Frequency `α ± β` of a product of two terms.
enum Combined {
    Zero,
    Pi { k: BigUint, negative: bool },
    Real(f64),
}

impl Combined {
    fn new(a: &Frequency, b: &Frequency, conjugate: bool) -> Self {
        match (a, b) {
            (Frequency::PiMultiple(ka), Frequency::PiMultiple(kb)) if !conjugate => Combined::Pi {
                k: ka + kb,
                negative: false,
            },
            (Frequency::PiMultiple(ka), Frequency::PiMultiple(kb)) => match ka.cmp(kb) {
                Ordering::Equal => Combined::Zero,
                Ordering::Greater => Combined::Pi {
                    k: ka - kb,
                    negative: false,
                },
                Ordering::Less => Combined::Pi {
                    k: kb - ka,
                    negative: true,
                },
            },
            _ => {
                let w = if conjugate { a.value() - b.value() } else { a.value() + b.value() };
                if w == 0.0 {
                    Combined::Zero
                } else {
                    Combined::Real(w)
                }
            }
        }
    }

    fn value(&self) -> f64 {
        match self {
            Combined::Zero => 0.0,
            Combined::Pi { k, negative } => {
                let w = k.to_f64().unwrap_or(f64::INFINITY) * std::f64::consts::PI;
                if *negative {
                    -w
                } else {
                    w
                }
            }
            Combined::Real(w) => *w,
        }
    }

    fn cis(&self, t: &RationalTime) -> Complex64 {
        match self {
            Combined::Zero => Complex64::new(1.0, 0.0),
            Combined::Pi { k, negative } => {
                let z = cis(&Frequency::PiMultiple(k.clone()), t);
                if *negative {
                    z.conj()
                } else {
                    z
                }
            }
            Combined::Real(w) => Complex64::from_polar(1.0, w * t.to_f64()),
        }
    }

    /// `β / ω` where `ω` is this frequency, exact for multiples of π.
    fn weight(&self, beta: &Frequency) -> f64 {
        match (self, beta) {
            (Combined::Pi { k, negative }, Frequency::PiMultiple(kb)) => {
                let r = ratio(kb, k);
                if *negative {
                    -r
                } else {
                    r
                }
            }
            _ => beta.value() / self.value(),
        }
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    match (num.to_f64(), den.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            let shift = den.bits().saturating_sub(60) as usize;
            (num >> shift).to_f64().unwrap_or(f64::INFINITY) / (den >> shift).to_f64().unwrap_or(f64::INFINITY)
        }
    }
}

fn check_level(f: &TrigSeries, g: &TrigSeries, n: usize) -> Result<()> {
    if n > f.len() || n > g.len() {
        return Err(Error::param(
            "N",
            format!("truncation {n} exceeds the term lists (lengths {} and {})", f.len(), g.len()),
        ));
    }
    Ok(())
}

fn check_order(s: &RationalTime, t: &RationalTime) -> Result<()> {
    if s > t {
        return Err(Error::Ordering(format!("need s <= t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// `∫_s^t f_N (g_N)' dr` or, with `conjugate`, `∫_s^t f_N (conj g_N)' dr`.
fn pair_integral(f: &TrigSeries, g: &TrigSeries, n: usize, s: &RationalTime, t: &RationalTime, conjugate: bool) -> Complex64 {
    let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
    let width = t.checked_sub(s).map(|w| w.to_f64()).unwrap_or(0.0);
    for tf in &f.terms[..n] {
        for tg in &g.terms[..n] {
            let d = if conjugate { tg.coefficient.conj() } else { tg.coefficient };
            let sign = if conjugate { -1.0 } else { 1.0 };
            let w = Combined::new(&tf.frequency, &tg.frequency, conjugate);
            // c d (±iβ) ∫ e^{iωr} dr = ± c d β (e^{iωt} - e^{iωs}) / ω
            let z = match w {
                Combined::Zero => tf.coefficient * d * Complex64::new(0.0, sign * tg.frequency.value() * width),
                _ => tf.coefficient * d * (sign * w.weight(&tg.frequency)) * (w.cis(t) - w.cis(s)),
            };
            re.add(z.re);
            im.add(z.im);
        }
    }
    Complex64::new(re.value(), im.value())
}

/// `Σ_{n1,n2 < N} c_{n1} (iβ_{n2}) d_{n2} (e^{it(α+β)} - e^{is(α+β)}) / (i(α+β))`.
pub fn iterated_integral_partial(f: &TrigSeries, g: &TrigSeries, n: usize, s: &RationalTime, t: &RationalTime) -> Result<Complex64> {
    check_level(f, g, n)?;
    check_order(s, t)?;
    Ok(pair_integral(f, g, n, s, t, false))
}

/// Result of [`cauchy_gap`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CauchyGap {
    pub gap: f64,
    pub bound: f64,
}

impl CauchyGap {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound * (1.0 + 1e-12)
    }
}

/// `|partial(N) - partial(M)|` against
/// `2 (Σ_{n<=N}|c_n|)(Σ_{M<n<=N}|d_n|) + 2 (Σ_{M<n<=N}|c_n|)(Σ_{n<=N}|d_n|)`.
pub fn cauchy_gap(f: &TrigSeries, g: &TrigSeries, m: usize, n: usize, s: &RationalTime, t: &RationalTime) -> Result<CauchyGap> {
    if m >= n {
        return Err(Error::param("M", format!("need M < N, got M = {m}, N = {n}")));
    }
    let hi = iterated_integral_partial(f, g, n, s, t)?;
    let lo = iterated_integral_partial(f, g, m, s, t)?;
    let bound = 2.0 * f.abs_sum(0, n) * g.abs_sum(m, n) + 2.0 * f.abs_sum(m, n) * g.abs_sum(0, n);
    Ok(CauchyGap {
        gap: (hi - lo).norm(),
        bound,
    })
}

/// One level of [`imkeller_demo`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImkellerRow {
    pub n: usize,
    pub f1_dg1: f64,
    pub f2_dg2: f64,
    /// `∫F1 dG2 + ∫F2 dG1`
    pub sum_combo: f64,
    /// `∫F1 dG2 - ∫F2 dG1`
    pub diff_combo: f64,
    /// Cauchy bound for the step from the previous level.
    pub sum_bound: Option<f64>,
}

/// Table of the four real integrals of `F = F1 + iF2 = Σ_{n<=N} a^n e^{i b^n π t}`
/// against `G = F`, one row per level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImkellerDemo {
    pub b: u64,
    pub a: f64,
    pub s: RationalTime,
    pub t: RationalTime,
    pub rows: Vec<ImkellerRow>,
}

fn deltas(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

impl ImkellerDemo {
    fn column(&self, f: impl Fn(&ImkellerRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn sum_deltas(&self) -> Vec<f64> {
        deltas(&self.column(|r| r.sum_combo))
    }

    pub fn diff_deltas(&self) -> Vec<f64> {
        deltas(&self.column(|r| r.diff_combo))
    }

    pub fn f1_dg1_deltas(&self) -> Vec<f64> {
        deltas(&self.column(|r| r.f1_dg1))
    }

    /// Every step of the sum combination lies under its Cauchy bound.
    pub fn sum_obeys_bound(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sum_bound.is_some_and(|b| (w[1].sum_combo - w[0].sum_combo).abs() <= b * (1.0 + 1e-12)))
    }

    /// No Cauchy decay: the last step of the difference combination is at
    /// least as large as the first. Evidence on the tested range only.
    pub fn diff_does_not_decay(&self) -> bool {
        let d = self.diff_deltas();
        d.len() >= 2 && d[d.len() - 1] >= d[0]
    }

    pub fn to_table(&self) -> CsvTable {
        let mut table = CsvTable::new([
            "N",
            "F1dG1",
            "F2dG2",
            "sumCombo",
            "diffCombo",
            "deltaPrevF1dG1",
            "deltaPrevF2dG2",
            "deltaPrevSum",
            "deltaPrevDiff",
            "sumBound",
        ]);
        let blank = String::new;
        for (k, r) in self.rows.iter().enumerate() {
            let delta = |f: fn(&ImkellerRow) -> f64| {
                if k == 0 {
                    blank()
                } else {
                    (f(r) - f(&self.rows[k - 1])).abs().to_string()
                }
            };
            table.push([
                r.n.to_string(),
                r.f1_dg1.to_string(),
                r.f2_dg2.to_string(),
                r.sum_combo.to_string(),
                r.diff_combo.to_string(),
                delta(|r| r.f1_dg1),
                delta(|r| r.f2_dg2),
                delta(|r| r.sum_combo),
                delta(|r| r.diff_combo),
                r.sum_bound.map_or_else(blank, |b| b.to_string()),
            ]);
        }
        table
            .meta("b", self.b)
            .meta("a", self.a)
            .meta("s", &self.s)
            .meta("t", &self.t)
            .meta("note", "diffCombo non-decay is evidence on the tested range, not a proof of divergence");
        table
    }
}

/// With `P = ∫ F dG` and `Q = ∫ F d(conj G)`:
/// `∫F1dG1 = Re(P+Q)/2`, `∫F2dG2 = Re(Q-P)/2`, sum combination `Im P`,
/// difference combination `-Im Q`.
pub fn imkeller_demo(b: u64, amplitude: Amplitude, ns: &[usize], s: &RationalTime, t: &RationalTime) -> Result<ImkellerDemo> {
    check_order(s, t)?;
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("Ns", "levels must be strictly increasing"));
    }
    let top = ns.last().copied().unwrap_or(0);
    let series = TrigSeries::complex_weierstrass(b, amplitude, top)?;
    let mut rows: Vec<ImkellerRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let count = n + 1;
        let p = pair_integral(&series, &series, count, s, t, false);
        let q = pair_integral(&series, &series, count, s, t, true);
        let sum_bound = rows.last().map(|prev| {
            // both factors of the Cauchy bound coincide since G = F
            4.0 * series.abs_sum(0, count) * series.abs_sum(prev.n + 1, count)
        });
        rows.push(ImkellerRow {
            n,
            f1_dg1: 0.5 * (p.re + q.re),
            f2_dg2: 0.5 * (q.re - p.re),
            sum_combo: p.im,
            diff_combo: -q.im,
            sum_bound,
        });
    }
    let a = WeierstrassComponent::cosine(b, amplitude)?.a();
    Ok(ImkellerDemo {
        b,
        a,
        s: s.clone(),
        t: t.clone(),
        rows,
    })
}
