//! Exact times in `[0, 1]` and exact reduction of `k·π·t` modulo `2π`.
//!
//! A [`RationalTime`] `p/q` lets the phase `b^n·t mod 2` be tracked as the
//! integer residue `b^n·p mod 2q`, so `cos(b^n π t)` is evaluated on an
//! argument in `[0, 2)` with no loss of phase information however large
//! `b^n` gets. Binary floats are dyadic rationals, so every finite `f64` in
//! `[0, 1]` converts to a `RationalTime` exactly and enjoys the same
//! guarantee.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reduced fraction `num/den` with value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalTime {
    repr: Repr,
}

// Canonical form: reduced, and `Small` whenever both parts fit in u128.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Small(u128, u128),
    Big(BigUint, BigUint),
}

fn big(x: u128) -> BigUint {
    BigUint::from(x)
}

fn out_of_range(num: &BigUint, den: &BigUint) -> Error {
    Error::TimeOutOfRange {
        value: format!("{num}/{den}"),
    }
}

impl RationalTime {
    pub fn zero() -> Self {
        RationalTime {
            repr: Repr::Small(0, 1),
        }
    }

    pub fn one() -> Self {
        RationalTime {
            repr: Repr::Small(1, 1),
        }
    }

    /// `num/den`, reduced. Fails if `den == 0` or the value exceeds one.
    pub fn new(num: u128, den: u128) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        if num > den {
            return Err(out_of_range(&big(num), &big(den)));
        }
        let g = num.gcd(&den);
        Ok(RationalTime {
            repr: Repr::Small(num / g, den / g),
        })
    }

    pub fn from_biguint(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        if num > den {
            return Err(out_of_range(&num, &den));
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: BigUint, den: BigUint) -> Self {
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() { (num, den) } else { (num / &g, den / &g) };
        match (num.to_u128(), den.to_u128()) {
            (Some(p), Some(q)) => RationalTime {
                repr: Repr::Small(p, q),
            },
            _ => RationalTime {
                repr: Repr::Big(num, den),
            },
        }
    }

    /// `k / 2^depth`.
    pub fn dyadic(k: u64, depth: u32) -> Result<Self> {
        if depth > 126 {
            return Err(Error::param("depth", "dyadic depth must be at most 126"));
        }
        Self::new(k as u128, 1u128 << depth)
    }

    /// Exact conversion of a binary float.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(Error::TimeOutOfRange {
                value: format!("{x}"),
            });
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut mant, mut exp) = if exp_bits == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let tz = mant.trailing_zeros() as i64;
        mant >>= tz;
        exp += tz;
        if exp >= 0 {
            // only x == 1 reaches here
            return Ok(Self::one());
        }
        let shift = (-exp) as u32;
        if shift <= 127 {
            Ok(RationalTime {
                repr: Repr::Small(mant as u128, 1u128 << shift),
            })
        } else {
            Ok(RationalTime {
                repr: Repr::Big(BigUint::from(mant), BigUint::one() << shift),
            })
        }
    }

    pub fn numer(&self) -> BigUint {
        match &self.repr {
            Repr::Small(p, _) => big(*p),
            Repr::Big(p, _) => p.clone(),
        }
    }

    pub fn denom(&self) -> BigUint {
        match &self.repr {
            Repr::Small(_, q) => big(*q),
            Repr::Big(_, q) => q.clone(),
        }
    }

    fn parts(&self) -> (BigUint, BigUint) {
        (self.numer(), self.denom())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Small(0, _))
    }

    pub fn to_f64(&self) -> f64 {
        match &self.repr {
            Repr::Small(p, q) => *p as f64 / *q as f64,
            Repr::Big(p, q) => ratio_to_f64(p, q),
        }
    }

    /// `self + other`; fails if the sum exceeds one.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if let (Repr::Small(p1, q1), Repr::Small(p2, q2)) = (&self.repr, &other.repr) {
            let fast = (|| {
                let num = p1.checked_mul(*q2)?.checked_add(p2.checked_mul(*q1)?)?;
                let den = q1.checked_mul(*q2)?;
                Some((num, den))
            })();
            if let Some((num, den)) = fast {
                return Self::new(num, den);
            }
        }
        let (p1, q1) = self.parts();
        let (p2, q2) = other.parts();
        Self::from_biguint(p1 * &q2 + p2 * &q1, q1 * q2)
    }

    /// `self - other`; fails if the difference is negative.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        if self < other {
            return Err(Error::Ordering(format!("{self} - {other} is negative")));
        }
        if let (Repr::Small(p1, q1), Repr::Small(p2, q2)) = (&self.repr, &other.repr) {
            let fast = (|| {
                let num = p1.checked_mul(*q2)?.checked_sub(p2.checked_mul(*q1)?)?;
                let den = q1.checked_mul(*q2)?;
                Some((num, den))
            })();
            if let Some((num, den)) = fast {
                return Self::new(num, den);
            }
        }
        let (p1, q1) = self.parts();
        let (p2, q2) = other.parts();
        Self::from_biguint(p1 * &q2 - p2 * &q1, q1 * q2)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if let (Repr::Small(p1, q1), Repr::Small(p2, q2)) = (&self.repr, &other.repr) {
            if let (Some(num), Some(den)) = (p1.checked_mul(*p2), q1.checked_mul(*q2)) {
                return Self::new(num, den).expect("product of unit-interval values");
            }
        }
        let (p1, q1) = self.parts();
        let (p2, q2) = other.parts();
        Self::reduced(p1 * p2, q1 * q2)
    }

    /// `s + (t - s)·u` for `s <= t`.
    pub fn lerp(s: &Self, t: &Self, u: &Self) -> Result<Self> {
        let width = t.checked_sub(s)?;
        s.checked_add(&width.mul(u))
    }

    /// Iterator over `base^n · self mod 2` for `n = 0, 1, 2, ...`.
    pub fn phases(&self, base: u64) -> PhaseSeq {
        PhaseSeq::new(self, base)
    }

    /// `k · self mod 2`, as a float in `[0, 2)`.
    pub fn phase_of_multiple(&self, k: &BigUint) -> f64 {
        let (p, q) = self.parts();
        let m: BigUint = &q << 1usize;
        let r = (k % &m) * p % &m;
        ratio_to_f64(&r, &q)
    }
}

fn ratio_to_f64(r: &BigUint, q: &BigUint) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    // (r << k) / q carries at least 64 significant bits
    let k = (q.bits() as i64 - r.bits() as i64 + 64).max(0);
    let quotient = ((r << k as usize) / q).to_f64().unwrap_or(f64::NAN);
    ldexp(quotient, -k)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl Ord for RationalTime {
    fn cmp(&self, other: &Self) -> Ordering {
        if let (Repr::Small(p1, q1), Repr::Small(p2, q2)) = (&self.repr, &other.repr) {
            if let (Some(l), Some(r)) = (p1.checked_mul(*q2), p2.checked_mul(*q1)) {
                return l.cmp(&r);
            }
        }
        let (p1, q1) = self.parts();
        let (p2, q2) = other.parts();
        (p1 * q2).cmp(&(p2 * q1))
    }
}

impl PartialOrd for RationalTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Small(p, q) => write!(f, "{p}/{q}"),
            Repr::Big(p, q) => write!(f, "{p}/{q}"),
        }
    }
}

impl FromStr for RationalTime {
    type Err = Error;

    /// Accepts `p/q`, an integer, or a plain decimal such as `0.375`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("`{s}` is not a rational time (expected p/q or a decimal)"));
        let parse_uint = |x: &str| -> Result<BigUint> {
            if x.is_empty() || !x.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            x.parse::<BigUint>().map_err(|_| bad())
        };
        if let Some((p, q)) = s.split_once('/') {
            return Self::from_biguint(parse_uint(p.trim())?, parse_uint(q.trim())?);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let int = if int.is_empty() { "0" } else { int };
            let digits = format!("{int}{frac}");
            let den = num_traits::pow(BigUint::from(10u32), frac.len());
            return Self::from_biguint(parse_uint(&digits)?, den);
        }
        Self::from_biguint(parse_uint(s)?, BigUint::one())
    }
}

impl TryFrom<f64> for RationalTime {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        Self::from_f64(x)
    }
}

impl Serialize for RationalTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Exact residue of `base^n · p` modulo `2q`; used to detect periodicity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Residue {
    Small(u128),
    Big(BigUint),
}

/// Sequence of reduced phases `base^n · t mod 2`, each in `[0, 2)`.
#[derive(Clone, Debug)]
pub struct PhaseSeq {
    base: u64,
    state: PhaseState,
}

#[derive(Clone, Debug)]
enum PhaseState {
    // q = 2^k: reduction modulo 2q is a bit mask, and wrapping
    // multiplication is exact modulo 2^128.
    Pow2 { r: u128, mask: u128, scale: f64 },
    Small { r: u128, m: u128, q: u128 },
    Big { r: BigUint, m: BigUint, q: BigUint },
}

impl PhaseSeq {
    fn new(t: &RationalTime, base: u64) -> Self {
        let state = match t.repr {
            Repr::Small(p, q) if q.is_power_of_two() => {
                let k = q.trailing_zeros();
                let mask = if k + 1 >= 128 { u128::MAX } else { (1u128 << (k + 1)) - 1 };
                PhaseState::Pow2 {
                    r: p,
                    mask,
                    scale: 2f64.powi(-(k as i32)),
                }
            }
            Repr::Small(p, q) if q.checked_mul(2).and_then(|m| m.checked_mul(base as u128)).is_some() => {
                PhaseState::Small { r: p, m: 2 * q, q }
            }
            _ => {
                let (p, q) = t.parts();
                PhaseState::Big {
                    r: p,
                    m: &q << 1usize,
                    q,
                }
            }
        };
        PhaseSeq { base, state }
    }

    /// Current phase `x_n` with `b^n π t ≡ π x_n (mod 2π)`.
    pub fn current(&self) -> f64 {
        match &self.state {
            PhaseState::Pow2 { r, scale, .. } => *r as f64 * scale,
            PhaseState::Small { r, q, .. } => *r as f64 / *q as f64,
            PhaseState::Big { r, q, .. } => ratio_to_f64(r, q),
        }
    }

    pub fn residue(&self) -> Residue {
        match &self.state {
            PhaseState::Pow2 { r, .. } | PhaseState::Small { r, .. } => Residue::Small(*r),
            PhaseState::Big { r, .. } => Residue::Big(r.clone()),
        }
    }

    pub fn advance(&mut self) {
        let b = self.base;
        match &mut self.state {
            PhaseState::Pow2 { r, mask, .. } => *r = r.wrapping_mul(b as u128) & *mask,
            PhaseState::Small { r, m, .. } => *r = (*r * b as u128) % *m,
            PhaseState::Big { r, m, .. } => *r = (&*r * b) % &*m,
        }
    }
}

impl Iterator for PhaseSeq {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let x = self.current();
        self.advance();
        Some(x)
    }
}

/// `(sin πx, cos πx)`, exact at multiples of one half.
pub fn sincos_pi(x: f64) -> (f64, f64) {
    let k = (2.0 * x).round();
    let y = x - 0.5 * k;
    let (s, c) = (std::f64::consts::PI * y).sin_cos();
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}
