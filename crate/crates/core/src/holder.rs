//! Hölder-exponent estimation for truncations and the explicit witness that
//! truncations do not converge in the Hölder norm of the same exponent.

use rayon::prelude::*;
use serde::Serialize;

use crate::csvout::CsvTable;
use crate::error::{Error, Result};
use crate::time::RationalTime;
use crate::weier::{eval_tail, eval_truncated, Phase, WeierstrassComponent};

/// Smallest depth accepted by [`estimate_exponent`].
pub const MIN_FIT_DEPTH: u32 = 4;

/// One scale of an exponent fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub m: u32,
    pub scale: f64,
    pub sup_increment: f64,
}

/// Least-squares fit of `log M(m) = log C - alpha · m log 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub alpha_hat: f64,
    pub constant: f64,
    pub rows: Vec<ScaleRow>,
}

impl ExponentFit {
    pub fn to_table(&self) -> CsvTable {
        let mut table = CsvTable::new(["m", "scale", "supIncrement"]);
        for r in &self.rows {
            table.push([r.m.to_string(), r.scale.to_string(), r.sup_increment.to_string()]);
        }
        table.meta("alpha_hat", self.alpha_hat).meta("constant", self.constant);
        table
    }
}

/// Fits the decay of `M(m) = sup |W_N(t) - W_N(s)|` over pairs of the
/// depth-`depth` dyadic grid with `t - s = 2^-m`, for `m` in `[2, depth]`.
pub fn estimate_exponent(c: &WeierstrassComponent, n_max: usize, depth: u32) -> Result<ExponentFit> {
    if !(MIN_FIT_DEPTH..=crate::roughpath::MAX_GRID_DEPTH).contains(&depth) {
        return Err(Error::param(
            "depth",
            format!("depth must lie in [{MIN_FIT_DEPTH}, {}], got {depth}", crate::roughpath::MAX_GRID_DEPTH),
        ));
    }
    let len = 1usize << depth;
    let values: Vec<f64> = (0..=len as u64)
        .into_par_iter()
        .map(|k| eval_truncated(c, n_max, &RationalTime::dyadic(k, depth).expect("depth checked")))
        .collect();
    let rows: Vec<ScaleRow> = (2..=depth)
        .into_par_iter()
        .map(|m| {
            let stride = 1usize << (depth - m);
            let sup = (0..=len - stride).fold(0.0f64, |acc, k| acc.max((values[k + stride] - values[k]).abs()));
            ScaleRow {
                m,
                scale: (-(m as f64)).exp2(),
                sup_increment: sup,
            }
        })
        .collect();
    if rows.iter().any(|r| r.sup_increment.is_nan() || r.sup_increment <= 0.0) {
        return Err(Error::Fit("an increment maximum vanished; the log-scale fit is degenerate".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.scale.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_increment.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::Fit("scales have zero variance".into()));
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    Ok(ExponentFit {
        alpha_hat: slope,
        constant: (my - slope * mx).exp(),
        rows,
    })
}

/// Point where `W - W_N` has a large Hölder quotient against `s = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub t: RationalTime,
    pub lower_bound: f64,
    /// `|(W - W_N)(t) - (W - W_N)(0)| / t^alpha`, tail summed exactly.
    pub ratio: f64,
}

impl Witness {
    pub fn holds(&self) -> bool {
        self.ratio >= self.lower_bound * (1.0 - 1e-9)
    }
}

/// Witness for odd `b`: `t = b^-N` with bound `2a/(1-a)`; for even `b`:
/// `t = b^-(N+1)` with bound 2. Since `a = b^-alpha` both bounds are
/// independent of `N`.
pub fn nonconvergence_witness(c: &WeierstrassComponent, n_max: usize) -> Result<Witness> {
    if c.phase() != Phase::Cosine {
        return Err(Error::Unsupported("witness formula proven for cosine only".into()));
    }
    let b = c.b();
    let (exponent, lower_bound) = if b % 2 == 1 {
        (n_max, 2.0 * c.a() / (1.0 - c.a()))
    } else {
        (n_max + 1, 2.0)
    };
    let den = num_bigint::BigUint::from(b).pow(u32::try_from(exponent).map_err(|_| Error::param("N", "too large"))?);
    let t = RationalTime::from_biguint(1u32.into(), den)?;
    let start = n_max + 1;
    let diff = eval_tail(c, start, &t) - eval_tail(c, start, &RationalTime::zero());
    // t^alpha = a^exponent since a = b^-alpha
    let ratio = diff.abs() / c.a().powi(exponent as i32);
    Ok(Witness { t, lower_bound, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weier::Amplitude;

    #[test]
    fn single_cosine_is_lipschitz() {
        let c = WeierstrassComponent::cosine(2, Amplitude::Ratio(3, 4)).unwrap();
        let fit = estimate_exponent(&c, 0, 8).unwrap();
        assert!((fit.alpha_hat - 1.0).abs() < 0.05, "{}", fit.alpha_hat);
        assert_eq!(fit.rows.len(), 7);
        assert_eq!(fit.to_table().header(), ["m", "scale", "supIncrement"]);
    }

    #[test]
    fn depth_guard() {
        let c = WeierstrassComponent::cosine(2, Amplitude::Ratio(18, 25)).unwrap();
        assert!(estimate_exponent(&c, 5, 3).is_err());
        assert!(estimate_exponent(&c, 5, 15).is_err());
    }

    #[test]
    fn witness_bounds() {
        let c3 = WeierstrassComponent::cosine(3, Amplitude::Ratio(3, 5)).unwrap();
        let c2 = WeierstrassComponent::cosine(2, Amplitude::Ratio(18, 25)).unwrap();
        for n in [1, 5, 20] {
            let w = nonconvergence_witness(&c3, n).unwrap();
            assert!((w.lower_bound - 3.0).abs() < 1e-15);
            assert!((w.ratio / 3.0 - 1.0).abs() < 1e-9, "{}", w.ratio);
            assert!(w.holds());
            let w = nonconvergence_witness(&c2, n).unwrap();
            assert_eq!(w.lower_bound, 2.0);
            assert_eq!(w.t, RationalTime::new(1, 1 << (n + 1)).unwrap());
            assert!((w.ratio / 2.0 - 1.0).abs() < 1e-9, "{}", w.ratio);
        }
        let sine = c2.with_phase(Phase::Sine);
        let err = nonconvergence_witness(&sine, 3).unwrap_err();
        assert!(err.to_string().contains("cosine only"));
    }
}
