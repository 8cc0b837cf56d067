#![allow(dead_code)]

use num_bigint::BigUint;
use weierlift::iterated::FrequencyPair;
use weierlift::quad::adaptive_simpson;
use weierlift::time::sincos_pi;
use weierlift::{Phase, RationalTime, VectorWeierstrass, WeierstrassComponent};

pub fn rt(s: &str) -> RationalTime {
    s.parse().unwrap()
}

pub fn fig1() -> (WeierstrassComponent, WeierstrassComponent) {
    let v = VectorWeierstrass::figure1();
    (v.components()[0].clone(), v.components()[1].clone())
}

/// Integrand of `J^{n,l}` at the exact rational point `s + (t - s)u`.
fn j_integrand(pow_a: &BigUint, pow_b: &BigUint, phase: Phase, s: &RationalTime, t: &RationalTime, u: f64) -> f64 {
    let u = RationalTime::from_f64(u).unwrap();
    let r = RationalTime::lerp(s, t, &u).unwrap();
    let (sa_r, ca_r) = sincos_pi(r.phase_of_multiple(pow_a));
    let (sa_s, ca_s) = sincos_pi(s.phase_of_multiple(pow_a));
    let (sb_r, cb_r) = sincos_pi(r.phase_of_multiple(pow_b));
    let omega_b = pow_b.to_string().parse::<f64>().unwrap() * std::f64::consts::PI;
    match phase {
        Phase::Cosine => (ca_r - ca_s) * (-omega_b * sb_r),
        Phase::Sine => (sa_r - sa_s) * (omega_b * cb_r),
    }
}

/// Adaptive Simpson value of `J^{n,l}(s,t)`, with at least eight initial
/// panels per period of the fastest mode `(A + B)π` and nodes at exact
/// rational points.
pub fn quad_j(pair: &FrequencyPair, phase: Phase, s: &RationalTime, t: &RationalTime) -> f64 {
    let pow_a = num_traits::pow(BigUint::from(pair.b1), pair.n);
    let pow_b = num_traits::pow(BigUint::from(pair.b2), pair.ell);
    let width = t.checked_sub(s).unwrap().to_f64();
    let k = (&pow_a + &pow_b).to_string().parse::<f64>().unwrap();
    let panels = (4.0 * k * width).ceil() as usize + 1;
    let q = adaptive_simpson(|u| j_integrand(&pow_a, &pow_b, phase, s, t, u), 0.0, 1.0, 1e-12 / width.max(1e-300), panels);
    assert!(q.converged);
    q.value * width
}
