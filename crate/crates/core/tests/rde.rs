//! Regression baselines for the preset equation, frozen from this
//! implementation.

use weierlift::rde::{solve_ode_truncated, solve_rough, RdeProblem};
use weierlift::TruncationPolicy;

fn close(got: &[f64], want: &[f64], rel: f64) -> bool {
    got.iter().zip(want).all(|(g, w)| (g - w).abs() <= rel * w.abs())
}

#[test]
fn rk4_endpoints_at_default_step() {
    let p = RdeProblem::figure3();
    let baselines = [
        (4, [2.6472914534370267, -0.3432552712345824]),
        (8, [3.1935323704823713, 0.4163725710312156]),
    ];
    for (n, want) in baselines {
        let path = solve_ode_truncated(&p, n).unwrap();
        assert!(close(path.last(), &want, 1e-9), "N = {n}: {:?}", path.last());
        assert_eq!(path.times.last(), Some(&1.0));
        assert!(path.times.len() <= 1002);
    }
}

#[test]
fn limit_lift_solutions_settle_as_the_step_shrinks() {
    let p = RdeProblem::figure3();
    let policy = TruncationPolicy::Tolerance {
        tol: 1e-6,
        eps_prime: 0.01,
        max_n: 64,
    };
    let ends: Vec<Vec<f64>> = (10..=12)
        .map(|k| solve_rough(&p, &policy, 2f64.powi(-k)).unwrap().last().to_vec())
        .collect();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let d1 = diff(&ends[0], &ends[1]);
    let d2 = diff(&ends[1], &ends[2]);
    assert!(d2 < d1, "{d1} then {d2}");
    assert!(d2 < 2e-3, "{d2}");
    assert!(close(&ends[2], &[3.381337201430219, 0.7298390162703261], 1e-9), "{:?}", ends[2]);
}
