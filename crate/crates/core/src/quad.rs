//! Adaptive Simpson quadrature, used as an independent oracle for the
//! closed-form iterated integrals.

/// Result of [`adaptive_simpson`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub evaluations: usize,
    /// False if some panel hit the depth limit before meeting its tolerance.
    pub converged: bool,
}

struct Panel<'a, F> {
    f: &'a F,
    evaluations: usize,
    converged: bool,
    max_depth: u32,
}

impl<F: Fn(f64) -> f64> Panel<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evaluations += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        if depth >= self.max_depth {
            self.converged = false;
            return left + right + delta / 15.0;
        }
        self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first cut into `panels` equal pieces (rounded up to a
/// power of two so every node stays dyadic relative to `[a, b]`); each
/// piece then bisects until the Simpson/Richardson estimate settles. For an
/// oscillatory integrand pick `panels` so each piece covers at most an
/// eighth of the shortest period.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Quadrature {
    let panels = panels.max(1).next_power_of_two();
    let mut state = Panel {
        f: &f,
        evaluations: 0,
        converged: true,
        max_depth: 40,
    };
    let width = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut total = crate::summation::CompensatedSum::new();
    let mut x0 = a;
    let mut f0 = f(x0);
    state.evaluations += 1;
    for k in 1..=panels {
        let x1 = if k == panels { b } else { a + width * k as f64 };
        let xm = 0.5 * (x0 + x1);
        let fm = f(xm);
        let f1 = f(x1);
        state.evaluations += 2;
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total.add(state.recurse(x0, x1, f0, fm, f1, whole, panel_tol, 0));
        x0 = x1;
        f0 = f1;
    }
    Quadrature {
        value: total.value(),
        evaluations: state.evaluations,
        converged: state.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_oscillations() {
        let q = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 1);
        assert!((q.value - 4.0).abs() < 1e-12);
        let w = 200.0 * std::f64::consts::PI;
        let q = adaptive_simpson(|x| (w * x).sin(), 0.0, 0.3, 1e-12, 256);
        let exact = (1.0 - (w * 0.3).cos()) / w;
        assert!((q.value - exact).abs() < 1e-12, "{}", q.value - exact);
        assert!(q.converged);
    }
}
