use num_bigint::BigUint;
use num_complex::Complex64;
use proptest::prelude::*;
use weierlift::holder::{estimate_exponent, nonconvergence_witness};
use weierlift::iterated::{classify_bases, eval_i_truncated, IteratedKernel};
use weierlift::roughpath::{check_chen, lift_truncated, max_abs, rough_norm_profile};
use weierlift::trigseries::{cauchy_gap, iterated_integral_partial, Frequency, Term, TrigSeries};
use weierlift::weier::eval_truncated;
use weierlift::*;

fn time() -> impl Strategy<Value = RationalTime> {
    (1u128..=997).prop_flat_map(|q| (0..=q).prop_map(move |p| RationalTime::new(p, q).unwrap()))
}

fn ordered3() -> impl Strategy<Value = (RationalTime, RationalTime, RationalTime)> {
    (time(), time(), time()).prop_map(|(x, y, z)| {
        let mut v = [x, y, z];
        v.sort();
        let [s, u, t] = v;
        (s, u, t)
    })
}

fn component() -> impl Strategy<Value = WeierstrassComponent> {
    (prop::sample::select(vec![2u64, 3, 4, 5, 8]), 0.36f64..0.95, any::<bool>()).prop_map(|(b, alpha, sine)| {
        let phase = if sine { Phase::Sine } else { Phase::Cosine };
        WeierstrassComponent::new(b, Amplitude::Alpha(alpha), phase).unwrap()
    })
}

fn pair_vector() -> impl Strategy<Value = VectorWeierstrass> {
    (component(), component()).prop_map(|(c1, c2)| {
        let c2 = c2.with_phase(c1.phase());
        VectorWeierstrass::new(vec![c1, c2]).unwrap()
    })
}

fn series() -> impl Strategy<Value = TrigSeries> {
    (2usize..8).prop_flat_map(series_of_len)
}

fn series_of_len(len: usize) -> impl Strategy<Value = TrigSeries> {
    let term = (-2.0f64..2.0, -2.0f64..2.0, 1u32..40, any::<bool>()).prop_map(|(re, im, k, real)| Term {
        coefficient: Complex64::new(re, im),
        frequency: if real {
            Frequency::Real(k as f64 * 0.7)
        } else {
            Frequency::PiMultiple(BigUint::from(k))
        },
    });
    prop::collection::vec(term, len).prop_map(|t| TrigSeries::new(t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chen_identity_holds(v in pair_vector(), n in 0usize..12, (s, u, t) in ordered3()) {
        let r = check_chen(&v, n, &s, &u, &t).unwrap();
        let scale = v.components().iter().map(|c| c.sup_bound()).product::<f64>();
        prop_assert!(max_abs(&r) <= 1e-11 * scale.max(1.0) * (n as f64 + 1.0), "{r:?}");
    }

    #[test]
    fn symmetric_part_is_half_square(v in pair_vector(), n in 0usize..12, (s, _u, t) in ordered3()) {
        let inc = lift_truncated(&v, n, &s, &t).unwrap();
        let d = inc.symmetric_defect();
        prop_assert!(max_abs(&d) <= 1e-11 * (1.0 + max_abs(&inc.second)), "{d:?}");
    }

    #[test]
    fn boundary_sum_is_the_level_increment(v in pair_vector(), m in 1usize..14, (s, _u, t) in ordered3()) {
        let c = v.components();
        let kernel = IteratedKernel::new(&c[0], &c[1], 14).unwrap();
        let (a_s, b_s) = kernel.tables(&s);
        let (a_t, b_t) = kernel.tables(&t);
        let step = kernel.eval_tables(m, &a_s, &a_t, &b_s, &b_t) - kernel.eval_tables(m - 1, &a_s, &a_t, &b_s, &b_t);
        let direct = kernel.boundary_sum(m, &a_s, &a_t, &b_s, &b_t);
        prop_assert!((step - direct).abs() <= 1e-10 * (1.0 + direct.abs()), "{step} vs {direct}");
    }

    #[test]
    fn iterated_integral_is_additive(v in pair_vector(), n in 0usize..10, (s, u, t) in ordered3()) {
        let c = v.components();
        let whole = eval_i_truncated(&c[0], &c[1], n, &s, &t).unwrap();
        let left = eval_i_truncated(&c[0], &c[1], n, &s, &u).unwrap();
        let right = eval_i_truncated(&c[0], &c[1], n, &u, &t).unwrap();
        let cross = (eval_truncated(&c[0], n, &u) - eval_truncated(&c[0], n, &s))
            * (eval_truncated(&c[1], n, &t) - eval_truncated(&c[1], n, &u));
        prop_assert!((whole - left - right - cross).abs() <= 1e-10 * (1.0 + whole.abs()));
    }

    #[test]
    fn base_classification_matches_brute_force(b1 in 2u64..40, b2 in 2u64..40) {
        let rel = classify_bases(b1, b2).unwrap();
        for n in 0..10usize {
            for ell in 0..10usize {
                let equal = num_traits::pow(BigUint::from(b1), n) == num_traits::pow(BigUint::from(b2), ell);
                prop_assert_eq!(rel.powers_equal(n, ell), equal, "b1={} b2={} n={} l={}", b1, b2, n, ell);
            }
        }
    }

    #[test]
    fn cauchy_gap_within_bound(f in series(), g in series(), m in 0usize..6, extra in 1usize..4, (s, _u, t) in ordered3()) {
        let n = (m + extra).min(f.len().min(g.len()));
        prop_assume!(m < n);
        prop_assert!(cauchy_gap(&f, &g, m, n, &s, &t).unwrap().holds());
    }

    #[test]
    fn term_order_does_not_matter((f, g) in (2usize..8).prop_flat_map(|n| (series_of_len(n), series_of_len(n))), seed in any::<u64>(), (s, _u, t) in ordered3()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (mut ft, mut gt) = (f.terms().to_vec(), g.terms().to_vec());
        ft.shuffle(&mut rng);
        gt.shuffle(&mut rng);
        let (fs, gs) = (TrigSeries::new(ft).unwrap(), TrigSeries::new(gt).unwrap());
        let a = iterated_integral_partial(&f, &g, f.len(), &s, &t).unwrap();
        let b = iterated_integral_partial(&fs, &gs, f.len(), &s, &t).unwrap();
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()), "{a} vs {b}");
    }

    #[test]
    fn witness_ratio_independent_of_level(b in prop::sample::select(vec![2u64, 3, 4, 5, 7]), alpha in 0.3f64..0.95, n in 1usize..20) {
        let c = WeierstrassComponent::cosine(b, Amplitude::Alpha(alpha)).unwrap();
        let w1 = nonconvergence_witness(&c, 1).unwrap();
        let wn = nonconvergence_witness(&c, n).unwrap();
        prop_assert!(wn.holds());
        prop_assert!((w1.ratio - wn.ratio).abs() <= 1e-9 * w1.ratio, "{} vs {}", w1.ratio, wn.ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn grid_refinement_is_monotone(v in pair_vector(), n in 2usize..10) {
        let alpha = (v.min_alpha() - 0.02).max(0.34);
        prop_assume!(alpha > 1.0 / 3.0 && alpha <= v.min_alpha());
        let profile = rough_norm_profile(&v, &TruncationPolicy::Fixed(n), alpha, 6).unwrap();
        for w in profile.windows(2) {
            prop_assert!(w[1].holder_part >= w[0].holder_part);
            prop_assert!(w[1].area_part >= w[0].area_part);
        }
    }
}

#[test]
fn exponent_fit_stable_past_the_grid_scale() {
    // b^N beyond the finest grid scale: extra terms move each increment by
    // at most Σ a^n over the unresolved modes
    for (b, amp) in [(2u64, Amplitude::Ratio(18, 25)), (3, Amplitude::Ratio(3, 5))] {
        let c = WeierstrassComponent::cosine(b, amp).unwrap();
        let lo = estimate_exponent(&c, 30, 10).unwrap();
        let hi = estimate_exponent(&c, 40, 10).unwrap();
        assert!((lo.alpha_hat - hi.alpha_hat).abs() < 1e-3, "{} vs {}", lo.alpha_hat, hi.alpha_hat);
    }
}
