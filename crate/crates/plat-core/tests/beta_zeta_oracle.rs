use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use plat_core::beta_zeta::*;
use plat_core::enumeration::{box_lattices, BoxSpec};
use proptest::prelude::*;

// Over p^k O the summand is p^{-kβ} p^{-α max(k,0)}: two geometric series.
fn rank_one_series(alpha: f64, beta: f64, p: f64) -> f64 {
    1.0 / (1.0 - p.powf(-(alpha + beta))) + p.powf(beta) / (1.0 - p.powf(beta))
}

#[test]
fn rank_one_matches_geometric_series() {
    for (a, b, p, radius) in [
        (3.0, -1.0, 2u64, 24i64),
        (2.5, -0.5, 3, 15),
        (4.0, -2.5, 5, 10),
    ] {
        let params = BetaParams::real(&[a], &[b]).unwrap();
        let oracle = rank_one_series(a, b, p as f64);
        let closed = beta_closed_form(&params, p as f64).unwrap();
        assert!(
            (closed.re - oracle).abs() < 1e-13 * oracle,
            "closed a={} b={} p={}",
            a,
            b,
            p
        );
        let t = beta_truncated(&params, &BoxSpec::new(1, p, radius).unwrap()).unwrap();
        assert!(
            (t.accelerated.re - oracle).abs() < 1e-9 * oracle,
            "truncated a={} b={} p={}",
            a,
            b,
            p
        );
    }
    assert_eq!(
        beta_closed_exact(&[3], &[-1], 2).unwrap(),
        BigRational::new(BigInt::from(7), BigInt::from(3))
    );
}

#[test]
fn rank_two_box_sum_approaches_closed_form() {
    let params = BetaParams::real(&[12.0, 12.0], &[-6.0, -7.0]).unwrap();
    let closed = beta_closed_form(&params, 3.0).unwrap();
    let mut last = f64::INFINITY;
    for b in 2..=4 {
        let t = beta_truncated(&params, &BoxSpec::new(2, 3, b).unwrap()).unwrap();
        let err = (t.value - closed).norm() / closed.norm();
        assert!(err < last, "B={} err={} not below {}", b, err, last);
        last = err;
    }
    assert!(last < 1e-8);
}

#[test]
fn divergent_parameters_are_rejected() {
    let params = BetaParams::real(&[1.0, 1.0], &[0.5, 0.5]).unwrap();
    assert!(!convergence_check(&params).ok);
    assert!(beta_truncated(&params, &BoxSpec::new(2, 2, 1).unwrap()).is_err());
}

#[test]
fn tamagawa_rank_one_is_a_geometric_sum() {
    for (g, p, b) in [(2.0, 2u64, 6i64), (1.5, 3, 5)] {
        let t = tamagawa(&[Complex64::new(g, 0.0)], p, b).unwrap();
        let partial: f64 = (0..=2 * b).map(|k| (p as f64).powf(-g * k as f64)).sum();
        assert!((t.truncated.re - partial).abs() < 1e-13, "g={} p={}", g, p);
        assert_eq!(t.selected, "derived");
    }
}

#[test]
fn euler_factor_is_the_rank_one_closed_form() {
    for p in [2u64, 3, 5, 7] {
        for (a, b) in [(4, -2), (5, -1), (6, -3)] {
            assert_eq!(
                euler_factor_exact(&[a], &[b], p).unwrap(),
                beta_closed_exact(&[a], &[b], p).unwrap()
            );
        }
    }
    let (prod, _) = zeta_full_product(&[4.0], &[-2.0], 200_000).unwrap();
    assert!((prod - 2.5).abs() < 1e-5);
}

#[test]
fn gram_spectrum_is_invariant_under_duality() {
    let lat = box_lattices(&BoxSpec::new(2, 2, 1).unwrap()).unwrap();
    let duals: Vec<_> = lat.iter().map(|l| l.dual().unwrap()).collect();
    for alpha in [0.5, 1.5, 3.0] {
        let g = gram_matrix(&lat, alpha, 1e-9).unwrap();
        let h = gram_matrix(&duals, alpha, 1e-9).unwrap();
        assert!(g.symmetric_unit_diagonal());
        assert!(
            (g.min_eigenvalue - h.min_eigenvalue).abs() < 1e-12,
            "alpha={}",
            alpha
        );
    }
}

#[test]
fn allowed_alphas_give_psd_and_others_a_witness() {
    let reps = psd_scan(2, 2, &[1.5, 2.0, 0.5], 1, &PsdScanConfig::default()).unwrap();
    assert_eq!(reps.len(), 3);
    assert!(reps.iter().all(|r| r.pass));
    assert_eq!(reps[2].claim, "psd-witness");
    assert!(reps[2].lhs.re < -1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_holds_for_the_exact_closed_form(
        p in prop::sample::select(vec![2u64, 3, 5]),
        alpha in prop::collection::vec(8i64..20, 3),
        beta in prop::collection::vec(-9i64..-1, 3),
    ) {
        prop_assume!(beta_closed_exact(&alpha, &beta, p).is_ok());
        prop_assume!(sigma_n_exact(&alpha, &beta, p).is_ok());
        prop_assert!(recursion_closed_exact(&alpha, &beta, p).unwrap());
    }
}
