use std::f64::consts::PI;

use num_complex::Complex64;
use plat_core::lattice::delta_of_signature;
use plat_core::plancherel::*;
use plat_core::spherical::BiinvariantFunction;
use plat_core::Signature;

fn sig(v: &[i64]) -> Signature {
    Signature::sorted(v.to_vec())
}

#[test]
fn trapezoid_is_exact_on_trigonometric_polynomials() {
    let grid = QuadratureGrid::angular(2, 16).unwrap();
    let v = torus_integrate(
        |t| Complex64::new(t[0].cos().powi(2) * (1.0 + (3.0 * t[1]).sin()), 0.0),
        &grid,
    )
    .unwrap();
    assert!((v.re - 2.0 * PI * PI).abs() < 1e-12);
    let w = torus_integrate(
        |t| Complex64::from_polar(1.0, 5.0 * t[0] - 2.0 * t[1]),
        &grid,
    )
    .unwrap();
    assert!(w.norm() < 1e-12);
}

#[test]
fn rank_one_plancherel_recovers_delta() {
    for alpha in [1.5, 2.0, 3.0] {
        for k in -3..=3 {
            let r = verify_plancherel_signature(&sig(&[k]), alpha, 2.0, &[64, 96], 1e-10).unwrap();
            assert!(r.pass, "alpha={} k={} rel={}", alpha, k, r.rel_err);
        }
    }
}

#[test]
fn quadrature_error_drops_with_refinement() {
    let rows = plancherel_table(&sig(&[1, -1]), 2.5, 2.0, &[16, 32, 48]).unwrap();
    assert!(rows[0].rel_err > rows[1].rel_err && rows[1].rel_err > rows[2].rel_err);
    assert!(rows[2].rel_err < 1e-9);
}

#[test]
fn inversion_of_a_combination() {
    let mut f = BiinvariantFunction::delta(sig(&[1, 0]));
    f.values.insert(sig(&[0, 0]), Complex64::new(2.0, 0.0));
    for (k, want) in [
        (sig(&[0, 0]), 2.0),
        (sig(&[1, 0]), 1.0),
        (sig(&[1, -1]), 0.0),
    ] {
        let v = inversion_value(&f, &k, 2.0, 48).unwrap();
        assert!(
            (v.re - want).abs() < 1e-9 && v.im.abs() < 1e-9,
            "k={} got {}",
            k,
            v
        );
    }
}

#[test]
fn continuation_inside_the_strip() {
    let opts = IntegralOptions::default();
    for alpha in [-0.5, 0.5] {
        for k in [sig(&[0, 0]), sig(&[2, -1])] {
            let v = strip_identity(&k, alpha, 2.0, &opts).unwrap();
            let want = delta_of_signature(&k, alpha, 2.0);
            assert!(
                (v.re - want).abs() < 1e-8 * want.abs().max(1.0),
                "alpha={} k={}",
                alpha,
                k
            );
            for (label, engine, explicit) in bookkeeping_check(2, alpha, &k, 2.0, &opts).unwrap() {
                assert!(
                    (engine - explicit).norm() < 1e-9 * explicit.norm().max(1e-12),
                    "{}",
                    label
                );
            }
        }
    }
}

#[test]
fn continuation_in_rank_three() {
    let opts = IntegralOptions::default();
    let r = verify_continuation_signature(&sig(&[1, 0, 0]), -0.5, 2.0, &opts, 1e-7).unwrap();
    assert!(r.pass, "rel={}", r.rel_err);
}

#[test]
fn degenerate_measures_reproduce_delta() {
    let opts = IntegralOptions::default();
    for alpha in 0..=1 {
        for k in [sig(&[0, 0]), sig(&[2, 0]), sig(&[1, -1]), sig(&[0, -2])] {
            let r = verify_degenerate_signature(alpha, &k, 2.0, &opts, 1e-9).unwrap();
            assert!(r.pass, "alpha={} k={} rel={}", alpha, k, r.rel_err);
        }
    }
    assert!(degenerate_delta(2, &sig(&[0, 0]), 2.0, &opts).is_err());
}

#[test]
fn real_base_rank_one() {
    let r = real_base_identity(2.5, 3.0, &[0.7], 14).unwrap();
    assert!((r.lhs - r.rhs).norm() < 1e-9 * r.rhs.norm());
    assert!((r.rhs - r.rhs_alt).norm() > 1e-3);
}
