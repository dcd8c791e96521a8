use num_complex::Complex64;
use plat_core::spherical::*;
use plat_core::Signature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> SpectralPoint {
    SpectralPoint::new(
        (0..n)
            .map(|_| {
                let re = if complex {
                    rng.gen_range(-0.4..0.4)
                } else {
                    0.0
                };
                Complex64::new(re, rng.gen_range(0.0..9.0))
            })
            .collect(),
    )
}

#[test]
fn closed_form_matches_orbit_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [2u64, 3] {
        for n in 1..=3usize {
            let sigs = Signature::all_in_range(n, -2, 2);
            let points: Vec<SpectralPoint> =
                (0..20).map(|_| random_point(&mut rng, n, true)).collect();
            for k in &sigs {
                for l in &points {
                    let a = phi_macdonald(k, l, p as f64).unwrap();
                    let b = phi_orbit_average(k, l, p).unwrap();
                    assert!(rel(a, b) < 1e-10, "p={} k={} a={} b={}", p, k, a, b);
                }
            }
        }
    }
}

#[test]
fn symmetric_and_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for p in [2.0f64, 3.0, 2.5] {
        let period = 2.0 * std::f64::consts::PI / p.ln();
        for _ in 0..50 {
            let l = random_point(&mut rng, 3, true);
            for k in [[2, 1, -1], [1, 0, 0], [3, 3, -2]] {
                let k = Signature::new(k.to_vec()).unwrap();
                let base = phi_macdonald(&k, &l, p).unwrap();
                for (s, _) in permutations(3) {
                    let lp = SpectralPoint::new(s.iter().map(|i| l.lambda[*i]).collect());
                    assert!(rel(phi_macdonald(&k, &lp, p).unwrap(), base) < 1e-12);
                }
                let mut shifted = l.clone();
                shifted.lambda[1] += Complex64::new(0.0, period * 2.0);
                assert!(rel(phi_macdonald(&k, &shifted, p).unwrap(), base) < 1e-10);
                assert!(rel(phi_macdonald(&k, &l.canonical(p), p).unwrap(), base) < 1e-10);
            }
        }
    }
}

#[test]
fn unitary_bound_and_central_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in [2.0f64, 3.0, 7.0] {
        for _ in 0..100 {
            let l = random_point(&mut rng, 3, false);
            for k in Signature::all_in_range(3, -2, 2) {
                let v = phi_macdonald(&k, &l, p).unwrap();
                assert!(v.norm() <= 1.0 + 1e-12, "|phi|={} k={}", v.norm(), k);
            }
        }
        for _ in 0..20 {
            let l = random_point(&mut rng, 2, true);
            for k in Signature::all_in_range(2, -2, 2) {
                let up = Signature::new(k.k().iter().map(|x| x + 1).collect()).unwrap();
                let factor = (-(l.lambda[0] + l.lambda[1]) * p.ln()).exp();
                let a = phi_macdonald(&up, &l, p).unwrap();
                let b = phi_macdonald(&k, &l, p).unwrap() * factor;
                assert!(rel(a, b) < 1e-12);
            }
        }
    }
}

#[test]
fn regularized_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let l = random_point(&mut rng, 3, true);
        let x = l.x(3.0);
        for k in Signature::all_in_range(3, -1, 2) {
            let v2 = vandermonde(&x) * vandermonde(&x);
            let a = phi_regularized(&k, &x, 3.0).unwrap();
            let b = phi_macdonald(&k, &l, 3.0).unwrap() * v2;
            assert!(rel(a, b) < 1e-12);
        }
    }
}
