use plat_core::dependence::*;
use plat_core::enumeration::{box_lattices, intermediate_lattices, BoxSpec};
use plat_core::lattice::kernel_k;
use plat_core::{Base, Lattice};

// cᵀGc in floating point, with c_k = (-1)^k p^{k(k-α-1)/2} on the codimension-k layer.
fn float_form(r: &Lattice, s: &Lattice, alpha: u32) -> f64 {
    let p = r.p() as f64;
    let mut vecs = Vec::new();
    for k in 0..=alpha + 1 {
        let c = (-1f64).powi(k as i32) * p.powf((k as f64) * (k as f64 - alpha as f64 - 1.0) / 2.0);
        for q in intermediate_lattices(r, s, k).unwrap() {
            vecs.push((c, q));
        }
    }
    let mut total = 0.0;
    for (a, x) in &vecs {
        for (b, y) in &vecs {
            total += a * b * kernel_k(x, y, alpha as f64).unwrap();
        }
    }
    total
}

#[test]
fn small_chain_vanishes_in_floating_point() {
    let r = Lattice::scalar(2, 2, 1);
    let s = Lattice::standard(2, 2);
    assert_eq!(intermediate_lattices(&r, &s, 1).unwrap().len(), 3);
    assert!(float_form(&r, &s, 1).abs() < 1e-12);
    let r3 = Lattice::diagonal(3, &[1, 1, 0]);
    assert!(float_form(&r3, &Lattice::standard(3, 3), 1).abs() < 1e-11);
}

#[test]
fn exact_form_vanishes_on_chains() {
    for p in [2u64, 3] {
        for n in 1..=3usize {
            for m in 0..n as u32 {
                let k: Vec<i64> = (0..n)
                    .map(|i| if i <= m as usize { 1 } else { 0 })
                    .collect();
                let r = Lattice::diagonal(p, &k);
                let s = Lattice::standard(p, n);
                let (v, _) = dependence_quadratic_form(&r, &s, m).unwrap();
                assert!(v.is_zero(), "p={} n={} m={}: {}", p, n, m, v);
                assert!(verify_dependence_dual(&r, &s, m).unwrap().pass);
            }
        }
    }
}

#[test]
fn wrong_coefficients_do_not_vanish() {
    let r = Lattice::scalar(2, 2, 1);
    let s = Lattice::standard(2, 2);
    assert!(float_form(&r, &s, 0).abs() > 1e-3);
}

#[test]
fn relation_is_palindromic() {
    for alpha in 0..=5 {
        let rel = DependenceRelation::new(alpha, Base::Symbolic);
        assert_eq!(rel.coefficients.len(), alpha as usize + 2);
        assert!(rel.is_palindromic(), "alpha={}", alpha);
    }
}

#[test]
fn finite_field_identity() {
    for p in [2u64, 3] {
        for m in 0..=2 {
            assert!(
                verify_dependence_functions(m, p).unwrap().pass,
                "p={} m={}",
                p,
                m
            );
        }
    }
}

#[test]
fn gauss_sum_vanishes_at_concrete_bases() {
    for s in 1..=6 {
        assert!(gauss_alternating_sum(s, &Base::Symbolic).unwrap().is_zero());
        for p in [2u64, 5] {
            assert!(
                gauss_alternating_sum(s, &Base::integer(p).unwrap())
                    .unwrap()
                    .is_zero(),
                "s={} p={}",
                s,
                p
            );
        }
    }
}

#[test]
fn weil_inner_product_is_the_kernel() {
    let lat = box_lattices(&BoxSpec::new(2, 3, 1).unwrap()).unwrap();
    for m in 0..=2 {
        assert_eq!(weil_check(&lat, m).unwrap().mismatches, 0, "m={}", m);
    }
}
