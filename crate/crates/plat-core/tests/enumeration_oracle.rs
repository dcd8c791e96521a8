use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use plat_core::enumeration::*;
use plat_core::{Lattice, Signature};
use proptest::prelude::*;

fn encode(v: &[u64], q: u64) -> u64 {
    v.iter().fold(0, |acc, x| acc * q + x % q)
}

fn decode(mut c: u64, n: usize, q: u64) -> Vec<u64> {
    let mut v = vec![0; n];
    for i in (0..n).rev() {
        v[i] = c % q;
        c /= q;
    }
    v
}

fn closure(gens: &[Vec<u64>], n: usize, q: u64) -> Vec<u64> {
    let size = q.pow(n as u32) as usize;
    let mut seen = vec![false; size];
    seen[0] = true;
    let mut stack = vec![0u64];
    let mut out = vec![0u64];
    while let Some(c) = stack.pop() {
        let v = decode(c, n, q);
        for g in gens {
            let w: Vec<u64> = v.iter().zip(g).map(|(a, b)| (a + b) % q).collect();
            let e = encode(&w, q);
            if !seen[e as usize] {
                seen[e as usize] = true;
                stack.push(e);
                out.push(e);
            }
        }
    }
    out.sort_unstable();
    out
}

fn subgroup_of(r: &Lattice, q: u64) -> Vec<u64> {
    let n = r.n();
    let f = (r.p() as i128).pow((-r.scale()) as u32);
    let gens: Vec<Vec<u64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| (r.entry(i, j) as i128 * f).rem_euclid(q as i128) as u64)
                .collect()
        })
        .collect();
    closure(&gens, n, q)
}

fn all_subgroups(n: usize, q: u64) -> BTreeSet<Vec<u64>> {
    let size = q.pow(n as u32);
    let mut out = BTreeSet::new();
    let mut idx = vec![0u64; n];
    loop {
        let gens: Vec<Vec<u64>> = idx.iter().map(|c| decode(*c, n, q)).collect();
        out.insert(closure(&gens, n, q));
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            idx[k] += 1;
            if idx[k] < size {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn walker_matches_subgroup_closure() {
    for (n, p, m) in [
        (1usize, 5u64, 3i64),
        (2, 2, 2),
        (2, 3, 2),
        (2, 2, 3),
        (3, 2, 2),
    ] {
        let q = p.pow(m as u32);
        let oracle = all_subgroups(n, q);
        let mut mine = BTreeSet::new();
        let mut count = 0usize;
        for_each_between(p, n, 0, m, |r| {
            count += 1;
            mine.insert(subgroup_of(r, q));
        })
        .unwrap();
        assert_eq!(count, mine.len(), "duplicates for n={} p={} m={}", n, p, m);
        assert_eq!(mine, oracle, "n={} p={} m={}", n, p, m);
    }
}

#[test]
fn box_sizes_match_orbit_sums() {
    for (n, p, b) in [
        (2usize, 2u64, 3i64),
        (2, 3, 3),
        (3, 2, 2),
        (3, 3, 2),
        (3, 3, 3),
    ] {
        let mut count = 0u64;
        for_each_box_lattice(&BoxSpec::new(n, p, b).unwrap(), |_| count += 1).unwrap();
        let expected: u64 = Signature::all_in_range(n, -b, b)
            .iter()
            .map(|k| nu_closed_form(k, p).unwrap().to_u64().unwrap())
            .sum();
        assert_eq!(count, expected, "n={} p={} B={}", n, p, b);
    }
}

#[test]
fn orbit_sizes_match_closed_form() {
    for p in [2u64, 3] {
        for k in Signature::all_in_range(3, -1, 1)
            .into_iter()
            .chain(Signature::all_in_range(2, -2, 2))
        {
            let orbit = orbit_of_signature(&k, p).unwrap();
            assert_eq!(
                BigInt::from(orbit.len()),
                nu_closed_form(&k, p).unwrap(),
                "k={} p={}",
                k,
                p
            );
        }
    }
}

#[test]
fn index_counts_are_gaussian_for_elementary_quotients() {
    for (n, p) in [(2usize, 2u64), (3, 3), (4, 2)] {
        let o = Lattice::standard(p, n);
        let po = Lattice::scalar(p, n, 1);
        for k in 0..=n as u32 {
            let mids = intermediate_lattices(&po, &o, k).unwrap();
            assert_eq!(
                BigInt::from(mids.len()),
                gaussian_binomial(n as u32, k, p).unwrap()
            );
        }
    }
}

fn rat(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_the_subgroup(
        p in prop::sample::select(vec![2u64, 3]),
        gens in prop::collection::vec(prop::collection::vec(0i64..27, 2), 2..5),
    ) {
        let m = 3i64;
        let q = p.pow(m as u32) as i64;
        let mut g: Vec<Vec<BigRational>> = gens.iter().map(|v| v.iter().map(|x| rat(*x)).collect()).collect();
        g.push(vec![rat(q), rat(0)]);
        g.push(vec![rat(0), rat(q)]);
        let r = Lattice::canonicalize(&g, 2, p).unwrap();
        let raw: Vec<Vec<u64>> = g.iter().map(|v| v.iter().map(|x| x.to_integer().to_i64().unwrap().rem_euclid(q) as u64).collect()).collect();
        prop_assert_eq!(subgroup_of(&r, q as u64), closure(&raw, 2, q as u64));
    }

    #[test]
    fn fiber_formula_matches_brute_force(
        p in prop::sample::select(vec![2u64, 3]),
        a in 0u32..2, c in 0u32..2,
        nu in 0u32..3, xi in -2i64..3,
    ) {
        let rp = Lattice::diagonal(p, &[a as i64, -(c as i64)]);
        let b = min_fiber_radius(&rp, nu, xi).unwrap();
        if b > 0 {
            prop_assert!(fiber_count_check(&rp, nu, xi, &BoxSpec::new(3, p, b - 1).unwrap()).is_err());
        }
        let (f, brute) = fiber_count_check(&rp, nu, xi, &BoxSpec::new(3, p, b).unwrap()).unwrap();
        prop_assert_eq!(f, rat(brute as i64));
    }
}
