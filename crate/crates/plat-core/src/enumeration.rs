//! Exhaustive lattice generators and the counting formulas they are checked against.
//!
//! Walk order: column by column, each column by (diagonal exponent, then off-diagonal
//! digits in the order the quotient representatives are produced). The order is
//! deterministic, so reports built from it are reproducible.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PlatError, Result};
use crate::exact_arith::{Base, HalfPowerScalar};
use crate::lattice::{ipow, is_prime, val, Lattice, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub n: usize,
    pub p: u64,
    pub radius: i64,
}

impl BoxSpec {
    pub fn new(n: usize, p: u64, radius: i64) -> Result<BoxSpec> {
        if !is_prime(p) {
            return Err(PlatError::NotPrime(p));
        }
        if n == 0 || radius < 0 {
            return Err(PlatError::Domain("box needs n >= 1 and radius >= 0".into()));
        }
        Ok(BoxSpec { n, p, radius })
    }

    pub fn contains(&self, r: &Lattice) -> Result<bool> {
        let b = self.radius;
        Ok(Lattice::scalar(self.p, self.n, -b).contains(r)?
            && r.contains(&Lattice::scalar(self.p, self.n, b))?)
    }
}

/// Representatives of big/small for lattices small ⊆ big, as integral vectors w with the
/// actual element p^{-E} w; returns (E, reps).
pub fn quotient_reps(big: &Lattice, small: &Lattice) -> Result<(i64, Vec<Vec<i128>>)> {
    let n = big.n();
    let e = big.scale().max(small.scale());
    let gb = big.scaled_columns(e)?;
    let ab: Vec<u32> = (0..n).map(|i| val(gb[i][i], big.p())).collect();
    let a_s: Vec<u32> = (0..n)
        .map(|i| val(small.hnf()[i * n + i] as i128, small.p()) + (e - small.scale()) as u32)
        .collect();
    let mut out = vec![vec![0i128; n]];
    for i in 0..n {
        if a_s[i] < ab[i] {
            return Err(PlatError::Domain(
                "small lattice not contained in big".into(),
            ));
        }
        let count = ipow(big.p(), a_s[i] - ab[i])?;
        let mut next = Vec::with_capacity(out.len() * count as usize);
        for w in &out {
            for c in 0..count {
                let mut v = w.clone();
                for t in 0..n {
                    v[t] += c * gb[i][t];
                }
                next.push(v);
            }
        }
        out = next;
    }
    Ok((e, out))
}

/// Reduces an integral vector modulo an integral upper triangular Hermite matrix so that
/// entry i lies in [0, H_ii).
fn reduce_mod(h: &[i128], n: usize, w: &mut [i128]) {
    for i in (0..n).rev() {
        let d = h[i * n + i];
        let q = w[i].div_euclid(d);
        if q != 0 {
            for t in 0..=i {
                w[t] -= q * h[t * n + i];
            }
        }
    }
}

/// Visits every lattice R with p^{hi} O^n ⊆ R ⊆ p^{lo} O^n exactly once.
pub fn for_each_between<F: FnMut(&Lattice)>(
    p: u64,
    n: usize,
    lo: i64,
    hi: i64,
    mut f: F,
) -> Result<()> {
    if !is_prime(p) {
        return Err(PlatError::NotPrime(p));
    }
    if hi < lo {
        return Err(PlatError::Domain("empty range".into()));
    }
    let m = (hi - lo) as u32;
    // work with R' = p^{-lo} R, between p^m O^n and O^n
    let mut cols: Vec<Vec<i128>> = Vec::with_capacity(n);
    walk(p, n, m, -lo, &mut cols, &mut f)
}

fn prefix_matrix(cols: &[Vec<i128>]) -> Vec<i128> {
    let j = cols.len();
    let mut h = vec![0i128; j * j];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..j {
            h[r * j + c] = col[r];
        }
    }
    h
}

fn walk<F: FnMut(&Lattice)>(
    p: u64,
    n: usize,
    m: u32,
    scale: i64,
    cols: &mut Vec<Vec<i128>>,
    f: &mut F,
) -> Result<()> {
    let j = cols.len();
    if j == n {
        let h: Vec<i64> = prefix_matrix(cols).into_iter().map(|x| x as i64).collect();
        f(&Lattice::from_scaled(p, n, scale, h));
        return Ok(());
    }
    let hmat = prefix_matrix(cols);
    let prefix = if j > 0 {
        Some(Lattice::from_scaled(
            p,
            j,
            0,
            hmat.iter().map(|x| *x as i64).collect(),
        ))
    } else {
        None
    };
    for x in 0..=m {
        let px = ipow(p, x)?;
        let reps: Vec<Vec<i128>> = match &prefix {
            None => vec![vec![]],
            Some(l) => {
                // columns w with w integral and p^{m-x} w in the prefix lattice
                let g = l
                    .scaled_by(-((m - x) as i64))
                    .intersect(&Lattice::standard(p, j))?;
                let (e, reps) = quotient_reps(&g, l)?;
                if e < 0 {
                    let f = ipow(p, (-e) as u32)?;
                    reps.into_iter()
                        .map(|w| w.into_iter().map(|x| x * f).collect())
                        .collect()
                } else {
                    reps
                }
            }
        };
        for mut w in reps {
            reduce_mod(&hmat, j, &mut w);
            let mut col = w;
            col.push(px);
            col.resize(n, 0);
            cols.push(col);
            walk(p, n, m, scale, cols, f)?;
            cols.pop();
        }
    }
    Ok(())
}

pub fn box_lattices(b: &BoxSpec) -> Result<Vec<Lattice>> {
    let mut out = Vec::new();
    for_each_between(b.p, b.n, -b.radius, b.radius, |r| out.push(r.clone()))?;
    Ok(out)
}

pub fn for_each_box_lattice<F: FnMut(&Lattice)>(b: &BoxSpec, f: F) -> Result<()> {
    for_each_between(b.p, b.n, -b.radius, b.radius, f)
}

/// Every R ⊆ O^n with vol(R) = p^{-m}: diagonal compositions in lexicographic order, then
/// off-diagonal digits in lexicographic order.
pub fn sublattices_of_index(n: usize, p: u64, m: u32) -> Result<Vec<Lattice>> {
    if !is_prime(p) {
        return Err(PlatError::NotPrime(p));
    }
    let mut comps = Vec::new();
    compositions(n, m, &mut Vec::new(), &mut comps);
    let mut out = Vec::new();
    for a in comps {
        let slots: Vec<(usize, usize, i64)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, (p as i64).pow(a[i])))
            .collect();
        let mut digits = vec![0i64; slots.len()];
        loop {
            let mut h = vec![0i64; n * n];
            for i in 0..n {
                h[i * n + i] = (p as i64).pow(a[i]);
            }
            for (s, &(i, j, _)) in slots.iter().enumerate() {
                h[i * n + j] = digits[s];
            }
            out.push(Lattice::from_scaled(p, n, 0, h));
            // odometer, last slot fastest
            let mut k = slots.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < slots[k].2 {
                    break;
                }
                digits[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if slots.is_empty() || k == usize::MAX {
                break;
            }
        }
    }
    Ok(out)
}

fn compositions(n: usize, m: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() + 1 == n {
        let used: u32 = cur.iter().sum();
        cur.push(m - used);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    let used: u32 = cur.iter().sum();
    for a in 0..=(m - used) {
        cur.push(a);
        compositions(n, m, cur, out);
        cur.pop();
    }
}

pub fn orbit_of_signature(k: &Signature, p: u64) -> Result<Vec<Lattice>> {
    let n = k.n();
    let hi = k.k()[0];
    let lo = k.k()[n - 1];
    let mut out = Vec::new();
    let mut err = None;
    for_each_between(p, n, lo, hi, |r| match r.elementary_divisors() {
        Ok(ed) if &ed == k => out.push(r.clone()),
        Ok(_) => {}
        Err(e) => err = Some(e),
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn big_p(p: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

fn rpow(p: u64, e: i64) -> BigRational {
    let b = big_p(p);
    if e >= 0 {
        num_traits::pow(b, e as usize)
    } else {
        num_traits::pow(b.recip(), (-e) as usize)
    }
}

fn multiplicities(k: &[i64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < k.len() {
        let mut j = i;
        while j < k.len() && k[j] == k[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

/// ν(k) = p^{Σ(n−2j+1)k_j} Π_{l≤n}(1−p^{-l}) / Π_s Π_{l≤m_s}(1−p^{-l}).
pub fn nu_closed_form(k: &Signature, p: u64) -> Result<BigInt> {
    let n = k.n() as i64;
    let ex: i64 = k
        .k()
        .iter()
        .enumerate()
        .map(|(j, kj)| (n - 2 * (j as i64 + 1) + 1) * kj)
        .sum();
    let one = BigRational::one();
    let mut v = rpow(p, ex);
    for l in 1..=n {
        v *= &one - rpow(p, -l);
    }
    for ms in multiplicities(k.k()) {
        for l in 1..=ms as i64 {
            v /= &one - rpow(p, -l);
        }
    }
    if !v.is_integer() || v <= BigRational::zero() {
        return Err(PlatError::Domain(format!(
            "orbit size {} is not a positive integer",
            v
        )));
    }
    Ok(v.to_integer())
}

/// ν(k) as a polynomial in a real base p > 1.
pub fn nu_real(k: &Signature, p: f64) -> f64 {
    let n = k.n() as i64;
    let ex: i64 = k
        .k()
        .iter()
        .enumerate()
        .map(|(j, kj)| (n - 2 * (j as i64 + 1) + 1) * kj)
        .sum();
    let mut v = p.powi(ex as i32);
    for l in 1..=n {
        v *= 1.0 - p.powi(-(l as i32));
    }
    for ms in multiplicities(k.k()) {
        for l in 1..=ms as i32 {
            v /= 1.0 - p.powi(-l);
        }
    }
    v
}

/// Number of j-dimensional subspaces of F_p^l.
pub fn gaussian_binomial(l: u32, j: u32, p: u64) -> Result<BigInt> {
    if j > l {
        return Err(PlatError::Domain(format!("j={} > l={}", j, l)));
    }
    let pb = BigInt::from(p);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..j {
        num *= num_traits::pow(pb.clone(), (l - i) as usize) - 1;
        den *= num_traits::pow(pb.clone(), (j - i) as usize) - 1;
    }
    Ok(num / den)
}

/// Gaussian binomial as a polynomial in symbolic p, via [l,j] = [l-1,j-1] + p^j [l-1,j].
pub fn gaussian_binomial_poly(l: u32, j: u32) -> Result<HalfPowerScalar> {
    if j > l {
        return Err(PlatError::Domain(format!("j={} > l={}", j, l)));
    }
    let one = HalfPowerScalar::one(Base::Symbolic);
    let mut row = vec![one.clone()];
    for ll in 1..=l {
        let mut next = Vec::with_capacity(ll as usize + 1);
        for jj in 0..=ll {
            let left = if jj > 0 {
                row[jj as usize - 1].clone()
            } else {
                HalfPowerScalar::zero(Base::Symbolic)
            };
            let right = if jj < ll {
                row[jj as usize].shift(2 * jj as i64)
            } else {
                HalfPowerScalar::zero(Base::Symbolic)
            };
            next.push(&left + &right);
        }
        row = next;
    }
    Ok(row[j as usize].clone())
}

/// Reduced row echelon matrices over F_p of shape t x d, one per t-dimensional subspace.
pub fn subspaces(d: usize, t: usize, p: u64) -> Vec<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    let mut pivots = Vec::new();
    choose(d, t, 0, &mut pivots, &mut |piv: &[usize]| {
        let mut free: Vec<(usize, usize)> = Vec::new();
        for (r, &c) in piv.iter().enumerate() {
            for col in (c + 1)..d {
                if !piv.contains(&col) {
                    free.push((r, col));
                }
            }
        }
        let total = (p as usize).pow(free.len() as u32);
        for code in 0..total {
            let mut m = vec![vec![0u64; d]; t];
            for (r, &c) in piv.iter().enumerate() {
                m[r][c] = 1;
            }
            let mut x = code;
            for &(r, c) in free.iter().rev() {
                m[r][c] = (x % p as usize) as u64;
                x /= p as usize;
            }
            out.push(m);
        }
    });
    out
}

fn choose(d: usize, t: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == t {
        f(cur);
        return;
    }
    for c in start..d {
        cur.push(c);
        choose(d, t, c + 1, cur, f);
        cur.pop();
    }
}

/// All Q with R ⊆ Q ⊆ S and S/Q ≅ (Z/p)^k, for S/R elementary abelian.
pub fn intermediate_lattices(r: &Lattice, s: &Lattice, k: u32) -> Result<Vec<Lattice>> {
    if r.p() != s.p() || r.n() != s.n() {
        return Err(PlatError::Mismatch("intermediate lattices".into()));
    }
    if !s.contains(r)? {
        return Err(PlatError::Domain("R is not contained in S".into()));
    }
    if !r.contains(&s.scaled_by(1))? {
        return Err(PlatError::Domain("S/R is not elementary abelian".into()));
    }
    let (p, n) = (r.p(), r.n());
    let d = (s.log_volume() - r.log_volume()) as u32;
    if k > d {
        return Err(PlatError::Domain(format!("k={} exceeds rank {}", k, d)));
    }
    let e = r.scale().max(s.scale());
    let sc = s.scaled_columns(e)?;
    let rc = r.scaled_columns(e)?;
    let basis: Vec<Vec<i128>> = (0..n)
        .filter(|&i| val(rc[i][i], p) > val(sc[i][i], p))
        .map(|i| sc[i].clone())
        .collect();
    debug_assert_eq!(basis.len(), d as usize);
    let m = n as u32 * (e - r.scale()) as u32 + r.diag_exps().iter().sum::<u32>();
    let mut out = Vec::new();
    for w in subspaces(d as usize, (d - k) as usize, p) {
        let mut gens = rc.clone();
        for row in &w {
            let mut v = vec![0i128; n];
            for (c, coef) in row.iter().enumerate() {
                for t in 0..n {
                    v[t] += *coef as i128 * basis[c][t];
                }
            }
            gens.push(v);
        }
        let h = crate::lattice::hnf_mod(p, n, &gens, m)?;
        out.push(Lattice::from_scaled(p, n, e, h));
    }
    Ok(out)
}

/// ξ and ν of a lattice relative to its hyperplane section R' = R ∩ K^{n-1}.
pub fn fiber_invariants(r: &Lattice) -> Result<(i64, u32)> {
    let n = r.n();
    let rp = r.truncate(n - 1);
    let a = r.diag_exps();
    let xi = a[n - 1] as i64 - r.scale();
    let v: Vec<i128> = (0..n - 1).map(|i| r.entry(i, n - 1) as i128).collect();
    let t = rp.sum(&Lattice::standard(r.p(), n - 1))?;
    // the vector is p^{-e} v
    let mut nu = 0u32;
    while !t.contains_vector(&v, nu as i64 - r.scale())? {
        nu += 1;
    }
    Ok((xi, nu))
}

/// u_n(ν, ξ): the size of the fiber over (R', ν, ξ).
pub fn fiber_formula(rprime: &Lattice, nu: u32) -> Result<BigRational> {
    let n = rprime.n() as i64 + 1;
    let p = rprime.p();
    let cap = rprime
        .intersect(&Lattice::standard(p, rprime.n()))?
        .log_volume();
    let inv_vol = rpow(p, -cap);
    if nu == 0 {
        Ok(inv_vol)
    } else {
        Ok(rpow(p, nu as i64 * (n - 1)) * (BigRational::one() - rpow(p, -(n - 1))) * inv_vol)
    }
}

/// (formula count, brute count) for lattices of dimension n = dim R' + 1 with the given
/// hyperplane section and invariants, enumerated inside the box.
pub fn fiber_count_check(
    rprime: &Lattice,
    nu: u32,
    xi: i64,
    search: &BoxSpec,
) -> Result<(BigRational, u64)> {
    let p = rprime.p();
    let m = rprime.n();
    if search.n != m + 1 || search.p != p {
        return Err(PlatError::Mismatch("box and R' disagree".into()));
    }
    let b = search.radius;
    let om = Lattice::standard(p, m);
    if xi.abs() > b || !(BoxSpec { n: m, p, radius: b }).contains(rprime)? {
        return Err(PlatError::BoxTooSmall("R' or xi outside the box".into()));
    }
    // v ranges over X / R' where X encodes both box constraints on the last column
    let upper = Lattice::scalar(p, m, -b).sum(rprime)?;
    let lower = rprime.scaled_by(-(b - xi));
    let x = upper.intersect(&lower)?;
    let whole = rprime.sum(&om)?.scaled_by(-(nu as i64));
    if !x.contains(&whole)? {
        return Err(PlatError::BoxTooSmall(format!(
            "fiber for nu={} xi={} leaves the radius-{} box",
            nu, xi, b
        )));
    }
    let formula = fiber_formula(rprime, nu)?;
    let (e, reps) = quotient_reps(&x, rprime)?;
    let full = BoxSpec {
        n: m + 1,
        p,
        radius: b,
    };
    let mut count = 0u64;
    for w in reps {
        let r = extend(rprime, xi, &w, e)?;
        if !full.contains(&r)? || r.truncate(m) != *rprime {
            continue;
        }
        let (rxi, rnu) = fiber_invariants(&r)?;
        if rxi == xi && rnu == nu {
            count += 1;
        }
    }
    Ok((formula, count))
}

/// Smallest box radius for which fiber_count_check is adequate.
pub fn min_fiber_radius(rprime: &Lattice, nu: u32, xi: i64) -> Result<i64> {
    let (p, m) = (rprime.p(), rprime.n());
    let whole = rprime
        .sum(&Lattice::standard(p, m))?
        .scaled_by(-(nu as i64));
    for b in xi.abs()..=64 {
        if !(BoxSpec { n: m, p, radius: b }).contains(rprime)? {
            continue;
        }
        let x = Lattice::scalar(p, m, -b)
            .sum(rprime)?
            .intersect(&rprime.scaled_by(-(b - xi)))?;
        if x.contains(&whole)? {
            return Ok(b);
        }
    }
    Err(PlatError::Budget("no adequate radius up to 64".into()))
}

/// R' ⊕ O (p^ξ e_n + p^{-e} w).
fn extend(rprime: &Lattice, xi: i64, w: &[i128], e: i64) -> Result<Lattice> {
    let m = rprime.n();
    let p = rprime.p();
    let mut gens: Vec<Vec<BigRational>> = Vec::new();
    let unit = rpow(p, -rprime.scale());
    for col in rprime.scaled_columns(rprime.scale())? {
        let mut g: Vec<BigRational> = col
            .iter()
            .map(|x| BigRational::from_integer(BigInt::from(*x)) * &unit)
            .collect();
        g.push(BigRational::zero());
        gens.push(g);
    }
    let f = rpow(p, -e);
    let mut last: Vec<BigRational> = w
        .iter()
        .map(|x| BigRational::from_integer(BigInt::from(*x)) * &f)
        .collect();
    last.push(rpow(p, xi));
    gens.push(last);
    Lattice::canonicalize(&gens, m + 1, p)
}

pub fn count_to_u64(x: &BigInt) -> Option<u64> {
    x.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn sublattice_counts() {
        assert_eq!(sublattices_of_index(1, 2, 5).unwrap().len(), 1);
        assert_eq!(sublattices_of_index(2, 2, 1).unwrap().len(), 3);
        assert_eq!(sublattices_of_index(2, 2, 2).unwrap().len(), 7);
        let all = sublattices_of_index(3, 3, 2).unwrap();
        let set: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        for r in &all {
            assert_eq!(r.log_volume(), -2);
        }
    }

    #[test]
    fn box_counts() {
        assert_eq!(
            box_lattices(&BoxSpec::new(1, 2, 1).unwrap()).unwrap().len(),
            3
        );
        assert_eq!(
            box_lattices(&BoxSpec::new(1, 2, 2).unwrap()).unwrap().len(),
            5
        );
        assert_eq!(
            box_lattices(&BoxSpec::new(2, 2, 1).unwrap()).unwrap().len(),
            15
        );
        assert_eq!(
            box_lattices(&BoxSpec::new(3, 2, 1).unwrap()).unwrap().len(),
            129
        );
        assert_eq!(
            box_lattices(&BoxSpec::new(2, 3, 2).unwrap()).unwrap().len() as u64,
            {
                let mut s = 0u64;
                for k in Signature::all_in_range(2, -2, 2) {
                    s += nu_closed_form(&k, 3).unwrap().to_u64().unwrap();
                }
                s
            }
        );
    }

    #[test]
    fn nu_examples() {
        let s = |v: &[i64]| Signature::new(v.to_vec()).unwrap();
        assert_eq!(nu_closed_form(&s(&[0, 0]), 2).unwrap(), BigInt::from(1));
        assert_eq!(nu_closed_form(&s(&[1, 0]), 2).unwrap(), BigInt::from(3));
        assert_eq!(nu_closed_form(&s(&[2, 0]), 2).unwrap(), BigInt::from(6));
        assert!((nu_real(&s(&[2, 0]), 2.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn orbits() {
        let s = |v: &[i64]| Signature::new(v.to_vec()).unwrap();
        assert_eq!(
            orbit_of_signature(&s(&[0, 0, 0]), 2).unwrap(),
            vec![Lattice::standard(2, 3)]
        );
        assert_eq!(
            orbit_of_signature(&s(&[1, 1]), 2).unwrap(),
            vec![Lattice::scalar(2, 2, 1)]
        );
        assert_eq!(orbit_of_signature(&s(&[1, 0]), 2).unwrap().len(), 3);
    }

    #[test]
    fn gaussian() {
        assert_eq!(gaussian_binomial(2, 1, 2).unwrap(), BigInt::from(3));
        assert_eq!(gaussian_binomial(4, 2, 2).unwrap(), BigInt::from(35));
        assert_eq!(gaussian_binomial(7, 0, 3).unwrap(), BigInt::from(1));
        assert!(gaussian_binomial(2, 3, 2).is_err());
        let poly = gaussian_binomial_poly(4, 2).unwrap();
        assert_eq!(poly.eval(2.0).unwrap(), 35.0);
        assert_eq!(poly.to_string(), "1 + p + 2*p^2 + p^3 + p^4");
        for l in 0..5 {
            for j in 0..=l {
                assert_eq!(
                    subspaces(l as usize, j as usize, 3).len() as u64,
                    gaussian_binomial(l, j, 3).unwrap().to_u64().unwrap()
                );
            }
        }
    }

    #[test]
    fn intermediate() {
        let s = Lattice::standard(2, 2);
        let r = Lattice::scalar(2, 2, 1);
        assert_eq!(intermediate_lattices(&r, &s, 0).unwrap(), vec![s.clone()]);
        assert_eq!(intermediate_lattices(&r, &s, 2).unwrap(), vec![r.clone()]);
        let mids = intermediate_lattices(&r, &s, 1).unwrap();
        assert_eq!(mids.len(), 3);
        for q in &mids {
            assert!(s.contains(q).unwrap() && q.contains(&r).unwrap());
            assert_eq!(q.log_volume(), -1);
        }
        assert!(intermediate_lattices(&Lattice::scalar(2, 2, 2), &s, 1).is_err());
        assert!(intermediate_lattices(&s, &r, 1).is_err());
    }

    #[test]
    fn fibers_small() {
        let o1 = Lattice::standard(2, 1);
        let bx = BoxSpec::new(2, 2, 3).unwrap();
        for xi in -1..=1 {
            let (f, b) = fiber_count_check(&o1, 0, xi, &bx).unwrap();
            assert_eq!(f, BigRational::one());
            assert_eq!(b, 1);
            let (f, b) = fiber_count_check(&o1, 1, xi, &bx).unwrap();
            assert_eq!(f, BigRational::one());
            assert_eq!(b, 1);
        }
        let o2 = Lattice::standard(2, 2);
        let (f, b) = fiber_count_check(&o2, 1, 0, &BoxSpec::new(3, 2, 2).unwrap()).unwrap();
        assert_eq!(f, BigRational::from_integer(3.into()));
        assert_eq!(b, 3);
        assert!(matches!(
            fiber_count_check(&o1, 2, 1, &BoxSpec::new(2, 2, 2).unwrap()),
            Err(PlatError::BoxTooSmall(_))
        ));
    }
}
