//! Lattices in Q_p^n commensurable with O^n, in Hermite form localized at p.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PlatError, Result};
use crate::exact_arith::{Base, HalfPowerScalar};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn ipow(p: u64, k: u32) -> Result<i128> {
    (p as i128)
        .checked_pow(k)
        .filter(|v| *v <= (1i128 << 62))
        .ok_or_else(|| PlatError::Overflow(format!("{}^{}", p, k)))
}

/// p-adic valuation of a nonzero integer.
pub(crate) fn val(mut x: i128, p: u64) -> u32 {
    debug_assert!(x != 0);
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

pub(crate) fn inv_mod(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert!(r0 == 1 || m == 1);
    s0.rem_euclid(m)
}

/// Canonical upper-triangular Hermite form of the O-span of integral column vectors
/// `gens`, given that the span contains p^m O^n. Entries are exact.
pub(crate) fn hnf_mod(p: u64, n: usize, gens: &[Vec<i128>], m: u32) -> Result<Vec<i64>> {
    let pm = ipow(p, m)?;
    let mut vecs: Vec<Vec<i128>> = gens
        .iter()
        .map(|g| g.iter().map(|x| x.rem_euclid(pm)).collect::<Vec<_>>())
        .filter(|g: &Vec<i128>| g.iter().any(|x| *x != 0))
        .collect();
    let mut h = vec![0i128; n * n];
    let mut a = vec![0u32; n];
    for r in (0..n).rev() {
        let mut best: Option<(usize, u32)> = None;
        for (idx, v) in vecs.iter().enumerate() {
            if v[r] != 0 {
                let w = val(v[r], p);
                if best.map_or(true, |(_, b)| w < b) {
                    best = Some((idx, w));
                }
            }
        }
        let (idx, w) = match best {
            None => {
                h[r * n + r] = pm;
                a[r] = m;
                continue;
            }
            Some(b) => b,
        };
        let mut piv = vecs.swap_remove(idx);
        let pw = ipow(p, w)?;
        let unit = piv[r] / pw;
        let uinv = inv_mod(unit, pm);
        for x in piv.iter_mut().take(r + 1) {
            *x = (*x * uinv).rem_euclid(pm);
        }
        piv[r] = pw;
        for q in vecs.iter_mut() {
            if q[r] != 0 {
                let c = q[r] / pw;
                for t in 0..=r {
                    q[t] = (q[t] - c * piv[t]).rem_euclid(pm);
                }
                q[r] = 0;
            }
        }
        // p^m e_r = p^{m-w} * piv - (upper part), so the upper part joins the generators
        let lift = ipow(p, m - w)?;
        let extra: Vec<i128> = (0..n)
            .map(|t| {
                if t < r {
                    (piv[t] * lift).rem_euclid(pm)
                } else {
                    0
                }
            })
            .collect();
        if extra.iter().any(|x| *x != 0) {
            vecs.push(extra);
        }
        vecs.retain(|v| v.iter().any(|x| *x != 0));
        for t in 0..n {
            h[t * n + r] = if t <= r { piv[t] } else { 0 };
        }
        a[r] = w;
    }
    for j in 0..n {
        for i in (0..j).rev() {
            let d = ipow(p, a[i])?;
            let q = h[i * n + j].div_euclid(d);
            if q != 0 {
                for t in 0..=i {
                    h[t * n + j] -= q * h[t * n + i];
                }
            }
            for t in 0..i {
                h[t * n + j] = h[t * n + j].rem_euclid(pm);
            }
        }
    }
    h.into_iter()
        .map(|x| i64::try_from(x).map_err(|_| PlatError::Overflow("hnf entry".into())))
        .collect()
}

/// Valuations of the Smith invariants of an integral square matrix whose invariants
/// are all below `cap`.
pub(crate) fn smith_vals(mat: &[i128], n: usize, p: u64, cap: u32) -> Result<Vec<u32>> {
    let pm = ipow(p, cap)?;
    let mut m: Vec<i128> = mat.iter().map(|x| x.rem_euclid(pm)).collect();
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    while !rows.is_empty() {
        let mut best: Option<(usize, usize, u32)> = None;
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                let x = m[r * n + c];
                if x != 0 {
                    let w = val(x, p);
                    if best.map_or(true, |b| w < b.2) {
                        best = Some((ri, ci, w));
                    }
                }
            }
        }
        let (ri, ci, w) = match best {
            None => {
                return Err(PlatError::Overflow("smith precision exhausted".into()));
            }
            Some(b) => b,
        };
        let (r, c) = (rows[ri], cols[ci]);
        let pw = ipow(p, w)?;
        let uinv = inv_mod(m[r * n + c] / pw, pm);
        for &cc in &cols {
            m[r * n + cc] = (m[r * n + cc] * uinv).rem_euclid(pm);
        }
        for &rr in &rows {
            if rr != r && m[rr * n + c] != 0 {
                let f = m[rr * n + c] / pw;
                for &cc in &cols {
                    m[rr * n + cc] = (m[rr * n + cc] - f * m[r * n + cc]).rem_euclid(pm);
                }
            }
        }
        rows.swap_remove(ri);
        cols.swap_remove(ci);
        out.push(w);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Signature(Vec<i64>);

impl Signature {
    pub fn new(k: Vec<i64>) -> Result<Signature> {
        if k.is_empty() {
            return Err(PlatError::Domain("empty signature".into()));
        }
        if k.windows(2).any(|w| w[0] < w[1]) {
            return Err(PlatError::Domain(format!(
                "signature {:?} is not weakly decreasing",
                k
            )));
        }
        Ok(Signature(k))
    }

    /// Sorts arbitrary exponents into a signature.
    pub fn sorted(mut k: Vec<i64>) -> Signature {
        k.sort_unstable_by(|a, b| b.cmp(a));
        Signature(k)
    }

    pub fn zero(n: usize) -> Signature {
        Signature(vec![0; n])
    }

    pub fn k(&self) -> &[i64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn abs_sum(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    /// All signatures of length n with entries in [lo, hi].
    pub fn all_in_range(n: usize, lo: i64, hi: i64) -> Vec<Signature> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        fn rec(n: usize, lo: i64, top: i64, cur: &mut Vec<i64>, out: &mut Vec<Signature>) {
            if cur.len() == n {
                out.push(Signature(cur.clone()));
                return;
            }
            for x in (lo..=top).rev() {
                cur.push(x);
                rec(n, lo, x, cur, out);
                cur.pop();
            }
        }
        rec(n, lo, hi, &mut cur, &mut out);
        out
    }
}

impl TryFrom<Vec<i64>> for Signature {
    type Error = PlatError;
    fn try_from(v: Vec<i64>) -> Result<Signature> {
        Signature::new(v)
    }
}

impl From<Signature> for Vec<i64> {
    fn from(s: Signature) -> Vec<i64> {
        s.0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Signature {
    type Err = PlatError;
    fn from_str(s: &str) -> Result<Signature> {
        let k: std::result::Result<Vec<i64>, _> =
            s.split(',').map(|x| x.trim().parse::<i64>()).collect();
        Signature::new(k.map_err(|_| PlatError::Parse(format!("bad signature '{}'", s)))?)
    }
}

/// R = p^{-e} * span_O(columns of H).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "LatticeRecord", into = "LatticeRecord")]
pub struct Lattice {
    p: u64,
    n: usize,
    e: i64,
    h: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRecord {
    p: u64,
    n: usize,
    e: i64,
    #[serde(rename = "H")]
    h: Vec<Vec<i64>>,
}

impl From<Lattice> for LatticeRecord {
    fn from(l: Lattice) -> LatticeRecord {
        LatticeRecord {
            p: l.p,
            n: l.n,
            e: l.e,
            h: l.rows(),
        }
    }
}

impl TryFrom<LatticeRecord> for Lattice {
    type Error = PlatError;
    fn try_from(r: LatticeRecord) -> Result<Lattice> {
        Lattice::from_parts(r.p, r.n, r.e, r.h)
    }
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(PlatError::NotPrime(p))
    }
}

impl Lattice {
    /// Builds from an integral Hermite matrix already in canonical shape, fixing the scale.
    pub(crate) fn from_scaled(p: u64, n: usize, mut e: i64, mut h: Vec<i64>) -> Lattice {
        let pi = p as i64;
        while h.iter().all(|x| x % pi == 0) {
            for x in h.iter_mut() {
                *x /= pi;
            }
            e -= 1;
        }
        Lattice { p, n, e, h }
    }

    /// Validating constructor from explicit fields.
    pub fn from_parts(p: u64, n: usize, e: i64, rows: Vec<Vec<i64>>) -> Result<Lattice> {
        check_prime(p)?;
        if n == 0 || rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(PlatError::Domain("H must be n x n".into()));
        }
        let h: Vec<i64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            let d = h[i * n + i];
            if d <= 0 || d != (p as i64).pow(val(d as i128, p)) {
                return Err(PlatError::Domain(format!(
                    "diagonal entry {} is not a power of p",
                    d
                )));
            }
            for j in 0..n {
                let x = h[i * n + j];
                if (j < i && x != 0) || (j > i && !(0..d).contains(&x)) {
                    return Err(PlatError::Domain("H is not in reduced Hermite form".into()));
                }
            }
        }
        if h.iter().all(|x| x % p as i64 == 0) {
            return Err(PlatError::Domain("scale is not minimal".into()));
        }
        Ok(Lattice { p, n, e, h })
    }

    pub fn standard(p: u64, n: usize) -> Lattice {
        let mut h = vec![0; n * n];
        for i in 0..n {
            h[i * n + i] = 1;
        }
        Lattice { p, n, e: 0, h }
    }

    /// p^k O^n.
    pub fn scalar(p: u64, n: usize, k: i64) -> Lattice {
        let mut l = Lattice::standard(p, n);
        l.e = -k;
        l
    }

    /// (+)_j p^{k_j} O e_j for exponents in any order.
    pub fn diagonal(p: u64, k: &[i64]) -> Lattice {
        let n = k.len();
        let lo = *k.iter().min().unwrap();
        let mut h = vec![0; n * n];
        for i in 0..n {
            h[i * n + i] = (p as i64).pow((k[i] - lo) as u32);
        }
        Lattice::from_scaled(p, n, -lo, h)
    }

    /// Canonical form of the O-span of rational generators with p-power denominators.
    pub fn canonicalize(generators: &[Vec<BigRational>], n: usize, p: u64) -> Result<Lattice> {
        check_prime(p)?;
        let pb = BigInt::from(p);
        let mut big_e = 0u32;
        for g in generators {
            if g.len() != n {
                return Err(PlatError::Mismatch("generator length".into()));
            }
            for x in g {
                let mut d = x.denom().clone();
                let mut k = 0;
                while (&d % &pb).is_zero() {
                    d /= &pb;
                    k += 1;
                }
                if !d.is_one() {
                    return Err(PlatError::BadDenominator(x.to_string()));
                }
                big_e = big_e.max(k);
            }
        }
        let scale = BigRational::from_integer(num_traits::pow(pb.clone(), big_e as usize));
        let ints: Vec<Vec<BigInt>> = generators
            .iter()
            .map(|g| g.iter().map(|x| (x * &scale).to_integer()).collect())
            .collect();
        let det = full_rank_minor(&ints, n).ok_or(PlatError::NotFullRank)?;
        let mut m = 0u32;
        let mut d = det.abs();
        while (&d % &pb).is_zero() {
            d /= &pb;
            m += 1;
        }
        let pm = BigInt::from(ipow(p, m)?);
        let gens: Vec<Vec<i128>> = ints
            .iter()
            .map(|g| {
                g.iter()
                    .map(|x| x.mod_floor(&pm).to_i128().unwrap())
                    .collect()
            })
            .collect();
        let h = hnf_mod(p, n, &gens, m)?;
        Ok(Lattice::from_scaled(p, n, big_e as i64, h))
    }

    /// Convenience wrapper for small integer generators with a common p-power scale:
    /// the lattice p^{-shift} span(gens).
    pub fn from_integer_generators(
        p: u64,
        n: usize,
        gens: &[Vec<i64>],
        shift: i64,
    ) -> Result<Lattice> {
        let sc = BigRational::new(BigInt::one(), BigInt::one())
            * if shift >= 0 {
                BigRational::new(
                    BigInt::one(),
                    num_traits::pow(BigInt::from(p), shift as usize),
                )
            } else {
                BigRational::from_integer(num_traits::pow(BigInt::from(p), (-shift) as usize))
            };
        let g: Vec<Vec<BigRational>> = gens
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| BigRational::from_integer(BigInt::from(*x)) * &sc)
                    .collect()
            })
            .collect();
        Lattice::canonicalize(&g, n, p)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> i64 {
        self.e
    }

    pub fn hnf(&self) -> &[i64] {
        &self.h
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.h[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.h.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Exponents a_i with H_ii = p^{a_i}.
    pub fn diag_exps(&self) -> Vec<u32> {
        (0..self.n)
            .map(|i| val(self.h[i * self.n + i] as i128, self.p))
            .collect()
    }

    fn total_exp(&self) -> u32 {
        self.diag_exps().iter().sum()
    }

    /// log_p vol(R).
    pub fn log_volume(&self) -> i64 {
        -(self.total_exp() as i64) + self.n as i64 * self.e
    }

    /// log_p vol(R ∩ K^j) for j = 1..n.
    pub fn flag_log_volumes(&self) -> Vec<i64> {
        let mut acc = 0i64;
        self.diag_exps()
            .iter()
            .enumerate()
            .map(|(j, a)| {
                acc += *a as i64;
                -acc + (j as i64 + 1) * self.e
            })
            .collect()
    }

    pub fn volume(&self) -> HalfPowerScalar {
        HalfPowerScalar::p_half_pow(2 * self.log_volume(), Base::Symbolic)
    }

    pub fn flag_volumes(&self) -> Vec<HalfPowerScalar> {
        self.flag_log_volumes()
            .into_iter()
            .map(|v| HalfPowerScalar::p_half_pow(2 * v, Base::Symbolic))
            .collect()
    }

    fn check_compatible(&self, other: &Lattice) -> Result<()> {
        if self.p != other.p || self.n != other.n {
            return Err(PlatError::Mismatch(format!(
                "(p={}, n={}) vs (p={}, n={})",
                self.p, self.n, other.p, other.n
            )));
        }
        Ok(())
    }

    /// Columns of p^{big_e - e} H, the integral generators of p^{big_e} R.
    pub(crate) fn scaled_columns(&self, big_e: i64) -> Result<Vec<Vec<i128>>> {
        let f = ipow(self.p, (big_e - self.e) as u32)?;
        Ok((0..self.n)
            .map(|j| {
                (0..self.n)
                    .map(|i| self.h[i * self.n + j] as i128 * f)
                    .collect()
            })
            .collect())
    }

    /// R ∩ K^j as a lattice in K^j.
    pub fn truncate(&self, j: usize) -> Lattice {
        let mut h = Vec::with_capacity(j * j);
        for i in 0..j {
            for c in 0..j {
                h.push(self.h[i * self.n + c]);
            }
        }
        Lattice::from_scaled(self.p, j, self.e, h)
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        self.check_compatible(other)?;
        let big_e = self.e.max(other.e);
        let mut gens = self.scaled_columns(big_e)?;
        gens.extend(other.scaled_columns(big_e)?);
        let m = ((big_e - self.e) as u32 + self.total_exp())
            .min((big_e - other.e) as u32 + other.total_exp());
        let h = hnf_mod(self.p, self.n, &gens, m)?;
        Ok(Lattice::from_scaled(self.p, self.n, big_e, h))
    }

    /// p^A H^{-1} with A = sum a_i, an integral upper triangular matrix.
    fn scaled_inverse(&self) -> Result<Vec<i128>> {
        let n = self.n;
        let a = self.diag_exps();
        let big_a: u32 = a.iter().sum();
        let mut x = vec![0i128; n * n];
        for j in 0..n {
            x[j * n + j] = ipow(self.p, big_a - a[j])?;
            for i in (0..j).rev() {
                let mut s = 0i128;
                for k in (i + 1)..=j {
                    s = s
                        .checked_add(
                            (self.h[i * n + k] as i128)
                                .checked_mul(x[k * n + j])
                                .ok_or_else(|| PlatError::Overflow("inverse".into()))?,
                        )
                        .ok_or_else(|| PlatError::Overflow("inverse".into()))?;
                }
                let d = ipow(self.p, a[i])?;
                debug_assert!(s % d == 0);
                x[i * n + j] = -s / d;
            }
        }
        Ok(x)
    }

    pub fn dual(&self) -> Result<Lattice> {
        let n = self.n;
        let big_a = self.total_exp();
        let g = self.scaled_inverse()?;
        // columns of G^T are the rows of G
        let gens: Vec<Vec<i128>> = (0..n).map(|i| g[i * n..(i + 1) * n].to_vec()).collect();
        let h = hnf_mod(self.p, n, &gens, big_a)?;
        Ok(Lattice::from_scaled(self.p, n, big_a as i64 - self.e, h))
    }

    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        self.dual()?.sum(&other.dual()?)?.dual()
    }

    /// other ⊆ self.
    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        Ok(&self.sum(other)? == self)
    }

    /// Whether the vector p^{shift} * z lies in R.
    pub fn contains_vector(&self, z: &[i128], shift: i64) -> Result<bool> {
        let n = self.n;
        let t = shift + self.e;
        let (mut y, extra): (Vec<i128>, u32) = if t >= 0 {
            let f = ipow(self.p, t as u32)?;
            (z.iter().map(|x| x * f).collect(), 0)
        } else {
            (z.to_vec(), (-t) as u32)
        };
        let a = self.diag_exps();
        let pe = ipow(self.p, extra)?;
        for r in (0..n).rev() {
            let d = ipow(self.p, a[r] + extra)?;
            if y[r] % d != 0 {
                return Ok(false);
            }
            let c = y[r] / d;
            for i in 0..=r {
                y[i] -= c * pe * self.h[i * n + r] as i128;
            }
        }
        Ok(true)
    }

    pub fn elementary_divisors(&self) -> Result<Signature> {
        let m: Vec<i128> = self.h.iter().map(|x| *x as i128).collect();
        let v = smith_vals(&m, self.n, self.p, self.total_exp() + 1)?;
        Ok(Signature::sorted(
            v.into_iter().map(|x| x as i64 - self.e).collect(),
        ))
    }

    /// Elementary divisors of B_R^{-1} B_S.
    pub fn relative_position(&self, other: &Lattice) -> Result<Signature> {
        self.check_compatible(other)?;
        let n = self.n;
        let g = self.scaled_inverse()?;
        let cap = self.total_exp() + other.total_exp() + 1;
        let pm = ipow(self.p, cap)?;
        let mut x = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0i128;
                for k in 0..n {
                    s = (s + g[i * n + k].rem_euclid(pm) * other.h[k * n + j] as i128)
                        .rem_euclid(pm);
                }
                x[i * n + j] = s;
            }
        }
        let v = smith_vals(&x, n, self.p, cap)?;
        let shift = self.e - other.e - self.total_exp() as i64;
        Ok(Signature::sorted(
            v.into_iter().map(|x| x as i64 + shift).collect(),
        ))
    }

    /// The image g R for an integral matrix g (row-major) with nonzero determinant.
    pub fn transform(&self, g: &[i64]) -> Result<Lattice> {
        let n = self.n;
        if g.len() != n * n {
            return Err(PlatError::Mismatch("matrix size".into()));
        }
        let gens: Vec<Vec<BigRational>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let s: i128 = (0..n)
                            .map(|k| g[i * n + k] as i128 * self.h[k * n + j] as i128)
                            .sum();
                        BigRational::from_integer(BigInt::from(s))
                    })
                    .collect()
            })
            .collect();
        let l = Lattice::canonicalize(&gens, n, self.p)?;
        Ok(Lattice::from_scaled(l.p, n, l.e + self.e, l.h))
    }

    /// p^k R.
    pub fn scaled_by(&self, k: i64) -> Lattice {
        Lattice {
            p: self.p,
            n: self.n,
            e: self.e - k,
            h: self.h.clone(),
        }
    }
}

/// Determinant of some n linearly independent generators, if any exist.
fn full_rank_minor(gens: &[Vec<BigInt>], n: usize) -> Option<BigInt> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<BigRational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for (idx, g) in gens.iter().enumerate() {
        let mut v: Vec<BigRational> = g
            .iter()
            .map(|x| BigRational::from_integer(x.clone()))
            .collect();
        for (b, &pc) in basis.iter().zip(&pivots) {
            if !v[pc].is_zero() {
                let f = &v[pc] / &b[pc];
                for t in 0..n {
                    let d = &f * &b[t];
                    v[t] -= d;
                }
            }
        }
        if let Some(pc) = (0..n).find(|&t| !v[t].is_zero()) {
            basis.push(v);
            pivots.push(pc);
            chosen.push(idx);
            if chosen.len() == n {
                break;
            }
        }
    }
    if chosen.len() < n {
        return None;
    }
    let mut m: Vec<Vec<BigRational>> = chosen
        .iter()
        .map(|&i| {
            gens[i]
                .iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let mut det = BigRational::one();
    for c in 0..n {
        let r = (c..n).find(|&r| !m[r][c].is_zero())?;
        if r != c {
            m.swap(r, c);
            det = -det;
        }
        det *= m[c][c].clone();
        for r in (c + 1)..n {
            if !m[r][c].is_zero() {
                let f = &m[r][c] / &m[c][c];
                for t in c..n {
                    let d = &f * &m[c][t];
                    m[r][t] -= d;
                }
            }
        }
    }
    Some(det.to_integer())
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| {
                format!(
                    "[{}]",
                    r.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect();
        write!(
            f,
            "p={} n={} e={} H=[{}]",
            self.p,
            self.n,
            self.e,
            rows.join(",")
        )
    }
}

impl FromStr for Lattice {
    type Err = PlatError;

    /// Parses `p=2 n=2 e=0 H=[[2,1],[0,1]]`.
    fn from_str(s: &str) -> Result<Lattice> {
        let bad = |m: &str| PlatError::Parse(format!("{}: '{}'", m, s));
        let (head, hpart) = s.split_once("H=").ok_or_else(|| bad("missing H"))?;
        let (mut p, mut n, mut e) = (None, None, None);
        for tok in head.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("bad field"))?;
            match k {
                "p" => p = Some(v.parse::<u64>().map_err(|_| bad("bad p"))?),
                "n" => n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?),
                "e" => e = Some(v.parse::<i64>().map_err(|_| bad("bad e"))?),
                _ => return Err(bad("unknown field")),
            }
        }
        let rows: Vec<Vec<i64>> = serde_json::from_str(hpart.trim()).map_err(|_| bad("bad H"))?;
        Lattice::from_parts(
            p.ok_or_else(|| bad("missing p"))?,
            n.ok_or_else(|| bad("missing n"))?,
            e.ok_or_else(|| bad("missing e"))?,
            rows,
        )
    }
}

/// K_α(R,S) for integer α, exactly.
pub fn kernel_k_exact(r: &Lattice, s: &Lattice, alpha: i64) -> Result<HalfPowerScalar> {
    let cap = r.intersect(s)?.log_volume();
    let half = 2 * alpha * cap - alpha * (r.log_volume() + s.log_volume());
    Ok(HalfPowerScalar::p_half_pow(half, Base::Symbolic))
}

/// log_p K_α(R,S) / α, i.e. vol(R∩S) / sqrt(vol R vol S) as a power of p.
pub fn kernel_log(r: &Lattice, s: &Lattice) -> Result<f64> {
    let cap = r.intersect(s)?.log_volume();
    Ok(cap as f64 - 0.5 * (r.log_volume() + s.log_volume()) as f64)
}

pub fn kernel_k(r: &Lattice, s: &Lattice, alpha: f64) -> Result<f64> {
    Ok((r.p() as f64).powf(alpha * kernel_log(r, s)?))
}

pub fn delta_exact(r: &Lattice, alpha: i64) -> Result<HalfPowerScalar> {
    kernel_k_exact(&Lattice::standard(r.p(), r.n()), r, alpha)
}

pub fn delta(r: &Lattice, alpha: f64) -> Result<f64> {
    kernel_k(&Lattice::standard(r.p(), r.n()), r, alpha)
}

/// Δ_α from a signature: p^{-(α/2) Σ|k_j|}.
pub fn delta_of_signature(k: &Signature, alpha: f64, p: f64) -> f64 {
    p.powf(-0.5 * alpha * k.abs_sum() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(s: &str) -> Lattice {
        s.parse().unwrap()
    }

    fn gens(p: u64, v: &[&[i64]], shift: i64) -> Lattice {
        let g: Vec<Vec<i64>> = v.iter().map(|x| x.to_vec()).collect();
        Lattice::from_integer_generators(p, v[0].len(), &g, shift).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(gens(2, &[&[1, 0], &[0, 1]], 0), Lattice::standard(2, 2));
        assert_eq!(
            gens(2, &[&[2, 0], &[1, 1], &[2, 2]], 0).to_string(),
            "p=2 n=2 e=0 H=[[2,1],[0,1]]"
        );
        let half = Lattice::canonicalize(
            &[
                vec![BigRational::new(1.into(), 2.into()), BigRational::zero()],
                vec![BigRational::zero(), BigRational::one()],
            ],
            2,
            2,
        )
        .unwrap();
        assert_eq!(half.to_string(), "p=2 n=2 e=1 H=[[1,0],[0,2]]");
        assert!(
            Lattice::canonicalize(&[vec![BigRational::new(1.into(), 3.into())]], 1, 2).is_err()
        );
        assert_eq!(
            Lattice::from_integer_generators(2, 2, &[vec![1, 1], vec![2, 2]], 0),
            Err(PlatError::NotFullRank)
        );
        assert_eq!(
            Lattice::from_integer_generators(4, 1, &[vec![1]], 0),
            Err(PlatError::NotPrime(4))
        );
    }

    #[test]
    fn units_are_divided_out() {
        // 3 e_1 generates O e_1 over Z_2
        assert_eq!(gens(2, &[&[3, 0], &[0, 5]], 0), Lattice::standard(2, 2));
        assert_eq!(
            gens(3, &[&[6, 2], &[0, 9]], 0),
            gens(3, &[&[3, 1], &[0, 9]], 0)
        );
    }

    #[test]
    fn volumes() {
        assert!(Lattice::standard(2, 3).volume().is_one());
        let r = lat("p=2 n=2 e=0 H=[[2,1],[0,1]]");
        assert_eq!(r.volume().to_string(), "p^(-1)");
        assert_eq!(r.flag_log_volumes(), vec![-1, -1]);
        let d = Lattice::diagonal(2, &[1, -1]);
        assert_eq!(d.log_volume(), 0);
        assert_eq!(
            Lattice::diagonal(2, &[1, 0]).flag_log_volumes(),
            vec![-1, -1]
        );
        assert_eq!(
            Lattice::diagonal(2, &[1, -1]).flag_log_volumes(),
            vec![-1, 0]
        );
    }

    #[test]
    fn sums_and_intersections() {
        let o = Lattice::standard(2, 2);
        let a = Lattice::diagonal(2, &[1, 0]);
        let b = Lattice::diagonal(2, &[0, 1]);
        assert_eq!(o.sum(&Lattice::scalar(2, 2, 1)).unwrap(), o);
        assert_eq!(a.sum(&b).unwrap(), o);
        assert_eq!(a.intersect(&b).unwrap(), Lattice::scalar(2, 2, 1));
        assert_eq!(a.intersect(&a).unwrap(), a);
        assert_eq!(o.intersect(&Lattice::scalar(2, 2, -1)).unwrap(), o);
    }

    #[test]
    fn duals() {
        let o = Lattice::standard(3, 2);
        assert_eq!(o.dual().unwrap(), o);
        assert_eq!(
            Lattice::scalar(2, 1, 3).dual().unwrap(),
            Lattice::scalar(2, 1, -3)
        );
        let r = lat("p=2 n=2 e=0 H=[[2,1],[0,1]]");
        assert_eq!(r.dual().unwrap().to_string(), "p=2 n=2 e=1 H=[[2,1],[0,1]]");
        assert_eq!(r.dual().unwrap().dual().unwrap(), r);
    }

    #[test]
    fn divisors_and_positions() {
        let o = Lattice::standard(2, 2);
        assert_eq!(o.elementary_divisors().unwrap().k(), &[0, 0]);
        assert_eq!(
            Lattice::scalar(2, 2, 1).elementary_divisors().unwrap().k(),
            &[1, 1]
        );
        let r = lat("p=2 n=2 e=0 H=[[2,1],[0,1]]");
        assert_eq!(r.elementary_divisors().unwrap().k(), &[1, 0]);
        assert_eq!(r.relative_position(&r).unwrap().k(), &[0, 0]);
        let p1 = Lattice::scalar(2, 2, 1);
        assert_eq!(o.relative_position(&p1).unwrap().k(), &[1, 1]);
        assert_eq!(p1.relative_position(&o).unwrap().k(), &[-1, -1]);
        assert_eq!(
            Lattice::diagonal(3, &[-2, 1, 0])
                .elementary_divisors()
                .unwrap()
                .k(),
            &[1, 0, -2]
        );
    }

    #[test]
    fn kernels() {
        let o = Lattice::standard(2, 1);
        let p1 = Lattice::scalar(2, 1, 1);
        assert_eq!(kernel_k_exact(&o, &p1, 1).unwrap().to_string(), "p^(-1/2)");
        let s = lat("p=2 n=2 e=0 H=[[2,1],[0,1]]");
        let k = kernel_k_exact(&Lattice::standard(2, 2), &s, 2).unwrap();
        assert_eq!(k.eval(2.0).unwrap(), 0.5);
        let r = Lattice::diagonal(2, &[1, -1]);
        assert_eq!(delta_exact(&r, 3).unwrap().to_string(), "p^(-3)");
        assert!((delta(&Lattice::scalar(2, 1, -2), 1.5).unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn literal_roundtrip() {
        let r = lat("p=3 n=3 e=-1 H=[[9,2,5],[0,3,1],[0,0,1]]");
        assert_eq!(r.to_string().parse::<Lattice>().unwrap(), r);
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(js, r#"{"p":3,"n":3,"e":-1,"H":[[9,2,5],[0,3,1],[0,0,1]]}"#);
        assert_eq!(serde_json::from_str::<Lattice>(&js).unwrap(), r);
        assert!("p=2 n=2 e=0 H=[[2,2],[0,1]]".parse::<Lattice>().is_err());
        assert!("p=2 n=1 e=0 H=[[2]]".parse::<Lattice>().is_err());
    }

    #[test]
    fn transform_by_basis_change() {
        let r = lat("p=2 n=2 e=0 H=[[4,1],[0,2]]");
        // unimodular g leaves O^2 fixed and moves r
        let g = [1, 3, 0, 1];
        assert_eq!(
            Lattice::standard(2, 2).transform(&g).unwrap(),
            Lattice::standard(2, 2)
        );
        let gr = r.transform(&g).unwrap();
        assert_eq!(gr.log_volume(), r.log_volume());
        let doubled = r.transform(&[2, 0, 0, 2]).unwrap();
        assert_eq!(doubled, r.scaled_by(1));
    }

    #[test]
    fn vector_membership() {
        let r = lat("p=2 n=2 e=0 H=[[2,1],[0,1]]");
        assert!(r.contains_vector(&[1, 1], 0).unwrap());
        assert!(!r.contains_vector(&[1, 0], 0).unwrap());
        assert!(r.contains_vector(&[1, 0], 1).unwrap());
        assert!(!r.contains_vector(&[1, 1], -1).unwrap());
        assert!(r.dual().unwrap().contains_vector(&[1, -1], -1).unwrap());
        assert!(!r.dual().unwrap().contains_vector(&[1, 0], -1).unwrap());
    }
}
