//! Integer α: the L² model of the kernel, the finite-field model of the dependence relation
//! and the q-binomial alternating sum behind it.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumeration::{
    gaussian_binomial, gaussian_binomial_poly, intermediate_lattices, quotient_reps, subspaces,
};
use crate::error::{PlatError, Result};
use crate::exact_arith::{Base, HalfPowerScalar};
use crate::lattice::{kernel_k_exact, Lattice};
use crate::report::VerificationReport;

fn sym() -> Base {
    Base::Symbolic
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// ⟨e_R, e_S⟩ in L²(K^{nm}) with e_R = vol(R)^{-m/2} on R^m, by counting the cosets of
/// (R+S)/(R∩S) lying in both R and S.
pub fn weil_inner_product(r: &Lattice, s: &Lattice, m: u32) -> Result<HalfPowerScalar> {
    if r.p() != s.p() || r.n() != s.n() {
        return Err(PlatError::Mismatch("inner product".into()));
    }
    let big = r.sum(s)?;
    let small = r.intersect(s)?;
    let (e, reps) = quotient_reps(&big, &small)?;
    let mut both = 0i64;
    for w in &reps {
        if r.contains_vector(w, -e)? && s.contains_vector(w, -e)? {
            both += 1;
        }
    }
    let m = m as i64;
    // each common coset has measure vol(R∩S) per coordinate
    let half = m * (2 * small.log_volume() - r.log_volume() - s.log_volume());
    let count = num_traits::pow(int(both), m as usize);
    Ok(HalfPowerScalar::monomial(count, half, sym()))
}

/// Coefficients c_k = (-1)^k p^{k(k-α-1)/2}, k = 0..α+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependenceRelation {
    pub alpha: u32,
    pub coefficients: Vec<HalfPowerScalar>,
}

impl DependenceRelation {
    pub fn new(alpha: u32, base: Base) -> DependenceRelation {
        let a = alpha as i64;
        let coefficients = (0..=a + 1)
            .map(|k| {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                HalfPowerScalar::monomial(int(sign), k * (k - a - 1), base.clone())
            })
            .collect();
        DependenceRelation {
            alpha,
            coefficients,
        }
    }

    /// c_{α+1-k} = (-1)^{α+1} c_k.
    pub fn is_palindromic(&self) -> bool {
        let a = self.alpha as usize;
        let sign = if (a + 1) % 2 == 0 { int(1) } else { int(-1) };
        (0..=a + 1).all(|k| self.coefficients[a + 1 - k] == self.coefficients[k].scale(&sign))
    }
}

/// A function on F_p^{(m+1)m}, indexed by the base-p digits of (w_1, ..., w_m).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteFieldFunction {
    pub p: u64,
    pub m: u32,
    pub values: Vec<HalfPowerScalar>,
}

impl FiniteFieldFunction {
    pub fn dim(&self) -> usize {
        ((self.m + 1) * self.m) as usize
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

fn decode(mut idx: usize, p: u64, m: usize) -> Vec<Vec<u64>> {
    (0..m)
        .map(|_| {
            (0..=m)
                .map(|_| {
                    let d = idx as u64 % p;
                    idx /= p as usize;
                    d
                })
                .collect()
        })
        .collect()
}

/// Whether w lies in the row space of a reduced row echelon matrix.
fn in_span(rref: &[Vec<u64>], w: &[u64], p: u64) -> bool {
    let mut v = w.to_vec();
    for row in rref {
        let c = row.iter().position(|x| *x == 1).expect("pivot");
        let f = v[c];
        if f != 0 {
            for (t, x) in row.iter().enumerate() {
                v[t] = (v[t] + p * p - f * x % p) % p;
            }
        }
    }
    v.iter().all(|x| *x == 0)
}

/// ẽ_L summed over subspaces of codimension k, times p^{-km/2}.
pub fn finite_field_g(k: u32, m: u32, p: u64) -> Result<FiniteFieldFunction> {
    if k > m + 1 {
        return Err(PlatError::Domain(format!("k={} exceeds m+1={}", k, m + 1)));
    }
    let d = (m + 1) as usize;
    let spaces = subspaces(d, d - k as usize, p);
    let size = (p as usize).pow((m + 1) * m);
    let base = Base::integer(p)?;
    let e_value = HalfPowerScalar::p_half_pow((k * m) as i64, base.clone());
    let norm = HalfPowerScalar::p_half_pow(-((k * m) as i64), base.clone());
    let values = (0..size)
        .into_par_iter()
        .map(|idx| {
            let ws = decode(idx, p, m as usize);
            let mut acc = HalfPowerScalar::zero(base.clone());
            for l in &spaces {
                if ws.iter().all(|w| in_span(l, w, p)) {
                    acc = &acc + &e_value;
                }
            }
            &acc * &norm
        })
        .collect();
    Ok(FiniteFieldFunction { p, m, values })
}

/// Σ_k (-1)^k p^{k(k-1)/2} G_k is the zero table.
pub fn verify_dependence_functions(m: u32, p: u64) -> Result<VerificationReport> {
    let base = Base::integer(p)?;
    let size = (p as usize).pow((m + 1) * m);
    let mut total = vec![HalfPowerScalar::zero(base.clone()); size];
    for k in 0..=m + 1 {
        let g = finite_field_g(k, m, p)?;
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let u = HalfPowerScalar::monomial(int(sign), (k * (k.max(1) - 1)) as i64, base.clone());
        for (t, v) in total.iter_mut().zip(&g.values) {
            *t = &*t + &(&u * v);
        }
    }
    let nonzero = total.iter().filter(|v| !v.is_zero()).count();
    Ok(
        VerificationReport::exact("dependence-field", nonzero == 0, nonzero as f64, 0.0)
            .param("m", m)
            .param("p", p)
            .with_meta("table_len", size),
    )
}

fn layers(r: &Lattice, s: &Lattice, alpha: u32) -> Result<Vec<Vec<Lattice>>> {
    let d = s.log_volume() - r.log_volume();
    if d != alpha as i64 + 1 {
        return Err(PlatError::Domain(format!(
            "S/R has rank {} but alpha+1 = {}",
            d,
            alpha + 1
        )));
    }
    (0..=alpha + 1)
        .map(|k| intermediate_lattices(r, s, k))
        .collect()
}

/// cᵀ G c over the intermediate lattices, with the exact Gram matrix of K_α.
pub fn dependence_quadratic_form(
    r: &Lattice,
    s: &Lattice,
    alpha: u32,
) -> Result<(HalfPowerScalar, usize)> {
    // layer sizes depend on p, so the form vanishes only at the concrete base
    let base = Base::integer(r.p())?;
    let rel = DependenceRelation::new(alpha, base.clone());
    let mut vecs: Vec<(Lattice, HalfPowerScalar)> = Vec::new();
    for (k, layer) in layers(r, s, alpha)?.into_iter().enumerate() {
        for q in layer {
            vecs.push((q, rel.coefficients[k].clone()));
        }
    }
    let mut acc = HalfPowerScalar::zero(base.clone());
    for (q1, c1) in &vecs {
        for (q2, c2) in &vecs {
            let (half, _) = kernel_k_exact(q1, q2, alpha as i64)?
                .as_monomial()
                .ok_or_else(|| PlatError::Domain("kernel".into()))?;
            let g = HalfPowerScalar::p_half_pow(half, base.clone());
            acc = &acc + &(&(c1 * c2) * &g);
        }
    }
    Ok((acc, vecs.len()))
}

pub fn verify_dependence_gram(r: &Lattice, s: &Lattice, alpha: u32) -> Result<VerificationReport> {
    let (q, count) = dependence_quadratic_form(r, s, alpha)?;
    Ok(VerificationReport::exact(
        "dependence-gram",
        q.is_zero(),
        if q.is_zero() { 0.0 } else { 1.0 },
        0.0,
    )
    .param("alpha", alpha)
    .param("R", r.to_string())
    .param("S", s.to_string())
    .with_meta("lattices", count)
    .with_meta("value", q.to_string()))
}

/// The same relation on the dual chain S^∨ ⊆ Q^∨ ⊆ R^∨.
pub fn verify_dependence_dual(r: &Lattice, s: &Lattice, alpha: u32) -> Result<VerificationReport> {
    let (q, count) = dependence_quadratic_form(&s.dual()?, &r.dual()?, alpha)?;
    let pal = DependenceRelation::new(alpha, sym()).is_palindromic();
    Ok(VerificationReport::exact(
        "dependence-duality",
        q.is_zero() && pal,
        if q.is_zero() { 0.0 } else { 1.0 },
        0.0,
    )
    .param("alpha", alpha)
    .with_meta("lattices", count)
    .with_meta("palindromic", pal))
}

/// Σ_{i=0}^{s} (-1)^i p^{i(i-1)/2} [s choose i]_p, symbolic in p or at a concrete prime.
pub fn gauss_alternating_sum(s: u32, base: &Base) -> Result<HalfPowerScalar> {
    if s == 0 {
        return Err(PlatError::Domain("s must be at least 1".into()));
    }
    let mut acc = HalfPowerScalar::zero(base.clone());
    for i in 0..=s {
        let sign = if i % 2 == 0 { int(1) } else { int(-1) };
        let binom = match base {
            Base::Symbolic => gaussian_binomial_poly(s, i)?,
            Base::Concrete(b) => {
                let p = b
                    .to_integer()
                    .try_into()
                    .map_err(|_| PlatError::InvalidBase(b.to_string()))?;
                HalfPowerScalar::from_rational(
                    BigRational::from_integer(gaussian_binomial(s, i, p)?),
                    base.clone(),
                )
            }
        };
        let term = binom.shift((i * (i.max(1) - 1)) as i64).scale(&sign);
        acc = &acc + &term;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeilSummary {
    pub pairs: usize,
    pub mismatches: usize,
}

/// ⟨e_R, e_S⟩ against K_m over all pairs of a list.
pub fn weil_check(lattices: &[Lattice], m: u32) -> Result<WeilSummary> {
    let mut mismatches = 0;
    for a in lattices {
        for b in lattices {
            if weil_inner_product(a, b, m)? != kernel_k_exact(a, b, m as i64)? {
                mismatches += 1;
            }
        }
    }
    Ok(WeilSummary {
        pairs: lattices.len() * lattices.len(),
        mismatches,
    })
}
