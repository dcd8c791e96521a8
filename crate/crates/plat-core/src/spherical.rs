//! Spherical functions on signatures.
//!
//! Two routes: the closed Hall–Littlewood form in x_j = p^{-λ_j}, and the orbit average of
//! flag volumes. The closed form is normalized to agree with the orbit average, which puts
//! the prefactor at p^{Σ(j-(n+1)/2)k_j}.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::enumeration::{nu_closed_form, nu_real, orbit_of_signature};
use crate::error::{PlatError, Result};
use crate::exact_arith::ensure_finite;
use crate::lattice::{is_prime, Lattice, Signature};

/// Relative gap below which two x_j count as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: Vec<Complex64>,
}

impl SpectralPoint {
    pub fn new(lambda: Vec<Complex64>) -> SpectralPoint {
        SpectralPoint { lambda }
    }

    /// λ_j = i s_j.
    pub fn imaginary(s: &[f64]) -> SpectralPoint {
        SpectralPoint {
            lambda: s.iter().map(|x| Complex64::new(0.0, *x)).collect(),
        }
    }

    pub fn real(l: &[f64]) -> SpectralPoint {
        SpectralPoint {
            lambda: l.iter().map(|x| Complex64::new(*x, 0.0)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn neg(&self) -> SpectralPoint {
        SpectralPoint {
            lambda: self.lambda.iter().map(|l| -l).collect(),
        }
    }

    /// x_j = p^{-λ_j}.
    pub fn x(&self, p: f64) -> Vec<Complex64> {
        let lp = p.ln();
        self.lambda.iter().map(|l| (-l * lp).exp()).collect()
    }

    /// Representative with Im λ_j in [0, 2π/ln p).
    pub fn canonical(&self, p: f64) -> SpectralPoint {
        let period = 2.0 * std::f64::consts::PI / p.ln();
        SpectralPoint {
            lambda: self
                .lambda
                .iter()
                .map(|l| Complex64::new(l.re, l.im.rem_euclid(period)))
                .collect(),
        }
    }
}

fn check_base(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(PlatError::InvalidBase(p.to_string()))
    }
}

/// All permutations of 0..n with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, i32)>) {
        if cur.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if cur[i] > cur[j] {
                        inv += 1;
                    }
                }
            }
            out.push((cur.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// A = (1-p^{-1})^n / Π(1-p^{-j}).
pub fn macdonald_constant(n: usize, p: f64) -> f64 {
    let mut a = (1.0 - 1.0 / p).powi(n as i32);
    for j in 1..=n as i32 {
        a /= 1.0 - p.powi(-j);
    }
    a
}

/// Exponent of the normalizing power of p: Σ(j-(n+1)/2)k_j.
pub fn prefactor_exponent(k: &Signature) -> f64 {
    let n = k.n() as f64;
    k.k()
        .iter()
        .enumerate()
        .map(|(j, kj)| (j as f64 + 1.0 - (n + 1.0) / 2.0) * *kj as f64)
        .sum()
}

pub fn vandermonde(x: &[Complex64]) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for m in 0..x.len() {
        for l in (m + 1)..x.len() {
            v *= x[m] - x[l];
        }
    }
    v
}

/// Σ_σ sgn(σ) Π x_σ(j)^{k_j} Π_{m<l}(x_σ(m) - x_σ(l)/p), without constants.
pub fn antisymmetrized(k: &Signature, x: &[Complex64], p: f64) -> Complex64 {
    let n = k.n();
    let mut total = Complex64::new(0.0, 0.0);
    for (s, sign) in permutations(n) {
        let mut t = Complex64::new(sign as f64, 0.0);
        for j in 0..n {
            t *= x[s[j]].powi(k.k()[j] as i32);
        }
        for m in 0..n {
            for l in (m + 1)..n {
                t *= x[s[m]] - x[s[l]] / p;
            }
        }
        total += t;
    }
    total
}

fn check_dims(k: &Signature, n: usize) -> Result<()> {
    if k.n() != n {
        return Err(PlatError::Mismatch(format!(
            "signature has {} entries, point has {}",
            k.n(),
            n
        )));
    }
    Ok(())
}

fn coincident(x: &[Complex64]) -> bool {
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for m in 0..x.len() {
        for l in (m + 1)..x.len() {
            if (x[m] - x[l]).norm() <= COINCIDENCE_TOL * scale {
                return true;
            }
        }
    }
    false
}

/// V(x)·φ as a polynomial in x_j = p^{-λ_j}, with all constants.
pub fn phi_antisym(k: &Signature, x: &[Complex64], p: f64) -> Result<Complex64> {
    check_base(p)?;
    check_dims(k, x.len())?;
    let c = macdonald_constant(k.n(), p) * p.powf(prefactor_exponent(k));
    Ok(antisymmetrized(k, x, p) * c)
}

/// Closed-form spherical function.
pub fn phi_macdonald(k: &Signature, lambda: &SpectralPoint, p: f64) -> Result<Complex64> {
    check_base(p)?;
    check_dims(k, lambda.n())?;
    let x = lambda.x(p);
    if coincident(&x) {
        return Err(PlatError::Coincident);
    }
    ensure_finite(phi_antisym(k, &x, p)? / vandermonde(&x), "phi_macdonald")
}

/// The closed form with the prefactor exponent sign as literally printed, p^{Σ((n+1)/2-j)k_j};
/// kept only to report how far it is from the orbit average.
pub fn phi_macdonald_printed(k: &Signature, lambda: &SpectralPoint, p: f64) -> Result<Complex64> {
    Ok(phi_macdonald(k, lambda, p)? * p.powf(-2.0 * prefactor_exponent(k)))
}

/// V(x)^2 φ as a polynomial in x_j = p^{-λ_j}; defined at coincident points.
pub fn phi_regularized(k: &Signature, x: &[Complex64], p: f64) -> Result<Complex64> {
    Ok(phi_antisym(k, x, p)? * vandermonde(x))
}

/// Counts of orbit members by their flag of log-volumes.
pub fn orbit_histogram(k: &Signature, p: u64, cap: u64) -> Result<BTreeMap<Vec<i64>, u64>> {
    if !is_prime(p) {
        return Err(PlatError::NotPrime(p));
    }
    let size = nu_closed_form(k, p)?;
    if size.to_u64().map_or(true, |s| s > cap) {
        return Err(PlatError::Budget(format!(
            "orbit of {} has {} members, cap {}",
            k, size, cap
        )));
    }
    let mut hist = BTreeMap::new();
    for r in orbit_of_signature(k, p)? {
        *hist.entry(r.flag_log_volumes()).or_insert(0u64) += 1;
    }
    Ok(hist)
}

/// Σ_j lv_j·(exponent_j) for the volume-power integrand, as a complex exponent of p.
fn flag_exponent(lv: &[i64], lambda: &[Complex64]) -> Complex64 {
    let n = lv.len();
    let mut e = Complex64::new(0.0, 0.0);
    for j in 0..n - 1 {
        e += lv[j] as f64 * (1.0 + lambda[j] - lambda[j + 1]);
    }
    e += lv[n - 1] as f64 * (-(n as f64 - 1.0) / 2.0 + lambda[n - 1]);
    e
}

/// Volume-power integrand Π vol(R∩K^j)^{1+λ_j-λ_{j+1}} vol(R)^{-(n-1)/2+λ_n}.
pub fn flag_weight(r: &Lattice, lambda: &SpectralPoint) -> Complex64 {
    let lp = (r.p() as f64).ln();
    (flag_exponent(&r.flag_log_volumes(), &lambda.lambda) * lp).exp()
}

pub const DEFAULT_ORBIT_CAP: u64 = 2_000_000;

pub fn phi_orbit_average_capped(
    k: &Signature,
    lambda: &SpectralPoint,
    p: u64,
    cap: u64,
) -> Result<Complex64> {
    check_dims(k, lambda.n())?;
    let hist = orbit_histogram(k, p, cap)?;
    let lp = (p as f64).ln();
    let mut total = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    for (lv, c) in &hist {
        total += (flag_exponent(lv, &lambda.lambda) * lp).exp() * *c as f64;
        count += c;
    }
    ensure_finite(total / count as f64, "phi_orbit_average")
}

pub fn phi_orbit_average(k: &Signature, lambda: &SpectralPoint, p: u64) -> Result<Complex64> {
    phi_orbit_average_capped(k, lambda, p, DEFAULT_ORBIT_CAP)
}

/// φ_λ(k) by the closed form, falling back to the orbit average at coincident points.
pub fn phi_value(k: &Signature, lambda: &SpectralPoint, p: u64) -> Result<Complex64> {
    if k.k().iter().all(|x| *x == 0) {
        check_dims(k, lambda.n())?;
        return Ok(Complex64::new(1.0, 0.0));
    }
    match phi_macdonald(k, lambda, p as f64) {
        Err(PlatError::Coincident) => phi_orbit_average(k, lambda, p),
        other => other,
    }
}

/// Φ_λ(R, S) = φ_λ at the relative position of S with respect to R.
pub fn spherical_kernel(r: &Lattice, s: &Lattice, lambda: &SpectralPoint) -> Result<Complex64> {
    let k = r.relative_position(s)?;
    phi_value(&k, lambda, r.p())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BiinvariantFunction {
    pub values: BTreeMap<Signature, Complex64>,
}

impl BiinvariantFunction {
    pub fn delta(k: Signature) -> BiinvariantFunction {
        let mut values = BTreeMap::new();
        values.insert(k, Complex64::new(1.0, 0.0));
        BiinvariantFunction { values }
    }

    pub fn get(&self, k: &Signature) -> Complex64 {
        self.values.get(k).copied().unwrap_or_default()
    }
}

/// f̂(λ) = Σ ν(k) φ_{-λ}(k) f(k) at a real base p > 1 (closed form only).
pub fn spherical_transform(
    f: &BiinvariantFunction,
    lambda: &SpectralPoint,
    p: f64,
) -> Result<Complex64> {
    check_base(p)?;
    let neg = lambda.neg();
    let mut total = Complex64::new(0.0, 0.0);
    for (k, v) in &f.values {
        let phi = if k.k().iter().all(|x| *x == 0) {
            Complex64::new(1.0, 0.0)
        } else if p.fract() == 0.0 && is_prime(p as u64) {
            phi_value(k, &neg, p as u64)?
        } else {
            phi_macdonald(k, &neg, p)?
        };
        total += phi * nu_real(k, p) * v;
    }
    ensure_finite(total, "spherical_transform")
}
