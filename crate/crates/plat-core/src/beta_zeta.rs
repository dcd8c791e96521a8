//! Beta sums over Lat_n, their zeta degenerations and Gram-matrix positivity experiments.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::enumeration::{for_each_between, nu_real, BoxSpec};
use crate::error::{PlatError, Result};
use crate::exact_arith::{ensure_finite, Base, HalfPowerScalar};
use crate::lattice::{delta_of_signature, is_prime, kernel_k, kernel_k_exact, Lattice, Signature};
use crate::report::VerificationReport;
use crate::spherical::{spherical_transform, BiinvariantFunction, SpectralPoint};

const POLE_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

impl BetaParams {
    pub fn new(alpha: Vec<Complex64>, beta: Vec<Complex64>) -> Result<BetaParams> {
        if alpha.len() != beta.len() || alpha.is_empty() {
            return Err(PlatError::Mismatch(
                "alpha and beta need equal nonzero length".into(),
            ));
        }
        Ok(BetaParams { alpha, beta })
    }

    pub fn real(alpha: &[f64], beta: &[f64]) -> Result<BetaParams> {
        let c = |v: &[f64]| v.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        BetaParams::new(c(alpha), c(beta))
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Parameters of the (n-1)-dimensional sum in the recursion: last entries dropped, all α shifted by -1.
    pub fn reduced(&self) -> Option<BetaParams> {
        let n = self.n();
        if n < 2 {
            return None;
        }
        Some(BetaParams {
            alpha: self.alpha[..n - 1].iter().map(|a| a - 1.0).collect(),
            beta: self.beta[..n - 1].to_vec(),
        })
    }

    fn diff(v: &[Complex64], j: usize) -> Complex64 {
        v[j] - v.get(j + 1).copied().unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ok: bool,
    /// -(Re β_j + j - 1), must be positive.
    pub beta_margins: Vec<f64>,
    /// Re α_j + Re β_j - n + j, must be positive.
    pub alpha_beta_margins: Vec<f64>,
    pub margin: f64,
}

pub fn convergence_check(params: &BetaParams) -> ConvergenceReport {
    let n = params.n() as f64;
    let beta_margins: Vec<f64> = params
        .beta
        .iter()
        .enumerate()
        .map(|(j, b)| -(b.re + j as f64))
        .collect();
    let alpha_beta_margins: Vec<f64> = params
        .alpha
        .iter()
        .zip(&params.beta)
        .enumerate()
        .map(|(j, (a, b))| a.re + b.re - n + j as f64 + 1.0)
        .collect();
    let margin = beta_margins
        .iter()
        .chain(&alpha_beta_margins)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    ConvergenceReport {
        ok: margin > 0.0,
        beta_margins,
        alpha_beta_margins,
        margin,
    }
}

fn cpow(p: f64, z: Complex64) -> Complex64 {
    (z * p.ln()).exp()
}

fn one_minus(p: f64, z: Complex64, what: &str) -> Result<Complex64> {
    let d = Complex64::new(1.0, 0.0) - cpow(p, z);
    if d.norm() < POLE_TOL {
        return Err(PlatError::Pole(format!("{} at p^({})", what, z)));
    }
    Ok(d)
}

/// Π_j (1-p^{-(α_j-n+j)}) / ((1-p^{β_j+j-1})(1-p^{-(α_j+β_j-n+j)})).
pub fn beta_closed_form(params: &BetaParams, p: f64) -> Result<Complex64> {
    let n = params.n() as f64;
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..params.n() {
        let jj = j as f64 + 1.0;
        let (a, b) = (params.alpha[j], params.beta[j]);
        let num = Complex64::new(1.0, 0.0) - cpow(p, -(a - n + jj));
        v *= num
            / (one_minus(p, b + jj - 1.0, "beta")?
                * one_minus(p, -(a + b - n + jj), "alpha+beta")?);
    }
    ensure_finite(v, "beta_closed_form")
}

fn rpow(p: u64, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(p));
    if e >= 0 {
        num_traits::pow(b, e as usize)
    } else {
        num_traits::pow(b.recip(), (-e) as usize)
    }
}

fn exact_one_minus(p: u64, e: i64) -> Result<BigRational> {
    let d = BigRational::one() - rpow(p, e);
    if d.is_zero() {
        return Err(PlatError::Pole(format!("1 - p^{}", e)));
    }
    Ok(d)
}

/// The closed form at integer parameters in exact rational arithmetic.
pub fn beta_closed_exact(alpha: &[i64], beta: &[i64], p: u64) -> Result<BigRational> {
    if alpha.len() != beta.len() {
        return Err(PlatError::Mismatch("alpha and beta".into()));
    }
    let n = alpha.len() as i64;
    let mut v = BigRational::one();
    for j in 0..alpha.len() {
        let jj = j as i64 + 1;
        let (a, b) = (alpha[j], beta[j]);
        v *= BigRational::one() - rpow(p, -(a - n + jj));
        v /= exact_one_minus(p, b + jj - 1)?;
        v /= exact_one_minus(p, -(a + b - n + jj))?;
    }
    Ok(v)
}

/// σ_n = (1-p^{-α_n}) / ((1-p^{-α_n-β_n})(1-p^{β_n+n-1})).
pub fn sigma_n(params: &BetaParams, p: f64) -> Result<Complex64> {
    let n = params.n();
    let (a, b) = (params.alpha[n - 1], params.beta[n - 1]);
    let num = Complex64::new(1.0, 0.0) - cpow(p, -a);
    Ok(num / (one_minus(p, -a - b, "sigma")? * one_minus(p, b + n as f64 - 1.0, "sigma")?))
}

pub fn sigma_n_exact(alpha: &[i64], beta: &[i64], p: u64) -> Result<BigRational> {
    let n = alpha.len();
    let (a, b) = (alpha[n - 1], beta[n - 1]);
    Ok((BigRational::one() - rpow(p, -a))
        / (exact_one_minus(p, -a - b)? * exact_one_minus(p, b + n as i64 - 1)?))
}

/// Exact check that the closed forms satisfy F_n = σ_n F_{n-1}(α-1; β).
pub fn recursion_closed_exact(alpha: &[i64], beta: &[i64], p: u64) -> Result<bool> {
    let n = alpha.len();
    let lhs = beta_closed_exact(alpha, beta, p)?;
    let reduced: Vec<i64> = alpha[..n - 1].iter().map(|a| a - 1).collect();
    let rhs = sigma_n_exact(alpha, beta, p)? * beta_closed_exact(&reduced, &beta[..n - 1], p)?;
    Ok(lhs == rhs)
}

/// Per-lattice data of the beta sum, aggregated over a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaHistogram {
    pub p: u64,
    pub n: usize,
    pub radius: i64,
    /// (shell, log vol(R∩K^j), log vol(R∩O^j)) -> count
    pub cells: BTreeMap<(u32, Vec<i64>, Vec<i64>), u64>,
    pub lattices: u64,
}

/// Shell index max(k_1, -k_n) of a lattice: the least b with p^b O ⊆ R ⊆ p^{-b} O.
pub fn shell_of(r: &Lattice) -> Result<u32> {
    let k = r.elementary_divisors()?;
    Ok(k.k()[0].max(-k.k()[k.n() - 1]).max(0) as u32)
}

pub fn beta_histogram(b: &BoxSpec) -> Result<BetaHistogram> {
    let (p, n) = (b.p, b.n);
    let mut cells = BTreeMap::new();
    let mut lattices = 0u64;
    let mut err = None;
    // log vol(R_j ∩ O^j) for the current prefix of each length j < n
    let mut cache: Vec<Option<(Lattice, i64)>> = vec![None; n];
    let standard: Vec<Lattice> = (0..=n).map(|j| Lattice::standard(p, j.max(1))).collect();
    for_each_between(p, n, -b.radius, b.radius, |r| {
        if err.is_some() {
            return;
        }
        let mut step = || -> Result<()> {
            let lv = r.flag_log_volumes();
            let mut lc = Vec::with_capacity(n);
            for j in 1..=n {
                let t = if j == n { r.clone() } else { r.truncate(j) };
                if j < n {
                    if let Some((l, v)) = &cache[j] {
                        if *l == t {
                            lc.push(*v);
                            continue;
                        }
                    }
                }
                let v = t.log_volume() - t.sum(&standard[j])?.log_volume();
                if j < n {
                    cache[j] = Some((t, v));
                }
                lc.push(v);
            }
            *cells.entry((shell_of(r)?, lv, lc)).or_insert(0u64) += 1;
            lattices += 1;
            Ok(())
        };
        if let Err(e) = step() {
            err = Some(e);
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(BetaHistogram {
        p,
        n,
        radius: b.radius,
        cells,
        lattices,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaTruncation {
    pub value: Complex64,
    pub shells: Vec<Complex64>,
    /// Wynn-epsilon extrapolation of the partial sums over shells.
    pub accelerated: Complex64,
    pub tail_estimate: f64,
    pub decay_ratios: Vec<f64>,
    pub decay_ok: bool,
    pub lattices: u64,
}

/// Wynn's epsilon algorithm; returns the deepest even-column entry.
pub fn wynn_epsilon(partial: &[Complex64]) -> Complex64 {
    let m = partial.len();
    if m < 3 {
        return partial.last().copied().unwrap_or_default();
    }
    let mut prev = vec![Complex64::new(0.0, 0.0); m + 1];
    let mut cur: Vec<Complex64> = partial.to_vec();
    let mut best = *partial.last().unwrap();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d.norm() <= 1e-300 || d.norm() <= 1e-15 * cur[i].norm() {
                return if col % 2 == 0 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + d.inv());
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            best = *cur.last().unwrap();
        }
    }
    best
}

fn beta_exponent(params: &BetaParams, lv: &[i64], lc: &[i64]) -> Complex64 {
    let mut e = Complex64::new(0.0, 0.0);
    for j in 0..lv.len() {
        e += lv[j] as f64 * BetaParams::diff(&params.beta, j)
            + lc[j] as f64 * BetaParams::diff(&params.alpha, j);
    }
    e
}

pub fn beta_truncated_from(h: &BetaHistogram, params: &BetaParams) -> Result<BetaTruncation> {
    if params.n() != h.n {
        return Err(PlatError::Mismatch(
            "parameter length vs box dimension".into(),
        ));
    }
    let conv = convergence_check(params);
    if !conv.ok {
        return Err(PlatError::Convergence(format!("margin {}", conv.margin)));
    }
    let p = h.p as f64;
    let mut shells = vec![Complex64::new(0.0, 0.0); h.radius as usize + 1];
    for ((shell, lv, lc), c) in &h.cells {
        shells[*shell as usize] += cpow(p, beta_exponent(params, lv, lc)) * *c as f64;
    }
    let mut partial = Vec::with_capacity(shells.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for s in &shells {
        acc += s;
        partial.push(acc);
    }
    let accelerated = wynn_epsilon(&partial);
    let decay_ratios: Vec<f64> = (1..shells.len())
        .map(|b| shells[b].norm() / shells[b - 1].norm())
        .collect();
    let limit = p.powf(-0.5);
    let decay_ok = decay_ratios
        .iter()
        .enumerate()
        .all(|(i, r)| i + 1 <= 2 || *r < limit);
    Ok(BetaTruncation {
        value: ensure_finite(acc, "beta_truncated")?,
        tail_estimate: (accelerated - acc).norm(),
        accelerated,
        shells,
        decay_ratios,
        decay_ok,
        lattices: h.lattices,
    })
}

pub fn beta_truncated(params: &BetaParams, b: &BoxSpec) -> Result<BetaTruncation> {
    let conv = convergence_check(params);
    if !conv.ok {
        return Err(PlatError::Convergence(format!("margin {}", conv.margin)));
    }
    beta_truncated_from(&beta_histogram(b)?, params)
}

/// Truncated F_n against σ_n times truncated F_{n-1}(α-1; β), boxes of equal radius.
pub fn recursion_check(params: &BetaParams, b: &BoxSpec, tol: f64) -> Result<VerificationReport> {
    let p = b.p as f64;
    let lhs = beta_truncated(params, b)?;
    let sigma = sigma_n(params, p)?;
    let rhs = match params.reduced() {
        None => sigma,
        Some(red) => sigma * beta_truncated(&red, &BoxSpec::new(b.n - 1, b.p, b.radius)?)?.value,
    };
    Ok(
        VerificationReport::compare("beta-recursion", lhs.value, rhs, tol)
            .param("n", b.n)
            .param("p", b.p)
            .param("box", b.radius)
            .param(
                "alpha",
                format!(
                    "{:?}",
                    params.alpha.iter().map(|a| a.re).collect::<Vec<_>>()
                ),
            )
            .param(
                "beta",
                format!("{:?}", params.beta.iter().map(|a| a.re).collect::<Vec<_>>()),
            ),
    )
}

/// Π (1-p^{-(α-n+j)}) / ((1-p^{-(α-n+1)/2+λ_j})(1-p^{-(α-n+1)/2-λ_j})).
pub fn delta_transform_closed(alpha: f64, lambda: &SpectralPoint, p: f64) -> Result<Complex64> {
    let n = lambda.n() as f64;
    let h = (alpha - n + 1.0) / 2.0;
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..lambda.n() {
        let num = 1.0 - p.powf(-(alpha - n + j as f64 + 1.0));
        let l = lambda.lambda[j];
        v *= num
            / (one_minus(p, -h + l, "delta transform")? * one_minus(p, -h - l, "delta transform")?);
    }
    ensure_finite(v, "delta_transform_closed")
}

/// Spherical transform of Δ_α restricted to signatures with |k_j| ≤ radius.
pub fn delta_transform_truncated(
    alpha: f64,
    lambda: &SpectralPoint,
    p: f64,
    radius: i64,
) -> Result<Complex64> {
    let mut f = BiinvariantFunction::default();
    for k in Signature::all_in_range(lambda.n(), -radius, radius) {
        let v = delta_of_signature(&k, alpha, p);
        f.values.insert(k, Complex64::new(v, 0.0));
    }
    spherical_transform(&f, lambda, p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamagawaResult {
    pub truncated: Complex64,
    /// Π (1 - p^{-(γ_j-n+j)})^{-1}
    pub product: Complex64,
    /// Π (1 - p^{-γ_j-n-j})^{-1}
    pub product_alt: Complex64,
    pub selected: String,
    pub lattices: u64,
}

/// Sum over R ⊆ O^n with p^{2B} O^n ⊆ R of Π vol(R∩K^j)^{γ_j-γ_{j+1}}, against both product forms.
pub fn tamagawa(gamma: &[Complex64], p: u64, radius: i64) -> Result<TamagawaResult> {
    let n = gamma.len();
    if n == 0 {
        return Err(PlatError::Domain("empty gamma".into()));
    }
    for (j, g) in gamma.iter().enumerate() {
        if g.re - n as f64 + j as f64 + 1.0 <= 0.0 {
            return Err(PlatError::Convergence(format!(
                "Re gamma_{} - n + {} <= 0",
                j + 1,
                j + 1
            )));
        }
    }
    let pf = p as f64;
    let mut hist: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut lattices = 0u64;
    for_each_between(p, n, 0, 2 * radius, |r| {
        *hist.entry(r.flag_log_volumes()).or_insert(0) += 1;
        lattices += 1;
    })?;
    let mut truncated = Complex64::new(0.0, 0.0);
    for (lv, c) in &hist {
        let mut e = Complex64::new(0.0, 0.0);
        for j in 0..n {
            e += lv[j] as f64 * BetaParams::diff(gamma, j);
        }
        truncated += cpow(pf, e) * *c as f64;
    }
    let mut product = Complex64::new(1.0, 0.0);
    let mut product_alt = Complex64::new(1.0, 0.0);
    for (j, g) in gamma.iter().enumerate() {
        let jj = j as f64 + 1.0;
        product /= one_minus(pf, -(g - n as f64 + jj), "tamagawa")?;
        product_alt /= one_minus(pf, -g - n as f64 - jj, "tamagawa")?;
    }
    let selected = if (truncated - product).norm() <= (truncated - product_alt).norm() {
        "derived"
    } else {
        "printed"
    };
    Ok(TamagawaResult {
        truncated,
        product,
        product_alt,
        selected: selected.into(),
        lattices,
    })
}

/// Primes up to `limit` by sieve.
pub fn primes_up_to(limit: usize) -> Vec<u64> {
    let mut sieve = vec![true; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if sieve[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                sieve[j] = false;
                j += i;
            }
        }
    }
    out
}

/// ζ(s) for real s > 1 by Euler–Maclaurin summation.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(PlatError::Domain(format!("zeta needs s > 1, got {}", s)));
    }
    const B2K: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let nn = 20.0f64;
    let mut sum: f64 = (1..20).map(|k| (k as f64).powf(-s)).sum();
    sum += nn.powf(1.0 - s) / (s - 1.0) + 0.5 * nn.powf(-s);
    let mut fact = 1.0;
    let mut rising = s;
    for (i, b) in B2K.iter().enumerate() {
        let k = (i + 1) as f64;
        fact *= (2.0 * k - 1.0) * (2.0 * k);
        sum += b / fact * rising * nn.powf(-s - 2.0 * k + 1.0);
        rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
    }
    Ok(sum)
}

fn zeta_conditions(alpha: &[f64], beta: &[f64]) -> Result<()> {
    let n = alpha.len() as f64;
    for j in 0..alpha.len() {
        let jj = j as f64 + 1.0;
        if !(alpha[j] - n + 1.0 > 1.0 && alpha[j] + beta[j] - n + jj > 1.0 && beta[j] + jj < 0.0) {
            return Err(PlatError::Convergence(format!(
                "rational zeta inequalities fail at j={}",
                j + 1
            )));
        }
    }
    Ok(())
}

fn as_ints(v: &[f64]) -> Option<Vec<i64>> {
    v.iter()
        .map(|x| {
            if x.fract() == 0.0 && x.abs() < 1e9 {
                Some(*x as i64)
            } else {
                None
            }
        })
        .collect()
}

/// Euler factor of ζ(-(β_j+j-1)) ζ(α_j+β_j-n+j) / ζ(α_j-n+j) at p, exactly.
pub fn euler_factor_exact(alpha: &[i64], beta: &[i64], p: u64) -> Result<BigRational> {
    let n = alpha.len() as i64;
    let local = |s: i64| -> Result<BigRational> { Ok(exact_one_minus(p, -s)?.recip()) };
    let mut v = BigRational::one();
    for j in 0..alpha.len() {
        let jj = j as i64 + 1;
        v *= local(-(beta[j] + jj - 1))? * local(alpha[j] + beta[j] - n + jj)?
            / local(alpha[j] - n + jj)?;
    }
    Ok(v)
}

/// Checks the multi-prime assembly behind the rational zeta identity.
pub fn rational_zeta_check(
    alpha: &[f64],
    beta: &[f64],
    primes: &[u64],
    radius: i64,
    tol: f64,
) -> Result<Vec<VerificationReport>> {
    if alpha.len() != beta.len() || alpha.is_empty() {
        return Err(PlatError::Mismatch("alpha and beta".into()));
    }
    for p in primes {
        if !is_prime(*p) {
            return Err(PlatError::NotPrime(*p));
        }
    }
    zeta_conditions(alpha, beta)?;
    let n = alpha.len();
    let params = BetaParams::real(alpha, beta)?;
    let mut out = Vec::new();
    let ints = as_ints(alpha).zip(as_ints(beta));
    for p in primes {
        let r = match &ints {
            Some((a, b)) => {
                let local = beta_closed_exact(a, b, *p)?;
                let euler = euler_factor_exact(a, b, *p)?;
                VerificationReport::exact(
                    "zeta-euler-factor",
                    local == euler,
                    local.to_f64().unwrap_or(f64::NAN),
                    euler.to_f64().unwrap_or(f64::NAN),
                )
            }
            None => {
                let local = beta_closed_form(&params, *p as f64)?;
                let mut euler = Complex64::new(1.0, 0.0);
                let nf = n as f64;
                for j in 0..n {
                    let jj = j as f64 + 1.0;
                    let z = |s: f64| 1.0 / (1.0 - (*p as f64).powf(-s));
                    euler *= z(-(beta[j] + jj - 1.0)) * z(alpha[j] + beta[j] - nf + jj)
                        / z(alpha[j] - nf + jj);
                }
                VerificationReport::compare("zeta-euler-factor", local, euler, 1e-12)
            }
        };
        out.push(r.param("p", *p).param("n", n));
    }
    let mut partial = Complex64::new(1.0, 0.0);
    for p in primes {
        partial *= beta_closed_form(&params, *p as f64)?;
    }
    if n == 1 {
        let a = alpha[0];
        let b = beta[0];
        // global lattices r Z with r supported on the listed primes, by shells max |v_p(r)|
        let mut shells = vec![Complex64::new(0.0, 0.0); radius as usize + 1];
        let mut exps = vec![-radius; primes.len()];
        let mut exact_sum = BigRational::zero();
        let ints1 = ints.as_ref().map(|(x, y)| (x[0], y[0]));
        loop {
            let mut covol = 1.0f64;
            let mut covol_int = 1.0f64;
            let mut covol_q = BigRational::one();
            let mut covol_int_q = BigRational::one();
            for (p, e) in primes.iter().zip(&exps) {
                covol *= (*p as f64).powi(*e as i32);
                covol_int *= (*p as f64).powi((*e).max(0) as i32);
                covol_q *= rpow(*p, *e);
                covol_int_q *= rpow(*p, (*e).max(0));
            }
            let term = covol.powf(-b) * covol_int.powf(-a);
            let shell = exps.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0) as usize;
            shells[shell] += term;
            if let Some((ai, bi)) = ints1 {
                exact_sum += rational_pow(&covol_q, -bi) * rational_pow(&covol_int_q, -ai);
            }
            let mut i = 0;
            loop {
                if i == exps.len() {
                    break;
                }
                exps[i] += 1;
                if exps[i] <= radius {
                    break;
                }
                exps[i] = -radius;
                i += 1;
            }
            if i == exps.len() {
                break;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let partial_sums: Vec<Complex64> = shells
            .iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect();
        let raw = acc;
        let accelerated = wynn_epsilon(&partial_sums);
        out.push(
            VerificationReport::compare("zeta-assembly", accelerated, partial, tol)
                .param("primes", format!("{:?}", primes))
                .param("box", radius)
                .with_meta("raw_sum", raw.re)
                .with_meta("raw_rel_err", (raw - partial).norm() / partial.norm()),
        );
        if let Some((ai, bi)) = ints1 {
            // the bijection with tuples of local lattices, at equal truncation
            let mut local_product = BigRational::one();
            for p in primes {
                let mut s = BigRational::zero();
                for k in -radius..=radius {
                    s += rational_pow(&rpow(*p, -k), bi) * rational_pow(&rpow(*p, -k.max(0)), ai);
                }
                local_product *= s;
            }
            out.push(
                VerificationReport::exact(
                    "zeta-bijection",
                    exact_sum == local_product,
                    exact_sum.to_f64().unwrap_or(f64::NAN),
                    local_product.to_f64().unwrap_or(f64::NAN),
                )
                .param("primes", format!("{:?}", primes))
                .param("box", radius),
            );
        }
    }
    Ok(out)
}

fn rational_pow(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

/// Π_j ζ(-(β_j+j-1)) ζ(α_j+β_j-n+j) / ζ(α_j-n+j) by the Euler product over primes ≤ limit,
/// and by direct ζ evaluation.
pub fn zeta_full_product(alpha: &[f64], beta: &[f64], limit: usize) -> Result<(f64, f64)> {
    zeta_conditions(alpha, beta)?;
    let params = BetaParams::real(alpha, beta)?;
    let mut log_prod = 0.0;
    for p in primes_up_to(limit) {
        log_prod += beta_closed_form(&params, p as f64)?.re.ln();
    }
    let n = alpha.len() as f64;
    let mut direct = 1.0;
    for j in 0..alpha.len() {
        let jj = j as f64 + 1.0;
        direct *= riemann_zeta(-(beta[j] + jj - 1.0))? * riemann_zeta(alpha[j] + beta[j] - n + jj)?
            / riemann_zeta(alpha[j] - n + jj)?;
    }
    Ok((log_prod.exp(), direct))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramExperiment {
    pub lattices: Vec<Lattice>,
    pub alpha: f64,
    pub matrix: Vec<Vec<f64>>,
    #[serde(skip)]
    pub exact: Option<Vec<Vec<HalfPowerScalar>>>,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
}

impl GramExperiment {
    pub fn symmetric_unit_diagonal(&self) -> bool {
        let m = &self.matrix;
        (0..m.len()).all(|i| m[i][i] == 1.0 && (0..m.len()).all(|j| m[i][j] == m[j][i]))
    }
}

pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    SymmetricEigen::new(mat)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn integer_alpha(alpha: f64) -> Option<i64> {
    if alpha.fract() == 0.0 && alpha.abs() <= 1e6 {
        Some(alpha as i64)
    } else {
        None
    }
}

pub fn gram_matrix(lattices: &[Lattice], alpha: f64, tol: f64) -> Result<GramExperiment> {
    if lattices.is_empty() {
        return Err(PlatError::Domain("empty lattice set".into()));
    }
    let m = lattices.len();
    let mut matrix = vec![vec![0.0; m]; m];
    let ia = integer_alpha(alpha);
    let mut exact = ia.map(|_| vec![vec![HalfPowerScalar::zero(Base::Symbolic); m]; m]);
    for i in 0..m {
        for j in i..m {
            let v = if i == j {
                1.0
            } else {
                kernel_k(&lattices[i], &lattices[j], alpha)?
            };
            matrix[i][j] = v;
            matrix[j][i] = v;
            if let (Some(a), Some(ex)) = (ia, exact.as_mut()) {
                let e = kernel_k_exact(&lattices[i], &lattices[j], a)?;
                ex[i][j] = e.clone();
                ex[j][i] = e;
            }
        }
    }
    Ok(GramExperiment {
        lattices: lattices.to_vec(),
        alpha,
        min_eigenvalue: min_eigenvalue(&matrix),
        matrix,
        exact,
        tolerance: tol,
    })
}

/// Exact positive semidefiniteness and rank of a symmetric matrix over Q(√p), by symmetric
/// elimination with diagonal pivoting.
pub fn exact_psd(m: &[Vec<HalfPowerScalar>], p: u64) -> Result<(bool, usize)> {
    let base = Base::integer(p)?;
    let mut a: Vec<Vec<HalfPowerScalar>> = m
        .iter()
        .map(|r| r.iter().map(|x| x.specialize(&base)).collect())
        .collect();
    let mut active: Vec<usize> = (0..a.len()).collect();
    let mut rank = 0;
    while !active.is_empty() {
        let mut piv = None;
        for &i in &active {
            match a[i][i].signum() {
                Some(-1) => return Ok((false, rank)),
                Some(1) => {
                    if piv.is_none() {
                        piv = Some(i);
                    }
                }
                _ => {}
            }
        }
        let k = match piv {
            Some(k) => k,
            None => {
                // all remaining diagonal entries vanish, so PSD forces the block to vanish
                let zero_block = active
                    .iter()
                    .all(|&i| active.iter().all(|&j| a[i][j].is_zero()));
                return Ok((zero_block, rank));
            }
        };
        rank += 1;
        active.retain(|&i| i != k);
        let inv = a[k][k].inverse()?;
        let row_k: Vec<HalfPowerScalar> = a[k].clone();
        for &i in &active {
            if row_k[i].is_zero() {
                continue;
            }
            let f = row_k[i].try_mul(&inv)?;
            for &j in &active {
                if !row_k[j].is_zero() {
                    let d = f.try_mul(&row_k[j])?;
                    a[i][j] = a[i][j].try_sub(&d)?;
                }
            }
        }
    }
    Ok((true, rank))
}

/// Whether α lies in the set where the kernel is claimed positive definite.
pub fn alpha_allowed(alpha: f64, n: usize) -> bool {
    let top = n as f64 - 1.0;
    alpha > top || (alpha >= 0.0 && alpha.fract() == 0.0 && alpha <= top)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdScanConfig {
    pub tol: f64,
    pub witness_tol: f64,
    pub full_box_cap: usize,
    pub subset_size: usize,
    pub subset_trials: usize,
    pub seed: u64,
}

impl Default for PsdScanConfig {
    fn default() -> Self {
        PsdScanConfig {
            tol: 1e-9,
            witness_tol: 1e-6,
            full_box_cap: 800,
            subset_size: 12,
            subset_trials: 20000,
            seed: 7,
        }
    }
}

/// Minimum Gram eigenvalue on the box for each α; for α outside the allowed set, searches
/// for a sub-collection with a clearly negative eigenvalue.
pub fn psd_scan(
    n: usize,
    p: u64,
    alphas: &[f64],
    radius: i64,
    cfg: &PsdScanConfig,
) -> Result<Vec<VerificationReport>> {
    let bx = BoxSpec::new(n, p, radius)?;
    let mut lat = Vec::new();
    for_each_between(p, n, -radius, radius, |r| lat.push(r.clone()))?;
    let mut out = Vec::new();
    for &alpha in alphas {
        let base = |claim: &str, r: VerificationReport| {
            r.param("n", n)
                .param("p", p)
                .param("alpha", alpha)
                .param("box", bx.radius)
                .with_meta("search", claim.to_string())
        };
        if alpha_allowed(alpha, n) {
            let min = if lat.len() <= cfg.full_box_cap.max(200) {
                gram_matrix(&lat, alpha, cfg.tol)?.min_eigenvalue
            } else {
                return Err(PlatError::Budget(format!("box has {} lattices", lat.len())));
            };
            let r = VerificationReport::compare_real("psd-min-eigenvalue", min, 0.0, 0.0);
            let mut r = base("full box", r);
            r.pass = min >= -cfg.tol;
            r.tolerance = cfg.tol;
            out.push(r);
            continue;
        }
        let (witness, min, stage) = find_witness(n, p, alpha, cfg)?;
        let mut r = base(
            &stage,
            VerificationReport::compare_real("psd-witness", min, 0.0, 0.0),
        );
        r.pass = witness.is_some();
        r.tolerance = cfg.witness_tol;
        if let Some(w) = witness {
            r = r.with_meta(
                "witness",
                w.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            );
        } else {
            r = r.with_meta("verdict", "inconclusive");
        }
        out.push(r);
    }
    Ok(out)
}

/// Witness search: full boxes B=1 and B=2 (when small enough), then random subsets of the B=2 box.
#[allow(clippy::type_complexity)]
pub fn find_witness(
    n: usize,
    p: u64,
    alpha: f64,
    cfg: &PsdScanConfig,
) -> Result<(Option<Vec<Lattice>>, f64, String)> {
    let mut best = f64::INFINITY;
    let mut pool = Vec::new();
    for radius in 1..=2 {
        pool.clear();
        for_each_between(p, n, -radius, radius, |r| pool.push(r.clone()))?;
        if pool.len() > cfg.full_box_cap {
            continue;
        }
        let g = gram_matrix(&pool, alpha, cfg.tol)?;
        best = best.min(g.min_eigenvalue);
        if g.min_eigenvalue < -cfg.witness_tol {
            return Ok((
                Some(pool),
                g.min_eigenvalue,
                format!("full box B={}", radius),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let size = cfg.subset_size.min(pool.len());
    for _ in 0..cfg.subset_trials {
        let idx = sample(&mut rng, pool.len(), size);
        let subset: Vec<Lattice> = idx.iter().map(|i| pool[i].clone()).collect();
        let g = gram_matrix(&subset, alpha, cfg.tol)?;
        best = best.min(g.min_eigenvalue);
        if g.min_eigenvalue < -cfg.witness_tol {
            return Ok((
                Some(subset),
                g.min_eigenvalue,
                format!("random {}-subset of B=2", size),
            ));
        }
    }
    Ok((None, best, "exhausted".into()))
}

/// ν(k) evaluated for the shell counts of the signature box, as a cross-check of box sizes.
pub fn box_size_real(n: usize, p: f64, radius: i64) -> f64 {
    Signature::all_in_range(n, -radius, radius)
        .iter()
        .map(|k| nu_real(k, p))
        .sum()
}

pub fn abs_rel(a: &BigRational, b: &BigRational) -> f64 {
    if b.is_zero() {
        return a.abs().to_f64().unwrap_or(f64::NAN);
    }
    ((a - b) / b).abs().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn convergence_examples() {
        assert!(convergence_check(&BetaParams::real(&[3.0], &[-1.0]).unwrap()).ok);
        assert!(!convergence_check(&BetaParams::real(&[3.0], &[0.0]).unwrap()).ok);
        assert!(convergence_check(&BetaParams::real(&[5.0, 5.0], &[-1.0, -2.0]).unwrap()).ok);
    }

    #[test]
    fn closed_forms() {
        let v = beta_closed_form(&BetaParams::real(&[3.0], &[-1.0]).unwrap(), 2.0).unwrap();
        assert!((v.re - 7.0 / 3.0).abs() < 1e-14);
        assert_eq!(
            beta_closed_exact(&[3], &[-1], 2).unwrap(),
            BigRational::new(7.into(), 3.into())
        );
        assert_eq!(
            beta_closed_exact(&[5, 5], &[-1, -2], 2).unwrap(),
            BigRational::new(465.into(), 98.into())
        );
        assert!(matches!(
            beta_closed_form(&BetaParams::real(&[3.0], &[0.0]).unwrap(), 2.0),
            Err(PlatError::Pole(_))
        ));
        for (a, b) in [
            (vec![5, 5], vec![-1, -2]),
            (vec![9, 9, 9], vec![-2, -3, -4]),
            (vec![2], vec![-3]),
        ] {
            if a.len() > 1 {
                assert!(recursion_closed_exact(&a, &b, 3).unwrap());
            }
        }
        let d = delta_transform_closed(2.0, &SpectralPoint::real(&[0.0]), 2.0).unwrap();
        assert!((d.re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn truncated_small() {
        let t = beta_truncated(
            &BetaParams::real(&[3.0], &[-1.0]).unwrap(),
            &BoxSpec::new(1, 2, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(t.value, c(1.0));
        let t = beta_truncated(
            &BetaParams::real(&[3.0], &[-1.0]).unwrap(),
            &BoxSpec::new(1, 2, 6).unwrap(),
        )
        .unwrap();
        assert!((t.accelerated.re - 7.0 / 3.0).abs() < 1e-4 * 7.0 / 3.0);
        assert!((t.value.re - 7.0 / 3.0).abs() > 1e-3);
        assert!(beta_truncated(
            &BetaParams::real(&[3.0], &[0.0]).unwrap(),
            &BoxSpec::new(1, 2, 2).unwrap()
        )
        .is_err());
    }

    #[test]
    fn tamagawa_n1() {
        let t = tamagawa(&[c(2.0)], 2, 10).unwrap();
        assert!((t.product.re - 4.0 / 3.0).abs() < 1e-14);
        assert!((t.truncated.re - 4.0 / 3.0).abs() < 1e-5);
        assert_eq!(t.selected, "derived");
    }

    #[test]
    fn zeta_values() {
        let z2 = riemann_zeta(2.0).unwrap();
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        let z4 = riemann_zeta(4.0).unwrap();
        assert!((z4 - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
        let f = euler_factor_exact(&[4], &[-2], 2).unwrap();
        assert_eq!(
            f,
            BigRational::new(15.into(), 16.into())
                / (BigRational::new(3.into(), 4.into()) * BigRational::new(3.into(), 4.into()))
        );
        assert_eq!(primes_up_to(20), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn gram_examples() {
        let l = |k: i64| Lattice::scalar(2, 1, k);
        let g = gram_matrix(&[l(0), l(1), l(-1)], 1.0, 1e-9).unwrap();
        let a = 2f64.powf(-0.5);
        assert!((g.matrix[0][1] - a).abs() < 1e-15 && (g.matrix[1][2] - 0.5).abs() < 1e-15);
        assert!(g.min_eigenvalue > -1e-12 && g.symmetric_unit_diagonal());
        let g0 = gram_matrix(&[l(0), l(1), l(2)], 0.0, 1e-9).unwrap();
        assert!(g0.min_eigenvalue.abs() < 1e-12);
        assert_eq!(exact_psd(g0.exact.as_ref().unwrap(), 2).unwrap(), (true, 1));
        assert_eq!(
            gram_matrix(&[l(3)], 0.7, 1e-9).unwrap().matrix,
            vec![vec![1.0]]
        );
        assert!(
            alpha_allowed(1.0, 2)
                && alpha_allowed(1.5, 2)
                && !alpha_allowed(0.5, 2)
                && !alpha_allowed(-1.0, 2)
        );
    }
}
