//! Exact scalars of the form sum c_j p^{j/2} with rational c_j.
//!
//! Exponents are stored as integer half-steps: key `j` stands for `p^{j/2}`.
//! In symbolic mode `p` is an indeterminate, so the ring is Q[q, 1/q] with q^2 = p.
//! In concrete mode the base is a fixed rational `b > 1` and every term is folded
//! down to `c_0 + c_1 * sqrt(b)`, which makes the ring a field.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{PlatError, Result};

pub type ComplexValue = Complex64;

/// Fails if either part of `z` is NaN or infinite.
pub fn ensure_finite(z: ComplexValue, what: &str) -> Result<ComplexValue> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(PlatError::NotFinite(what.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Base {
    Symbolic,
    Concrete(BigRational),
}

impl Base {
    pub fn concrete(b: BigRational) -> Result<Base> {
        if b <= BigRational::one() {
            return Err(PlatError::InvalidBase(b.to_string()));
        }
        Ok(Base::Concrete(b))
    }

    pub fn integer(p: u64) -> Result<Base> {
        Base::concrete(BigRational::from_integer(BigInt::from(p)))
    }

    /// Exact square root of the base when it is a rational square.
    fn rational_sqrt(&self) -> Option<BigRational> {
        match self {
            Base::Symbolic => None,
            Base::Concrete(b) => {
                let n = b.numer().sqrt();
                let d = b.denom().sqrt();
                if &(&n * &n) == b.numer() && &(&d * &d) == b.denom() {
                    Some(BigRational::new(n, d))
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfPowerScalar {
    base: Base,
    terms: BTreeMap<i64, BigRational>,
}

fn rat_pow(b: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(b.clone(), e as usize)
    } else {
        num_traits::pow(b.recip(), (-e) as usize)
    }
}

impl HalfPowerScalar {
    pub fn zero(base: Base) -> Self {
        HalfPowerScalar {
            base,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(base: Base) -> Self {
        Self::from_rational(BigRational::one(), base)
    }

    pub fn from_rational(c: BigRational, base: Base) -> Self {
        Self::monomial(c, 0, base)
    }

    pub fn from_int(c: i64, base: Base) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(c)), base)
    }

    /// `c * p^{half_exp/2}`.
    pub fn monomial(c: BigRational, half_exp: i64, base: Base) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(half_exp, c);
        Self::normalized(base, terms)
    }

    /// `p^{half_exp/2}`.
    pub fn p_half_pow(half_exp: i64, base: Base) -> Self {
        Self::monomial(BigRational::one(), half_exp, base)
    }

    fn normalized(base: Base, raw: BTreeMap<i64, BigRational>) -> Self {
        let mut terms: BTreeMap<i64, BigRational> = BTreeMap::new();
        match &base {
            Base::Symbolic => {
                for (j, c) in raw {
                    if !c.is_zero() {
                        terms.insert(j, c);
                    }
                }
            }
            Base::Concrete(b) => {
                let root = base.rational_sqrt();
                for (j, c) in raw {
                    if c.is_zero() {
                        continue;
                    }
                    let (key, val) = match &root {
                        Some(r) => (0, c * rat_pow(r, j)),
                        None => {
                            let half = j.rem_euclid(2);
                            (half, c * rat_pow(b, (j - half) / 2))
                        }
                    };
                    *terms.entry(key).or_insert_with(BigRational::zero) += val;
                }
                terms.retain(|_, c| !c.is_zero());
            }
        }
        HalfPowerScalar { base, terms }
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).map_or(false, |c| c.is_one())
    }

    /// Terms in ascending exponent order as (half-steps, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.terms.iter().map(|(j, c)| (*j, c))
    }

    /// The single (half-step exponent, coefficient) pair when this is a monomial.
    pub fn as_monomial(&self) -> Option<(i64, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(j, c)| (*j, c))
        } else {
            None
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.base == other.base {
            Ok(())
        } else {
            Err(PlatError::BaseMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut t = self.terms.clone();
        for (j, c) in &other.terms {
            *t.entry(*j).or_insert_with(BigRational::zero) += c;
        }
        Ok(Self::normalized(self.base.clone(), t))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut t: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                *t.entry(i + j).or_insert_with(BigRational::zero) += a * b;
            }
        }
        Ok(Self::normalized(self.base.clone(), t))
    }

    fn neg_ref(&self) -> Self {
        HalfPowerScalar {
            base: self.base.clone(),
            terms: self.terms.iter().map(|(j, c)| (*j, -c)).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let t = self.terms.iter().map(|(j, v)| (*j, v * c)).collect();
        Self::normalized(self.base.clone(), t)
    }

    /// Multiplies by `p^{half_exp/2}`.
    pub fn shift(&self, half_exp: i64) -> Self {
        let t = self
            .terms
            .iter()
            .map(|(j, v)| (j + half_exp, v.clone()))
            .collect();
        Self::normalized(self.base.clone(), t)
    }

    /// Multiplicative inverse: monomials in symbolic mode, anything nonzero in concrete mode.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(PlatError::Domain("inverse of zero".into()));
        }
        if let Some((j, c)) = self.as_monomial() {
            return Ok(Self::monomial(c.recip(), -j, self.base.clone()));
        }
        match &self.base {
            Base::Symbolic => Err(PlatError::Domain(
                "only monomials are invertible in symbolic mode".into(),
            )),
            Base::Concrete(b) => {
                // (a + c q)^{-1} = (a - c q) / (a^2 - c^2 b)
                let a = self
                    .terms
                    .get(&0)
                    .cloned()
                    .unwrap_or_else(BigRational::zero);
                let c = self
                    .terms
                    .get(&1)
                    .cloned()
                    .unwrap_or_else(BigRational::zero);
                let norm = &a * &a - &c * &c * b;
                let mut t = BTreeMap::new();
                t.insert(0, &a / &norm);
                t.insert(1, -(&c / &norm));
                Ok(Self::normalized(self.base.clone(), t))
            }
        }
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let mut base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one(self.base.clone());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&base)?;
            }
            base = base.try_mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Exact sign in concrete mode; `None` for symbolic values.
    pub fn signum(&self) -> Option<i32> {
        let b = match &self.base {
            Base::Concrete(b) => b,
            Base::Symbolic => return None,
        };
        let zero = BigRational::zero();
        let a = self.terms.get(&0).unwrap_or(&zero);
        let c = self.terms.get(&1).unwrap_or(&zero);
        let sa = sign_of(a);
        let sc = sign_of(c);
        if sc == 0 {
            return Some(sa);
        }
        if sa == 0 || sa == sc {
            return Some(sc);
        }
        // opposite signs; q is irrational here so the squares never tie
        if a * a > c * c * b {
            Some(sa)
        } else {
            Some(sc)
        }
    }

    /// Evaluates at a real base, summing in ascending exponent order.
    pub fn eval(&self, base: f64) -> Result<f64> {
        if !(base > 1.0) || !base.is_finite() {
            return Err(PlatError::InvalidBase(base.to_string()));
        }
        if let Base::Concrete(b) = &self.base {
            let bf = b.to_f64().unwrap_or(f64::NAN);
            if (bf - base).abs() > 1e-12 * bf {
                return Err(PlatError::BaseMismatch);
            }
        }
        let mut s = 0.0;
        for (j, c) in &self.terms {
            s += c.to_f64().unwrap_or(f64::NAN) * base.powf(*j as f64 / 2.0);
        }
        Ok(s)
    }

    /// Floating value of a concrete scalar.
    pub fn to_f64(&self) -> Result<f64> {
        match &self.base {
            Base::Concrete(b) => self.eval(b.to_f64().unwrap_or(f64::NAN)),
            Base::Symbolic => Err(PlatError::Domain(
                "symbolic scalar has no numeric value".into(),
            )),
        }
    }

    /// Re-reads a symbolic scalar at a concrete base.
    pub fn specialize(&self, base: &Base) -> Self {
        Self::normalized(base.clone(), self.terms.clone())
    }

    pub fn parse_with_base(s: &str, base: Base) -> Result<Self> {
        let sym: HalfPowerScalar = s.parse()?;
        Ok(sym.specialize(&base))
    }
}

fn sign_of(x: &BigRational) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl<'a> $tr<&'a HalfPowerScalar> for &'a HalfPowerScalar {
            type Output = HalfPowerScalar;
            fn $m(self, rhs: &'a HalfPowerScalar) -> HalfPowerScalar {
                self.$f(rhs).expect("base marker mismatch")
            }
        }
        impl $tr for HalfPowerScalar {
            type Output = HalfPowerScalar;
            fn $m(self, rhs: HalfPowerScalar) -> HalfPowerScalar {
                (&self).$f(&rhs).expect("base marker mismatch")
            }
        }
    };
}
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for HalfPowerScalar {
    type Output = HalfPowerScalar;
    fn neg(self) -> HalfPowerScalar {
        self.neg_ref()
    }
}

/// Exact product; errors on base mismatch.
pub fn hp_mul(a: &HalfPowerScalar, b: &HalfPowerScalar) -> Result<HalfPowerScalar> {
    a.try_mul(b)
}

pub fn hp_eval(a: &HalfPowerScalar, base: f64) -> Result<f64> {
    a.eval(base)
}

fn render_exp(j: i64) -> String {
    if j % 2 == 0 {
        let e = j / 2;
        if e == 1 {
            "p".to_string()
        } else if e > 1 {
            format!("p^{}", e)
        } else {
            format!("p^({})", e)
        }
    } else {
        format!("p^({}/2)", j)
    }
}

impl fmt::Display for HalfPowerScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in &self.terms {
            let neg = c.is_negative();
            let a = c.abs();
            let body = if *j == 0 {
                a.to_string()
            } else if a.is_one() {
                render_exp(*j)
            } else {
                format!("{}*{}", a, render_exp(*j))
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                write!(f, "{}", body)?;
                first = false;
            } else {
                write!(f, " {} {}", if neg { "-" } else { "+" }, body)?;
            }
        }
        Ok(())
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || PlatError::Parse(format!("bad rational '{}'", s));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Half-step count of an exponent literal such as `2`, `(-1)`, `(3/2)`.
fn parse_half_exp(s: &str) -> Result<i64> {
    let inner = s
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .unwrap_or(s);
    let r = parse_rational(inner)?;
    let twice = r * BigRational::from_integer(BigInt::from(2));
    if !twice.is_integer() {
        return Err(PlatError::Parse(format!(
            "exponent '{}' is not a half-integer",
            s
        )));
    }
    twice
        .to_integer()
        .to_i64()
        .ok_or_else(|| PlatError::Parse(format!("exponent '{}' too large", s)))
}

fn parse_term(t: &str) -> Result<(i64, BigRational)> {
    let (coef, rest) = match t.find(|c| c == 'p' || c == 'q') {
        Some(pos) => {
            let c = t[..pos].trim_end_matches('*');
            let c = if c.is_empty() {
                BigRational::one()
            } else {
                parse_rational(c)?
            };
            (c, &t[pos..])
        }
        None => return Ok((0, parse_rational(t)?)),
    };
    let is_q = rest.starts_with('q');
    let tail = &rest[1..];
    let half = if tail.is_empty() {
        if is_q {
            1
        } else {
            2
        }
    } else if let Some(x) = tail.strip_prefix('^') {
        let h = parse_half_exp(x)?;
        if is_q {
            // q^k needs an integer k
            if h % 2 != 0 {
                return Err(PlatError::Parse(format!("bad exponent in '{}'", t)));
            }
            h / 2
        } else {
            h
        }
    } else {
        return Err(PlatError::Parse(format!("bad term '{}'", t)));
    };
    Ok((half, coef))
}

impl FromStr for HalfPowerScalar {
    type Err = PlatError;

    /// Parses the rendering grammar, e.g. `3/2*p^(-1/2) + 1`, in symbolic mode.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(PlatError::Parse("empty".into()));
        }
        let mut terms: BTreeMap<i64, BigRational> = BTreeMap::new();
        let bytes: Vec<char> = compact.chars().collect();
        let mut depth = 0;
        let mut start = 0;
        let mut pieces = Vec::new();
        for (i, ch) in bytes.iter().enumerate() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                '+' | '-' if depth == 0 && i > 0 && bytes[i - 1] != '^' => {
                    pieces.push(bytes[start..i].iter().collect::<String>());
                    start = i;
                }
                _ => {}
            }
        }
        pieces.push(bytes[start..].iter().collect::<String>());
        for piece in pieces {
            let (neg, body) = match piece.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, piece.strip_prefix('+').unwrap_or(&piece)),
            };
            if body.is_empty() {
                return Err(PlatError::Parse(format!("empty term in '{}'", s)));
            }
            let (j, c) = parse_term(body)?;
            let c = if neg { -c } else { c };
            *terms.entry(j).or_insert_with(BigRational::zero) += c;
        }
        Ok(Self::normalized(Base::Symbolic, terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> HalfPowerScalar {
        s.parse().unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn q_times_q_is_p() {
        let q = HalfPowerScalar::p_half_pow(1, Base::Symbolic);
        assert_eq!(&q * &q, sym("p"));
    }

    #[test]
    fn difference_of_squares() {
        let one = HalfPowerScalar::one(Base::Symbolic);
        let q = HalfPowerScalar::p_half_pow(1, Base::Symbolic);
        let prod = (&one + &q) * (&one - &q);
        assert_eq!(prod, sym("1 - p"));
    }

    #[test]
    fn concrete_folding() {
        let b = Base::integer(2).unwrap();
        let qi = HalfPowerScalar::p_half_pow(-1, b.clone());
        assert_eq!(
            qi.pow(2).unwrap(),
            HalfPowerScalar::from_rational(rat(1, 2), b)
        );
    }

    #[test]
    fn square_base_folds_completely() {
        let b = Base::integer(4).unwrap();
        let q = HalfPowerScalar::p_half_pow(1, b.clone());
        assert_eq!(q, HalfPowerScalar::from_int(2, b));
    }

    #[test]
    fn eval_examples() {
        assert!((sym("1 - p^(-1)").eval(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((sym("p^(1/2)").eval(4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((sym("p + p^(-1)").eval(2.0).unwrap() - 2.5).abs() < 1e-15);
        assert!(sym("p").eval(1.0).is_err());
    }

    #[test]
    fn render_and_parse_roundtrip() {
        let x = sym("3/2*p^(-1/2) + 1");
        assert_eq!(x.to_string(), "3/2*p^(-1/2) + 1");
        let y = sym("-p^2 + 5*p - 7/3 + p^(-3/2)");
        assert_eq!(y.to_string().parse::<HalfPowerScalar>().unwrap(), y);
        assert_eq!(sym("q^3"), HalfPowerScalar::p_half_pow(3, Base::Symbolic));
        assert!("p^(1/3)".parse::<HalfPowerScalar>().is_err());
    }

    #[test]
    fn mismatch_is_error() {
        let a = HalfPowerScalar::one(Base::Symbolic);
        let b = HalfPowerScalar::one(Base::integer(2).unwrap());
        assert_eq!(hp_mul(&a, &b), Err(PlatError::BaseMismatch));
    }

    #[test]
    fn concrete_inverse_and_sign() {
        let b = Base::integer(2).unwrap();
        let x = HalfPowerScalar::parse_with_base("3 - 2*p^(1/2)", b.clone()).unwrap();
        let y = x.inverse().unwrap();
        assert!((&x * &y).is_one());
        // 3 - 2 sqrt 2 > 0
        assert_eq!(x.signum(), Some(1));
        let z = HalfPowerScalar::parse_with_base("1 - p^(1/2)", b).unwrap();
        assert_eq!(z.signum(), Some(-1));
    }
}
