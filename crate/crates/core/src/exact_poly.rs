//! Dense univariate polynomials with arbitrary-precision integer coefficients.
//!
//! [`IntPolynomial`] stores coefficients lowest power first and is always
//! normalized: the highest stored coefficient is nonzero, and the zero
//! polynomial has no coefficients. [`LaurentPolynomial`] adds an integer
//! offset so negative powers of the variable can be represented.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::float::FloatCore;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{GasketError, Result};

/// Exact rational number in canonical form (positive denominator, reduced).
pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `x^e` for a rational base and signed exponent. Panics on `0^e` with `e < 0`.
pub fn rational_powi(x: &Rational, e: i64) -> Rational {
    let mut base = if e < 0 { x.recip() } else { x.clone() };
    let mut e = e.unsigned_abs();
    let mut acc = Rational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Wire form shared by both polynomial types: decimal-string coefficients,
/// lowest power first, starting at `min_power`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PolyJson {
    pub min_power: i64,
    pub coeffs: Vec<String>,
}

fn parse_coeffs(raw: &[String]) -> Result<Vec<BigInt>> {
    raw.iter()
        .map(|s| {
            s.trim()
                .parse::<BigInt>()
                .map_err(|e| GasketError::Parse(format!("coefficient {s:?}: {e}")))
        })
        .collect()
}

#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(c: BigInt, power: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); power];
        coeffs.push(c);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    pub fn coeff(&self, power: usize) -> BigInt {
        self.coeffs.get(power).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coeff(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff().is_some_and(One::is_one)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        IntPolynomial {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiplication by `x^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigInt::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        IntPolynomial { coeffs }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigInt::from(k))
                .collect(),
        )
    }

    /// `self ∘ inner`, by Horner accumulation.
    pub fn compose(&self, inner: &IntPolynomial) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * inner;
            acc = acc.add_constant(c);
        }
        acc
    }

    /// `den^d · self(num/den)` where `d = deg self`: composition with a
    /// rational function, denominators cleared. The zero polynomial maps to
    /// zero and constants map to themselves.
    pub fn compose_rational_cleared(&self, num: &IntPolynomial, den: &IntPolynomial) -> Self {
        let Some(d) = self.degree() else {
            return Self::zero();
        };
        // acc_k = Σ_{i ≥ d-k} c_i num^{i-(d-k)} den^{d-i}
        let mut acc = Self::constant(self.coeffs[d].clone());
        let mut den_pow = Self::one();
        for i in (0..d).rev() {
            den_pow = &den_pow * den;
            acc = &(&acc * num) + &den_pow.scale(&self.coeffs[i]);
        }
        acc
    }

    fn add_constant(mut self, c: &BigInt) -> Self {
        if c.is_zero() {
            return self;
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(c.clone());
        } else {
            self.coeffs[0] += c;
        }
        Self::new(self.coeffs)
    }

    pub fn eval_integer(&self, x: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_rational(&self, x: &Rational) -> Rational {
        // Horner on numerator with a common denominator power.
        let d = match self.degree() {
            Some(d) => d,
            None => return Rational::zero(),
        };
        let (p, q) = (x.numer(), x.denom());
        let mut acc = BigInt::zero();
        let mut q_pow = BigInt::one();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if i == d {
                acc = c.clone();
            } else {
                q_pow *= q;
                acc = acc * p + c * &q_pow;
            }
        }
        Rational::new(acc, q_pow)
    }

    /// Floating-point Horner evaluation. Coefficients are rounded to `f64`,
    /// so this is only reliable when the coefficients are moderate.
    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| {
                acc * x + c.to_f64().unwrap_or(f64::NAN)
            })
    }

    /// Exact evaluation at the binary value of `x` (every finite `f64` is a
    /// dyadic rational), rounded once at the end. Immune to cancellation and
    /// overflow, at big-integer cost.
    pub fn eval_complex_exact(&self, x: Complex64) -> ScaledComplex {
        let Some(d) = self.degree() else {
            return ScaledComplex::zero();
        };
        let (re_m, re_e) = decompose_f64(x.re);
        let (im_m, im_e) = decompose_f64(x.im);
        // x = (A + iB)·2^e with a common exponent e.
        let e = re_e.min(im_e);
        let a = re_m << ((re_e - e) as usize);
        let b = im_m << ((im_e - e) as usize);
        let (a, b, k) = if e >= 0 {
            (a << (e as usize), b << (e as usize), 0usize)
        } else {
            (a, b, (-e) as usize)
        };
        // Σ c_i (A+iB)^i 2^{k(d-i)} by Horner, then divide by 2^{kd}.
        let mut re = self.coeffs[d].clone();
        let mut im = BigInt::zero();
        for (i, c) in self.coeffs.iter().enumerate().rev().skip(1) {
            let nre = &re * &a - &im * &b;
            let nim = &re * &b + &im * &a;
            re = nre + (c << (k * (d - i)));
            im = nim;
        }
        ScaledComplex::from_big(&re, &im, -((k * d) as i64))
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson::from(self.clone())
    }
}

fn decompose_f64(v: f64) -> (BigInt, i64) {
    let (mant, exp, sign) = FloatCore::integer_decode(v);
    let m = BigInt::from(mant) * BigInt::from(sign);
    (m, exp as i64)
}

impl From<IntPolynomial> for PolyJson {
    fn from(p: IntPolynomial) -> Self {
        PolyJson {
            min_power: 0,
            coeffs: p.coeffs.iter().map(ToString::to_string).collect(),
        }
    }
}

impl TryFrom<PolyJson> for IntPolynomial {
    type Error = GasketError;

    fn try_from(j: PolyJson) -> Result<Self> {
        if j.min_power < 0 {
            return Err(GasketError::Parse(format!(
                "polynomial cannot have min_power {}",
                j.min_power
            )));
        }
        Ok(IntPolynomial::from(LaurentPolynomial::new(
            j.min_power,
            parse_coeffs(&j.coeffs)?,
        )))
    }
}

impl fmt::Debug for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPolynomial({self})")
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, 0, &self.coeffs, "x")
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, min_power: i64, coeffs: &[BigInt], var: &str) -> fmt::Result {
    let mut first = true;
    for (i, c) in coeffs.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let power = min_power + i as i64;
        let sign = if c.is_negative() { "-" } else { "+" };
        if first {
            if c.is_negative() {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        let mag = c.abs();
        match power {
            0 => write!(f, "{mag}")?,
            _ => {
                if !mag.is_one() {
                    write!(f, "{mag}")?;
                }
                if power == 1 {
                    write!(f, "{var}")?;
                } else {
                    write!(f, "{var}^{power}")?;
                }
            }
        }
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

fn mul_coeffs(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn add_coeffs(a: &[BigInt], b: &[BigInt], negate_b: bool) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_default();
            match b.get(i) {
                Some(y) if negate_b => x - y,
                Some(y) => x + y,
                None => x,
            }
        })
        .collect()
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        IntPolynomial::new(add_coeffs(&self.coeffs, &rhs.coeffs, false))
    }
}

impl Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        IntPolynomial::new(add_coeffs(&self.coeffs, &rhs.coeffs, true))
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        IntPolynomial::new(mul_coeffs(&self.coeffs, &rhs.coeffs))
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;
    fn neg(self) -> IntPolynomial {
        IntPolynomial {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Add for IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: IntPolynomial) -> IntPolynomial {
        &self + &rhs
    }
}

impl Sub for IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: IntPolynomial) -> IntPolynomial {
        &self - &rhs
    }
}

impl Mul for IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: IntPolynomial) -> IntPolynomial {
        &self * &rhs
    }
}

/// A complex number `mant · 2^exp2`, used to report exactly evaluated
/// values whose magnitude may not fit in an `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledComplex {
    pub mant: Complex64,
    pub exp2: i64,
}

impl ScaledComplex {
    pub fn zero() -> Self {
        ScaledComplex {
            mant: Complex64::new(0.0, 0.0),
            exp2: 0,
        }
    }

    fn from_big(re: &BigInt, im: &BigInt, exp2: i64) -> Self {
        let bits = re.bits().max(im.bits());
        let drop = bits.saturating_sub(62);
        let re_f = (re >> drop).to_f64().unwrap_or(0.0);
        let im_f = (im >> drop).to_f64().unwrap_or(0.0);
        ScaledComplex {
            mant: Complex64::new(re_f, im_f),
            exp2: exp2 + drop as i64,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    /// `log2 |value|`; negative infinity for an exact zero.
    pub fn log2_abs(&self) -> f64 {
        self.mant.norm().log2() + self.exp2 as f64
    }

    /// Rounds to an ordinary complex number (may overflow to infinity).
    pub fn to_complex(&self) -> Complex64 {
        let scale = 2f64.powi(self.exp2.clamp(i32::MIN as i64, i32::MAX as i64) as i32);
        self.mant * scale
    }
}

/// Integer polynomial in `y` and `1/y`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct LaurentPolynomial {
    min_power: i64,
    coeffs: Vec<BigInt>,
}

impl LaurentPolynomial {
    pub fn new(mut min_power: i64, mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        let lead = coeffs.iter().take_while(|c| c.is_zero()).count();
        coeffs.drain(..lead);
        min_power += lead as i64;
        if coeffs.is_empty() {
            min_power = 0;
        }
        LaurentPolynomial { min_power, coeffs }
    }

    pub fn zero() -> Self {
        LaurentPolynomial::default()
    }

    pub fn monomial(c: BigInt, power: i64) -> Self {
        Self::new(power, vec![c])
    }

    /// Builds from `(power, coefficient)` pairs; repeated powers add.
    pub fn from_terms(terms: &[(i64, i64)]) -> Self {
        terms.iter().fold(Self::zero(), |acc, &(p, c)| {
            &acc + &Self::monomial(BigInt::from(c), p)
        })
    }

    pub fn min_power(&self) -> i64 {
        self.min_power
    }

    pub fn max_power(&self) -> i64 {
        self.min_power + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Top power minus bottom power; zero for monomials and for zero.
    pub fn span(&self) -> u64 {
        self.coeffs.len().saturating_sub(1) as u64
    }

    pub fn coeff(&self, power: i64) -> BigInt {
        let idx = power - self.min_power;
        if idx < 0 {
            return BigInt::zero();
        }
        self.coeffs.get(idx as usize).cloned().unwrap_or_default()
    }

    /// Iterator over `(power, coefficient)` with nonzero coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.min_power + i as i64, c))
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Self::new(self.min_power, self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Multiplication by `y^k`.
    pub fn shifted(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        LaurentPolynomial {
            min_power: self.min_power + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn all_positive(&self) -> bool {
        self.terms().all(|(_, c)| c.is_positive())
    }

    /// Sum of coefficients, i.e. the value at `y = 1`.
    pub fn eval_one(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    /// Exact value at a nonzero rational point.
    pub fn eval_rational(&self, y: &Rational) -> Result<Rational> {
        if y.is_zero() && self.min_power < 0 {
            return Err(GasketError::domain(
                "LaurentPolynomial::eval_rational",
                "negative power evaluated at 0",
            ));
        }
        let body = IntPolynomial::new(self.coeffs.clone()).eval_rational(y);
        Ok(body * rational_powi(y, self.min_power))
    }

    pub fn eval_complex(&self, y: Complex64) -> Complex64 {
        IntPolynomial::new(self.coeffs.clone()).eval_complex(y) * y.powi(self.min_power as i32)
    }

    /// Interprets `y^shift · self` as a polynomial in `x = y^4`.
    ///
    /// Fails if any surviving power is negative or not divisible by four.
    pub fn to_quartic_polynomial(&self, shift: i64) -> Result<IntPolynomial> {
        if self.is_zero() {
            return Ok(IntPolynomial::zero());
        }
        let mut out: Vec<BigInt> = Vec::new();
        for (power, c) in self.terms() {
            let p = power + shift;
            if p < 0 || p % 4 != 0 {
                return Err(GasketError::Invariant(format!(
                    "y^{shift} times the Laurent polynomial has a term y^{p}, \
                     which is not a nonnegative power of y^4"
                )));
            }
            let k = (p / 4) as usize;
            if out.len() <= k {
                out.resize(k + 1, BigInt::zero());
            }
            out[k] = c.clone();
        }
        Ok(IntPolynomial::new(out))
    }

    /// `y^{-shift} · p(y^4)`.
    pub fn from_quartic_polynomial(p: &IntPolynomial, shift: i64) -> Self {
        let mut coeffs = Vec::with_capacity(4 * p.coeffs().len());
        for (i, c) in p.coeffs().iter().enumerate() {
            if i > 0 {
                coeffs.extend(std::iter::repeat_n(BigInt::zero(), 3));
            }
            coeffs.push(c.clone());
        }
        Self::new(-shift, coeffs)
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson::from(self.clone())
    }
}

impl From<&IntPolynomial> for LaurentPolynomial {
    fn from(p: &IntPolynomial) -> Self {
        LaurentPolynomial::new(0, p.coeffs().to_vec())
    }
}

impl From<LaurentPolynomial> for IntPolynomial {
    /// Drops nothing: callers must ensure `min_power >= 0`.
    fn from(l: LaurentPolynomial) -> Self {
        assert!(l.min_power >= 0, "negative powers cannot form an IntPolynomial");
        IntPolynomial::new(l.coeffs).shift(l.min_power as usize)
    }
}

impl From<LaurentPolynomial> for PolyJson {
    fn from(p: LaurentPolynomial) -> Self {
        PolyJson {
            min_power: p.min_power,
            coeffs: p.coeffs.iter().map(ToString::to_string).collect(),
        }
    }
}

impl TryFrom<PolyJson> for LaurentPolynomial {
    type Error = GasketError;

    fn try_from(j: PolyJson) -> Result<Self> {
        Ok(LaurentPolynomial::new(j.min_power, parse_coeffs(&j.coeffs)?))
    }
}

impl fmt::Debug for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPolynomial({self})")
    }
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.min_power, &self.coeffs, "y")
    }
}

impl Add for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn add(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        laurent_combine(self, rhs, false)
    }
}

impl Sub for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn sub(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        laurent_combine(self, rhs, true)
    }
}

fn laurent_combine(a: &LaurentPolynomial, b: &LaurentPolynomial, negate_b: bool) -> LaurentPolynomial {
    if a.is_zero() {
        return if negate_b { b.scale(&BigInt::from(-1)) } else { b.clone() };
    }
    if b.is_zero() {
        return a.clone();
    }
    let lo = a.min_power.min(b.min_power);
    let pad = |p: &LaurentPolynomial| {
        let mut v = vec![BigInt::zero(); (p.min_power - lo) as usize];
        v.extend(p.coeffs.iter().cloned());
        v
    };
    LaurentPolynomial::new(lo, add_coeffs(&pad(a), &pad(b), negate_b))
}

impl Mul for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        // Shift both to ordinary polynomials; the offsets add.
        LaurentPolynomial::new(
            self.min_power + rhs.min_power,
            mul_coeffs(&self.coeffs, &rhs.coeffs),
        )
    }
}

impl Add for LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn add(self, rhs: LaurentPolynomial) -> LaurentPolynomial {
        &self + &rhs
    }
}

impl Mul for LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn mul(self, rhs: LaurentPolynomial) -> LaurentPolynomial {
        &self * &rhs
    }
}

/// Natural logarithm of `|n|` for integers of any size.
pub fn ln_abs_bigint(n: &BigInt) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    let drop = bits.saturating_sub(62);
    let top = (n.abs() >> drop).to_f64().unwrap_or(f64::NAN);
    top.ln() + drop as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of `|r|` for a nonzero rational.
pub fn ln_abs_rational(r: &Rational) -> f64 {
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    #[test]
    fn add_examples() {
        assert_eq!(&p(&[1, 1]) + &p(&[3, 1]), p(&[4, 2]));
        let q = p(&[4, 3, 0, 1]);
        assert_eq!(&q + &IntPolynomial::zero(), q);
        // (x³+3x+4) + 3(x²+4x+3) = x³+3x²+15x+13
        let u1 = p(&[4, 3, 0, 1]);
        let v1 = p(&[3, 4, 1]);
        assert_eq!(&u1 + &v1.scale(&BigInt::from(3)), p(&[13, 15, 3, 1]));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&p(&[1, 1]) * &p(&[1, 1]), p(&[1, 2, 1]));
        assert_eq!(&p(&[13, 2, 1]) * &p(&[1, 1]), p(&[13, 15, 3, 1]));
        let m2 = &(&p(&[157, 72, 26, 0, 1]) * &p(&[7, 0, 1])) * &p(&[1, 1]).pow(3);
        assert_eq!(m2.degree(), Some(9));
        assert!(m2.is_monic());
        assert_eq!(m2.coeff(0), BigInt::from(157 * 7));
    }

    #[test]
    fn cancellation_normalizes() {
        let a = p(&[1, 2, 3]);
        assert!((&a - &a).is_zero());
        assert_eq!((&a - &a).degree(), None);
        assert_eq!(p(&[0, 0, 0]), IntPolynomial::zero());
    }

    #[test]
    fn compose_examples() {
        let g = p(&[0, 1, 1]);
        assert_eq!(p(&[1, 1]).compose(&g), p(&[1, 1, 1]));
        assert_eq!(g.compose(&g), p(&[0, 1, 2, 2, 1]));
        let q = p(&[5, -3, 0, 2]);
        assert_eq!(q.compose(&IntPolynomial::x()), q);
    }

    #[test]
    fn compose_rational_cleared_examples() {
        let num = p(&[4, -1, 1]);
        let den = p(&[3, 1]);
        assert_eq!(p(&[3, 1]).compose_rational_cleared(&num, &den), p(&[13, 2, 1]));
        assert_eq!(IntPolynomial::x().compose_rational_cleared(&num, &den), num);
        assert_eq!(p(&[7]).compose_rational_cleared(&num, &den), p(&[7]));
    }

    #[test]
    fn eval_examples() {
        let m1 = p(&[13, 15, 3, 1]);
        assert_eq!(m1.eval_rational(&rational(1, 1)), rational(32, 1));
        assert_eq!(m1.eval_rational(&rational(0, 1)), rational(13, 1));
        let r = Complex64::new(0.0, 7f64.sqrt());
        assert!(p(&[7, 0, 1]).eval_complex(r).norm() < 1e-12);
    }

    #[test]
    fn exact_complex_eval_matches_float_on_small_input() {
        let q = p(&[3, -2, 5, 1]);
        let z = Complex64::new(0.75, -1.25);
        let exact = q.eval_complex_exact(z).to_complex();
        assert!((exact - q.eval_complex(z)).norm() < 1e-12);
        assert!(p(&[7, 0, 1])
            .eval_complex_exact(Complex64::new(0.0, 7f64.sqrt()))
            .log2_abs()
            < -40.0);
    }

    #[test]
    fn laurent_basics() {
        let z0 = LaurentPolynomial::from_terms(&[(3, 2), (-1, 6)]);
        assert_eq!(z0.min_power(), -1);
        assert_eq!(z0.max_power(), 3);
        assert_eq!(z0.span(), 4);
        assert_eq!(z0.eval_one(), BigInt::from(8));
        let sq = &z0 * &z0;
        assert_eq!(sq, LaurentPolynomial::from_terms(&[(6, 4), (2, 24), (-2, 36)]));
        assert!((&z0 - &z0).is_zero());
        assert_eq!(
            z0.eval_rational(&rational(2, 1)).unwrap(),
            rational(16, 1) + rational(3, 1)
        );
    }

    #[test]
    fn quartic_substitution() {
        let z0 = LaurentPolynomial::from_terms(&[(3, 2), (-1, 6)]);
        let m = z0.to_quartic_polynomial(1).unwrap();
        assert_eq!(m, p(&[6, 2]));
        assert_eq!(LaurentPolynomial::from_quartic_polynomial(&m, 1), z0);
        assert!(z0.to_quartic_polynomial(0).is_err());
    }

    #[test]
    fn json_uses_decimal_strings() {
        let big = IntPolynomial::new(vec![BigInt::from(10).pow(40), BigInt::from(-3)]);
        let s = serde_json::to_string(&big).unwrap();
        assert_eq!(
            s,
            r#"{"min_power":0,"coeffs":["10000000000000000000000000000000000000000","-3"]}"#
        );
        let back: IntPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, big);
        let l: LaurentPolynomial =
            serde_json::from_str(r#"{"min_power":-1,"coeffs":["6","0","0","0","2"]}"#).unwrap();
        assert_eq!(l, LaurentPolynomial::from_terms(&[(3, 2), (-1, 6)]));
        assert!(serde_json::from_str::<IntPolynomial>(r#"{"min_power":-2,"coeffs":["1"]}"#).is_err());
    }

    #[test]
    fn big_log() {
        let n = BigInt::from(10).pow(400);
        assert!((ln_abs_bigint(&n) - 400.0 * 10f64.ln()).abs() < 1e-9);
        assert!((ln_abs_rational(&rational(-3, 7)) - (3.0f64 / 7.0).ln()).abs() < 1e-14);
    }

    fn small_poly() -> impl Strategy<Value = IntPolynomial> {
        prop::collection::vec(-20i64..=20, 0..=9).prop_map(|c| IntPolynomial::from_i64(&c))
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-30i64..=30, 1i64..=12).prop_map(|(n, d)| rational(n, d))
    }

    proptest! {
        #[test]
        fn ring_axioms(a in small_poly(), b in small_poly(), c in small_poly()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &b, &b * &a);
            if let (Some(da), Some(db)) = (a.degree(), b.degree()) {
                prop_assert_eq!((&a * &b).degree(), Some(da + db));
            }
        }

        #[test]
        fn compose_commutes_with_eval(a in small_poly(), b in small_poly(), x in small_rational()) {
            let lhs = a.compose(&b).eval_rational(&x);
            let rhs = a.eval_rational(&b.eval_rational(&x));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn cleared_composition_matches_rational_eval(
            a in small_poly(), num in small_poly(), den in small_poly(), x in small_rational()
        ) {
            let d = den.eval_rational(&x);
            prop_assume!(!a.is_zero() && !d.is_zero());
            let deg = a.degree().unwrap() as i64;
            let lhs = a.compose_rational_cleared(&num, &den).eval_rational(&x);
            let rhs = rational_powi(&d, deg) * a.eval_rational(&(num.eval_rational(&x) / &d));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn json_round_trip(a in small_poly(), shift in -5i64..5) {
            let l = LaurentPolynomial::from(&a).shifted(shift);
            let back: LaurentPolynomial = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
            prop_assert_eq!(back, l);
        }
    }
}
