//! Exact level-by-level recursions for the gasket partition functions.
//!
//! `U_n`, `V_n` are the corner sums with equal and with one flipped corner
//! spin. `y^{3^n}·U_n` and `y^{3^n}·V_n` are polynomials in `x = y^4`
//! (written `Ũ_n`, `Ṽ_n` here) and `M_n = Ũ_n + 3Ṽ_n` is the numerator of
//! `Z_n / 2`. `T_n` is the companion family in the coordinate
//! `z = 4/(x−1)`, where the renormalization map becomes `g(z) = z² + z`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{guard, GasketError, Result};
use crate::exact_poly::{IntPolynomial, LaurentPolynomial, Rational};

pub const DEFAULT_MAX_LEVEL: u32 = 6;

/// Levels past this are refused outright regardless of configuration.
pub const HARD_MAX_LEVEL: u32 = 12;

pub fn pow3(n: u32) -> u64 {
    3u64.pow(n)
}

fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

/// `g(z) = z² + z`.
pub fn g_poly() -> IntPolynomial {
    IntPolynomial::from_i64(&[0, 1, 1])
}

/// Numerator `x² − x + 4` of the renormalization map `f`.
pub fn f_numerator() -> IntPolynomial {
    IntPolynomial::from_i64(&[4, -1, 1])
}

/// Denominator `x + 3` of `f`.
pub fn f_denominator() -> IntPolynomial {
    IntPolynomial::from_i64(&[3, 1])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UVPair {
    pub level: u32,
    #[serde(rename = "U")]
    pub u: LaurentPolynomial,
    #[serde(rename = "V")]
    pub v: LaurentPolynomial,
}

impl UVPair {
    /// `(U_0, V_0) = (y^3, y^{-1})`.
    pub fn initial() -> Self {
        UVPair {
            level: 0,
            u: LaurentPolynomial::monomial(BigInt::one(), 3),
            v: LaurentPolynomial::monomial(BigInt::one(), -1),
        }
    }

    /// `(Ũ_n, Ṽ_n)`; errors if either shifted sum is not a polynomial in `y^4`.
    pub fn tilde(&self) -> Result<(IntPolynomial, IntPolynomial)> {
        let shift = pow3(self.level) as i64;
        Ok((
            self.u.to_quartic_polynomial(shift)?,
            self.v.to_quartic_polynomial(shift)?,
        ))
    }

    pub fn z(&self) -> LaurentPolynomial {
        &self.u.scale(&int(2)) + &self.v.scale(&int(6))
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.tilde()?;
        if !(self.u.all_positive() && self.v.all_positive()) {
            return Err(GasketError::Invariant(format!(
                "level {} corner sums have a nonpositive coefficient",
                self.level
            )));
        }
        Ok(())
    }
}

/// One renormalization step:
/// `U' = U³ + 3UV² + 4V³`, `V' = U²V + 4UV² + 3V³`.
pub fn uv_step(pair: &UVPair) -> UVPair {
    let (u, v) = (&pair.u, &pair.v);
    let uu = u * u;
    let vv = v * v;
    let uvv = u * &vv;
    let vvv = v * &vv;
    let next_u = &(&(&uu * u) + &uvv.scale(&int(3))) + &vvv.scale(&int(4));
    let next_v = &(&(&uu * v) + &uvv.scale(&int(4))) + &vvv.scale(&int(3));
    UVPair {
        level: pair.level + 1,
        u: next_u,
        v: next_v,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MnRecord {
    pub level: u32,
    #[serde(rename = "M")]
    pub m: IntPolynomial,
}

impl MnRecord {
    /// Monic of degree `3^n`, nonzero constant term, and every coefficient of
    /// `M(2x+1)` divisible by `2^{3^n}`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let d = pow3(self.level);
        if self.m.degree() != Some(d as usize) {
            return Err(format!("M_{} has degree {:?}, expected {d}", self.level, self.m.degree()));
        }
        if !self.m.is_monic() {
            return Err(format!("M_{} is not monic", self.level));
        }
        if self.m.coeff(0).is_zero() {
            return Err(format!("M_{} has zero constant term", self.level));
        }
        let shifted = self.m.compose(&IntPolynomial::from_i64(&[1, 2]));
        for (k, c) in shifted.coeffs().iter().enumerate() {
            if !c.is_zero() && c.trailing_zeros().unwrap_or(0) < d {
                return Err(format!(
                    "coefficient of x^{k} in M_{}(2x+1) is not divisible by 2^{d}",
                    self.level
                ));
            }
        }
        Ok(())
    }

    /// `M_n` as predicted from `M_{n-1}` by composing with `f`:
    /// `M_{n-1}(f(x))·[(x+1)(x+3)]^{3^{n-1}}`.
    pub fn renormalized(prev: &MnRecord) -> MnRecord {
        let k = pow3(prev.level);
        let cleared = prev.m.compose_rational_cleared(&f_numerator(), &f_denominator());
        MnRecord {
            level: prev.level + 1,
            m: &cleared * &IntPolynomial::from_i64(&[1, 1]).pow(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TnFactor {
    pub factor: IntPolynomial,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TnRecord {
    pub level: u32,
    #[serde(rename = "T")]
    pub t: IntPolynomial,
    pub factors: Vec<TnFactor>,
}

impl TnRecord {
    pub fn factor_product(&self) -> IntPolynomial {
        self.factors.iter().fold(IntPolynomial::one(), |acc, f| {
            &acc * &f.factor.pow(f.multiplicity)
        })
    }
}

/// Factor list `(g^{∘n} + 1, 1)` followed by `(g^{∘j} + 2, 3^{n-j-1})`
/// for `j = 0..n`.
pub fn t_factors(n: u32) -> Vec<TnFactor> {
    let g = g_poly();
    let mut iterates = vec![IntPolynomial::x()];
    for _ in 0..n {
        let next = g.compose(iterates.last().unwrap());
        iterates.push(next);
    }
    let two = IntPolynomial::constant(int(2));
    let mut factors = vec![TnFactor {
        factor: &iterates[n as usize] + &IntPolynomial::one(),
        multiplicity: 1,
    }];
    for j in 0..n {
        factors.push(TnFactor {
            factor: &iterates[j as usize] + &two,
            multiplicity: pow3(n - j - 1),
        });
    }
    factors
}

/// Outcome of an exact polynomial identity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub level: u32,
    pub passed: bool,
    /// `(power, lhs coefficient, rhs coefficient)` at the lowest differing power.
    pub first_mismatch: Option<(usize, String, String)>,
}

impl IdentityReport {
    pub fn compare(identity: &str, level: u32, lhs: &IntPolynomial, rhs: &IntPolynomial) -> Self {
        let len = lhs.coeffs().len().max(rhs.coeffs().len());
        let first_mismatch = (0..len)
            .find(|&k| lhs.coeff(k) != rhs.coeff(k))
            .map(|k| (k, lhs.coeff(k).to_string(), rhs.coeff(k).to_string()));
        IdentityReport {
            identity: identity.to_string(),
            level,
            passed: first_mismatch.is_none(),
            first_mismatch,
        }
    }
}

/// Exact computations up to a configurable level.
///
/// Coefficients of `M_6` already run to hundreds of digits; levels beyond
/// the default are allowed up to [`HARD_MAX_LEVEL`] but log a warning.
#[derive(Clone, Copy, Debug)]
pub struct ExactEngine {
    max_level: u32,
}

impl Default for ExactEngine {
    fn default() -> Self {
        ExactEngine {
            max_level: DEFAULT_MAX_LEVEL,
        }
    }
}

impl ExactEngine {
    pub fn with_max_level(max_level: u32) -> Result<Self> {
        guard("exact max level", max_level as u64, HARD_MAX_LEVEL as u64)?;
        if max_level > DEFAULT_MAX_LEVEL {
            log::warn!(
                "exact level cap raised to {max_level}: degree {} polynomials need a lot of memory",
                pow3(max_level)
            );
        }
        Ok(ExactEngine { max_level })
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    fn check(&self, n: u32) -> Result<()> {
        guard("exact level", n as u64, self.max_level as u64)
    }

    /// `(U_k, V_k)` for `k = 0..=n`.
    pub fn uv_chain(&self, n: u32) -> Result<Vec<UVPair>> {
        self.check(n)?;
        let mut chain = vec![UVPair::initial()];
        for _ in 0..n {
            let next = uv_step(chain.last().unwrap());
            chain.push(next);
        }
        Ok(chain)
    }

    pub fn uv_pair(&self, n: u32) -> Result<UVPair> {
        Ok(self.uv_chain(n)?.pop().unwrap())
    }

    /// `Z_n = 2U_n + 6V_n`.
    pub fn compute_z(&self, n: u32) -> Result<LaurentPolynomial> {
        Ok(self.uv_pair(n)?.z())
    }

    pub fn compute_m(&self, n: u32) -> Result<MnRecord> {
        let pair = self.uv_pair(n)?;
        m_from_pair(&pair)
    }

    /// `M_k` for `k = 0..=n`, sharing one pass of the corner-sum recursion.
    pub fn m_chain(&self, n: u32) -> Result<Vec<MnRecord>> {
        self.uv_chain(n)?.iter().map(m_from_pair).collect()
    }

    /// `T_n` from `T_0 = z + 1`, `T_k = (z+2)^{3^{k-1}} · T_{k-1}(g(z))`,
    /// with the factor list attached.
    pub fn compute_t(&self, n: u32) -> Result<TnRecord> {
        self.check(n)?;
        Ok(TnRecord {
            level: n,
            t: t_by_recursion(n),
            factors: t_factors(n),
        })
    }

    /// `4^{3^n}·M_n(x) = 2^{(3^{n+1}+1)/2} · (x−1)^{3^n} · T_n(4/(x−1))`.
    pub fn verify_conjugacy_identity(&self, n: u32) -> Result<IdentityReport> {
        let m = self.compute_m(n)?;
        let t = self.compute_t(n)?;
        Ok(conjugacy_report(&m, &t.t))
    }
}

fn m_from_pair(pair: &UVPair) -> Result<MnRecord> {
    let (u, v) = pair.tilde()?;
    Ok(MnRecord {
        level: pair.level,
        m: &u + &v.scale(&int(3)),
    })
}

pub fn t_by_recursion(n: u32) -> IntPolynomial {
    let g = g_poly();
    let z_plus_2 = IntPolynomial::from_i64(&[2, 1]);
    let mut t = IntPolynomial::from_i64(&[1, 1]);
    for k in 1..=n {
        t = &z_plus_2.pow(pow3(k - 1)) * &t.compose(&g);
    }
    t
}

/// Both sides of the `M_n`/`T_n` conjugacy identity, denominators cleared.
pub fn conjugacy_sides(m: &MnRecord, t: &IntPolynomial) -> (IntPolynomial, IntPolynomial) {
    let d = pow3(m.level);
    let four_pow = BigInt::one() << (2 * d) as usize;
    let lhs = m.m.scale(&four_pow);
    let two_pow = BigInt::one() << (3 * d).div_ceil(2) as usize;
    let cleared = t.compose_rational_cleared(
        &IntPolynomial::constant(int(4)),
        &IntPolynomial::from_i64(&[-1, 1]),
    );
    (lhs, cleared.scale(&two_pow))
}

pub fn conjugacy_report(m: &MnRecord, t: &IntPolynomial) -> IdentityReport {
    let (lhs, rhs) = conjugacy_sides(m, t);
    IdentityReport::compare("M_n/T_n conjugacy identity", m.level, &lhs, &rhs)
}

/// Checks `Ũ_n/Ṽ_n = (Ũ_{n-1}/Ṽ_{n-1}) ∘ f` at the given rational points by
/// cross-multiplying exact values. Points where `x + 3` or a denominator
/// vanishes are skipped; returns the number of points actually checked, or
/// the first failing point.
pub fn check_ratio_relation(
    prev: &UVPair,
    next: &UVPair,
    points: &[Rational],
) -> Result<std::result::Result<usize, Rational>> {
    let (u0, v0) = prev.tilde()?;
    let (u1, v1) = next.tilde()?;
    let mut checked = 0;
    for x in points {
        let den = x + Rational::from_integer(int(3));
        if den.is_zero() {
            continue;
        }
        let fx = (x * x - x + Rational::from_integer(int(4))) / den;
        let (a, b) = (u1.eval_rational(x), v1.eval_rational(x));
        let (c, d) = (u0.eval_rational(&fx), v0.eval_rational(&fx));
        if b.is_zero() || d.is_zero() {
            continue;
        }
        if a * &d != c * &b {
            return Ok(Err(x.clone()));
        }
        checked += 1;
    }
    Ok(Ok(checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_poly::rational;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    fn lp(t: &[(i64, i64)]) -> LaurentPolynomial {
        LaurentPolynomial::from_terms(t)
    }

    #[test]
    fn first_step() {
        let one = uv_step(&UVPair::initial());
        assert_eq!(one.u, lp(&[(9, 1), (1, 3), (-3, 4)]));
        assert_eq!(one.v, lp(&[(5, 1), (1, 4), (-3, 3)]));
        assert_eq!(one.u.eval_one(), int(8));
        assert_eq!(one.v.eval_one(), int(8));
        one.check_invariants().unwrap();
    }

    #[test]
    fn z_examples() {
        let e = ExactEngine::default();
        assert_eq!(e.compute_z(0).unwrap(), lp(&[(3, 2), (-1, 6)]));
        // 2(y^8+2y^4+13)(y^4+1)/y^3
        let z1 = LaurentPolynomial::from_quartic_polynomial(&(&p(&[13, 2, 1]) * &p(&[1, 1])), 3)
            .scale(&int(2));
        assert_eq!(e.compute_z(1).unwrap(), z1);
        let m2 = &(&p(&[157, 72, 26, 0, 1]) * &p(&[7, 0, 1])) * &p(&[1, 1]).pow(3);
        let z2 = LaurentPolynomial::from_quartic_polynomial(&m2, 9).scale(&int(2));
        assert_eq!(e.compute_z(2).unwrap(), z2);
        for n in 0..=4 {
            let z = e.compute_z(n).unwrap();
            assert_eq!(z.span(), 4 * pow3(n));
            assert!(z.all_positive());
        }
    }

    #[test]
    fn m_examples() {
        let e = ExactEngine::default();
        assert_eq!(e.compute_m(0).unwrap().m, p(&[3, 1]));
        let m1 = e.compute_m(1).unwrap();
        assert_eq!(m1.m, p(&[13, 15, 3, 1]));
        assert_eq!(
            m1.m.compose(&p(&[1, 2])),
            p(&[4, 6, 3, 1]).scale(&int(8))
        );
        m1.check_invariants().unwrap();
    }

    #[test]
    fn m_recursion_and_invariants_to_level_four() {
        let chain = ExactEngine::default().m_chain(4).unwrap();
        for w in chain.windows(2) {
            assert_eq!(MnRecord::renormalized(&w[0]), w[1]);
        }
        for rec in &chain {
            rec.check_invariants().unwrap();
        }
    }

    #[test]
    fn tampered_m_fails_invariants() {
        let mut rec = ExactEngine::default().compute_m(2).unwrap();
        let mut c = rec.m.clone().into_coeffs();
        c[3] += 1;
        rec.m = IntPolynomial::new(c);
        assert!(rec.check_invariants().is_err());
    }

    #[test]
    fn t_examples() {
        let e = ExactEngine::default();
        assert_eq!(e.compute_t(0).unwrap().t, p(&[1, 1]));
        let t1 = e.compute_t(1).unwrap();
        assert_eq!(t1.t, &p(&[2, 1]) * &p(&[1, 1, 1]));
        assert_eq!(t1.factor_product(), t1.t);
        assert_eq!(
            t1.factors,
            vec![
                TnFactor { factor: p(&[1, 1, 1]), multiplicity: 1 },
                TnFactor { factor: p(&[2, 1]), multiplicity: 1 },
            ]
        );
        for n in 0..=4 {
            let t = e.compute_t(n).unwrap();
            assert_eq!(t.t.degree(), Some(pow3(n) as usize));
            assert!(t.t.is_monic());
            assert_eq!(t.factor_product(), t.t);
        }
    }

    #[test]
    fn conjugacy_small_levels() {
        let e = ExactEngine::default();
        for n in 0..=3 {
            let r = e.verify_conjugacy_identity(n).unwrap();
            assert!(r.passed, "{r:?}");
        }
        let (lhs, _) = conjugacy_sides(&e.compute_m(1).unwrap(), &e.compute_t(1).unwrap().t);
        assert_eq!(lhs, p(&[13, 15, 3, 1]).scale(&int(64)));
    }

    #[test]
    fn conjugacy_mismatch_is_reported() {
        let e = ExactEngine::default();
        let m = e.compute_m(1).unwrap();
        let t = &e.compute_t(1).unwrap().t + &IntPolynomial::one();
        let r = conjugacy_report(&m, &t);
        assert!(!r.passed);
        assert!(r.first_mismatch.is_some());
    }

    #[test]
    fn ratio_relation() {
        let chain = ExactEngine::default().uv_chain(3).unwrap();
        let pts: Vec<Rational> = (-9..=9).map(|k| rational(k, 7)).collect();
        for w in chain.windows(2) {
            let n = check_ratio_relation(&w[0], &w[1], &pts).unwrap().unwrap();
            assert!(n >= 18);
        }
    }

    #[test]
    fn level_guard() {
        let e = ExactEngine::default();
        assert!(e.compute_m(7).unwrap_err().is_guard());
        assert!(ExactEngine::with_max_level(13).is_err());
        assert_eq!(ExactEngine::with_max_level(7).unwrap().max_level(), 7);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ratio_relation_at_rationals(n in 1u32..4, a in -40i64..40, b in 1i64..9) {
                let e = ExactEngine::default();
                let chain = e.uv_chain(n).unwrap();
                let x = rational(a, b);
                let checked = check_ratio_relation(&chain[n as usize - 1], &chain[n as usize], &[x]).unwrap();
                prop_assert!(checked.is_ok());
            }

            #[test]
            fn m_matches_t_through_phi(n in 0u32..4, a in -30i64..30, b in 1i64..7) {
                // 4^{3^n} M_n(x) = 2^{(3^{n+1}+1)/2} (x−1)^{3^n} T_n(4/(x−1))
                let x = rational(a, b);
                prop_assume!(x != rational(1, 1));
                let e = ExactEngine::default();
                let m = e.compute_m(n).unwrap().m.eval_rational(&x);
                let t = e.compute_t(n).unwrap().t.eval_rational(&(rational(4, 1) / (&x - rational(1, 1))));
                let d = pow3(n) as i64;
                let lhs = m * crate::exact_poly::rational_powi(&rational(4, 1), d);
                let rhs = t
                    * crate::exact_poly::rational_powi(&rational(2, 1), (3 * d + 1) / 2)
                    * crate::exact_poly::rational_powi(&(&x - rational(1, 1)), d);
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
