//! The verification suite: every acceptance criterion as a named check,
//! plus deliberate faults that each criterion must catch.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dynamics::{
    abel_residual, apply_f, apply_h, fatou_coordinate, fatou_f, fit_iteration_constant, half_plane_grid,
    BranchConfig,
};
use crate::error::{GasketError, Result};
use crate::exact_poly::{rational, IntPolynomial, Rational};
use crate::gasket::{build_gasket, enumerate_partition_function};
use crate::measure::{expected_zeta_tv, measure_at_level, truncated_limit, tv_distance, AtomGroup, MeasureKind};
use crate::pressure::{asymptote_deviation, exact_pressure, pressure_eval};
use crate::recursion::{conjugacy_report, t_by_recursion, t_factors, ExactEngine, MnRecord, TnRecord};
use crate::zeros::{distance_to_ray, min_separation, relative_residuals, zeros_of_m, zeros_of_t, zeros_of_z, ZeroCloud};

/// Regression floor for the distance from the `Z_n` zeros to `[0, ∞)`:
/// 80% of the smallest value observed for `n ≤ 12` (0.138677 at `n = 12`).
pub const GAP_FLOOR: f64 = 0.110942;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

impl FromStr for Profile {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            _ => Err(GasketError::Parse(format!("unknown profile {s:?}"))),
        }
    }
}

/// A single deliberate fault, used to check that the suite notices it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    /// Adds 1 to the constant coefficient of `M_1`.
    MCoefficient,
    /// Adds 1 to one coefficient of the recursion's `Z_n`.
    ZCoefficient,
    /// Raises the multiplicity of one `T_n` factor.
    TFactor,
    /// Doubles `T_n` before the conjugacy comparison.
    Conjugacy,
    /// Adds `2^{3^n − 1}` to the constant term of `M_n`.
    Divisibility,
    /// Shifts one weight of the truncated `ζ_∞`.
    MeasureWeight,
    /// Shifts the depth-0 weight of `μ_n`.
    Mass,
    /// Moves every zero by `10⁻⁴`.
    ZeroPosition,
    /// Adds `10⁻⁸` to `h`.
    InverseBranch,
    /// Adds `10⁻⁵·x` to the Fatou coordinate.
    Fatou,
    /// Moves one `Z_n` zero onto the ray.
    Gap,
    /// Adds `10⁻⁹` to the log-space pressure.
    Pressure,
}

impl Perturbation {
    pub const ALL: [Perturbation; 12] = [
        Perturbation::MCoefficient,
        Perturbation::ZCoefficient,
        Perturbation::TFactor,
        Perturbation::Conjugacy,
        Perturbation::Divisibility,
        Perturbation::MeasureWeight,
        Perturbation::Mass,
        Perturbation::ZeroPosition,
        Perturbation::InverseBranch,
        Perturbation::Fatou,
        Perturbation::Gap,
        Perturbation::Pressure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::MCoefficient => "m-coefficient",
            Perturbation::ZCoefficient => "z-coefficient",
            Perturbation::TFactor => "t-factor",
            Perturbation::Conjugacy => "conjugacy",
            Perturbation::Divisibility => "divisibility",
            Perturbation::MeasureWeight => "measure-weight",
            Perturbation::Mass => "mass",
            Perturbation::ZeroPosition => "zero-position",
            Perturbation::InverseBranch => "inverse-branch",
            Perturbation::Fatou => "fatou",
            Perturbation::Gap => "gap",
            Perturbation::Pressure => "pressure",
        }
    }

    /// The criterion expected to catch this fault.
    pub fn target(self) -> Criterion {
        match self {
            Perturbation::MCoefficient => Criterion::MRecursion,
            Perturbation::ZCoefficient => Criterion::Enumeration,
            Perturbation::TFactor => Criterion::TFactorization,
            Perturbation::Conjugacy => Criterion::Conjugacy,
            Perturbation::Divisibility => Criterion::Coefficients,
            Perturbation::MeasureWeight => Criterion::MeasureRate,
            Perturbation::Mass => Criterion::Mass,
            Perturbation::ZeroPosition => Criterion::Zeros,
            Perturbation::InverseBranch => Criterion::InverseBranch,
            Perturbation::Fatou => Criterion::Fatou,
            Perturbation::Gap => Criterion::Gap,
            Perturbation::Pressure => Criterion::Pressure,
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Perturbation {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        Perturbation::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| GasketError::Parse(format!("unknown perturbation {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    MRecursion,
    Enumeration,
    TFactorization,
    Conjugacy,
    Coefficients,
    MeasureRate,
    Mass,
    Zeros,
    InverseBranch,
    Fatou,
    Gap,
    Pressure,
    FaultInjection,
}

impl Criterion {
    pub const ALL: [Criterion; 13] = [
        Criterion::MRecursion,
        Criterion::Enumeration,
        Criterion::TFactorization,
        Criterion::Conjugacy,
        Criterion::Coefficients,
        Criterion::MeasureRate,
        Criterion::Mass,
        Criterion::Zeros,
        Criterion::InverseBranch,
        Criterion::Fatou,
        Criterion::Gap,
        Criterion::Pressure,
        Criterion::FaultInjection,
    ];

    pub fn id(self) -> u32 {
        Criterion::ALL.iter().position(|&c| c == self).unwrap() as u32 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::MRecursion => "M_n renormalization recursion identity",
            Criterion::Enumeration => "partition function enumeration oracle",
            Criterion::TFactorization => "T_n factorization identity",
            Criterion::Conjugacy => "M_n/T_n conjugacy identity",
            Criterion::Coefficients => "M_n coefficient arithmetic",
            Criterion::MeasureRate => "zeta_n convergence rate",
            Criterion::Mass => "measure mass bookkeeping",
            Criterion::Zeros => "zero residuals and simplicity",
            Criterion::InverseBranch => "inverse branch h",
            Criterion::Fatou => "Fatou coordinate Abel equation",
            Criterion::Gap => "gap between zeros and the positive ray",
            Criterion::Pressure => "pressure asymptote and exact agreement",
            Criterion::FaultInjection => "fault injection sensitivity",
        }
    }

    pub fn run(self, profile: Profile, fault: Option<Perturbation>) -> Outcome {
        let ctx = Ctx { profile, fault };
        let start = Instant::now();
        let result = match self {
            Criterion::MRecursion => m_recursion(&ctx),
            Criterion::Enumeration => enumeration(&ctx),
            Criterion::TFactorization => t_factorization(&ctx),
            Criterion::Conjugacy => conjugacy(&ctx),
            Criterion::Coefficients => coefficients(&ctx),
            Criterion::MeasureRate => measure_rate(&ctx),
            Criterion::Mass => mass(&ctx),
            Criterion::Zeros => zeros(&ctx),
            Criterion::InverseBranch => inverse_branch(&ctx),
            Criterion::Fatou => fatou(&ctx),
            Criterion::Gap => gap(&ctx),
            Criterion::Pressure => pressure(&ctx),
            Criterion::FaultInjection => fault_injection(&ctx),
        };
        let (passed, detail) = match result {
            Ok(Ok(detail)) => (true, detail),
            Ok(Err(detail)) => (false, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        Outcome {
            id: self.id(),
            name: self.name(),
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub profile: Profile,
    pub injected: Option<Perturbation>,
    pub passed: bool,
    pub criteria: Vec<Outcome>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&Outcome> {
        self.criteria.iter().find(|c| !c.passed)
    }
}

/// Runs every criterion. With a fault injected, the fault-injection
/// self-test is left out.
pub fn run_verify(profile: Profile, fault: Option<Perturbation>) -> VerifyReport {
    let criteria: Vec<Outcome> = Criterion::ALL
        .into_iter()
        .filter(|c| fault.is_none() || *c != Criterion::FaultInjection)
        .map(|c| {
            let out = c.run(profile, fault);
            log::info!("{} {}: {} ({:.2}s)", if out.passed { "PASS" } else { "FAIL" }, out.name, out.detail, out.seconds);
            out
        })
        .collect();
    VerifyReport {
        profile,
        injected: fault,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

struct Ctx {
    profile: Profile,
    fault: Option<Perturbation>,
}

impl Ctx {
    fn has(&self, p: Perturbation) -> bool {
        self.fault == Some(p)
    }

    fn pick<T>(&self, quick: T, full: T) -> T {
        match self.profile {
            Profile::Quick => quick,
            Profile::Full => full,
        }
    }

    fn exact_level(&self) -> u32 {
        self.pick(4, 6)
    }
}

type Check = Result<std::result::Result<String, String>>;

fn p(c: &[i64]) -> IntPolynomial {
    IntPolynomial::from_i64(c)
}

fn m_recursion(ctx: &Ctx) -> Check {
    let n = ctx.exact_level();
    let mut chain = ExactEngine::default().m_chain(n)?;
    if ctx.has(Perturbation::MCoefficient) {
        let mut c = chain[1].m.clone().into_coeffs();
        c[0] += 1;
        chain[1].m = IntPolynomial::new(c);
    }
    let expected = [
        p(&[3, 1]),
        &p(&[1, 1]) * &p(&[13, 2, 1]),
        &(&p(&[157, 72, 26, 0, 1]) * &p(&[7, 0, 1])) * &p(&[1, 1]).pow(3),
    ];
    for (k, e) in expected.iter().enumerate() {
        if &chain[k].m != e {
            return Ok(Err(format!("M_{k} differs from its closed form")));
        }
    }
    for k in 1..=n as usize {
        if MnRecord::renormalized(&chain[k - 1]) != chain[k] {
            return Ok(Err(format!("M_{k} != M_{}(f)·[(x+1)(x+3)]^(3^{})", k - 1, k - 1)));
        }
    }
    Ok(Ok(format!("M_0..M_{n} satisfy the renormalization recursion")))
}

fn enumeration(ctx: &Ctx) -> Check {
    let n_max = ctx.pick(1, 2);
    let engine = ExactEngine::default();
    for n in 0..=n_max {
        let mut z = engine.compute_z(n)?;
        if ctx.has(Perturbation::ZCoefficient) {
            let mut c = z.coeffs().to_vec();
            c[0] += 1;
            z = crate::exact_poly::LaurentPolynomial::new(z.min_power(), c);
        }
        let brute = enumerate_partition_function(&build_gasket(n)?)?;
        if brute != z {
            return Ok(Err(format!("brute-force Z_{n} differs from the recursion")));
        }
    }
    Ok(Ok(format!("Z_0..Z_{n_max} match brute-force enumeration")))
}

fn t_factorization(ctx: &Ctx) -> Check {
    let n = ctx.exact_level();
    for k in 0..=n {
        let mut rec = TnRecord {
            level: k,
            t: t_by_recursion(k),
            factors: t_factors(k),
        };
        if ctx.has(Perturbation::TFactor) && k == n {
            rec.factors[0].multiplicity += 1;
        }
        if rec.factor_product() != rec.t {
            return Ok(Err(format!("T_{k} recursion differs from its product form")));
        }
    }
    Ok(Ok(format!("T_0..T_{n} equal their product forms")))
}

fn conjugacy(ctx: &Ctx) -> Check {
    let n = ctx.exact_level();
    let engine = ExactEngine::default();
    for k in 0..=n {
        let m = engine.compute_m(k)?;
        let mut t = t_by_recursion(k);
        if ctx.has(Perturbation::Conjugacy) {
            t = t.scale(&BigInt::from(2));
        }
        let report = conjugacy_report(&m, &t);
        if !report.passed {
            let at = report
                .first_mismatch
                .map(|(i, _, _)| format!(" (first mismatch at x^{i})"))
                .unwrap_or_default();
            return Ok(Err(format!("conjugacy fails at n = {k}{at}")));
        }
    }
    Ok(Ok(format!("conjugacy holds for n = 0..{n}")))
}

fn coefficients(ctx: &Ctx) -> Check {
    let n = ctx.exact_level();
    for mut rec in ExactEngine::default().m_chain(n)? {
        if ctx.has(Perturbation::Divisibility) && rec.level == n {
            let mut c = rec.m.clone().into_coeffs();
            c[0] += BigInt::one() << (crate::recursion::pow3(n) - 1) as usize;
            rec.m = IntPolynomial::new(c);
        }
        if let Err(e) = rec.check_invariants() {
            return Ok(Err(e));
        }
    }
    Ok(Ok(format!("M_0..M_{n} monic of degree 3^n with 2^(3^n) | M_n(2x+1)")))
}

fn measure_rate(ctx: &Ctx) -> Check {
    for n in 0..=10 {
        let zn = measure_at_level(MeasureKind::Zeta, n)?;
        let mut limit = truncated_limit(MeasureKind::Zeta, n + 30)?;
        if ctx.has(Perturbation::MeasureWeight) {
            limit.add(AtomGroup::Origin, rational(1, 1 << 20));
        }
        let tv = tv_distance(&zn, &limit);
        let want = expected_zeta_tv(n, n + 30);
        if tv != want {
            return Ok(Err(format!("tv(zeta_{n}, zeta_inf[J={}]) = {tv}, expected {want}", n + 30)));
        }
    }
    Ok(Ok("tv(zeta_n, zeta_inf[J=n+30]) = 2(2/3)^n - (2/3)^(n+30) for n <= 10".into()))
}

fn mass(ctx: &Ctx) -> Check {
    for n in 0..=10 {
        let mut mu = measure_at_level(MeasureKind::Mu, n)?;
        if ctx.has(Perturbation::Mass) && n > 0 {
            mu.add(
                AtomGroup::Orbit {
                    family: crate::zeros::OrbitFamily::F_MINUS_ONE,
                    depth: 0,
                    pullback: false,
                },
                rational(1, 3u32.pow(n) as i64),
            );
        }
        if mu.finite_mass() != Rational::one() {
            return Ok(Err(format!("finite mass of mu_{n} is {}", mu.finite_mass())));
        }
        let zeta = measure_at_level(MeasureKind::Zeta, n)?;
        if !zeta.total_mass().is_zero() {
            return Ok(Err(format!("total mass of zeta_{n} is {}", zeta.total_mass())));
        }
    }
    Ok(Ok("mu_n finite mass 1 and zeta_n total mass 0 for n <= 10".into()))
}

fn shifted(mut cloud: ZeroCloud, by: Complex64) -> ZeroCloud {
    for p in &mut cloud.points {
        p.point += by;
    }
    cloud
}

fn zeros(ctx: &Ctx) -> Check {
    let n_max = ctx.exact_level();
    let engine = ExactEngine::default();
    let delta = if ctx.has(Perturbation::ZeroPosition) {
        Complex64::new(1e-4, 0.0)
    } else {
        Complex64::zero()
    };
    let mut worst = 0f64;
    let mut closest = f64::INFINITY;
    for n in 0..=n_max {
        let m = engine.compute_m(n)?.m;
        let t = engine.compute_t(n)?.t;
        let tz = shifted(zeros_of_t(n)?, delta);
        for (cloud, poly, label) in [(shifted(zeros_of_m(n)?, delta), &m, "M"), (tz.clone(), &t, "T")] {
            let r = relative_residuals(&cloud, poly).into_iter().fold(0f64, f64::max);
            if !(r < 1e-6) {
                return Ok(Err(format!("relative residual {r:e} for a zero of {label}_{n}")));
            }
            worst = worst.max(r);
        }
        if let Some(d) = min_separation(&tz) {
            if !(d > 1e-6) {
                return Ok(Err(format!("zeros of T_{n} only {d:e} apart")));
            }
            closest = closest.min(d);
        }
    }
    Ok(Ok(format!(
        "n <= {n_max}: max relative residual {worst:.2e}, min separation {closest:.3e}"
    )))
}

fn inverse_branch(ctx: &Ctx) -> Check {
    let h = |x: Complex64| -> Result<Complex64> {
        let v = apply_h(x)?;
        Ok(if ctx.has(Perturbation::InverseBranch) { v + 1e-8 } else { v })
    };
    let grid = half_plane_grid(10);
    for &x in &grid {
        let r = (apply_f(h(x)?)? - x).norm();
        if !(r < 1e-10 * (1.0 + x.norm())) {
            return Ok(Err(format!("|f(h(x)) - x| = {r:e} at x = {x}")));
        }
    }
    let n = ctx.pick(200, 1000);
    let cfg = BranchConfig::default();
    for &x in &grid {
        let mut w = x;
        for k in 1..=n {
            w = h(w)?;
            if !(w.re - x.re - 3.0 * k as f64 > 0.0) {
                return Ok(Err(format!("Re h^{k}(x) - Re x - 3k <= 0 at x = {x}")));
            }
        }
        cfg.validate()?;
    }
    let c1 = fit_iteration_constant(&grid, n)?;
    let c2 = fit_iteration_constant(&half_plane_grid(20), n)?;
    if !(c1.is_finite() && c2.is_finite() && (c1 - c2).abs() <= 0.25 * c1.max(c2)) {
        return Ok(Err(format!("fitted constant not grid-stable: {c1} vs {c2}")));
    }
    Ok(Ok(format!("fitted C = {c1:.4} (10x10 grid), {c2:.4} (20x20 grid)")))
}

fn fatou(ctx: &Ctx) -> Check {
    let n = 1000;
    let bump = if ctx.has(Perturbation::Fatou) { 1e-5 } else { 0.0 };
    let mut worst = 0f64;
    for x in half_plane_grid(10) {
        let mut r = abel_residual(x, n)?;
        if bump != 0.0 {
            let hx = apply_h(x)?;
            r = fatou_coordinate(hx, n)? + bump * hx - fatou_coordinate(x, n)? - bump * x - 4.0;
        }
        worst = worst.max(r.norm());
        if !(r.norm() < 1e-6) {
            return Ok(Err(format!("|F(h(x)) - F(x) - 4| = {:e} at x = {x}", r.norm())));
        }
    }
    for x in [10.5, 12.0, 50.0, 1e3, 1e6] {
        let f = fatou_f(Complex64::new(x, 0.0), n)?;
        if f.im != 0.0 {
            return Ok(Err(format!("Im F_n({x}) = {:e}", f.im)));
        }
    }
    Ok(Ok(format!("max Abel residual {worst:.2e} at n = {n}")))
}

fn gap(ctx: &Ctx) -> Check {
    let n_max = ctx.pick(8, 12);
    let mut smallest = f64::INFINITY;
    for n in 0..=n_max {
        let mut cloud = zeros_of_z(n)?;
        if ctx.has(Perturbation::Gap) && n == n_max {
            cloud.points[0].point = Complex64::new(1.0, 0.0);
        }
        let d = distance_to_ray(&cloud)?;
        if !(d > GAP_FLOOR) {
            return Ok(Err(format!("distance to the ray {d:.6} at n = {n} is below the floor {GAP_FLOOR}")));
        }
        smallest = smallest.min(d);
    }
    Ok(Ok(format!("min distance {smallest:.6} over n <= {n_max} (floor {GAP_FLOOR})")))
}

fn pressure(ctx: &Ctx) -> Check {
    let e: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&y| asymptote_deviation(y, 50).map(f64::abs))
        .collect::<Result<_>>()?;
    if !(e[0] > e[1] && e[1] > e[2] && e[2] < 1e-2) {
        return Ok(Err(format!("asymptote errors not decreasing below 1e-2: {e:?}")));
    }
    let engine = ExactEngine::default();
    let bump = if ctx.has(Perturbation::Pressure) { 1e-9 } else { 0.0 };
    let ys = [rational(2, 1), rational(3, 1), rational(1, 2), rational(5, 3), rational(10, 1)];
    let mut worst = 0f64;
    for n in 0..=4 {
        for y in &ys {
            let yf = num_traits::ToPrimitive::to_f64(y).unwrap();
            let fast = pressure_eval(Complex64::new(yf, 0.0), n)?.p_value + bump;
            let exact = exact_pressure(&engine, y, n)?;
            let rel = (fast - exact).abs() / exact.abs();
            worst = worst.max(rel);
            if !(rel < 1e-10) {
                return Ok(Err(format!("p_{n}({y}) off by {rel:e} relative to the exact value")));
            }
        }
    }
    Ok(Ok(format!("e(1e2..1e4) = {:.1e}, {:.1e}, {:.1e}; max relative error vs exact {worst:.1e}", e[0], e[1], e[2])))
}

fn fault_injection(ctx: &Ctx) -> Check {
    for fault in Perturbation::ALL {
        let target = fault.target();
        let out = target.run(Profile::Quick, Some(fault));
        if out.passed {
            return Ok(Err(format!("fault {fault} went unnoticed by {target}")));
        }
    }
    let _ = ctx;
    Ok(Ok(format!("all {} faults caught by their criteria", Perturbation::ALL.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_profile_passes() {
        let report = run_verify(Profile::Quick, None);
        for c in &report.criteria {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(report.criteria.len(), 13);
    }

    #[test]
    fn tampered_m_coefficient_names_the_identity() {
        let report = run_verify(Profile::Quick, Some(Perturbation::MCoefficient));
        assert!(!report.passed);
        let failed = report.first_failure().unwrap();
        assert_eq!(failed.name, "M_n renormalization recursion identity");
        assert_eq!(report.criteria.iter().filter(|c| !c.passed).count(), 1);
    }

    #[test]
    fn names_round_trip() {
        for p in Perturbation::ALL {
            assert_eq!(p.name().parse::<Perturbation>().unwrap(), p);
        }
        assert!("nope".parse::<Perturbation>().is_err());
        assert_eq!("full".parse::<Profile>().unwrap(), Profile::Full);
    }
}
