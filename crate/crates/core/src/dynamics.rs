//! Complex dynamics of the renormalization map `f(x) = (x² − x + 4)/(x + 3)`.
//!
//! Also covers its polynomial model `g(z) = z² + z` (conjugate to `f` via
//! `φ(x) = 4/(x − 1)`), the inverse branch `h` of `f` that behaves like
//! `x ↦ x + 4` near infinity, the Fatou coordinate linearizing `h`, and
//! backward orbits used to locate zeros.

use std::cmp::Ordering;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{guard, GasketError, Result};

pub type ComplexValue = Complex64;

/// Deepest backward orbit computed at double precision.
pub const MAX_ORBIT_DEPTH: u32 = 20;

pub const DOUBLE_PRECISION_BITS: u32 = 53;

/// Lower bound on `Re(x)` for the half-plane where `h` is iterated.
pub const H_DOMAIN_FLOOR: f64 = 10.0;

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchConfig {
    pub precision: u32,
    pub h_domain_floor: f64,
    pub max_iterations: usize,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            precision: DOUBLE_PRECISION_BITS,
            h_domain_floor: H_DOMAIN_FLOOR,
            max_iterations: 1000,
        }
    }
}

impl BranchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precision != DOUBLE_PRECISION_BITS {
            return Err(GasketError::Precision(self.precision));
        }
        if self.h_domain_floor.is_nan() || self.h_domain_floor < H_DOMAIN_FLOOR {
            return Err(GasketError::domain(
                "BranchConfig",
                format!("h_domain_floor {} is below {H_DOMAIN_FLOOR}", self.h_domain_floor),
            ));
        }
        Ok(())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn apply_f(x: Complex64) -> Result<Complex64> {
    if x == c(-3.0, 0.0) {
        return Err(GasketError::domain("f", "pole at x = -3"));
    }
    // (x²−x+4)/(x+3) = x − 4 + 16/(x+3), which avoids squaring large inputs.
    Ok(x - 4.0 + 16.0 / (x + 3.0))
}

pub fn apply_f_sphere(x: SpherePoint) -> SpherePoint {
    match x {
        SpherePoint::Infinity => SpherePoint::Infinity,
        SpherePoint::Finite(z) => apply_f(z).map_or(SpherePoint::Infinity, SpherePoint::Finite),
    }
}

pub fn apply_g(z: Complex64) -> Complex64 {
    z * z + z
}

pub fn apply_phi(x: Complex64) -> Result<Complex64> {
    if x == c(1.0, 0.0) {
        return Err(GasketError::domain("phi", "pole at x = 1"));
    }
    Ok(4.0 / (x - 1.0))
}

pub fn apply_phi_sphere(x: SpherePoint) -> SpherePoint {
    match x {
        SpherePoint::Infinity => SpherePoint::Finite(c(0.0, 0.0)),
        SpherePoint::Finite(z) => apply_phi(z).map_or(SpherePoint::Infinity, SpherePoint::Finite),
    }
}

/// `φ⁻¹(z) = 1 + 4/z`.
pub fn apply_phi_inv(z: Complex64) -> Result<Complex64> {
    if z == c(0.0, 0.0) {
        return Err(GasketError::domain("phi_inv", "pole at z = 0"));
    }
    Ok(1.0 + 4.0 / z)
}

pub fn apply_phi_inv_sphere(z: SpherePoint) -> SpherePoint {
    match z {
        SpherePoint::Infinity => SpherePoint::Finite(c(1.0, 0.0)),
        SpherePoint::Finite(w) => apply_phi_inv(w).map_or(SpherePoint::Infinity, SpherePoint::Finite),
    }
}

/// `q(y) = y⁴`.
pub fn apply_q(y: Complex64) -> Complex64 {
    let y2 = y * y;
    y2 * y2
}

/// Principal square root, defined everywhere; on the negative real axis it
/// returns the root with positive imaginary part.
pub fn csqrt(w: Complex64) -> Complex64 {
    if w.re == 0.0 && w.im == 0.0 {
        return c(0.0, w.im);
    }
    let t = ((w.norm() + w.re.abs()) / 2.0).sqrt();
    if w.re >= 0.0 {
        c(t, w.im / (2.0 * t))
    } else {
        c(w.im.abs() / (2.0 * t), t.copysign(w.im))
    }
}

/// Principal square root on `ℂ ∖ (−∞, 0]`; its real part is positive.
pub fn principal_sqrt(w: Complex64) -> Result<Complex64> {
    if w.im == 0.0 && w.re <= 0.0 {
        return Err(GasketError::domain(
            "principal_sqrt",
            format!("{w} lies on the cut (-inf, 0]"),
        ));
    }
    Ok(csqrt(w))
}

/// Principal logarithm on `ℂ ∖ (−∞, 0]`, zero at 1.
pub fn principal_log(w: Complex64) -> Complex64 {
    c(w.norm().ln(), w.im.atan2(w.re))
}

/// `𝔞(x) = 1 − 64/(x+7)²`.
pub fn apply_a(x: Complex64) -> Result<Complex64> {
    if x == c(-7.0, 0.0) {
        return Err(GasketError::domain("a", "pole at x = -7"));
    }
    let u = x + 7.0;
    let a = 1.0 - 64.0 / (u * u);
    debug_assert!(
        x.re <= H_DOMAIN_FLOOR || (a.re > 0.0 && a.norm() > 225.0 / 289.0 - 1e-12),
        "a({x}) = {a} violates the half-plane bounds"
    );
    Ok(a)
}

fn on_slit(x: Complex64) -> bool {
    x.im == 0.0 && (-15.0..=1.0).contains(&x.re)
}

/// The inverse branch `h(x) = (x + 1 + (x+7)·s(𝔞(x)))/2` of `f`, holomorphic
/// off the slit `[−15, 1]` and asymptotic to `x + 4`.
pub fn apply_h(x: Complex64) -> Result<Complex64> {
    if on_slit(x) {
        return Err(GasketError::domain("h", format!("{x} lies on the slit [-15, 1]")));
    }
    let s = principal_sqrt(apply_a(x)?)?;
    Ok((x + 1.0 + (x + 7.0) * s) / 2.0)
}

pub fn apply_h_sphere(x: SpherePoint) -> Result<SpherePoint> {
    match x {
        SpherePoint::Infinity => Ok(SpherePoint::Infinity),
        SpherePoint::Finite(z) => apply_h(z).map(SpherePoint::Finite),
    }
}

fn check_half_plane(x: Complex64, config: &BranchConfig) -> Result<()> {
    if x.re.is_nan() || x.re <= config.h_domain_floor {
        return Err(GasketError::domain(
            "iterate_h",
            format!("Re({x}) must exceed {}", config.h_domain_floor),
        ));
    }
    Ok(())
}

/// `[x, h(x), …, h^{∘n}(x)]`; every point stays in the half-plane.
pub fn iterate_h(x: Complex64, n: usize, config: &BranchConfig) -> Result<Vec<Complex64>> {
    config.validate()?;
    check_half_plane(x, config)?;
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(x);
    let mut w = x;
    for _ in 0..n {
        w = apply_h(w)?;
        check_half_plane(w, config)?;
        orbit.push(w);
    }
    Ok(orbit)
}

fn h_power(x: Complex64, n: usize) -> Result<Complex64> {
    check_half_plane(x, &BranchConfig::default())?;
    (0..n).try_fold(x, |w, _| apply_h(w))
}

/// A `side × side` grid in the half-plane `Re x > 10`: real parts from 10.5
/// in steps of `90/side`, imaginary parts from −40 in the same steps.
pub fn half_plane_grid(side: usize) -> Vec<Complex64> {
    let step = 90.0 / side as f64;
    (0..side)
        .flat_map(|i| (0..side).map(move |j| Complex64::new(10.5 + step * i as f64, -40.0 + step * j as f64)))
        .collect()
}

/// `h^{∘n}(x) − x − 4n + 4·log((x+4n)/x)`, the deviation of the orbit from a
/// logarithmically corrected translation.
pub fn iteration_error(x: Complex64, n: usize) -> Result<Complex64> {
    let hn = h_power(x, n)?;
    let nn = n as f64;
    Ok(hn - x - 4.0 * nn + 4.0 * principal_log((x + 4.0 * nn) / x))
}

/// Largest `|iteration_error(x, n)| · Re(x)/log Re(x)` over the grid and
/// `1 ≤ n ≤ n_max`.
pub fn fit_iteration_constant(grid: &[Complex64], n_max: usize) -> Result<f64> {
    let sups: Vec<f64> = grid
        .par_iter()
        .map(|&x| -> Result<f64> {
            check_half_plane(x, &BranchConfig::default())?;
            let scale = x.re / x.re.ln();
            let mut w = x;
            let mut best = 0f64;
            for n in 1..=n_max {
                w = apply_h(w)?;
                let nn = n as f64;
                let err = w - x - 4.0 * nn + 4.0 * principal_log((x + 4.0 * nn) / x);
                best = best.max(err.norm() * scale);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(sups.into_iter().fold(0.0, f64::max))
}

/// The truncated Fatou coordinate `F_n(x) = h^{∘n}(x) − 4n + 4·log(x+4n)`.
pub fn fatou_f(x: Complex64, n: usize) -> Result<Complex64> {
    let hn = h_power(x, n)?;
    let nn = n as f64;
    Ok(hn - 4.0 * nn + 4.0 * principal_log(x + 4.0 * nn))
}

/// Asymptotic expansion of the Fatou coordinate at a point far out on an
/// `h`-orbit. Solving the Abel equation order by order in `1/w` gives
/// `F(w) = w + 4·log w + 4/w − 46/(3w²) + O(log w / w³)`.
fn fatou_tail(w: Complex64) -> Complex64 {
    let inv = w.inv();
    w + 4.0 * principal_log(w) + 4.0 * inv - (46.0 / 3.0) * inv * inv
}

/// Limit Fatou coordinate `F = lim F_n`, evaluated as
/// `F(h^{∘n}(x)) − 4n` with the asymptotic expansion at the end of the orbit.
///
/// The raw `F_n` converges like `log n / n`; the expansion removes the
/// leading error terms, so `n = 10³` is already accurate to about 1e-11.
pub fn fatou_coordinate(x: Complex64, n: usize) -> Result<Complex64> {
    let hn = h_power(x, n)?;
    Ok(fatou_tail(hn) - 4.0 * n as f64)
}

/// `F(h(x)) − F(x) − 4` for the limit coordinate; zero in exact arithmetic.
pub fn abel_residual(x: Complex64, n: usize) -> Result<Complex64> {
    Ok(fatou_coordinate(apply_h(x)?, n)? - fatou_coordinate(x, n)? - 4.0)
}

fn sort_pair(a: Complex64, b: Complex64) -> [Complex64; 2] {
    // adding +0.0 turns −0.0 into +0.0
    let clean = |z: Complex64| Complex64::new(z.re + 0.0, z.im + 0.0);
    let (mut a, mut b) = (clean(a), clean(b));
    if cmp_points(&a, &b) == Ordering::Greater {
        std::mem::swap(&mut a, &mut b);
    }
    [a, b]
}

/// Orders by real part, then imaginary part.
pub fn cmp_points(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// One Newton step on `z² + bz + c0 = 0`.
fn polish(z: Complex64, b: Complex64, c0: Complex64) -> Complex64 {
    let d = 2.0 * z + b;
    if d.norm() == 0.0 {
        return z;
    }
    let step = (z * z + b * z + c0) / d;
    if step.is_finite() {
        z - step
    } else {
        z
    }
}

fn quadratic_roots(b: Complex64, c0: Complex64) -> [Complex64; 2] {
    let disc = csqrt(b * b - 4.0 * c0);
    // Avoid cancellation: compute the larger root first.
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) / 2.0
    } else {
        -(b - disc) / 2.0
    };
    let (r1, r2) = if q.norm() == 0.0 {
        (q, q)
    } else {
        (q, c0 / q)
    };
    sort_pair(polish(r1, b, c0), polish(r2, b, c0))
}

/// Roots of `x² − (1+w)x + (4 − 3w) = 0`, i.e. `f^{-1}(w)`, sorted.
pub fn preimages_f(w: Complex64) -> [Complex64; 2] {
    quadratic_roots(-(1.0 + w), 4.0 - 3.0 * w)
}

/// Roots of `z² + z − w = 0`, i.e. `g^{-1}(w)`, sorted.
pub fn preimages_g(w: Complex64) -> [Complex64; 2] {
    quadratic_roots(c(1.0, 0.0), -w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    F,
    G,
}

impl MapKind {
    pub fn preimages(self, w: Complex64) -> [Complex64; 2] {
        match self {
            MapKind::F => preimages_f(w),
            MapKind::G => preimages_g(w),
        }
    }

    pub fn apply(self, z: Complex64) -> Result<Complex64> {
        match self {
            MapKind::F => apply_f(z),
            MapKind::G => Ok(apply_g(z)),
        }
    }
}

/// A point of a backward orbit with its provenance: `word` records the
/// branch taken at each level (bit `depth−1−k` is the choice at level `k+1`,
/// 0 for the first root in sorted order).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub point: Complex64,
    pub depth: u32,
    pub word: u64,
}

/// Level sets `map^{-j}(seed)` for `j = 0..=depth`, each sorted by real then
/// imaginary part and holding `2^j` points counted with multiplicity.
#[derive(Clone, Debug)]
pub struct BackwardOrbit {
    pub seed: Complex64,
    pub map: MapKind,
    pub levels: Vec<Vec<OrbitPoint>>,
}

impl BackwardOrbit {
    pub fn level(&self, j: u32) -> &[OrbitPoint] {
        &self.levels[j as usize]
    }

    pub fn points(&self) -> impl Iterator<Item = &OrbitPoint> {
        self.levels.iter().flatten()
    }
}

pub fn backward_orbit(seed: Complex64, depth: u32, map: MapKind) -> Result<BackwardOrbit> {
    guard("backward orbit depth", depth as u64, MAX_ORBIT_DEPTH as u64)?;
    let mut levels = vec![vec![OrbitPoint {
        point: seed,
        depth: 0,
        word: 0,
    }]];
    for j in 1..=depth {
        let prev = levels.last().unwrap();
        let mut next: Vec<OrbitPoint> = prev
            .par_iter()
            .flat_map_iter(|parent| {
                let roots = map.preimages(parent.point);
                (0..2).map(move |b| OrbitPoint {
                    point: roots[b],
                    depth: j,
                    word: parent.word << 1 | b as u64,
                })
            })
            .collect();
        next.par_sort_by(|a, b| cmp_points(&a.point, &b.point).then(a.word.cmp(&b.word)));
        levels.push(next);
    }
    Ok(BackwardOrbit { seed, map, levels })
}

/// Smallest distance between two distinct entries of `points`, by sorting
/// on the real part and sweeping. `None` for fewer than two points.
pub fn min_pairwise_distance(points: &[Complex64]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mut pts = points.to_vec();
    pts.sort_by(cmp_points);
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[j].re - pts[i].re >= best {
                break;
            }
            best = best.min((pts[j] - pts[i]).norm());
        }
    }
    Some(best)
}
