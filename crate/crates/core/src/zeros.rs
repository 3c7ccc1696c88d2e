//! Zero sets of `T_n`, `M_n` and `Z_n`, assembled from backward orbits.
//!
//! Every zero carries its provenance: the orbit family it came from, its
//! depth, the branch word, and (for `Z_n`) which fourth root was taken.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_phi_inv, backward_orbit, cmp_points, min_pairwise_distance, MapKind};
use crate::error::{guard, GasketError, Result};
use crate::exact_poly::IntPolynomial;
use crate::recursion::pow3;

/// A seed and the map whose backward orbit is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitFamily {
    pub map: MapKind,
    pub seed: i8,
}

impl OrbitFamily {
    pub const G_MINUS_TWO: OrbitFamily = OrbitFamily { map: MapKind::G, seed: -2 };
    pub const G_MINUS_ONE: OrbitFamily = OrbitFamily { map: MapKind::G, seed: -1 };
    pub const F_MINUS_ONE: OrbitFamily = OrbitFamily { map: MapKind::F, seed: -1 };
    pub const F_MINUS_THREE: OrbitFamily = OrbitFamily { map: MapKind::F, seed: -3 };

    /// The family carried onto this one by `φ⁻¹` (g-side to f-side).
    pub fn conjugate(self) -> OrbitFamily {
        match (self.map, self.seed) {
            (MapKind::G, -2) => Self::F_MINUS_ONE,
            (MapKind::G, -1) => Self::F_MINUS_THREE,
            (MapKind::F, -1) => Self::G_MINUS_TWO,
            (MapKind::F, -3) => Self::G_MINUS_ONE,
            _ => self,
        }
    }
}

impl fmt::Display for OrbitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.map {
            MapKind::F => "f",
            MapKind::G => "g",
        };
        write!(f, "{m}^-j({})", self.seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZeroSource {
    T,
    M,
    Z,
}

impl fmt::Display for ZeroSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroSource::T => "T",
            ZeroSource::M => "M",
            ZeroSource::Z => "Z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroPoint {
    pub point: Complex64,
    pub multiplicity: u64,
    pub family: OrbitFamily,
    pub depth: u32,
    pub word: u64,
    /// Index `k` of the fourth root `|ω|^{1/4} e^{i(arg ω + 2πk)/4}`.
    pub root: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct ZeroCloud {
    pub source: ZeroSource,
    pub level: u32,
    pub points: Vec<ZeroPoint>,
}

impl ZeroCloud {
    pub fn total_multiplicity(&self) -> u64 {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// Degree of the polynomial whose zeros this is (`4·3^n` for the
    /// numerator of `Z_n`).
    pub fn expected_degree(&self) -> u64 {
        match self.source {
            ZeroSource::T | ZeroSource::M => pow3(self.level),
            ZeroSource::Z => 4 * pow3(self.level),
        }
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.point).collect()
    }

    /// Points of one family at one depth.
    pub fn group(&self, family: OrbitFamily, depth: u32) -> Vec<Complex64> {
        self.points
            .iter()
            .filter(|p| p.family == family && p.depth == depth)
            .map(|p| p.point)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "source", "depth", "multiplicity", "re", "im"])?;
        for p in &self.points {
            w.write_record([
                self.level.to_string(),
                self.source.to_string(),
                p.depth.to_string(),
                p.multiplicity.to_string(),
                p.point.re.to_string(),
                p.point.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn orbit_zeros(family: OrbitFamily, depth: u32, multiplicity: u64) -> Result<Vec<ZeroPoint>> {
    let orbit = backward_orbit(Complex64::new(family.seed as f64, 0.0), depth, family.map)?;
    Ok(orbit
        .level(depth)
        .iter()
        .map(|p| ZeroPoint {
            point: p.point,
            multiplicity,
            family,
            depth,
            word: p.word,
            root: None,
        })
        .collect())
}

/// Shared layout of the `T_n` and `M_n` zero sets: the depth-`j` preimages
/// of `inner` with multiplicity `3^{n-j-1}` for `j < n`, and the depth-`n`
/// preimages of `outer` with multiplicity 1.
fn layered_zeros(n: u32, inner: OrbitFamily, outer: OrbitFamily) -> Result<Vec<ZeroPoint>> {
    guard("zero-cloud level", n as u64, crate::dynamics::MAX_ORBIT_DEPTH as u64)?;
    let mut pts = Vec::new();
    for j in 0..n {
        pts.extend(orbit_zeros(inner, j, pow3(n - j - 1))?);
    }
    pts.extend(orbit_zeros(outer, n, 1)?);
    Ok(pts)
}

pub fn zeros_of_t(n: u32) -> Result<ZeroCloud> {
    Ok(ZeroCloud {
        source: ZeroSource::T,
        level: n,
        points: layered_zeros(n, OrbitFamily::G_MINUS_TWO, OrbitFamily::G_MINUS_ONE)?,
    })
}

pub fn zeros_of_m(n: u32) -> Result<ZeroCloud> {
    Ok(ZeroCloud {
        source: ZeroSource::M,
        level: n,
        points: layered_zeros(n, OrbitFamily::F_MINUS_ONE, OrbitFamily::F_MINUS_THREE)?,
    })
}

/// The same set as [`zeros_of_m`], obtained as `φ⁻¹` of the `T_n` zeros.
pub fn zeros_of_m_via_t(n: u32) -> Result<ZeroCloud> {
    let t = zeros_of_t(n)?;
    let points = t
        .points
        .iter()
        .map(|p| {
            Ok(ZeroPoint {
                point: apply_phi_inv(p.point)?,
                family: p.family.conjugate(),
                ..*p
            })
        })
        .collect::<Result<_>>()?;
    Ok(ZeroCloud {
        source: ZeroSource::M,
        level: n,
        points,
    })
}

/// The four fourth roots of `w`, `k = 0..4`.
pub fn fourth_roots(w: Complex64) -> [Complex64; 4] {
    let r = w.norm().powf(0.25);
    let theta = w.im.atan2(w.re) / 4.0;
    std::array::from_fn(|k| Complex64::from_polar(r, theta + k as f64 * std::f64::consts::FRAC_PI_2))
}

/// Zeros of `y^{3^n}·Z_n(y)`: the `q`-pullback of the `M_n` zeros.
pub fn zeros_of_z(n: u32) -> Result<ZeroCloud> {
    let m = zeros_of_m(n)?;
    let points = m
        .points
        .iter()
        .flat_map(|p| {
            fourth_roots(p.point)
                .into_iter()
                .enumerate()
                .map(move |(k, y)| ZeroPoint {
                    point: y,
                    root: Some(k as u8),
                    ..*p
                })
        })
        .collect();
    Ok(ZeroCloud {
        source: ZeroSource::Z,
        level: n,
        points,
    })
}

/// Distance from `p` to the closed ray `[0, ∞)`.
pub fn distance_to_ray_point(p: Complex64) -> f64 {
    if p.re >= 0.0 {
        p.im.abs()
    } else {
        p.norm()
    }
}

pub fn distance_to_ray(cloud: &ZeroCloud) -> Result<f64> {
    cloud
        .points
        .iter()
        .map(|p| distance_to_ray_point(p.point))
        .reduce(f64::min)
        .ok_or(GasketError::Empty("distance_to_ray"))
}

/// `(min Re, max |Im|)` over the cloud.
pub fn strip_bounds(cloud: &ZeroCloud) -> Result<(f64, f64)> {
    if cloud.points.is_empty() {
        return Err(GasketError::Empty("strip_bounds"));
    }
    Ok(cloud.points.iter().fold((f64::INFINITY, 0f64), |(lo, hi), p| {
        (lo.min(p.point.re), hi.max(p.point.im.abs()))
    }))
}

/// `|P^{(m-1)}(r)| / (|P^{(m)}(r)|·(1 + |r|))` for each zero `r` of
/// multiplicity `m`, with both derivatives evaluated exactly at the
/// floating-point root. For simple zeros this is `|P| / (|P'|·(1 + |r|))`.
pub fn relative_residuals(cloud: &ZeroCloud, poly: &IntPolynomial) -> Vec<f64> {
    use rayon::prelude::*;
    use std::collections::BTreeMap;
    let mut derivs: BTreeMap<u64, (IntPolynomial, IntPolynomial)> = BTreeMap::new();
    for p in &cloud.points {
        derivs.entry(p.multiplicity).or_insert_with(|| {
            let mut lo = poly.clone();
            for _ in 1..p.multiplicity {
                lo = lo.derivative();
            }
            let hi = lo.derivative();
            (lo, hi)
        });
    }
    cloud
        .points
        .par_iter()
        .map(|p| {
            let (lo, hi) = &derivs[&p.multiplicity];
            let num = lo.eval_complex_exact(p.point);
            if num.is_zero() {
                return 0.0;
            }
            let den = hi.eval_complex_exact(p.point).log2_abs();
            (num.log2_abs() - den - (1.0 + p.point.norm()).log2()).exp2()
        })
        .collect()
}

/// Pairs the two clouds within each (family, depth) group by nearest
/// neighbour and returns the largest pairing distance. Errors if the
/// groups do not have matching sizes.
pub fn max_pairing_distance(a: &ZeroCloud, b: &ZeroCloud) -> Result<f64> {
    let mut keys: Vec<(OrbitFamily, u32)> = a.points.iter().map(|p| (p.family, p.depth)).collect();
    keys.sort();
    keys.dedup();
    let mut worst = 0f64;
    for (family, depth) in keys {
        let xs = a.group(family, depth);
        let mut ys = b.group(family, depth);
        if xs.len() != ys.len() {
            return Err(GasketError::Invariant(format!(
                "{family} depth {depth}: {} points vs {}",
                xs.len(),
                ys.len()
            )));
        }
        ys.sort_by(cmp_points);
        for x in xs {
            let (idx, d) = ys
                .iter()
                .enumerate()
                .map(|(i, y)| (i, (x - y).norm()))
                .min_by(|l, r| l.1.total_cmp(&r.1))
                .unwrap();
            worst = worst.max(d);
            ys.swap_remove(idx);
        }
    }
    Ok(worst)
}

/// Minimum distance between distinct zeros of the cloud.
pub fn min_separation(cloud: &ZeroCloud) -> Option<f64> {
    min_pairwise_distance(&cloud.positions())
}
