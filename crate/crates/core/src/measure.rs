//! Atomic measures `τ_n`, `μ_n`, `ζ_n` and truncations of their limits.
//!
//! Atoms are identified by provenance, never by position. All atoms of one
//! family at one depth (and, for `ζ`, all four fourth roots of them) carry
//! the same weight, so a measure is stored as one exact weight per group.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{backward_orbit, MapKind, MAX_ORBIT_DEPTH};
use crate::error::{guard, Result};
use crate::exact_poly::Rational;
use crate::zeros::{fourth_roots, OrbitFamily};

/// Largest depth for weight bookkeeping; point listings stop at
/// [`MAX_ORBIT_DEPTH`].
pub const MAX_MEASURE_DEPTH: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Tau,
    Mu,
    Zeta,
}

impl std::str::FromStr for MeasureKind {
    type Err = crate::GasketError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tau" | "τ" => Ok(MeasureKind::Tau),
            "mu" | "μ" => Ok(MeasureKind::Mu),
            "zeta" | "ζ" => Ok(MeasureKind::Zeta),
            other => Err(crate::GasketError::Parse(format!("unknown measure kind {other:?}"))),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Tau => "tau",
            MeasureKind::Mu => "mu",
            MeasureKind::Zeta => "zeta",
        })
    }
}

/// Provenance key of a group of atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomGroup {
    Origin,
    Infinity,
    Orbit {
        family: OrbitFamily,
        depth: u32,
        /// Atoms are the fourth roots of the orbit points.
        pullback: bool,
    },
}

impl AtomGroup {
    /// Number of atoms in the group.
    pub fn count(&self) -> u128 {
        match *self {
            AtomGroup::Origin | AtomGroup::Infinity => 1,
            AtomGroup::Orbit { depth, pullback, .. } => (1u128 << depth) * if pullback { 4 } else { 1 },
        }
    }

    pub fn is_finite_plane(&self) -> bool {
        !matches!(self, AtomGroup::Infinity)
    }
}

impl fmt::Display for AtomGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomGroup::Origin => f.write_str("0"),
            AtomGroup::Infinity => f.write_str("inf"),
            AtomGroup::Orbit { family, depth, pullback } => {
                let m = match family.map {
                    MapKind::F => "f",
                    MapKind::G => "g",
                };
                if *pullback {
                    write!(f, "q^-1 {m}^-{depth}({})", family.seed)
                } else {
                    write!(f, "{m}^-{depth}({})", family.seed)
                }
            }
        }
    }
}

/// Where an individual atom sits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtomSite {
    Origin,
    Infinity,
    Point(Complex64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub group: AtomGroup,
    pub word: u64,
    pub root: Option<u8>,
    pub site: AtomSite,
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    pub label: String,
    /// Per-atom weight of each group; zero weights are never stored.
    groups: BTreeMap<AtomGroup, Rational>,
}

fn third_power(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(3u8).pow(k))
}

impl AtomicMeasure {
    pub fn new(label: impl Into<String>) -> Self {
        AtomicMeasure {
            label: label.into(),
            groups: BTreeMap::new(),
        }
    }

    /// Adds `weight` to every atom of `group`.
    pub fn add(&mut self, group: AtomGroup, weight: Rational) {
        let w = self.groups.entry(group).or_insert_with(Rational::zero);
        *w += weight;
        if w.is_zero() {
            self.groups.remove(&group);
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = (&AtomGroup, &Rational)> {
        self.groups.iter()
    }

    pub fn weight(&self, group: &AtomGroup) -> Rational {
        self.groups.get(group).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn atom_count(&self) -> u128 {
        self.groups.keys().map(AtomGroup::count).sum()
    }

    fn group_mass(group: &AtomGroup, w: &Rational) -> Rational {
        w * Rational::from_integer(BigInt::from(group.count()))
    }

    /// Signed total mass including the atoms at 0 and ∞.
    pub fn total_mass(&self) -> Rational {
        self.groups.iter().map(|(g, w)| Self::group_mass(g, w)).sum()
    }

    /// Signed mass of the atoms in the finite plane (everything but ∞).
    pub fn finite_mass(&self) -> Rational {
        self.groups
            .iter()
            .filter(|(g, _)| g.is_finite_plane())
            .map(|(g, w)| Self::group_mass(g, w))
            .sum()
    }

    pub fn max_depth(&self) -> u32 {
        self.groups
            .keys()
            .filter_map(|g| match g {
                AtomGroup::Orbit { depth, .. } => Some(*depth),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Every atom with its position. Limited to depths within the orbit
    /// guard.
    pub fn atoms(&self) -> Result<Vec<Atom>> {
        guard("explicit atom depth", self.max_depth() as u64, MAX_ORBIT_DEPTH as u64)?;
        let mut out = Vec::new();
        for (group, weight) in &self.groups {
            match *group {
                AtomGroup::Origin => out.push(Atom {
                    group: *group,
                    word: 0,
                    root: None,
                    site: AtomSite::Origin,
                    weight: weight.clone(),
                }),
                AtomGroup::Infinity => out.push(Atom {
                    group: *group,
                    word: 0,
                    root: None,
                    site: AtomSite::Infinity,
                    weight: weight.clone(),
                }),
                AtomGroup::Orbit { family, depth, pullback } => {
                    let orbit = backward_orbit(Complex64::new(family.seed as f64, 0.0), depth, family.map)?;
                    for p in orbit.level(depth) {
                        if pullback {
                            for (k, y) in fourth_roots(p.point).into_iter().enumerate() {
                                out.push(Atom {
                                    group: *group,
                                    word: p.word,
                                    root: Some(k as u8),
                                    site: AtomSite::Point(y),
                                    weight: weight.clone(),
                                });
                            }
                        } else {
                            out.push(Atom {
                                group: *group,
                                word: p.word,
                                root: None,
                                site: AtomSite::Point(p.point),
                                weight: weight.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// JSON form. Groups are always listed; individual atoms only when
    /// `with_atoms` is set.
    pub fn to_json(&self, with_atoms: bool) -> Result<Value> {
        let groups: Vec<Value> = self
            .groups
            .iter()
            .map(|(g, w)| {
                json!({
                    "group": g.to_string(),
                    "count": g.count().to_string(),
                    "weight": rational_json(w),
                })
            })
            .collect();
        let mut v = json!({
            "label": self.label,
            "total_mass": rational_json(&self.total_mass()),
            "finite_mass": rational_json(&self.finite_mass()),
            "groups": groups,
        });
        if with_atoms {
            let atoms: Vec<Value> = self
                .atoms()?
                .into_iter()
                .map(|a| {
                    let (re, im) = match a.site {
                        AtomSite::Origin => (json!(0.0), json!(0.0)),
                        AtomSite::Infinity => (json!("inf"), json!("inf")),
                        AtomSite::Point(z) => (json!(z.re), json!(z.im)),
                    };
                    json!({
                        "group": a.group.to_string(),
                        "word": a.word,
                        "root": a.root,
                        "re": re,
                        "im": im,
                        "weight": rational_json(&a.weight),
                    })
                })
                .collect();
            v["atoms"] = Value::Array(atoms);
        }
        Ok(v)
    }

    pub fn write_json<W: Write>(&self, out: W, with_atoms: bool) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_json(with_atoms)?)?;
        Ok(())
    }
}

pub fn rational_json(r: &Rational) -> Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string() })
}

/// Inner and outer seed families for each kind, before any pullback.
fn families(kind: MeasureKind) -> (OrbitFamily, OrbitFamily) {
    match kind {
        MeasureKind::Tau => (OrbitFamily::G_MINUS_TWO, OrbitFamily::G_MINUS_ONE),
        MeasureKind::Mu | MeasureKind::Zeta => (OrbitFamily::F_MINUS_ONE, OrbitFamily::F_MINUS_THREE),
    }
}

/// Orbit-atom weights `1/3^{j+1}` on the inner family for `j < depth`,
/// plus, for finite levels, `1/3^n` on the outer family at depth `n`;
/// pulled back by `q` with a quarter of the weight for `ζ`.
fn fill(m: &mut AtomicMeasure, kind: MeasureKind, depth: u32, finite_level: bool) {
    let (inner, outer) = families(kind);
    let pullback = kind == MeasureKind::Zeta;
    let scale = if pullback { rational_quarter() } else { Rational::one() };
    for j in 0..depth {
        m.add(
            AtomGroup::Orbit { family: inner, depth: j, pullback },
            third_power(j + 1) * &scale,
        );
    }
    if finite_level {
        m.add(
            AtomGroup::Orbit { family: outer, depth, pullback },
            third_power(depth) * &scale,
        );
    }
    if pullback {
        m.add(AtomGroup::Origin, -rational_quarter());
        m.add(AtomGroup::Infinity, -Rational::new(3.into(), 4.into()));
    } else {
        m.add(AtomGroup::Infinity, -Rational::one());
    }
}

fn rational_quarter() -> Rational {
    Rational::new(1.into(), 4.into())
}

/// The level-`n` measure of the given kind.
pub fn measure_at_level(kind: MeasureKind, n: u32) -> Result<AtomicMeasure> {
    guard("measure level", n as u64, MAX_MEASURE_DEPTH as u64)?;
    let mut m = AtomicMeasure::new(format!("{kind}_{n}"));
    fill(&mut m, kind, n, true);
    Ok(m)
}

/// The limit measure restricted to orbit depths `j < truncation`.
pub fn truncated_limit(kind: MeasureKind, truncation: u32) -> Result<AtomicMeasure> {
    guard("measure truncation", truncation as u64, MAX_MEASURE_DEPTH as u64)?;
    let mut m = AtomicMeasure::new(format!("{kind}_inf[J={truncation}]"));
    fill(&mut m, kind, truncation, false);
    Ok(m)
}

/// `truncation = None` gives the level-`n` measure, `Some(J)` the limit
/// measure truncated at depth `J` (and `n` is ignored).
pub fn build_measure(kind: MeasureKind, n: u32, truncation: Option<u32>) -> Result<AtomicMeasure> {
    match truncation {
        None => measure_at_level(kind, n),
        Some(j) => truncated_limit(kind, j),
    }
}

/// Exact total variation `Σ |w_A − w_B|` over the union of atoms.
pub fn tv_distance(a: &AtomicMeasure, b: &AtomicMeasure) -> Rational {
    let keys: BTreeSet<&AtomGroup> = a.groups.keys().chain(b.groups.keys()).collect();
    keys.into_iter()
        .map(|g| {
            let d = (a.weight(g) - b.weight(g)).abs();
            AtomicMeasure::group_mass(g, &d)
        })
        .sum()
}

/// `2(2/3)^n − (2/3)^J`, the distance between `ζ_n` and the truncated
/// limit for `J > n`.
pub fn expected_zeta_tv(n: u32, truncation: u32) -> Rational {
    let two_thirds = |k: u32| Rational::new(BigInt::from(2u8).pow(k), BigInt::from(3u8).pow(k));
    Rational::from_integer(2.into()) * two_thirds(n) - two_thirds(truncation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_poly::rational;
    use proptest::prelude::*;

    #[test]
    fn mu_one() {
        let mu = measure_at_level(MeasureKind::Mu, 1).unwrap();
        let atoms = mu.atoms().unwrap();
        assert_eq!(atoms.len(), 4);
        let at = |z: Complex64| {
            atoms
                .iter()
                .find(|a| matches!(a.site, AtomSite::Point(p) if (p - z).norm() < 1e-12))
                .map(|a| a.weight.clone())
        };
        let r = 2.0 * 3f64.sqrt();
        assert_eq!(at(Complex64::new(-1.0, 0.0)), Some(rational(1, 3)));
        assert_eq!(at(Complex64::new(-1.0, r)), Some(rational(1, 3)));
        assert_eq!(at(Complex64::new(-1.0, -r)), Some(rational(1, 3)));
        assert_eq!(mu.weight(&AtomGroup::Infinity), rational(-1, 1));
    }

    #[test]
    fn mass_bookkeeping() {
        for n in 0..=10 {
            assert_eq!(measure_at_level(MeasureKind::Mu, n).unwrap().finite_mass(), Rational::one());
            assert_eq!(measure_at_level(MeasureKind::Tau, n).unwrap().finite_mass(), Rational::one());
            let z = measure_at_level(MeasureKind::Zeta, n).unwrap();
            assert!(z.total_mass().is_zero(), "n = {n}");
            assert_eq!(z.weight(&AtomGroup::Origin), rational(-1, 4));
            assert_eq!(z.weight(&AtomGroup::Infinity), rational(-3, 4));
        }
    }

    #[test]
    fn zeta_tv_rate() {
        for n in 0..=10 {
            let zn = measure_at_level(MeasureKind::Zeta, n).unwrap();
            let zi = truncated_limit(MeasureKind::Zeta, n + 30).unwrap();
            let tv = tv_distance(&zn, &zi);
            assert_eq!(tv, expected_zeta_tv(n, n + 30), "n = {n}");
            let upper = Rational::from_integer(2.into()) * rational(2, 3).pow(n as i32);
            assert!(tv <= upper);
        }
    }

    #[test]
    fn tv_mu_one_two() {
        let a = measure_at_level(MeasureKind::Mu, 1).unwrap();
        let b = measure_at_level(MeasureKind::Mu, 2).unwrap();
        // f^-1(-3) at 1/3 each (2 atoms) in μ_1 only; f^-1(-1) at 1/9 each and
        // f^-2(-3) at 1/9 each (2 + 4 atoms) in μ_2 only.
        assert_eq!(tv_distance(&a, &b), rational(2, 3) + rational(2, 9) + rational(4, 9));
    }

    #[test]
    fn explicit_atoms_match_groups() {
        let z = measure_at_level(MeasureKind::Zeta, 3).unwrap();
        let atoms = z.atoms().unwrap();
        assert_eq!(atoms.len() as u128, z.atom_count());
        let sum: Rational = atoms.iter().map(|a| a.weight.clone()).sum();
        assert!(sum.is_zero());
        assert!(measure_at_level(MeasureKind::Zeta, 21).unwrap().atoms().unwrap_err().is_guard());
    }

    #[test]
    fn guards() {
        assert!(measure_at_level(MeasureKind::Mu, 65).unwrap_err().is_guard());
        assert!(truncated_limit(MeasureKind::Mu, 65).unwrap_err().is_guard());
    }

    #[test]
    fn json_weights() {
        let v = measure_at_level(MeasureKind::Mu, 1).unwrap().to_json(true).unwrap();
        let atoms = v["atoms"].as_array().unwrap();
        assert_eq!(atoms.len(), 4);
        assert!(atoms.iter().any(|a| a["weight"] == json!({"num": "1", "den": "3"})));
        assert_eq!(v["finite_mass"], json!({"num": "1", "den": "1"}));
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(k1 in 0usize..3, n1 in 0u32..12, k2 in 0usize..3, n2 in 0u32..12, n3 in 0u32..12) {
            let kinds = [MeasureKind::Tau, MeasureKind::Mu, MeasureKind::Zeta];
            let a = measure_at_level(kinds[k1], n1).unwrap();
            let b = measure_at_level(kinds[k2], n2).unwrap();
            let c = measure_at_level(kinds[k2], n3).unwrap();
            prop_assert!(tv_distance(&a, &a).is_zero());
            prop_assert_eq!(tv_distance(&a, &b), tv_distance(&b, &a));
            prop_assert!(tv_distance(&a, &c) <= tv_distance(&a, &b) + tv_distance(&b, &c));
        }

        #[test]
        fn zeta_tv_within_bounds(n in 0u32..20, extra in 1u32..40) {
            let tv = tv_distance(
                &measure_at_level(MeasureKind::Zeta, n).unwrap(),
                &truncated_limit(MeasureKind::Zeta, n + extra).unwrap(),
            );
            prop_assert_eq!(tv, expected_zeta_tv(n, n + extra));
        }
    }
}
