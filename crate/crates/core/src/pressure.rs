//! Finite-level pressure `p_n(y)` and the potential `m(x)` of `μ_∞`.
//!
//! `p_n` is computed from the ratio orbit `r_j = f(r_{j-1})`, `r_0 = y⁴`,
//! and the normalized logarithm `ℓ_j = log|V_j| / 3^j`, using
//! `V_j = V_{j-1}³ (r+1)(r+3)` and `Z_n = 2 V_n (r_n + 3)`. Nothing grows
//! with `n`, so levels up to `10⁴` are cheap.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{apply_f, MapKind};
use crate::error::{guard, GasketError, Result};
use crate::exact_poly::{ln_abs_rational, Rational};
use crate::recursion::ExactEngine;

pub const MAX_PRESSURE_LEVEL: u32 = 10_000;
pub const DEFAULT_POTENTIAL_DEPTH: u32 = 25;
pub const MAX_POTENTIAL_DEPTH: u32 = 30;
/// Relative distance below which an evaluation point counts as sitting on
/// an atom.
pub const ATOM_TOLERANCE: f64 = 1e-12;
/// Distance to the pole `−3` at which the ratio orbit is declared singular.
pub const POLE_TOLERANCE: f64 = 1e-12;

fn near_pole(r: Complex64) -> bool {
    (r + 3.0).norm() < POLE_TOLERANCE
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureSample {
    #[serde(serialize_with = "ser_complex")]
    pub y: Complex64,
    pub level: u32,
    pub p_value: f64,
    #[serde(serialize_with = "ser_complex")]
    pub ratio_orbit_end: Complex64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

pub fn pressure_eval(y: Complex64, n: u32) -> Result<PressureSample> {
    guard("pressure level", n as u64, MAX_PRESSURE_LEVEL as u64)?;
    if y == Complex64::new(0.0, 0.0) || !y.is_finite() {
        return Err(GasketError::domain("pressure_eval", format!("y = {y}")));
    }
    let mut r = y.powi(4);
    let mut ell = -y.norm().ln();
    let mut inv3 = 1.0;
    for step in 1..=n as usize {
        if near_pole(r) {
            return Err(GasketError::SingularOrbit { step: step - 1 });
        }
        inv3 /= 3.0;
        ell += inv3 * ((r + 1.0).norm().ln() + (r + 3.0).norm().ln());
        r = apply_f(r)?;
        if !r.is_finite() {
            return Err(GasketError::SingularOrbit { step });
        }
    }
    if near_pole(r) {
        return Err(GasketError::SingularOrbit { step: n as usize });
    }
    let p_value = (std::f64::consts::LN_2 + (r + 3.0).norm().ln()) * inv3 / 4.0 + ell / 4.0;
    Ok(PressureSample {
        y,
        level: n,
        p_value,
        ratio_orbit_end: r,
    })
}

/// `log|Z_n(y)| / (4·3^n)` from the exact Laurent polynomial.
pub fn exact_pressure(engine: &ExactEngine, y: &Rational, n: u32) -> Result<f64> {
    let z = engine.compute_z(n)?;
    let v = z.eval_rational(y)?;
    Ok(ln_abs_rational(&v) / (4.0 * crate::recursion::pow3(n) as f64))
}

/// `p_n(y) − (3/4) log y` for real `y > 0`, computed without forming
/// `p_n` itself.
///
/// With `d_j = r_j − y⁴` the logarithms `log y` cancel exactly and what
/// remains is a sum of `ln_1p((d_j + c)/y⁴)` terms, accurate even when the
/// deviation is far below the rounding error of `p_n`.
pub fn asymptote_deviation(y: f64, n: u32) -> Result<f64> {
    guard("pressure level", n as u64, MAX_PRESSURE_LEVEL as u64)?;
    if !(y > 0.0) || !y.is_finite() {
        return Err(GasketError::domain("asymptote_deviation", format!("y = {y} is not a positive real")));
    }
    let x = y.powi(4);
    let mut d = 0.0;
    let mut inv3 = 1.0;
    let mut sum = 0.0;
    for _ in 1..=n {
        inv3 /= 3.0;
        sum += inv3 * (((d + 1.0) / x).ln_1p() + ((d + 3.0) / x).ln_1p());
        d += -4.0 + 16.0 / (x + d + 3.0);
    }
    sum += inv3 * (std::f64::consts::LN_2 + ((d + 3.0) / x).ln_1p());
    Ok(sum / 4.0)
}

/// The limiting behaviour `(3/4) log y`.
pub fn asymptote(y: f64) -> f64 {
    0.75 * y.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureRow {
    pub y: f64,
    pub level: u32,
    pub p: f64,
    pub asymptote: f64,
    pub difference: f64,
}

pub fn pressure_curve(grid: &[f64], n: u32) -> Result<Vec<PressureRow>> {
    grid.par_iter()
        .map(|&y| {
            if !(y > 0.0) || !y.is_finite() {
                return Err(GasketError::domain("pressure_curve", format!("grid point {y} is not a positive real")));
            }
            Ok(PressureRow {
                y,
                level: n,
                p: pressure_eval(Complex64::new(y, 0.0), n)?.p_value,
                asymptote: asymptote(y),
                difference: asymptote_deviation(y, n)?,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(rows: &[PressureRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `count` points log-spaced over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Sums of `log|x − ω|` over the backward `f`-orbit of `seed`, split by
/// depth: `out[i][j]` is the sum over depth-`j` points for `xs[i]`. With
/// `leaves_only` only depth `depth` is visited.
fn orbit_log_sums(seed: f64, depth: u32, leaves_only: bool, xs: &[Complex64]) -> Result<Vec<Vec<f64>>> {
    const SPLIT: u32 = 10;
    let split = depth.min(SPLIT);
    let width = depth as usize + 1;
    let mut acc = vec![vec![0.0; width]; xs.len()];
    let mut frontier = vec![Complex64::new(seed, 0.0)];
    for j in 0..split {
        if !leaves_only {
            add_logs(&frontier, j, xs, &mut acc)?;
        }
        frontier = frontier.iter().flat_map(|&w| MapKind::F.preimages(w)).collect();
    }
    let parts = frontier
        .par_iter()
        .map(|&w| {
            let mut local = vec![vec![0.0; width]; xs.len()];
            walk(w, split, depth, leaves_only, xs, &mut local)?;
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;
    for part in parts {
        for (a, p) in acc.iter_mut().zip(part) {
            for (s, v) in a.iter_mut().zip(p) {
                *s += v;
            }
        }
    }
    Ok(acc)
}

fn walk(w: Complex64, j: u32, depth: u32, leaves_only: bool, xs: &[Complex64], acc: &mut [Vec<f64>]) -> Result<()> {
    if !leaves_only || j == depth {
        add_logs(std::slice::from_ref(&w), j, xs, acc)?;
    }
    if j < depth {
        for p in MapKind::F.preimages(w) {
            walk(p, j + 1, depth, leaves_only, xs, acc)?;
        }
    }
    Ok(())
}

fn add_logs(points: &[Complex64], j: u32, xs: &[Complex64], acc: &mut [Vec<f64>]) -> Result<()> {
    for (x, a) in xs.iter().zip(acc.iter_mut()) {
        let tol = ATOM_TOLERANCE * (1.0 + x.norm());
        for &w in points {
            let d = (x - w).norm();
            if d < tol {
                return Err(GasketError::NearSingularity {
                    point: x.to_string(),
                    atom: w.to_string(),
                    tol,
                });
            }
            a[j as usize] += d.ln();
        }
    }
    Ok(())
}

/// The potential `∫ log|x − t| dμ(t)` of the finite part of `μ_∞`, with the
/// depths `j < J` taken exactly and the tail of mass `(2/3)^J` carried by
/// the atoms of `f^{-J}(−3)` at weight `3^{-J}` each, so the total mass is
/// 1 and the value equals `3^{-J} log|M_J(x)|`.
pub fn potential_m_many(xs: &[Complex64], depth: u32) -> Result<Vec<f64>> {
    guard("potential depth", depth as u64, MAX_POTENTIAL_DEPTH as u64)?;
    let inner = if depth > 0 {
        orbit_log_sums(-1.0, depth - 1, false, xs)?
    } else {
        vec![vec![]; xs.len()]
    };
    let tail = orbit_log_sums(-3.0, depth, true, xs)?;
    Ok(inner
        .iter()
        .zip(&tail)
        .map(|(sums, t)| {
            let mut w = 1.0;
            let mut total = 0.0;
            for s in sums {
                w /= 3.0;
                total += w * s;
            }
            total + 3f64.powi(-(depth as i32)) * t[depth as usize]
        })
        .collect())
}

pub fn potential_m(x: Complex64, depth: u32) -> Result<f64> {
    Ok(potential_m_many(&[x], depth)?[0])
}

/// `(1/4) m(y⁴) − (1/4) log y`, the pressure expressed through the potential.
pub fn pressure_from_potential(y: f64, depth: u32) -> Result<f64> {
    let m = potential_m(Complex64::new(y.powi(4), 0.0), depth)?;
    Ok(0.25 * m - 0.25 * y.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_poly::rational;

    fn re(y: f64) -> Complex64 {
        Complex64::new(y, 0.0)
    }

    #[test]
    fn pressure_at_one() {
        for n in 0..=30u32 {
            let p = pressure_eval(re(1.0), n).unwrap().p_value;
            let t = 3f64.powi(n as i32);
            let expect = (3.0 * t + 3.0) * std::f64::consts::LN_2 / (8.0 * t);
            assert!((p - expect).abs() < 1e-14, "n = {n}: {p} vs {expect}");
        }
        let p = pressure_eval(re(1.0), 10_000).unwrap().p_value;
        assert!((p - 0.375 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn matches_exact_oracle() {
        let e = ExactEngine::default();
        let ys = [
            rational(2, 1),
            rational(3, 1),
            rational(1, 2),
            rational(1, 3),
            rational(5, 4),
            rational(7, 2),
            rational(10, 1),
            rational(2, 7),
            rational(9, 10),
            rational(100, 1),
        ];
        for n in 0..=4 {
            for y in &ys {
                let yf = num_traits::ToPrimitive::to_f64(y).unwrap();
                let fast = pressure_eval(re(yf), n).unwrap().p_value;
                let exact = exact_pressure(&e, y, n).unwrap();
                assert!((fast - exact).abs() <= 1e-10 * exact.abs().max(1e-300), "n={n} y={y}: {fast} vs {exact}");
            }
        }
    }

    #[test]
    fn ratio_orbit_stays_positive() {
        for y in [0.1f64, 0.5, 1.0, 2.0, 30.0] {
            let mut r = y.powi(4);
            for j in 1..200 {
                r = apply_f(re(r)).unwrap().re;
                assert!(r >= 1.0 - 1e-12, "y={y} j={j} r={r}");
            }
        }
    }

    #[test]
    fn level_convergence() {
        for y in [2.0, 10.0, 100.0] {
            let p: Vec<f64> = (0..=50).map(|n| pressure_eval(re(y), n).unwrap().p_value).collect();
            let diffs: Vec<f64> = p.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            for w in diffs.windows(2).filter(|w| w[0] > 1e-13) {
                assert!(w[1] < w[0], "y={y}: {diffs:?}");
            }
            assert!((p[50] - p[40]).abs() < 1e-9);
        }
    }

    #[test]
    fn asymptote_decay() {
        let e: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&y| asymptote_deviation(y, 50).unwrap().abs())
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
        assert!(e[2] < 1e-2);
    }

    #[test]
    fn deviation_matches_direct_difference() {
        for y in [0.3, 1.0, 2.0, 5.0, 10.0] {
            for n in [0, 1, 5, 50] {
                let direct = pressure_eval(re(y), n).unwrap().p_value - asymptote(y);
                let dev = asymptote_deviation(y, n).unwrap();
                assert!((direct - dev).abs() < 1e-13, "y={y} n={n}: {direct} vs {dev}");
            }
        }
    }

    #[test]
    fn curve_rows() {
        let rows = pressure_curve(&[1.0], 7).unwrap();
        assert_eq!(rows[0].difference, rows[0].p);
        let rows = pressure_curve(&log_grid(1.0, 1e6, 100), 50).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().all(|r| r.p.is_finite()));
        let mut buf = Vec::new();
        write_curve_csv(&rows[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("y,level,p,asymptote,difference\n"), "{text}");
        assert!(text.lines().nth(1).unwrap().starts_with("1.0,50,"), "{text}");
        assert!(pressure_curve(&[-1.0], 3).is_err());
    }

    #[test]
    fn bounded_second_differences() {
        let ys: Vec<f64> = (0..=190).map(|i| 0.5 + 0.05 * i as f64).collect();
        let p: Vec<f64> = ys.iter().map(|&y| pressure_eval(re(y), 50).unwrap().p_value).collect();
        let h = 0.05;
        let worst = p
            .windows(3)
            .map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (h * h)).abs())
            .fold(0f64, f64::max);
        assert!(worst < 10.0, "{worst}");
    }

    #[test]
    fn complex_ray_smoke() {
        let dir = Complex64::from_polar(1.0, 0.3);
        for t in [0.5, 1.0, 3.0, 20.0] {
            let s = pressure_eval(dir * t, 40).unwrap();
            assert!(s.p_value.is_finite());
        }
    }

    #[test]
    fn singular_and_invalid_inputs() {
        assert!(matches!(pressure_eval(re(0.0), 3), Err(GasketError::Domain { .. })));
        assert!(pressure_eval(re(2.0), 10_001).unwrap_err().is_guard());
        // y⁴ = −3 puts the orbit on the pole immediately.
        let y = Complex64::from_polar(3f64.powf(0.25), std::f64::consts::FRAC_PI_4);
        assert!(matches!(pressure_eval(y, 5), Err(GasketError::SingularOrbit { step: 0 })));
        // f(r) = −3 for r = −1 + 2√3 i.
        let y = Complex64::new(-1.0, 2.0 * 3f64.sqrt()).powf(0.25);
        assert!(matches!(pressure_eval(y, 5), Err(GasketError::SingularOrbit { step: 1 })));
    }

    #[test]
    fn potential_equals_log_m() {
        let e = ExactEngine::default();
        let xs = [re(2.0), re(-5.0), Complex64::new(1.0, 2.0), re(100.0)];
        for depth in 0..=6 {
            let m = e.compute_m(depth).unwrap().m;
            let vals = potential_m_many(&xs, depth).unwrap();
            for (x, v) in xs.iter().zip(vals) {
                let exact = m.eval_complex_exact(*x).log2_abs() * std::f64::consts::LN_2 / 3f64.powi(depth as i32);
                assert!((v - exact).abs() < 1e-10 * (1.0 + exact.abs()), "J={depth} x={x}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn potential_near_atom() {
        match potential_m(re(-1.0), 4) {
            Err(GasketError::NearSingularity { atom, .. }) => assert!(atom.starts_with("-1")),
            other => panic!("{other:?}"),
        }
        assert!(potential_m(re(2.0), 31).unwrap_err().is_guard());
    }

    #[test]
    fn potential_against_log() {
        let xs = [re(1e4), re(1e6), re(1e8)];
        let m = potential_m_many(&xs, DEFAULT_POTENTIAL_DEPTH).unwrap();
        let gaps: Vec<f64> = xs.iter().zip(&m).map(|(x, v)| (v - x.re.ln()).abs()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    #[test]
    fn potential_matches_pressure() {
        let a = pressure_from_potential(50.0, 25).unwrap();
        let b = pressure_eval(re(50.0), 25).unwrap().p_value;
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn log_space_matches_exact(n in 0u32..4, a in 1i64..60, b in 1i64..12) {
                let y = rational(a, b);
                let fast = pressure_eval(re(a as f64 / b as f64), n).unwrap().p_value;
                let exact = exact_pressure(&ExactEngine::default(), &y, n).unwrap();
                prop_assert!((fast - exact).abs() <= 1e-10 * exact.abs().max(1e-12));
            }

            #[test]
            fn ratio_orbit_positive(y in 1e-3f64..1e3, n in 0u32..200) {
                let s = pressure_eval(re(y), n).unwrap();
                prop_assert!(s.ratio_orbit_end.re > 0.0 && s.ratio_orbit_end.im == 0.0);
                prop_assert!(s.p_value.is_finite());
            }
        }
    }
}
