//! `gasket`: exact and numerical computations for the Ising model on the
//! Sierpinski gasket, from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use gasket::dynamics::{
    abel_residual, backward_orbit, fatou_coordinate, fatou_f, iterate_h, BranchConfig, MapKind,
    DOUBLE_PRECISION_BITS,
};
use gasket::gasket::{build_gasket, enumerate_partition_function};
use gasket::measure::{build_measure, MeasureKind};
use gasket::pressure::{log_grid, potential_m_many, pressure_curve, pressure_eval, write_curve_csv, DEFAULT_POTENTIAL_DEPTH};
use gasket::recursion::ExactEngine;
use gasket::verify::{run_verify, Perturbation, Profile};
use gasket::zeros::{relative_residuals, zeros_of_m, zeros_of_t, zeros_of_z, ZeroCloud};
use gasket::GasketError;

const PRECISION_ENV: &str = "GASKET_PRECISION";

#[derive(Parser)]
#[command(name = "gasket", version, about = "Ising model on the Sierpinski gasket: exact polynomials, zeros, measures, dynamics and pressure")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output path, or `-` for standard output.
    #[arg(long, short, global = true, default_value = "-")]
    output: String,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Floating-point precision in bits (defaults to $GASKET_PRECISION, then 53).
    #[arg(long, global = true)]
    precision: Option<u32>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    #[value(name = "Z")]
    Z,
    #[value(name = "M")]
    M,
    #[value(name = "T")]
    T,
    #[value(name = "UV")]
    Uv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    #[value(name = "T")]
    T,
    #[value(name = "M")]
    M,
    #[value(name = "Z")]
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Tau,
    Mu,
    Zeta,
}

#[derive(Clone, Copy, ValueEnum)]
enum Map {
    F,
    G,
}

#[derive(Subcommand)]
enum Command {
    /// Exact polynomials: the partition function Z_n, M_n, T_n (with its factors) or the corner sums U_n, V_n.
    Poly {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        n: u32,
        /// Raise the exact level cap (at most 12).
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Zeros of T_n, M_n or Z_n, built from backward orbits with multiplicities.
    Zeros {
        #[arg(long, value_enum)]
        source: Source,
        #[arg(long)]
        n: u32,
        /// Check every zero against the exact polynomial (T_n and M_n only).
        #[arg(long)]
        check: bool,
        /// Relative residual tolerance for --check.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Atomic measures τ_n, μ_n, ζ_n, or truncations of μ_∞, ζ_∞ with --truncation.
    Measure {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        n: u32,
        /// Depth J of the truncated limit measure; replaces --n.
        #[arg(long)]
        truncation: Option<u32>,
        /// List every atom with its position.
        #[arg(long)]
        atoms: bool,
    },
    /// Finite-level pressure p_n(y) = log|Z_n(y)|/(4·3^n) against the asymptote (3/4)log y.
    Pressure {
        /// A single value of y.
        #[arg(long, conflicts_with = "grid")]
        y: Option<f64>,
        /// Imaginary part of y (single value only).
        #[arg(long, default_value_t = 0.0, requires = "y")]
        y_im: f64,
        /// Log-spaced grid `lo:hi:count`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        n: u32,
    },
    /// Potential m(x) of the finite part of μ_∞, truncated at depth J.
    Potential {
        #[arg(long, num_args = 1.., required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_POTENTIAL_DEPTH)]
        depth: u32,
    },
    /// Partition function Z_n of the level-n gasket by brute-force enumeration.
    Enumerate {
        #[arg(long)]
        n: u32,
    },
    /// Run the verification suite and report each criterion.
    Verify {
        #[arg(long, default_value = "quick", value_parser = ["quick", "full"])]
        profile: String,
        #[arg(long, hide = true)]
        inject: Option<String>,
    },
    /// Backward orbit of a seed under f(x) = (x²−x+4)/(x+3) or g(z) = z²+z.
    Orbit {
        #[arg(long, allow_hyphen_values = true)]
        seed: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        seed_im: f64,
        #[arg(long)]
        depth: u32,
        #[arg(long, value_enum)]
        map: Map,
    },
    /// Iterates of the inverse branch h of f on the half-plane Re x > 10.
    H {
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
    },
    /// Fatou coordinate F with F(h(x)) = F(x) + 4, and its truncation F_n.
    Fatou {
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
}

enum Failure {
    Usage(String),
    Lib(GasketError),
    Verify(String),
}

impl From<GasketError> for Failure {
    fn from(e: GasketError) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn precision(flag: Option<u32>) -> CliResult<u32> {
    let bits = match flag {
        Some(b) => b,
        None => match std::env::var(PRECISION_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{PRECISION_ENV}={s:?} is not a bit count")))?,
            Err(_) => DOUBLE_PRECISION_BITS,
        },
    };
    let cfg = BranchConfig {
        precision: bits,
        ..BranchConfig::default()
    };
    cfg.validate()?;
    Ok(bits)
}

fn emit(output: &str, bytes: &[u8]) -> CliResult<()> {
    if output == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
    } else {
        std::fs::write(PathBuf::from(output), bytes)?;
    }
    Ok(())
}

fn json_bytes(v: &Value) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(GasketError::from)?;
    s.push(b'\n');
    Ok(s)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

fn complex_json(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn no_csv(cmd: &str) -> Failure {
    Failure::Usage(format!("{cmd} has no CSV form; use --format json"))
}

fn run(cli: Cli) -> CliResult<bool> {
    let common = &cli.common;
    precision(common.precision)?;
    let csv = common.format == Format::Csv;
    let body = match cli.command {
        Command::Poly { which, n, max_level } => {
            if csv {
                return Err(no_csv("poly"));
            }
            let engine = match max_level {
                Some(l) => ExactEngine::with_max_level(l)?,
                None => ExactEngine::default(),
            };
            let v = match which {
                Which::Z => json!({"which": "Z", "level": n, "Z": engine.compute_z(n)?.to_json()}),
                Which::M => serde_json::to_value(engine.compute_m(n)?).map_err(GasketError::from)?,
                Which::T => serde_json::to_value(engine.compute_t(n)?).map_err(GasketError::from)?,
                Which::Uv => serde_json::to_value(engine.uv_pair(n)?).map_err(GasketError::from)?,
            };
            json_bytes(&v)?
        }
        Command::Zeros { source, n, check, tolerance } => {
            let cloud = match source {
                Source::T => zeros_of_t(n)?,
                Source::M => zeros_of_m(n)?,
                Source::Z => zeros_of_z(n)?,
            };
            if check {
                check_zeros(&cloud, source, n, tolerance)?;
            }
            if csv {
                let mut buf = Vec::new();
                cloud.write_csv(&mut buf)?;
                buf
            } else {
                json_bytes(&zeros_json(&cloud))?
            }
        }
        Command::Measure { kind, n, truncation, atoms } => {
            if csv {
                return Err(no_csv("measure"));
            }
            let kind = match kind {
                Kind::Tau => MeasureKind::Tau,
                Kind::Mu => MeasureKind::Mu,
                Kind::Zeta => MeasureKind::Zeta,
            };
            json_bytes(&build_measure(kind, n, truncation)?.to_json(atoms)?)?
        }
        Command::Pressure { y, y_im, grid, n } => match (y, grid) {
            (Some(y), None) => {
                let s = pressure_eval(Complex64::new(y, y_im), n)?;
                if csv {
                    if y_im != 0.0 {
                        return Err(Failure::Usage("CSV output needs a real y".into()));
                    }
                    curve_csv(&[y], n)?
                } else {
                    json_bytes(&json!({
                        "y": complex_json(s.y),
                        "level": s.level,
                        "p": s.p_value,
                        "ratio_orbit_end": complex_json(s.ratio_orbit_end),
                    }))?
                }
            }
            (None, Some(spec)) => {
                let grid = parse_grid(&spec)?;
                if csv {
                    curve_csv(&grid, n)?
                } else {
                    json_bytes(&serde_json::to_value(pressure_curve(&grid, n)?).map_err(GasketError::from)?)?
                }
            }
            _ => return Err(Failure::Usage("give either --y or --grid".into())),
        },
        Command::Potential { x, depth } => {
            let xs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let m = potential_m_many(&xs, depth)?;
            if csv {
                csv_bytes(
                    &["x", "depth", "m", "m_minus_log_x"],
                    x.iter().zip(&m).map(|(x, m)| {
                        vec![x.to_string(), depth.to_string(), m.to_string(), (m - x.ln()).to_string()]
                    }),
                )
            } else {
                let rows: Vec<Value> = x
                    .iter()
                    .zip(&m)
                    .map(|(x, m)| json!({"x": x, "depth": depth, "m": m}))
                    .collect();
                json_bytes(&Value::Array(rows))?
            }
        }
        Command::Enumerate { n } => {
            if csv {
                return Err(no_csv("enumerate"));
            }
            let graph = build_gasket(n)?;
            let z = enumerate_partition_function(&graph)?;
            json_bytes(&json!({
                "level": n,
                "vertices": graph.vertex_count,
                "edges": graph.edges.len(),
                "Z": z.to_json(),
            }))?
        }
        Command::Verify { profile, inject } => {
            let profile: Profile = profile.parse()?;
            let fault = inject.map(|s| s.parse::<Perturbation>()).transpose()?;
            let report = run_verify(profile, fault);
            let bytes = if csv {
                csv_bytes(
                    &["id", "criterion", "passed", "seconds", "detail"],
                    report.criteria.iter().map(|c| {
                        vec![
                            c.id.to_string(),
                            c.name.to_string(),
                            c.passed.to_string(),
                            format!("{:.3}", c.seconds),
                            format!("\"{}\"", c.detail.replace('"', "\"\"")),
                        ]
                    }),
                )
            } else {
                json_bytes(&serde_json::to_value(&report).map_err(GasketError::from)?)?
            };
            emit(&common.output, &bytes)?;
            return match report.first_failure() {
                None => Ok(true),
                Some(f) => Err(Failure::Verify(format!("criterion {} failed: {}: {}", f.id, f.name, f.detail))),
            };
        }
        Command::Orbit { seed, seed_im, depth, map } => {
            let map = match map {
                Map::F => MapKind::F,
                Map::G => MapKind::G,
            };
            let orbit = backward_orbit(Complex64::new(seed, seed_im), depth, map)?;
            if csv {
                csv_bytes(
                    &["depth", "word", "re", "im"],
                    orbit
                        .points()
                        .map(|p| vec![p.depth.to_string(), p.word.to_string(), p.point.re.to_string(), p.point.im.to_string()]),
                )
            } else {
                let pts: Vec<Value> = orbit
                    .points()
                    .map(|p| json!({"depth": p.depth, "word": p.word, "re": p.point.re, "im": p.point.im}))
                    .collect();
                json_bytes(&json!({"seed": complex_json(orbit.seed), "points": pts}))?
            }
        }
        Command::H { x, im, iterations } => {
            let orbit = iterate_h(Complex64::new(x, im), iterations, &BranchConfig::default())?;
            if csv {
                csv_bytes(
                    &["k", "re", "im"],
                    orbit.iter().enumerate().map(|(k, z)| vec![k.to_string(), z.re.to_string(), z.im.to_string()]),
                )
            } else {
                let pts: Vec<Value> = orbit.iter().map(|&z| complex_json(z)).collect();
                json_bytes(&json!({"x": complex_json(Complex64::new(x, im)), "orbit": pts}))?
            }
        }
        Command::Fatou { x, im, n } => {
            let x = Complex64::new(x, im);
            let f = fatou_coordinate(x, n)?;
            let raw = fatou_f(x, n)?;
            let res = abel_residual(x, n)?;
            if csv {
                csv_bytes(
                    &["re", "im", "n", "F_re", "F_im", "F_n_re", "F_n_im", "abel_residual"],
                    [vec![
                        x.re.to_string(),
                        x.im.to_string(),
                        n.to_string(),
                        f.re.to_string(),
                        f.im.to_string(),
                        raw.re.to_string(),
                        raw.im.to_string(),
                        res.norm().to_string(),
                    ]],
                )
            } else {
                json_bytes(&json!({
                    "x": complex_json(x),
                    "n": n,
                    "F": complex_json(f),
                    "F_n": complex_json(raw),
                    "abel_residual": res.norm(),
                }))?
            }
        }
    };
    emit(&common.output, &body)?;
    Ok(true)
}

fn check_zeros(cloud: &ZeroCloud, source: Source, n: u32, tolerance: f64) -> CliResult<()> {
    let engine = ExactEngine::default();
    let poly = match source {
        Source::T => engine.compute_t(n)?.t,
        Source::M => engine.compute_m(n)?.m,
        Source::Z => return Err(Failure::Usage("--check applies to T and M zeros".into())),
    };
    let worst = relative_residuals(cloud, &poly).into_iter().fold(0f64, f64::max);
    if !(worst < tolerance) {
        return Err(GasketError::Invariant(format!("relative residual {worst:e} exceeds {tolerance:e}")).into());
    }
    log::info!("max relative residual {worst:e}");
    Ok(())
}

fn zeros_json(cloud: &ZeroCloud) -> Value {
    let pts: Vec<Value> = cloud
        .points
        .iter()
        .map(|p| {
            json!({
                "re": p.point.re,
                "im": p.point.im,
                "multiplicity": p.multiplicity,
                "depth": p.depth,
                "family": p.family.to_string(),
                "word": p.word,
                "root": p.root,
            })
        })
        .collect();
    json!({"source": cloud.source.to_string(), "level": cloud.level, "points": pts})
}

fn curve_csv(grid: &[f64], n: u32) -> CliResult<Vec<u8>> {
    let rows = pressure_curve(grid, n)?;
    let mut buf = Vec::new();
    write_curve_csv(&rows, &mut buf)?;
    Ok(buf)
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Failure::Usage(format!("grid {spec:?} is not lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, count))
}

fn exit_code(e: &GasketError) -> u8 {
    if e.is_guard() {
        3
    } else if e.is_numeric() {
        4
    } else if matches!(e, GasketError::Parse(_)) {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
