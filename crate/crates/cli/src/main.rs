//! `plasma-branch`: trace the constrained plasma branch on the ball, emit the
//! Gelfand bell curve, run the verification suite, print Sobolev constants.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or configuration
//! error, 3 numerical failure.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use plasma_branch::ball_branch::{BallBranch, Regime};
use plasma_branch::gelfand::{bell_curve, lambda_grid, TurningRecord};
use plasma_branch::radial_core::make_grid;
use plasma_branch::solver::solve_along;
use plasma_branch::spectral::{eigen_l, sobolev_lambda, thresholds};
use plasma_branch::verify::{run_suite, Bound, VerifyConfig, CHECK_NAMES};
use plasma_branch::{check_branch_exponent, Error, DEFAULT_GRID_N};

#[derive(Parser)]
#[command(
    name = "plasma-branch",
    version,
    about = "Constrained plasma branch on the unit-volume ball"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Branch table over [0, factor·λ₊] with the spectral quantities.
    Trace(Common),
    /// The (μ, E) bell curve on [0, λ₊] and its turning point.
    Bell(Common),
    /// Run every named check at (N, p).
    Verify(VerifyArgs),
    /// Sobolev constant Λ(t) next to the thresholds λ₀, λ₁, λ₊.
    Sobolev(SobolevArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "grid-n", default_value_t = DEFAULT_GRID_N)]
    grid_n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Upper end of the λ range in units of λ₊ (trace: 2, bell: must be 1).
    #[arg(long = "lambda-max-factor")]
    lambda_max_factor: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override KEY=VAL, repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Highest angular mode in the spectral computation.
    #[arg(long, default_value_t = 2)]
    modes: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Scale the stored Lane-Emden values before checking (fault injection).
    #[arg(long = "corrupt-profile", hide = true)]
    corrupt_profile: Option<f64>,
}

#[derive(Args)]
struct SobolevArgs {
    #[command(flatten)]
    common: Common,
    /// Exponent of the embedding H¹₀ ⊂ L^t.
    #[arg(long, default_value_t = 2.0)]
    t: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("output: {e}"))
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.cmd {
        Cmd::Trace(c) => trace(&c),
        Cmd::Bell(c) => bell(&c),
        Cmd::Verify(v) => verify(&v),
        Cmd::Sobolev(s) => sobolev(&s),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}

fn validate(c: &Common) -> Result<BTreeMap<String, f64>, Failure> {
    check_branch_exponent(c.dim, c.p)?;
    if c.grid_n < 129 || c.grid_n % 2 == 0 {
        return Err(Failure::Usage(format!(
            "--grid-n must be odd and >= 129 (got {})",
            c.grid_n
        )));
    }
    if c.samples < 10 {
        return Err(Failure::Usage(format!(
            "--samples must be >= 10 (got {})",
            c.samples
        )));
    }
    if let Some(f) = c.lambda_max_factor {
        if !(f.is_finite() && f > 0.0) {
            return Err(Failure::Usage(format!(
                "--lambda-max-factor must be positive (got {f})"
            )));
        }
    }
    let mut tol = BTreeMap::new();
    for kv in &c.tol {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--tol expects KEY=VAL, got {kv}")))?;
        if !CHECK_NAMES.contains(&k) {
            return Err(Failure::Usage(format!("unknown check {k} in --tol")));
        }
        let v: f64 = v
            .parse()
            .map_err(|_| Failure::Usage(format!("--tol {k}: {v} is not a number")))?;
        tol.insert(k.to_string(), v);
    }
    Ok(tol)
}

fn sink(c: &Common) -> Result<Box<dyn Write>, Failure> {
    Ok(match &c.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// 17 significant digits; `inf` and `nan` spelled out.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Finite values only; everything else serializes as `null`.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct TraceRow {
    lambda: f64,
    #[serde(rename = "R")]
    r: Option<f64>,
    r_lambda: f64,
    gamma: f64,
    alpha: f64,
    mu: Option<f64>,
    #[serde(rename = "E")]
    energy: f64,
    sigma1: Option<f64>,
    nu1: Option<f64>,
    regime: &'static str,
}

#[derive(Serialize)]
struct TraceSummary {
    dim: usize,
    p: f64,
    grid_n: usize,
    samples: usize,
    lambda_max_factor: f64,
    lambda_plus: f64,
    #[serde(rename = "E0")]
    e0: f64,
}

#[derive(Serialize)]
struct Document<R: Serialize, S: Serialize> {
    rows: Vec<R>,
    summary: S,
}

const TRACE_HEADER: [&str; 10] = [
    "lambda", "R", "r_lambda", "gamma", "alpha", "mu", "E", "sigma1", "nu1", "regime",
];

fn trace(c: &Common) -> Outcome {
    validate(c)?;
    let factor = c.lambda_max_factor.unwrap_or(2.0);
    let b = BallBranch::build(c.dim, c.p, c.grid_n)?;
    let lp = b.lambda_plus();
    let lambdas = lambda_grid(lp, factor, c.samples)?;
    let points = b.points(&lambdas)?;

    // spectral columns on the positive regime, from the Newton solver
    let positive: Vec<f64> = points
        .iter()
        .filter(|pt| pt.regime == Regime::Positive)
        .map(|pt| pt.lambda)
        .collect();
    let grid = make_grid(c.dim, b.geom.radius, c.grid_n)?;
    let sols = solve_along(&b.geom, c.p, &positive, &grid)?;
    // within O(h²) of λ₊ the discrete α may already be negative: no spectrum
    let spectra: Vec<Option<(f64, f64)>> = sols
        .par_iter()
        .map(|s| {
            if !(s.alpha > 0.0) {
                return Ok(None);
            }
            eigen_l(&b.geom, s, c.modes)
                .map(|r| Some((r.sigma1, r.nu1)))
                .map_err(|e| Failure::Numerical(format!("{e} at lambda = {}", s.lambda)))
        })
        .collect::<Result<_, _>>()?;

    let rows: Vec<TraceRow> = points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let spec = spectra.get(i).copied().flatten();
            TraceRow {
                lambda: pt.lambda,
                r: finite(pt.r_of_lambda),
                r_lambda: pt.r_lambda,
                gamma: pt.gamma,
                alpha: pt.alpha,
                mu: pt.mu,
                energy: pt.energy,
                sigma1: spec.map(|s| s.0),
                nu1: spec.map(|s| s.1),
                regime: pt.regime.as_str(),
            }
        })
        .collect();
    let mut out = sink(c)?;
    match c.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(TRACE_HEADER).map_err(csv_err)?;
            for (row, pt) in rows.iter().zip(&points) {
                w.write_record([
                    num(row.lambda),
                    num(pt.r_of_lambda),
                    num(row.r_lambda),
                    num(row.gamma),
                    num(row.alpha),
                    opt(row.mu),
                    num(row.energy),
                    opt(row.sigma1),
                    opt(row.nu1),
                    row.regime.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = Document {
                rows,
                summary: TraceSummary {
                    dim: c.dim,
                    p: c.p,
                    grid_n: c.grid_n,
                    samples: c.samples,
                    lambda_max_factor: factor,
                    lambda_plus: lp,
                    e0: b.e0_closed_form(),
                },
            };
            write_json(&mut out, &doc)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BellSummary {
    #[serde(flatten)]
    turning: TurningRecord,
    /// `‖v‖_∞` at the largest sampled `λ < λ₊`.
    v_max_last: f64,
    lambda_last: f64,
    /// `d log‖v‖_∞ / d log(λ₊ - λ)` from the last two samples below `λ₊`.
    v_max_growth: f64,
}

#[derive(Serialize)]
struct BellOut {
    lambda: f64,
    mu: f64,
    #[serde(rename = "E")]
    energy: f64,
}

const BELL_SUMMARY_HEADER: [&str; 9] = [
    "lambda_t",
    "mu_t",
    "E_at_lambda_t",
    "E0",
    "E_inf",
    "lambda_plus",
    "v_max_last",
    "lambda_last",
    "v_max_growth",
];

fn bell(c: &Common) -> Outcome {
    validate(c)?;
    if let Some(f) = c.lambda_max_factor {
        if f != 1.0 {
            return Err(Failure::Usage(format!(
                "bell runs on [0, lambda_+]; --lambda-max-factor must be 1 (got {f})"
            )));
        }
    }
    let b = BallBranch::build(c.dim, c.p, c.grid_n)?;
    let curve = bell_curve(&b, c.samples)?;
    let t = curve.turning;
    let [(l1, v1), (l2, v2)] = curve.v_max_tail;
    let summary = BellSummary {
        turning: t,
        v_max_last: v2,
        lambda_last: l2,
        v_max_growth: (v2 / v1).ln() / ((t.lambda_plus - l2) / (t.lambda_plus - l1)).ln(),
    };
    let mut out = sink(c)?;
    match c.format {
        Format::Csv => {
            {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(["lambda", "mu", "E"]).map_err(csv_err)?;
                for r in &curve.rows {
                    w.write_record([num(r.lambda), num(r.mu), num(r.energy)])
                        .map_err(csv_err)?;
                }
                w.flush()?;
            }
            // trailing summary as comment lines, skipped by comment-aware readers
            let vals = [
                t.lambda_t,
                t.mu_t,
                t.energy_t,
                t.e0,
                t.e_inf,
                t.lambda_plus,
                summary.v_max_last,
                summary.lambda_last,
                summary.v_max_growth,
            ];
            writeln!(out, "# {}", BELL_SUMMARY_HEADER.join(","))?;
            writeln!(out, "# {}", vals.map(num).join(","))?;
        }
        Format::Json => {
            let rows = curve
                .rows
                .iter()
                .map(|r| BellOut {
                    lambda: r.lambda,
                    mu: r.mu,
                    energy: r.energy,
                })
                .collect();
            write_json(&mut out, &Document { rows, summary })?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn verify(v: &VerifyArgs) -> Outcome {
    let c = &v.common;
    let tolerances = validate(c)?;
    let cfg = VerifyConfig {
        dim: c.dim,
        p: c.p,
        grid_n: c.grid_n,
        samples: c.samples,
        modes: c.modes,
        tolerances,
        corrupt_profile: v.corrupt_profile,
    };
    let checks = run_suite(&cfg)?;
    let failed = checks.iter().filter(|k| !k.passed).count();
    let mut out = sink(c)?;
    match c.format {
        Format::Csv => {
            for k in &checks {
                let op = match k.kind {
                    Bound::Below => "<",
                    Bound::Above => ">",
                };
                let verdict = if k.passed { "PASS" } else { "FAIL" };
                write!(
                    out,
                    "{verdict} {:<36} {:>12.4e} {op} {:.1e}",
                    k.name, k.value, k.bound
                )?;
                if !k.detail.is_empty() {
                    write!(out, "  ({})", k.detail)?;
                }
                writeln!(out)?;
            }
            writeln!(
                out,
                "{} of {} checks passed",
                checks.len() - failed,
                checks.len()
            )?;
        }
        Format::Json => write_json(&mut out, &checks)?,
    }
    out.flush()?;
    for k in checks.iter().filter(|k| !k.passed) {
        eprintln!("failed check: {}", k.name);
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct SobolevOut {
    dim: usize,
    p: f64,
    t: f64,
    #[serde(rename = "Lambda_t")]
    lambda_t: f64,
    lambda0: f64,
    lambda1: Option<f64>,
    lambda_plus: f64,
}

fn sobolev(s: &SobolevArgs) -> Outcome {
    let c = &s.common;
    validate(c)?;
    let b = BallBranch::build(c.dim, c.p, c.grid_n)?;
    let lambda_t = sobolev_lambda(&b.geom, s.t)?;
    let th = thresholds(&b.geom, c.p)?;
    let rec = SobolevOut {
        dim: c.dim,
        p: c.p,
        t: s.t,
        lambda_t,
        lambda0: th.lambda0,
        lambda1: th.lambda1,
        lambda_plus: b.lambda_plus(),
    };
    let mut out = sink(c)?;
    match c.format {
        Format::Csv => {
            writeln!(out, "Lambda(t = {}) = {}", s.t, num(rec.lambda_t))?;
            writeln!(out, "lambda0       = {}", num(rec.lambda0))?;
            if let Some(l1) = rec.lambda1 {
                writeln!(out, "lambda1       = {}", num(l1))?;
            }
            writeln!(out, "lambda_plus   = {}", num(rec.lambda_plus))?;
        }
        Format::Json => write_json(&mut out, &rec)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| Failure::Usage(format!("output: {e}")))?;
    writeln!(out)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Usage(format!("output: {e}"))
}
