//! Command-line front end: `certify`, `cdf`, `sweep` and `verify`.
//!
//! [`run`] parses arguments, writes to the given streams and returns the process exit code, so the
//! binary is a thin wrapper and the commands can be driven from tests.

mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certificates::{certify_all, CertificateReport, HoldsAtX, Interval, Region, Witness};
use crate::error::Error;
use crate::model::{ComparisonInstance, WeightVector};
use crate::oracle::{beta_cdf_inversion, beta_cdf_mc, CdfEstimate};
use crate::transforms::auxiliary_candidates;

pub use verify::{run_verify, RuleTally, VerifyConfig, VerifySummary};

pub const EXIT_CERTIFIED: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_IMPOSSIBLE: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 5;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Parser)]
#[command(
    name = "qfcert",
    version,
    about = "Certify P(Σ aᵢξᵢ² < x) ≤ P(Σ bᵢξᵢ² < x) and check certificates numerically",
    after_help = "Vectors are comma-separated (`4,1,0.5`) or `@file` with whitespace-separated values.\n\
                  Exit codes: 0 certified, 1 verify violation, 2 unknown, 3 impossible, \
                  5 tolerance not reached, 64 usage error, 70 internal error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every certificate rule on (a, b) and report where the ordering is guaranteed.
    Certify(CertifyArgs),
    /// Evaluate β(x, w) with an error bound.
    Cdf(CdfArgs),
    /// Write a CSV of both CDFs and the certified region over a grid of x.
    Sweep(SweepArgs),
    /// Check certificates on random instances against the Monte Carlo oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true)]
    a: Vector,
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true)]
    b: Vector,
    /// Query point; the exit code then reflects the verdict at x.
    #[arg(long)]
    x: Option<f64>,
    /// Add an inversion spot check of both CDFs at --x.
    #[arg(long, requires = "x")]
    oracle: bool,
    /// Inversion tolerance for --oracle.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Inversion,
    Mc,
}

#[derive(Debug, Args)]
struct CdfArgs {
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true)]
    w: Vector,
    #[arg(long)]
    x: f64,
    #[arg(long, value_enum, default_value_t = Method::Inversion)]
    method: Method,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true)]
    a: Vector,
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true)]
    b: Vector,
    #[arg(long)]
    x_min: f64,
    #[arg(long)]
    x_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    steps: usize,
    /// Output CSV path; `-` writes to stdout.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Largest dimension drawn.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Smallest dimension drawn.
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per vector and trial.
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// Standard errors used for the Monte Carlo bound.
    #[arg(long, default_value_t = 4.0)]
    sigmas: f64,
    /// Inversion tolerance used to confirm a Monte Carlo flag.
    #[arg(long, default_value_t = 1e-9)]
    confirm_tol: f64,
    /// Use this a in every trial instead of drawing one (requires --fixture-b).
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true, requires = "fixture_b")]
    fixture_a: Option<Vector>,
    #[arg(long, value_parser = parse_vector_arg, allow_hyphen_values = true, requires = "fixture_a")]
    fixture_b: Option<Vector>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone)]
struct Vector(Vec<f64>);

fn parse_vector_arg(s: &str) -> Result<Vector, String> {
    parse_vector(s).map(Vector)
}

/// Parses `1,2.5,3` or `@path` (whitespace-separated values).
pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    let (text, sep_ws) = match s.strip_prefix('@') {
        Some(path) => (
            std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?,
            true,
        ),
        None => (s.to_owned(), false),
    };
    let parts: Vec<&str> = if sep_ws {
        text.split_whitespace().collect()
    } else {
        text.split(',').map(str::trim).collect()
    };
    let v = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty vector".into());
    }
    Ok(v)
}

/// [`certify_all`] plus the auxiliary candidates derived from the transforms.
pub fn full_report(inst: &ComparisonInstance, x: Option<f64>) -> crate::Result<CertificateReport> {
    let base = certify_all(inst, x)?;
    let extra = auxiliary_candidates(inst);
    if extra.is_empty() {
        return Ok(base);
    }
    let mut certs = base.certificates;
    certs.extend(extra);
    CertificateReport::from_certificates(inst, certs, x, base.notes)
}

fn exit_for_error(e: &Error) -> i32 {
    match e {
        Error::ToleranceUnreachable { .. } => EXIT_TOLERANCE,
        Error::InternalInconsistency(_) | Error::NonMonotoneResult(_) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    }
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Certify(a) => cmd_certify(&a, out),
        Command::Cdf(a) => cmd_cdf(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_for_error(&e)
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

enum CliError {
    Lib(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn fmt_region(r: &Region) -> String {
    match r {
        Region::AllX => "all x".into(),
        Region::AtMost(t) => format!("x ≤ {t:.6}"),
        Region::AtLeast(t) => format!("x ≥ {t:.6}"),
    }
}

fn fmt_interval(iv: &Interval) -> String {
    match iv.hi {
        Some(h) => format!("[{:.6}, {:.6}]", iv.lo, h),
        None => format!("[{:.6}, ∞)", iv.lo),
    }
}

fn fmt_estimate(e: &CdfEstimate) -> String {
    format!("{:.10} ± {:.1e}", e.value, e.error_bound)
}

fn render_report(r: &CertificateReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "a (sorted): {}", fmt_vec(&r.a_canonical))?;
    writeln!(out, "b (sorted): {}", fmt_vec(&r.b_canonical))?;
    writeln!(
        out,
        "max a ≥ max b: {}",
        if r.necessary_max { "yes" } else { "no (ordering cannot hold for all x)" }
    )?;
    writeln!(out, "certificates:")?;
    for c in &r.certificates {
        let status = match &c.region {
            Some(reg) if c.applicable => fmt_region(reg),
            _ => "not applicable".into(),
        };
        let witness = match &c.witness {
            Witness::None => String::new(),
            w => serde_json::to_string(w).unwrap_or_default(),
        };
        write!(out, "  {:<18} {:<20} {}", c.rule.name(), status, witness)?;
        match &c.note {
            Some(n) => writeln!(out, "  ({n})")?,
            None => writeln!(out)?,
        }
    }
    if r.region_union.is_empty() {
        writeln!(out, "certified region: none")?;
    } else {
        let parts: Vec<String> = r.region_union.iter().map(fmt_interval).collect();
        writeln!(out, "certified region: {}", parts.join(" ∪ "))?;
    }
    for n in &r.notes {
        writeln!(out, "note: {n}")?;
    }
    if let (Some(x), Some(h)) = (r.x_query, r.holds_at_x) {
        let verdict = match h {
            HoldsAtX::Certified => format!(
                "certified ({})",
                r.best_rule_at(x).map(|rule| rule.name()).unwrap_or("-")
            ),
            HoldsAtX::Unknown => "unknown".into(),
            HoldsAtX::ImpossibleAllX => "impossible: β(x, a) > β(x, b) at this x".into(),
        };
        writeln!(out, "at x = {x}: {verdict}")?;
    }
    if let Some([ea, eb]) = &r.oracle_spotcheck {
        writeln!(out, "oracle: β(x, a) = {}", fmt_estimate(ea))?;
        writeln!(out, "        β(x, b) = {}", fmt_estimate(eb))?;
    }
    Ok(())
}

fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let inst = ComparisonInstance::new(&args.a.0, &args.b.0)?;
    let mut report = full_report(&inst, args.x)?;
    if args.oracle {
        let x = args.x.expect("clap enforces --x with --oracle");
        report.oracle_spotcheck = Some([
            beta_cdf_inversion(inst.a(), x, args.tol)?,
            beta_cdf_inversion(inst.b(), x, args.tol)?,
        ]);
    }
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &report)?;
        writeln!(out)?;
    } else {
        render_report(&report, out)?;
    }
    Ok(match report.holds_at_x {
        Some(HoldsAtX::Certified) => EXIT_CERTIFIED,
        Some(HoldsAtX::Unknown) => EXIT_UNKNOWN,
        Some(HoldsAtX::ImpossibleAllX) => EXIT_IMPOSSIBLE,
        None if report.all_x() => EXIT_CERTIFIED,
        None if !report.necessary_max => EXIT_IMPOSSIBLE,
        None => EXIT_UNKNOWN,
    })
}

fn cmd_cdf(args: &CdfArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let w = WeightVector::new(&args.w.0)?;
    let e = match args.method {
        Method::Inversion => beta_cdf_inversion(&w, args.x, args.tol)?,
        Method::Mc => beta_cdf_mc(&w, args.x, args.samples, args.seed)?,
    };
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &e)?;
        writeln!(out)?;
    } else {
        writeln!(out, "{}", fmt_estimate(&e))?;
    }
    Ok(0)
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if args.steps == 0 || !(args.x_min <= args.x_max) || args.x_min < 0.0 {
        return Err(Error::InvalidArgument("need 0 ≤ --x-min ≤ --x-max and --steps ≥ 1".into()).into());
    }
    let inst = ComparisonInstance::new(&args.a.0, &args.b.0)?;
    let report = full_report(&inst, None)?;
    let sink: Box<dyn Write + '_> = if args.out.as_os_str() == "-" {
        Box::new(&mut *out)
    } else {
        Box::new(std::fs::File::create(&args.out)?)
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["x", "beta_a", "beta_b", "err_a", "err_b", "certified_here", "best_rule"])?;
    for x in grid(args.x_min, args.x_max, args.steps) {
        let ea = beta_cdf_inversion(inst.a(), x, args.tol)?;
        let eb = beta_cdf_inversion(inst.b(), x, args.tol)?;
        let best = report.best_rule_at(x).map(|r| r.name()).unwrap_or("");
        w.write_record([
            x.to_string(),
            ea.value.to_string(),
            eb.value.to_string(),
            ea.error_bound.to_string(),
            eb.error_bound.to_string(),
            u8::from(report.certified_at(x)).to_string(),
            best.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let fixture = match (&args.fixture_a, &args.fixture_b) {
        (Some(a), Some(b)) => Some(ComparisonInstance::new(&a.0, &b.0)?),
        _ => None,
    };
    let cfg = VerifyConfig {
        trials: args.trials,
        n_min: args.n_min,
        n_max: args.n,
        seed: args.seed,
        samples: args.samples,
        sigmas: args.sigmas,
        confirm_tol: args.confirm_tol,
        fixture,
    };
    let summary = run_verify(&cfg)?;
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &summary)?;
        writeln!(out)?;
    } else {
        summary.render(out)?;
    }
    Ok(if summary.violations() == 0 { 0 } else { EXIT_VIOLATION })
}
