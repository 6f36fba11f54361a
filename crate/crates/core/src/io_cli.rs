//! Command-line parsing and CSV output.
//!
//! Numbers are written `%.17g`-style so every real survives a round trip
//! through text. Grids accept comma lists whose items may be inclusive ranges
//! `start:stop:step`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::asymptotics::{AsymptoticError, LawId, LawQuery, LawRegistry};
use crate::bounds::{self, BoundId, BoundQuery};
use crate::experiments::{self, CheckKinds, ExperimentError, ExperimentPlan, ExperimentRecord, Mode};
use crate::geometry::{sample_layer_stream, LayerSpec, PointCloud};
use crate::separability::{self, CheckConfig, ReportMode, SeparabilityError};

pub const RECORD_HEADER: &str = "d,r,n,trials,freq_linear,ci_linear_low,ci_linear_high,freq_fisher,ci_fisher_low,ci_fisher_high,bound_linear,bound_fisher,wall_time_seconds,lp_calls,lp_skipped_by_fisher";

pub const BOUND_CURVE_HEADER: &str = "bound_id,d,r,n,theta,value,domain_status";

pub const ASYMPTOTIC_HEADER: &str = "law,d,r,theta,n,regime,critical_radius,exact,approx,ratio,tends_to,status";

pub const CHECK_HEADER: &str = "index,verdict,method,margin";

#[derive(Debug, Error)]
pub enum CliError {
    /// `--help` or `--version` output; not a failure.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Lp(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Lp(_) => 4,
        }
    }

    fn io(path: Option<&Path>, source: io::Error) -> Self {
        let path = path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string());
        CliError::Io { path, source }
    }
}

impl From<SeparabilityError> for CliError {
    fn from(e: SeparabilityError) -> Self {
        match e {
            SeparabilityError::Lp { .. }
            | SeparabilityError::LpStatus { .. }
            | SeparabilityError::CertificateMismatch { .. } => CliError::Lp(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Check { source, d, r, trial } => match CliError::from(source) {
                CliError::Lp(msg) => CliError::Lp(format!("d={d}, r={r}, trial {trial}: {msg}")),
                other => other,
            },
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stochsep", version, about = "Separability of random points in a spherical layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw uniform points from the layer and write them as CSV.
    Sample(SampleArgs),
    /// Decide separability for points read from a CSV file.
    Check(CheckArgs),
    /// Evaluate probability bounds and admissible counts over a grid.
    Bounds(BoundsArgs),
    /// Tabulate exact values against their large-dimension approximants.
    Asymptotics(AsymptoticsArgs),
    /// Run a seeded Monte Carlo grid.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = "0")]
    r: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// CSV of points, one per row; a non-numeric first row is taken as a header.
    #[arg(long)]
    input: PathBuf,
    /// Strategy name: fisher, lp, linear or exact.
    #[arg(long, default_value = "linear")]
    method: String,
    /// Check only this point; all points otherwise.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, default_value_t = separability::DEFAULT_TOL)]
    tol: f64,
    /// Stop at the first non-separable point.
    #[arg(long)]
    verdict_only: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Comma list of bound names, or `all`.
    #[arg(long)]
    id: String,
    #[arg(long)]
    d: String,
    #[arg(long, default_value = "0")]
    r: String,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AsymptoticsArgs {
    /// Comma list of law names, or `all`.
    #[arg(long, default_value = "all")]
    law: String,
    #[arg(long)]
    d: String,
    #[arg(long)]
    r: String,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Point,
    Set,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Start from a named plan; explicit flags override its fields.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Comma list drawn from `linear,fisher`.
    #[arg(long, default_value = "linear,fisher")]
    checks: String,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Write 0 for wall time so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Sample { layer: LayerSpec, n: usize, seed: u64, stream: u64 },
    Check { input: PathBuf, method: String, index: Option<usize>, tol: f64, mode: ReportMode },
    Bounds { ids: Vec<BoundId>, d_values: Vec<usize>, r_values: Vec<f64>, n: u64, theta: Option<f64> },
    Asymptotics { laws: Vec<LawId>, d_values: Vec<usize>, r_values: Vec<f64>, theta: f64, n: u64 },
    Experiment { plan: ExperimentPlan, threads: Option<usize> },
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    /// `None` writes to standard output.
    pub output: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_number<T: std::str::FromStr>(flag: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| usage(format!("{flag}: cannot parse `{s}` as a number")))
}

/// Parses `a,b,start:stop:step,...` into integers.
pub fn parse_int_grid(flag: &str, spec: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in spec.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_number(flag, v)?),
            [a, b] | [a, b, _] => {
                let start: usize = parse_number(flag, a)?;
                let stop: usize = parse_number(flag, b)?;
                let step: usize = if parts.len() == 3 { parse_number(flag, parts[2])? } else { 1 };
                if step == 0 || stop < start {
                    return Err(usage(format!("{flag}: empty or invalid range `{item}`")));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(usage(format!("{flag}: invalid range `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(usage(format!("{flag}: empty grid")));
    }
    Ok(out)
}

/// Parses `a,b,start:stop:step,...` into reals; ranges include `stop` up to
/// rounding.
pub fn parse_real_grid(flag: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in spec.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_number(flag, v)?),
            [a, b, c] => {
                let start: f64 = parse_number(flag, a)?;
                let stop: f64 = parse_number(flag, b)?;
                let step: f64 = parse_number(flag, c)?;
                if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
                    return Err(usage(format!("{flag}: empty or invalid range `{item}`")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|k| start + k as f64 * step));
            }
            _ => return Err(usage(format!("{flag}: invalid range `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(usage(format!("{flag}: empty grid")));
    }
    Ok(out)
}

fn check_radii(flag: &str, rs: &[f64]) -> Result<(), CliError> {
    match rs.iter().find(|r| !(0.0..1.0).contains(*r)) {
        Some(r) => Err(usage(format!("{flag}: radius must satisfy 0 <= r < 1, got {r}"))),
        None => Ok(()),
    }
}

fn check_dims(flag: &str, ds: &[usize]) -> Result<(), CliError> {
    if ds.contains(&0) {
        Err(usage(format!("{flag}: dimension must be at least 1")))
    } else {
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<(), CliError> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--theta: must satisfy 0 < theta < 1, got {theta}")))
    }
}

/// Parses and validates a command line; `argv` excludes the program name.
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> Result<RunConfig, CliError> {
    let args = std::iter::once("stochsep").chain(argv.iter().map(|s| s.as_ref()));
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            CliError::Info(e.to_string())
        }
        _ => usage(e.to_string()),
    })?;

    match cli.command {
        Command::Sample(a) => {
            let layer = LayerSpec::new(a.d, a.r).map_err(|e| usage(format!("--d/--r: {e}")))?;
            Ok(RunConfig { task: Task::Sample { layer, n: a.n, seed: a.seed, stream: a.stream }, output: a.output })
        }
        Command::Check(a) => {
            if !(a.tol > 0.0 && a.tol.is_finite()) {
                return Err(usage(format!("--tol: must be positive, got {}", a.tol)));
            }
            if !separability::Registry::with_builtins().names().any(|n| n == a.method) {
                return Err(usage(format!("--method: unknown strategy `{}`", a.method)));
            }
            let mode = if a.verdict_only { ReportMode::VerdictOnly } else { ReportMode::Full };
            Ok(RunConfig {
                task: Task::Check { input: a.input, method: a.method, index: a.index, tol: a.tol, mode },
                output: a.output,
            })
        }
        Command::Bounds(a) => {
            let ids: Vec<BoundId> = if a.id == "all" {
                BoundId::ALL.to_vec()
            } else {
                a.id.split(',')
                    .map(|s| s.trim().parse::<BoundId>().map_err(|e| usage(format!("--id: {e}"))))
                    .collect::<Result<_, _>>()?
            };
            let d_values = parse_int_grid("--d", &a.d)?;
            check_dims("--d", &d_values)?;
            let r_values = parse_real_grid("--r", &a.r)?;
            check_radii("--r", &r_values)?;
            if let Some(t) = a.theta {
                check_theta(t)?;
            }
            let needs_n = ids.iter().any(|id| id.is_probability());
            let needs_theta = ids.iter().any(|id| !id.is_probability());
            if needs_n && a.n.is_none() {
                return Err(usage("--n: required by probability bounds"));
            }
            if needs_theta && a.theta.is_none() {
                return Err(usage("--theta: required by admissible-count bounds"));
            }
            Ok(RunConfig {
                task: Task::Bounds { ids, d_values, r_values, n: a.n.unwrap_or(0), theta: a.theta },
                output: a.output,
            })
        }
        Command::Asymptotics(a) => {
            let registry = LawRegistry::with_builtins();
            let laws: Vec<LawId> = if a.law == "all" {
                LawId::ALL.to_vec()
            } else {
                a.law
                    .split(',')
                    .map(|s| registry.by_name(s.trim()).map(|l| l.id()).map_err(|e| usage(format!("--law: {e}"))))
                    .collect::<Result<_, _>>()?
            };
            let d_values = parse_int_grid("--d", &a.d)?;
            check_dims("--d", &d_values)?;
            let r_values = parse_real_grid("--r", &a.r)?;
            if let Some(r) = r_values.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
                return Err(usage(format!("--r: asymptotic laws need 0 < r < 1, got {r}")));
            }
            check_theta(a.theta)?;
            Ok(RunConfig {
                task: Task::Asymptotics { laws, d_values, r_values, theta: a.theta, n: a.n },
                output: a.output,
            })
        }
        Command::Experiment(a) => parse_experiment(a),
    }
}

fn parse_experiment(a: ExperimentArgs) -> Result<RunConfig, CliError> {
    let seed = a.seed.ok_or_else(|| usage("--seed: required for experiments"))?;
    let mut plan = match &a.preset {
        Some(name) => ExperimentPlan::preset(name, seed).ok_or_else(|| {
            usage(format!("--preset: unknown plan `{name}` (known: {})", experiments::PRESETS.join(", ")))
        })?,
        None => {
            let missing: Vec<&str> = [
                ("--mode", a.mode.is_none()),
                ("--d", a.d.is_none()),
                ("--r", a.r.is_none()),
                ("--n", a.n.is_none()),
                ("--trials", a.trials.is_none()),
            ]
            .into_iter()
            .filter(|p| p.1)
            .map(|p| p.0)
            .collect();
            if !missing.is_empty() {
                return Err(usage(format!("missing required options without --preset: {}", missing.join(", "))));
            }
            ExperimentPlan::new(Mode::PointLevel, vec![], vec![], 0, 0, seed)
        }
    };
    if let Some(m) = a.mode {
        plan.mode = match m {
            ModeArg::Point => Mode::PointLevel,
            ModeArg::Set => Mode::SetLevel,
        };
    }
    if let Some(d) = &a.d {
        plan.d_values = parse_int_grid("--d", d)?;
    }
    if let Some(r) = &a.r {
        plan.r_values = parse_real_grid("--r", r)?;
    }
    if let Some(n) = a.n {
        plan.n = n;
    }
    if let Some(t) = a.trials {
        if t == 0 {
            return Err(usage("--trials: must be at least 1"));
        }
        plan.trials = t;
    }
    if let Some(tol) = a.tol {
        plan.tol = tol;
    }
    let mut kinds = CheckKinds { linear: false, fisher: false };
    for k in a.checks.split(',') {
        match k.trim() {
            "linear" => kinds.linear = true,
            "fisher" => kinds.fisher = true,
            other => return Err(usage(format!("--checks: unknown check `{other}`"))),
        }
    }
    plan.check_kinds = kinds;
    plan.record_timing = !a.no_timing;
    if a.threads == Some(0) {
        return Err(usage("--threads: must be at least 1"));
    }
    check_dims("--d", &plan.d_values)?;
    check_radii("--r", &plan.r_values)?;
    plan.validate().map_err(|e| usage(e.to_string()))?;
    Ok(RunConfig { task: Task::Experiment { plan, threads: a.threads }, output: a.output })
}

/// `%.17g` formatting; `nan`, `inf` and `-inf` for non-finite values.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (-4..17).contains(&exp) {
        if exp >= 0 {
            let split = exp as usize + 1;
            out.push_str(&digits[..split]);
            let frac = digits[split..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        } else {
            out.push_str("0.");
            out.push_str(&"0".repeat((-exp - 1) as usize));
            out.push_str(digits.trim_end_matches('0'));
        }
    } else {
        out.push_str(&digits[..1]);
        let frac = digits[1..].trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        out.push('e');
        out.push(if exp < 0 { '-' } else { '+' });
        out.push_str(&format!("{:02}", exp.abs()));
    }
    out
}

/// Inverse of [`format_real`].
pub fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

fn record_row(rec: &ExperimentRecord) -> String {
    let reals = [
        rec.r,
        rec.freq_linear,
        rec.ci_linear.0,
        rec.ci_linear.1,
        rec.freq_fisher,
        rec.ci_fisher.0,
        rec.ci_fisher.1,
        rec.bound_linear,
        rec.bound_fisher,
        rec.wall_time_seconds,
    ]
    .map(format_real);
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        rec.d,
        reals[0],
        rec.n,
        rec.trials,
        reals[1],
        reals[2],
        reals[3],
        reals[4],
        reals[5],
        reals[6],
        reals[7],
        reals[8],
        reals[9],
        rec.lp_calls,
        rec.lp_skipped_by_fisher
    )
}

/// Writes records as CSV sorted by `(r, d)`.
pub fn write_records<W: Write>(records: &[ExperimentRecord], mut out: W) -> io::Result<()> {
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.d.cmp(&b.d)));
    writeln!(out, "{RECORD_HEADER}")?;
    for rec in sorted {
        writeln!(out, "{}", record_row(rec))?;
    }
    out.flush()
}

fn with_destination<F>(destination: Option<&Path>, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match destination {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(Some(path), e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).map_err(|e| CliError::io(Some(path), e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w).map_err(|e| CliError::io(None, e))
        }
    }
}

/// Writes records to `destination`, or standard output when `None`.
pub fn emit_records(records: &[ExperimentRecord], destination: Option<&Path>) -> Result<(), CliError> {
    with_destination(destination, |w| write_records(records, w))
}

/// Reads a file written by [`write_records`].
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ExperimentRecord>, String> {
    let mut lines = input.lines();
    let header = lines.next().ok_or("empty input")?.map_err(|e| e.to_string())?;
    if header != RECORD_HEADER {
        return Err(format!("unexpected header `{header}`"));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 {
            return Err(format!("row {}: expected 15 fields, got {}", k + 1, f.len()));
        }
        let real = |i: usize| parse_real(f[i]).ok_or_else(|| format!("row {}: bad real `{}`", k + 1, f[i]));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| format!("row {}: bad integer `{}`", k + 1, f[i]));
        out.push(ExperimentRecord {
            d: int(0)? as usize,
            r: real(1)?,
            n: int(2)? as usize,
            trials: int(3)?,
            freq_linear: real(4)?,
            ci_linear: (real(5)?, real(6)?),
            freq_fisher: real(7)?,
            ci_fisher: (real(8)?, real(9)?),
            bound_linear: real(10)?,
            bound_fisher: real(11)?,
            wall_time_seconds: real(12)?,
            lp_calls: int(13)?,
            lp_skipped_by_fisher: int(14)?,
        });
    }
    Ok(out)
}

fn theta_field(theta: Option<f64>) -> String {
    theta.map_or_else(String::new, format_real)
}

/// Long-format bound table, one row per `(bound_id, r, d)`. Formulas that
/// cannot be evaluated at a grid point yield `nan` with the reason in
/// `domain_status`; the sweep always completes.
pub fn write_bound_curves<W: Write>(
    ids: &[BoundId],
    d_values: &[usize],
    r_values: &[f64],
    n: u64,
    theta: Option<f64>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{BOUND_CURVE_HEADER}")?;
    for &id in ids {
        for &r in r_values {
            for &d in d_values {
                let (value, status) = match BoundQuery::new(d, r, n, theta).and_then(|q| bounds::evaluate(id, &q)) {
                    Ok(res) => (res.value, res.domain_status.as_str()),
                    Err(bounds::BoundError::MissingTheta(_)) => (f64::NAN, "missing_theta"),
                    Err(bounds::BoundError::InvalidRadius(_)) => (f64::NAN, "invalid_radius"),
                    Err(bounds::BoundError::InvalidTheta(_)) => (f64::NAN, "invalid_theta"),
                    Err(_) => (f64::NAN, "invalid_input"),
                };
                writeln!(out, "{id},{d},{},{n},{},{},{status}", format_real(r), theta_field(theta), format_real(value))?;
            }
        }
    }
    out.flush()
}

pub fn emit_bound_curves(
    ids: &[BoundId],
    d_values: &[usize],
    r_values: &[f64],
    n: u64,
    theta: Option<f64>,
    destination: Option<&Path>,
) -> Result<(), CliError> {
    with_destination(destination, |w| write_bound_curves(ids, d_values, r_values, n, theta, w))
}

pub fn write_asymptotics<W: Write>(
    laws: &[LawId],
    d_values: &[usize],
    r_values: &[f64],
    theta: f64,
    n: u64,
    mut out: W,
) -> io::Result<()> {
    let registry = LawRegistry::with_builtins();
    writeln!(out, "{ASYMPTOTIC_HEADER}")?;
    for &id in laws {
        let law = registry.by_name(id.as_str()).expect("built-in law");
        for &r in r_values {
            for &d in d_values {
                let q = LawQuery { r, d, theta, n };
                let prefix = format!("{id},{d},{},{},{n}", format_real(r), format_real(theta));
                match law.evaluate(&q) {
                    Ok(a) => writeln!(
                        out,
                        "{prefix},{},{},{},{},{},{},ok",
                        a.regime.regime.as_str(),
                        format_real(a.regime.critical_value),
                        format_real(a.exact()),
                        format_real(a.approx()),
                        format_real(a.ratio()),
                        a.tends_to
                    )?,
                    Err(e) => {
                        let status = match e {
                            AsymptoticError::VacuousBound { .. } => "vacuous",
                            AsymptoticError::TooFewPoints { .. } => "too_few_points",
                            _ => "invalid_input",
                        };
                        writeln!(out, "{prefix},,{},nan,nan,nan,,{status}", format_real(law.critical_radius()))?
                    }
                }
            }
        }
    }
    out.flush()
}

pub fn write_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> io::Result<()> {
    let header: Vec<String> = (0..cloud.dim()).map(|k| format!("x{k}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|&v| format_real(v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

/// Reads points from CSV; a first row that does not parse is skipped as a
/// header.
pub fn read_cloud<R: BufRead>(input: R) -> Result<PointCloud, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Option<Vec<f64>> = line.split(',').map(parse_real).collect();
        match parsed {
            Some(row) => rows.push(row),
            None if k == 0 => continue,
            None => return Err(format!("line {}: cannot parse `{line}`", k + 1)),
        }
    }
    PointCloud::from_rows(&rows).map_err(|e| e.to_string())
}

fn run_check(
    input: &Path,
    method: &str,
    index: Option<usize>,
    tol: f64,
    mode: ReportMode,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let file = File::open(input).map_err(|e| CliError::io(Some(input), e))?;
    let cloud = read_cloud(BufReader::new(file)).map_err(|e| CliError::Domain(format!("{}: {e}", input.display())))?;
    let config = CheckConfig { tol, ..CheckConfig::default() };
    let test = separability::Registry::with_builtins().create(method, &config)?;
    let certs = match index {
        Some(i) => vec![test.check_point(&cloud, i)?],
        None => separability::check_set(test.as_ref(), &cloud, mode)?.per_point,
    };
    with_destination(output, |w| {
        writeln!(w, "{CHECK_HEADER}")?;
        for c in &certs {
            writeln!(w, "{},{},{},{}", c.index, c.verdict.as_str(), c.method, format_real(c.margin))?;
        }
        w.flush()
    })
}

fn run_experiment(plan: &ExperimentPlan, threads: Option<usize>) -> Result<Vec<ExperimentRecord>, CliError> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
            Ok(pool.install(|| experiments::run(plan))?)
        }
        None => Ok(experiments::run(plan)?),
    }
}

/// Executes a validated configuration.
pub fn execute(config: &RunConfig) -> Result<(), CliError> {
    let output = config.output.as_deref();
    match &config.task {
        Task::Sample { layer, n, seed, stream } => {
            let cloud = sample_layer_stream(layer, *n, *seed, *stream);
            with_destination(output, |w| write_cloud(&cloud, w))
        }
        Task::Check { input, method, index, tol, mode } => run_check(input, method, *index, *tol, *mode, output),
        Task::Bounds { ids, d_values, r_values, n, theta } => {
            emit_bound_curves(ids, d_values, r_values, *n, *theta, output)
        }
        Task::Asymptotics { laws, d_values, r_values, theta, n } => {
            with_destination(output, |w| write_asymptotics(laws, d_values, r_values, *theta, *n, w))
        }
        Task::Experiment { plan, threads } => {
            let records = run_experiment(plan, *threads)?;
            emit_records(&records, output)
        }
    }
}

/// Parses, runs and maps the outcome to an exit code.
pub fn main_with_args<S: AsRef<str>>(argv: &[S]) -> i32 {
    match parse_args(argv).and_then(|c| execute(&c)) {
        Ok(()) => 0,
        Err(CliError::Info(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("stochsep: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(-2.25), "-2.25");
        assert_eq!(format_real(0.1), "0.10000000000000001");
        assert_eq!(format_real(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_real(1e20), "1e+20");
        assert_eq!(format_real(123456.0), "123456");
        assert_eq!(format_real(0.00012), "0.00012");
        assert_eq!(format_real(f64::NAN), "nan");
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 5e-324, f64::MAX, -7.5e10, f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(parse_real(&format_real(x)).unwrap().to_bits(), x.to_bits(), "{x}");
        }
        assert!(parse_real("nan").unwrap().is_nan());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_int_grid("--d", "5:80:5").unwrap(), (1..=16).map(|k| 5 * k).collect::<Vec<_>>());
        assert_eq!(parse_int_grid("--d", "1:3,10").unwrap(), vec![1, 2, 3, 10]);
        assert!(parse_int_grid("--d", "5:1:1").is_err());
        assert!(parse_int_grid("--d", "1:5:0").is_err());
        assert!(parse_int_grid("--d", "x").is_err());
        assert_eq!(parse_real_grid("--r", "0,0.5,0.9").unwrap(), vec![0.0, 0.5, 0.9]);
        assert_eq!(parse_real_grid("--r", "0:0.3:0.1").unwrap().len(), 4);
        assert!(parse_real_grid("--r", "1,000").unwrap() == vec![1.0, 0.0]);
    }

    #[test]
    fn experiment_args() {
        let argv = ["experiment", "--mode", "set", "--d", "5:80:5", "--r", "0,0.5,0.9", "--n", "1000", "--trials", "60", "--seed", "42"];
        let cfg = parse_args(&argv).unwrap();
        let Task::Experiment { plan, .. } = cfg.task else { panic!("wrong task") };
        assert_eq!(plan.mode, Mode::SetLevel);
        assert_eq!(plan.d_values, (1..=16).map(|k| 5 * k).collect::<Vec<_>>());
        assert_eq!(plan.r_values, vec![0.0, 0.5, 0.9]);
        assert_eq!((plan.n, plan.trials, plan.master_seed), (1000, 60, 42));

        let err = parse_args(&["experiment", "--trials", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse_args(&["experiment", "--mode", "set", "--d", "5", "--r", "0", "--n", "10", "--trials", "5"])
            .unwrap_err();
        assert!(err.to_string().contains("--seed"));
        let err = parse_args(&["experiment", "--seed", "1", "--preset", "desk-point", "--r", "1.0"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse_args(&["experiment", "--bogus"]).unwrap_err();
        assert!(err.to_string().contains("--bogus"));
        assert!(parse_args(&["experiment", "--seed", "1", "--preset", "fig2"]).is_ok());
    }

    #[test]
    fn bounds_args() {
        let cfg = parse_args(&["bounds", "--id", "p_linear_lb", "--d", "20", "--n", "1024"]).unwrap();
        assert_eq!(
            cfg.task,
            Task::Bounds { ids: vec![BoundId::PLinearLb], d_values: vec![20], r_values: vec![0.0], n: 1024, theta: None }
        );
        assert_eq!(parse_args(&["bounds", "--id", "n_linear", "--d", "20"]).unwrap_err().exit_code(), 2);
        assert_eq!(parse_args(&["bounds", "--id", "zzz", "--d", "20", "--n", "2"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn help_is_not_an_error() {
        assert_eq!(parse_args(&["--help"]).unwrap_err().exit_code(), 0);
    }
}
