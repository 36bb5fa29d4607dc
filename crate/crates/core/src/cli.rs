//! Command-line front end. Phases on the command line and in every output
//! are in units of pi.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::catalog::{self, transform, NamedSequence, PhaseTransform};
use crate::error::Error;
use crate::expansion::expand_u11;
use crate::json;
use crate::model::ErrorModel;
use crate::profiler::{region_metrics, scan, GridSpec, RegionMetrics};
use crate::solver::{self, NullificationProblem, RangePolicy, SolveOptions};
use crate::suite::run_verification;

/// Relative `--out` paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "PHASECOMP_OUT_DIR";

pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const UNKNOWN_SEQUENCE: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "phasecomp", version, about = "Composite pi pulses robust to pulse-area and phase errors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check tabulated sequences, even-order vanishing and invariances.
    Verify(VerifyArgs),
    /// Find phases nullifying chosen expansion coefficients.
    Solve(SolveArgs),
    /// Transition probability over a grid of errors.
    Profile(ProfileArgs),
    /// Expansion coefficients of U11.
    Coeffs(CoeffsArgs),
    /// Apply phase transformations to a sequence.
    Transform(TransformArgs),
    /// List or show tabulated sequences.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Also require every tabulated residual to be below the tolerance.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Number of pulses (odd, at least 3).
    #[arg(long)]
    pub n: usize,
    /// Target multi-indices, e.g. "1,0;1,1". Optional for the triple model,
    /// where a heuristic first-order set is used.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long, value_enum, default_value_t = ModelArg::Double)]
    pub model: ModelArg,
    /// Number of random starting points.
    #[arg(long, default_value_t = 200)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[arg(long, value_enum, default_value_t = RangeArg::Either)]
    pub range: RangeArg,
    /// JSON file of starting points (interior phases in units of pi).
    #[arg(long)]
    pub seed_file: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Points per axis of the broadness grid.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Skip the broadness score.
    #[arg(long)]
    pub no_broadness: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Catalog name or a sequence JSON file.
    #[arg(long)]
    pub seq: String,
    /// Defaults to the model the sequence was designed for.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Fixed phase error for the triple-model grid.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Emit fractions and widths of the high-fidelity region instead of the grid.
    #[arg(long)]
    pub metrics: bool,
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub seq: String,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Per-variable truncation orders, e.g. "5,2".
    #[arg(long)]
    pub caps: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub seq: String,
    /// signflip, reverse, shift:<phase>, add2pi:<k>:<m>; repeatable, applied in order.
    #[arg(long = "op", required = true)]
    pub ops: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long, conflicts_with = "show")]
    pub list: bool,
    #[arg(long)]
    pub show: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Double,
    Triple,
}

impl From<ModelArg> for ErrorModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Double => ErrorModel::Double,
            ModelArg::Triple => ErrorModel::Triple,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RangeArg {
    ZeroTwoPi,
    SymmetricPi,
    Either,
}

impl From<RangeArg> for RangePolicy {
    fn from(r: RangeArg) -> Self {
        match r {
            RangeArg::ZeroTwoPi => RangePolicy::ZeroTwoPi,
            RangeArg::SymmetricPi => RangePolicy::SymmetricPi,
            RangeArg::Either => RangePolicy::Either,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownSequence(_) => exit::UNKNOWN_SEQUENCE,
            Error::Io(_) => exit::IO,
            _ => exit::USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: exit::USAGE,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `"1,0;1,1"` into multi-indices.
pub fn parse_targets(s: &str) -> Option<Vec<Vec<usize>>> {
    let targets: Option<Vec<Vec<usize>>> = s
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.split(',').map(|v| v.trim().parse().ok()).collect())
        .collect();
    targets.filter(|t| !t.is_empty())
}

fn parse_caps(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|v| v.trim().parse().ok()).collect()
}

/// Accepted seed-file layouts: `[[...], ...]` or `{"seeds": [[...], ...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum SeedFile {
    Bare(Vec<Vec<f64>>),
    Wrapped { seeds: Vec<Vec<f64>> },
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: exit::IO,
        message: format!("{}: {e}", path.display()),
    })
}

/// Catalog name, or a `.json` file holding a sequence as written by
/// `catalog --show` or `transform`.
pub fn load_sequence(spec: &str) -> crate::Result<NamedSequence> {
    if spec.ends_with(".json") {
        let text = fs::read_to_string(spec)?;
        let mut entry: NamedSequence = serde_json::from_str(&text)?;
        if entry.areas_pi.is_empty() {
            entry.areas_pi = vec![1.0; entry.phases_pi.len()];
        }
        entry.to_sequence()?;
        Ok(entry)
    } else {
        catalog::get(spec)
    }
}

fn load(spec: &str) -> CliResult<NamedSequence> {
    load_sequence(spec).map_err(|e| match e {
        Error::Json(_) => usage(format!("{spec}: {e}")),
        Error::Io(_) => Failure {
            code: exit::IO,
            message: format!("{spec}: {e}"),
        },
        other => other.into(),
    })
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(output: &Output, stdout: &mut dyn Write, bytes: &[u8]) -> CliResult<()> {
    let io_fail = |p: &Path, e: std::io::Error| Failure {
        code: exit::IO,
        message: format!("{}: {e}", p.display()),
    };
    match &output.out {
        Some(p) => {
            let p = resolve_out(p);
            fs::write(&p, bytes).map_err(|e| io_fail(&p, e))
        }
        None => stdout.write_all(bytes).map_err(|e| io_fail(Path::new("<stdout>"), e)),
    }
}

#[derive(Serialize)]
struct WithSeed<'a, T: Serialize> {
    rng_seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

fn to_json<T: Serialize>(rng_seed: u64, body: &T) -> CliResult<Vec<u8>> {
    Ok(json::to_string(&WithSeed { rng_seed, body })?.into_bytes())
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let report = run_verification(args.strict, args.rng)?;
    emit(&args.output, stdout, json::to_string(&report)?.as_bytes())?;
    Ok(if report.pass { exit::OK } else { exit::VERIFY_FAILED })
}

fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let targets = match (&args.targets, args.model) {
        (Some(t), _) => parse_targets(t).ok_or_else(|| usage(format!("malformed targets '{t}'")))?,
        (None, ModelArg::Triple) => {
            let _ = writeln!(stderr, "note: no --targets given, using heuristic triple-model targets");
            solver::heuristic_triple_targets()
        }
        (None, ModelArg::Double) => return Err(usage("--targets is required for the double model")),
    };
    let problem =
        NullificationProblem::new(args.n, args.model.into(), targets)?.with_range_policy(args.range.into());
    let mut options = SolveOptions::new(args.seeds, args.rng);
    options.limits.max_iterations = args.max_iterations;
    options.score_broadness = !args.no_broadness;
    options.broadness_points = args.points;
    if let Some(path) = &args.seed_file {
        let file: SeedFile =
            serde_json::from_str(&read_file(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        options.seeds = Some(match file {
            SeedFile::Bare(s) | SeedFile::Wrapped { seeds: s } => s,
        });
    }
    let set = solver::solve(&problem, &options)?;
    emit(&args.output, stdout, json::to_string(&set)?.as_bytes())?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct MetricsOutput<'a> {
    model: ErrorModel,
    spec: GridSpec,
    #[serde(flatten)]
    metrics: &'a RegionMetrics,
}

fn cmd_profile(args: &ProfileArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let entry = load(&args.seq)?;
    let model = args.model.map_or(entry.model, ErrorModel::from);
    let spec = match model {
        ErrorModel::Double => GridSpec::double_default(),
        ErrorModel::Triple => GridSpec::triple_default(args.eps),
    }
    .with_points(args.points);
    let grid = scan(&entry.to_sequence()?, model, &spec)?;
    let bytes = if args.metrics {
        let metrics = region_metrics(&grid);
        to_json(args.rng, &MetricsOutput { model, spec, metrics: &metrics })?
    } else {
        match args.format {
            Format::Json => to_json(args.rng, &grid.to_json())?,
            Format::Csv => {
                let header = format!(
                    "sequence={} model={} x={:?}[{},{};{}] y={:?}[{},{};{}] alpha={} delta={} epsilon={} rng_seed={}",
                    entry.name,
                    model,
                    spec.x.axis,
                    spec.x.min,
                    spec.x.max,
                    spec.x.points,
                    spec.y.axis,
                    spec.y.min,
                    spec.y.max,
                    spec.y.points,
                    spec.fixed.alpha,
                    spec.fixed.delta,
                    spec.fixed.epsilon,
                    args.rng
                );
                let mut buf = Vec::new();
                grid.write_csv(&mut buf, &header)?;
                buf
            }
        }
    };
    emit(&args.output, stdout, &bytes)?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct CoeffsOutput<'a> {
    sequence: &'a str,
    model: ErrorModel,
    #[serde(flatten)]
    table: &'a crate::expansion::CoefficientTable,
}

fn cmd_coeffs(args: &CoeffsArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let entry = load(&args.seq)?;
    let model = args.model.map_or(entry.model, ErrorModel::from);
    let caps = match &args.caps {
        Some(s) => parse_caps(s).ok_or_else(|| usage(format!("malformed caps '{s}'")))?,
        None => model.default_caps(),
    };
    let table = expand_u11(&entry.to_sequence()?, model, &caps)?;
    let out = CoeffsOutput {
        sequence: &entry.name,
        model,
        table: &table,
    };
    emit(&args.output, stdout, &to_json(args.rng, &out)?)?;
    Ok(exit::OK)
}

fn cmd_transform(args: &TransformArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let entry = load(&args.seq)?;
    let mut seq = entry.to_sequence()?;
    for op in &args.ops {
        let op: PhaseTransform = op.parse()?;
        seq = transform(&seq, &op)?;
    }
    // the transformed sequence no longer nullifies the same set in general
    let out = NamedSequence::from_sequence(&seq, Vec::new(), entry.model);
    emit(&args.output, stdout, &to_json(args.rng, &out)?)?;
    Ok(exit::OK)
}

fn cmd_catalog(args: &CatalogArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let bytes = match &args.show {
        Some(name) => to_json(args.rng, &catalog::get(name)?)?,
        None => {
            let mut text = String::new();
            for e in catalog::entries() {
                text.push_str(&format!("{:<8} N={:<3} {}\n", e.name, e.len(), e.model));
            }
            text.into_bytes()
        }
    };
    emit(&args.output, stdout, &bytes)?;
    Ok(exit::OK)
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Solve(a) => cmd_solve(a, stdout, stderr),
        Command::Profile(a) => cmd_profile(a, stdout),
        Command::Coeffs(a) => cmd_coeffs(a, stdout),
        Command::Transform(a) => cmd_transform(a, stdout),
        Command::Catalog(a) => cmd_catalog(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
