//! The `varlex` command line: module pass-throughs, suites, estimates and
//! report merging.
//!
//! Exit codes: 0 when every pass/fail check passes, 1 when a check fails,
//! 2 on bad input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use varlex_core::grid::{ExponentField, GridFunction};
use varlex_core::maximal::{bmo_norm, hl_maximal, local_sharp, sharp_delta};
use varlex_core::singular::{apply_pv, apply_truncated, commutator_apply};
use varlex_core::varlp::{classic_norm, luxemburg_norm, orlicz_norm};

use crate::config::{ExperimentConfig, KernelChoice, SideChoice};
use crate::error::{ExperimentError, Result};
use crate::report::{ExperimentReport, Status};
use crate::suites;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;

const DEFAULT_OUTPUT_DIR: &str = "varlex-reports";

#[derive(Debug, Parser)]
#[command(
    name = "varlex",
    version,
    about = "Variable-exponent norms, maximal operators and singular integrals on grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Norm of a grid function.
    Norm(NormArgs),
    /// Maximal, sharp and oscillation operators.
    Maximal(MaximalArgs),
    /// Discretized singular integrals and commutators.
    Transform(TransformArgs),
    /// Run a pass/fail suite.
    Verify {
        #[arg(value_enum)]
        suite: VerifySuite,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate an empirical constant (recorded, never pass/fail).
    Estimate {
        #[arg(value_enum)]
        constant: EstimateName,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Report utilities.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Luxemburg,
    Orlicz,
    Classic,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long, value_enum)]
    pub space: Space,
    /// Grid function JSON.
    #[arg(short = 'f', long = "function")]
    pub function: PathBuf,
    /// Exponent field JSON (luxemburg, orlicz).
    #[arg(short = 'p', long = "exponent")]
    pub exponent: Option<PathBuf>,
    /// Constant exponent (classic).
    #[arg(short = 'q', long)]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaximalKind {
    #[value(alias = "m")]
    Hl,
    Sharp,
    #[value(alias = "localsharp")]
    LocalSharp,
    Bmo,
}

#[derive(Debug, Args)]
pub struct MaximalArgs {
    #[arg(long, visible_alias = "op", value_enum)]
    pub kind: MaximalKind,
    #[arg(short = 'f', long = "function")]
    pub function: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = SideChoice::Dyadic)]
    pub sides: SideChoice,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum, default_value_t = KernelChoice::Hilbert)]
    pub kernel: KernelChoice,
    #[arg(short = 'f', long = "function")]
    pub function: PathBuf,
    /// Truncate the kernel at `|x - y| > epsilon` instead of the principal value.
    #[arg(long, visible_alias = "eps")]
    pub epsilon: Option<f64>,
    /// Symbol `b` of the commutator `[b, T]`.
    #[arg(long)]
    pub commutator: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifySuite {
    Pointwise,
    Singular,
    Lattice,
    Transfer,
    Cz,
    Commutator,
    All,
}

impl VerifySuite {
    fn names(self) -> Vec<&'static str> {
        match self {
            Self::Pointwise => vec!["pointwise"],
            Self::Singular => vec!["singular"],
            Self::Lattice => vec!["lattice"],
            Self::Transfer => vec!["transfer"],
            Self::Cz => vec!["cz"],
            Self::Commutator => vec!["commutator"],
            Self::All => suites::VERIFY_SUITES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateName {
    Lerner,
    Perez,
    Commutator,
    Cz,
}

impl EstimateName {
    fn name(self) -> &'static str {
        match self {
            Self::Lerner => "lerner",
            Self::Perez => "perez",
            Self::Commutator => "commutator",
            Self::Cz => "cz",
        }
    }
}

/// Configuration overrides shared by `verify` and `estimate`.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    #[arg(long, value_enum)]
    pub sides: Option<SideChoice>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// `lambda` of the local sharp function in the duality estimate.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p_lo: Option<f64>,
    #[arg(long)]
    pub p_hi: Option<f64>,
    #[arg(long)]
    pub p_infinity: Option<f64>,
    #[arg(long, env = "VARLEX_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, env = "VARLEX_THREADS")]
    pub threads: Option<usize>,
    /// Print the summary only, without writing report files.
    #[arg(long)]
    pub no_write: bool,
}

impl RunArgs {
    /// The configuration for `suite`: file (or defaults), then flags.
    pub fn config_for(&self, suite: &str) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_json::<ExperimentConfig>(path)?,
            None => ExperimentConfig {
                trials: suites::default_trials(suite),
                ..Default::default()
            },
        };
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(seed, self.seed);
        set!(sizes, self.sizes);
        set!(trials, self.trials);
        set!(restarts, self.restarts);
        set!(kernel, self.kernel);
        set!(sides, self.sides);
        set!(deltas, self.deltas);
        set!(lambdas, self.lambdas);
        set!(lerner_lambda, self.lambda);
        if let Some(v) = self.p_lo {
            cfg.exponent.p_lo = v;
        }
        if let Some(v) = self.p_hi {
            cfg.exponent.p_hi = v;
        }
        if let Some(v) = self.p_infinity {
            cfg.exponent.p_infinity = v;
        }
        if self.output_dir.is_some() {
            cfg.output_dir.clone_from(&self.output_dir);
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum ReportAction {
    /// Merge JSON reports into one.
    Merge {
        #[arg(required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
        /// Output directory of the merged JSON and CSV.
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| ExperimentError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Input(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct Scalar {
    value: f64,
}

fn run_norm(args: &NormArgs) -> Result<()> {
    let f: GridFunction = read_json(&args.function)?;
    let exponent = || -> Result<ExponentField> {
        let path = args.exponent.as_ref().ok_or_else(|| {
            ExperimentError::Input("--exponent is required for this space".into())
        })?;
        read_json(path)
    };
    match args.space {
        Space::Luxemburg => print_json(&luxemburg_norm(&f, &exponent()?)?),
        Space::Orlicz => print_json(&orlicz_norm(&f, &exponent()?)?),
        Space::Classic => {
            let q = args.q.ok_or_else(|| {
                ExperimentError::Input("-q is required for the classic space".into())
            })?;
            if !(q >= 1.0) {
                return Err(ExperimentError::Input(format!(
                    "q = {q} must be at least 1"
                )));
            }
            print_json(&Scalar {
                value: classic_norm(&f, q),
            })
        }
    }
}

fn run_maximal(args: &MaximalArgs) -> Result<()> {
    let f: GridFunction = read_json(&args.function)?;
    let cfg = ExperimentConfig {
        sides: args.sides,
        ..Default::default()
    }
    .maximal();
    match args.kind {
        MaximalKind::Hl => print_json(&hl_maximal(&f, &cfg)?),
        MaximalKind::Sharp => print_json(&sharp_delta(&f, args.delta, &cfg)?),
        MaximalKind::LocalSharp => print_json(&local_sharp(&f, args.lambda, &cfg)?),
        MaximalKind::Bmo => print_json(&Scalar {
            value: bmo_norm(&f, &cfg)?,
        }),
    }
}

fn run_transform(args: &TransformArgs) -> Result<()> {
    let f: GridFunction = read_json(&args.function)?;
    let kernel = ExperimentConfig {
        kernel: args.kernel,
        ..Default::default()
    }
    .kernel()?;
    if let Some(path) = &args.commutator {
        let b: GridFunction = read_json(path)?;
        return print_json(&commutator_apply(&b, &f, &kernel)?);
    }
    match args.epsilon {
        Some(eps) => print_json(&apply_truncated(&kernel, &f, eps)?),
        None => print_json(&apply_pv(&kernel, &f)?),
    }
}

fn summarize(report: &ExperimentReport) {
    let count = |s: Status| report.checks.iter().filter(|c| c.status == s).count();
    println!(
        "{}: {} passed, {} failed, {} recorded, {} trials ({} skipped)",
        report.suite,
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Recorded),
        report.trials,
        report.skipped
    );
    for c in report.failures() {
        println!(
            "  FAIL {} [{}]: lhs {} rhs {} (tolerance {})",
            c.name, c.location, c.lhs, c.rhs, c.tolerance
        );
    }
    for d in &report.diagnostics {
        println!("  note: {d}");
    }
    let e = &report.estimates;
    for (name, v) in [
        ("c_n_hat", e.c_n_hat),
        ("c_delta_n_hat", e.c_delta_n_hat),
        ("lerner_c_hat", e.lerner_c_hat),
        ("crw_ratio_lo", e.crw_ratio_lo),
        ("crw_ratio_hi", e.crw_ratio_hi),
    ] {
        if let Some(v) = v {
            println!("  {name} = {v:.6}");
        }
    }
}

fn finish(mut report: ExperimentReport, cfg: &ExperimentConfig, write: bool) -> Result<bool> {
    report.stamp();
    summarize(&report);
    if write {
        let dir = cfg
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        let (json, _) = report.write(&dir)?;
        println!("  report: {}", json.display());
    }
    Ok(report.passed())
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?
            .install(f)),
        None => Ok(f()),
    }
}

/// Runs the named suites; `Ok(false)` when a check failed.
fn run_suites(names: &[&str], run: &RunArgs, estimate: bool) -> Result<bool> {
    let configs = names
        .iter()
        .map(|n| run.config_for(n))
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    for (name, cfg) in names.iter().zip(&configs) {
        let report = in_pool(cfg.threads, || {
            if estimate {
                suites::estimate(name, cfg)
            } else {
                suites::verify(name, cfg)
            }
        })??;
        ok &= finish(report, cfg, !run.no_write)?;
    }
    Ok(ok)
}

fn merge(reports: &[PathBuf], output: &Path) -> Result<bool> {
    let loaded = reports
        .iter()
        .map(|p| ExperimentReport::read(p))
        .collect::<Result<Vec<_>>>()?;
    let merged = ExperimentReport::merge(&loaded)?;
    summarize(&merged);
    let (json, _) = merged.write(output)?;
    println!("  report: {}", json.display());
    Ok(merged.passed())
}

fn exit_for(result: Result<bool>) -> u8 {
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

/// Executes a parsed command and returns the exit code.
pub fn execute(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Norm(a) => run_norm(a).map(|_| true),
        Command::Maximal(a) => run_maximal(a).map(|_| true),
        Command::Transform(a) => run_transform(a).map(|_| true),
        Command::Verify { suite, run } => run_suites(&suite.names(), run, false),
        Command::Estimate { constant, run } => run_suites(&[constant.name()], run, true),
        Command::Report {
            action: ReportAction::Merge { reports, output },
        } => merge(reports, output),
    };
    exit_for(result)
}

/// Parses `args` (including the program name) and executes them.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_BAD_INPUT
            } else {
                EXIT_OK
            };
            let _ = e.print();
            code
        }
    }
}
