//! `biplane` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "biplane",
    version,
    about = "Lehmann-type bivariate Cox regression via pseudo-observations"
)]
struct Cli {
    /// Worker threads (falls back to BIPLANE_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the simple Lehmann model.
    FitSimple(FitSimpleArgs),
    /// Fit the generalized Lehmann model in two steps.
    FitGeneral(FitGeneralArgs),
    /// Draw a dataset from a model specification.
    Simulate(SimulateArgs),
    /// Check that model parameters define a proper survival function.
    Validity(ValidityArgs),
    /// Tabulate a dependence measure over time points.
    Dependence(DependenceArgs),
    /// Pseudo-residuals of a saved fit.
    Diagnose(DiagnoseArgs),
    /// Write pseudo-observations as long-format CSV.
    PseudoDump(PseudoDumpArgs),
    /// Write the Dabrowska surface as long-format CSV.
    SurfaceDump(SurfaceDumpArgs),
    /// Run a Monte Carlo study from a JSON configuration.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Serialize)]
struct DataArgs {
    /// Input CSV with columns y1, delta1, y2, delta2 and covariates.
    #[arg(long)]
    data: PathBuf,
    /// Evaluation points: `auto:K` or `t1:t2,t1:t2,...`.
    #[arg(long, default_value = "auto:3")]
    points: String,
    #[arg(long, value_enum, default_value_t = Jackknife::Downdate)]
    jackknife: Jackknife,
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args, Debug, Serialize)]
struct FitSimpleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    solver: SolverArgs,
    /// Bootstrap replicates (0 = none).
    #[arg(long, default_value_t = 0)]
    boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FitGeneralArgs {
    #[command(flatten)]
    #[serde(flatten)]
    data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = LinkArg::Common)]
    link: LinkArg,
    /// Bootstrap replicates (0 = none).
    #[arg(long, default_value_t = 0)]
    boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hold a slope at zero, as `alpha:NAME`, `beta:NAME` or `gamma:NAME` (repeatable).
    #[arg(long = "fix-zero")]
    fix_zero: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Simulation specification (JSON file).
    #[arg(long)]
    spec: PathBuf,
    /// Override the sample size of the specification.
    #[arg(long)]
    n: Option<usize>,
    /// Override the seed of the specification.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    /// Baseline: JSON, a JSON file, or `independence`, `clayton:THETA`, `gumbel_barnett:THETA`.
    #[arg(long)]
    baseline: String,
    /// Model parameters: JSON or a JSON file.
    #[arg(long)]
    params: String,
}

#[derive(Args, Debug, Serialize)]
struct ValidityArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[command(flatten)]
    #[serde(flatten)]
    model_args: ModelArgs,
    /// Covariate box as `lo:hi,lo:hi,...`.
    #[arg(long)]
    zbox: String,
    /// Scan window per axis.
    #[arg(long, default_value_t = 4.0)]
    tau: f64,
    /// Scan points per time axis.
    #[arg(long, default_value_t = 50)]
    time_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DependenceArgs {
    #[arg(long, value_parser = ["c", "C", "Ctilde"])]
    measure: String,
    #[command(flatten)]
    #[serde(flatten)]
    model_args: ModelArgs,
    /// Covariate vector, comma separated.
    #[arg(long)]
    z: String,
    /// Time points on axis 1, comma separated.
    #[arg(long, default_value = "0.25,0.5,1,2")]
    t1: String,
    /// Time points on axis 2, comma separated.
    #[arg(long, default_value = "0.25,0.5,1,2")]
    t2: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DiagnoseArgs {
    /// Fit JSON written by fit-simple or fit-general.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Jackknife::Downdate)]
    jackknife: Jackknife,
    /// Also write binned residual summaries and trend tests to this JSON file.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Bins for the summary.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PseudoDumpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = KindArg::Trivariate)]
    kind: KindArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SurfaceDumpArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    /// Study configuration (JSON file).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Jackknife {
    Downdate,
    Recompute,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LinkArg {
    Common,
    PerPoint,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelKind {
    Simple,
    General,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Marginal1,
    Marginal2,
    Bivariate,
    Trivariate,
}

fn threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("BIPLANE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let n = threads(cli.threads);
    match biplane::par::with_threads(n, || commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
