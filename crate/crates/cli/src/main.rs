use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use gsir_cli::commands;
use gsir_cli::config::{
    parse_kernel_flag, DiagnoseConfig, FitConfig, SimulateConfig, VerifyConfig,
};
use gsir_core::synth::Link;

/// Nonlinear sufficient dimension reduction toolkit: exact finite-space
/// verification suites, GSIR fitting, and sample diagnostics.
#[derive(Parser)]
#[command(name = "gsir", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized theory-verification suites.
    Verify(VerifyArgs),
    /// Generate a scenario, fit a model, and score it against the known
    /// reduction.
    Simulate(SimulateArgs),
    /// Fit a model from a dataset CSV.
    Fit(FitArgs),
    /// Score a stored model against a dataset and a truth matrix.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports and artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Randomized instances per statement.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Residual tolerance for every statement.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest atom count for generated spaces.
    #[arg(long)]
    max_space: Option<usize>,
    /// Test-only: corrupt the constant-mean verifier to prove the harness
    /// reports violations.
    #[arg(long, hide = true)]
    corrupt_constant_mean: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario link: identity, exp, sin, quadratic, or twoindex.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel for the predictors: linear, gaussian, gaussian:<bw>,
    /// poly:<degree>:<offset>. Plain gaussian uses the median heuristic.
    #[arg(long)]
    kernel_x: Option<String>,
    /// Kernel for the response (same syntax as --kernel-x).
    #[arg(long)]
    kernel_y: Option<String>,
    #[arg(long)]
    eta_x: Option<f64>,
    #[arg(long)]
    eta_y: Option<f64>,
    /// Number of predictors to extract.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    ratio_threshold: Option<f64>,
    #[arg(long)]
    alignment_threshold: Option<f64>,
    #[arg(long)]
    null_threshold: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset CSV with header x1..xp,y1..yq.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    kernel_x: Option<String>,
    #[arg(long)]
    kernel_y: Option<String>,
    #[arg(long)]
    eta_x: Option<f64>,
    #[arg(long)]
    eta_y: Option<f64>,
    /// Comma-separated ridge grid; selection by cross-validated distance
    /// correlation on held-out predictors.
    #[arg(long)]
    eta_grid: Option<String>,
    #[arg(long)]
    cv_folds: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model JSON produced by fit or simulate.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset CSV the model is scored on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// CSV of the true reduction, row-aligned with the dataset.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    ratio_threshold: Option<f64>,
    #[arg(long)]
    alignment_threshold: Option<f64>,
    #[arg(long)]
    null_threshold: Option<f64>,
}

fn load_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(args) => {
            let mut cfg: VerifyConfig = load_config(&args.common.config)?;
            if let Some(v) = args.instances {
                cfg.instances = v;
            }
            if let Some(v) = args.seed {
                cfg.seed = v;
            }
            if let Some(v) = args.tol {
                cfg.tol = v;
            }
            if let Some(v) = args.max_space {
                cfg.max_space = v;
            }
            if args.corrupt_constant_mean {
                cfg.corrupt_constant_mean = true;
            }
            Ok(commands::cmd_verify(&cfg, &args.common.out)?.0)
        }
        Command::Simulate(args) => {
            let mut cfg: SimulateConfig = load_config(&args.common.config)?;
            if let Some(v) = args.scenario {
                cfg.link = Link::parse(&v)?;
                cfg.scenario = v;
            }
            if let Some(v) = args.n {
                cfg.n = v;
            }
            if let Some(v) = args.p {
                cfg.p = v;
            }
            if let Some(v) = args.noise_sd {
                cfg.noise_sd = v;
            }
            if let Some(v) = args.seed {
                cfg.seed = v;
            }
            if let Some(v) = args.kernel_x {
                cfg.kernel_x = parse_kernel_flag(&v).map_err(anyhow::Error::msg)?;
            }
            if let Some(v) = args.kernel_y {
                cfg.kernel_y = parse_kernel_flag(&v).map_err(anyhow::Error::msg)?;
            }
            if let Some(v) = args.eta_x {
                cfg.eta_x = v;
            }
            if let Some(v) = args.eta_y {
                cfg.eta_y = v;
            }
            if args.d.is_some() {
                cfg.d = args.d;
            }
            if let Some(v) = args.jitter {
                cfg.jitter = v;
            }
            if args.slices.is_some() {
                cfg.slices = args.slices;
            }
            if let Some(v) = args.ratio_threshold {
                cfg.ratio_threshold = v;
            }
            if let Some(v) = args.alignment_threshold {
                cfg.alignment_threshold = v;
            }
            if let Some(v) = args.null_threshold {
                cfg.null_threshold = v;
            }
            Ok(commands::cmd_simulate(&cfg, &args.common.out)?.0)
        }
        Command::Fit(args) => {
            let mut cfg: FitConfig = load_config(&args.common.config)?;
            if let Some(v) = args.input {
                cfg.input = v;
            }
            if cfg.input.as_os_str().is_empty() {
                anyhow::bail!("fit needs --input or a config with an input path");
            }
            if let Some(v) = args.kernel_x {
                cfg.kernel_x = parse_kernel_flag(&v).map_err(anyhow::Error::msg)?;
            }
            if let Some(v) = args.kernel_y {
                cfg.kernel_y = parse_kernel_flag(&v).map_err(anyhow::Error::msg)?;
            }
            if let Some(v) = args.eta_x {
                cfg.eta_x = v;
            }
            if let Some(v) = args.eta_y {
                cfg.eta_y = v;
            }
            if let Some(v) = args.eta_grid {
                let grid: Result<Vec<f64>, _> =
                    v.split(',').map(|s| s.trim().parse::<f64>()).collect();
                cfg.eta_grid = Some(grid.map_err(|e| anyhow::anyhow!("bad eta grid: {e}"))?);
            }
            if let Some(v) = args.cv_folds {
                cfg.cv_folds = v;
            }
            if args.d.is_some() {
                cfg.d = args.d;
            }
            if let Some(v) = args.jitter {
                cfg.jitter = v;
            }
            Ok(commands::cmd_fit(&cfg, &args.common.out)?.0)
        }
        Command::Diagnose(args) => {
            let mut cfg: DiagnoseConfig = load_config(&args.common.config)?;
            if let Some(v) = args.model {
                cfg.model = v;
            }
            if let Some(v) = args.data {
                cfg.data = v;
            }
            if let Some(v) = args.truth {
                cfg.truth = v;
            }
            for (path, what) in [(&cfg.model, "--model"), (&cfg.data, "--data"), (&cfg.truth, "--truth")] {
                if path.as_os_str().is_empty() {
                    anyhow::bail!("diagnose needs {what} or a config providing it");
                }
            }
            if args.slices.is_some() {
                cfg.slices = args.slices;
            }
            if let Some(v) = args.ratio_threshold {
                cfg.ratio_threshold = v;
            }
            if let Some(v) = args.alignment_threshold {
                cfg.alignment_threshold = v;
            }
            if let Some(v) = args.null_threshold {
                cfg.null_threshold = v;
            }
            Ok(commands::cmd_diagnose(&cfg, &args.common.out)?.0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
