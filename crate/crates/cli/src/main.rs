//! `epi`: runs one experiment scenario from a configuration file.
//!
//! Exit status: 0 on success, 2 on a configuration error, 3 when some solve
//! did not reach tolerance (the report is still written), 1 otherwise.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use epitv::harness::{
    run_experiment, write_detail_csv, write_outputs, ExperimentConfig, GraphKind, HarnessError, LambdaChoice,
    OutputFormat, Scenario,
};

#[derive(Debug, Parser)]
#[command(name = "epi", version, about = "Graph total-variation denoising for networked epidemics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Nowcasting error of the denoiser against raw observations.
    Denoise(RunArgs),
    /// Forecast error after denoising.
    Forecast(RunArgs),
    /// Recovery of infection and healing rates.
    Params(RunArgs),
    /// Denoising with unobserved nodes.
    Missing(RunArgs),
    /// Denoising with false-positive tests.
    Fp(RunArgs),
    /// Smoothed prevalence from county case counts.
    County(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fixed,
    Theory,
    TheoryMissing,
    Cv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    JsonLines,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `key = value` lines or a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Detail report path; aggregates go next to it. Without it the detail
    /// table is printed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Graph from an edge-list file instead of a generator.
    #[arg(long)]
    edge_list: Option<PathBuf>,
    /// Edge-list node ids start at 1.
    #[arg(long)]
    one_based: bool,
    /// Skip the well-posedness check on the epidemic parameters.
    #[arg(long)]
    unchecked: bool,
    /// Fit the penalty once per group on the first replicate.
    #[arg(long)]
    shared_lambda: bool,
    /// Fixed penalty; implies `--lambda-policy fixed` unless a policy is given.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    lambda_policy: Option<PolicyArg>,
    #[arg(long)]
    delta: Option<f64>,
    /// False-positive rate.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Scenario, RunArgs) {
        match self {
            Command::Denoise(a) => (Scenario::Denoise, a),
            Command::Forecast(a) => (Scenario::Forecast, a),
            Command::Params(a) => (Scenario::Params, a),
            Command::Missing(a) => (Scenario::Missing, a),
            Command::Fp(a) => (Scenario::FalsePositive, a),
            Command::County(a) => (Scenario::CountySmooth, a),
        }
    }
}

fn build_config(scenario: Scenario, args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match cfg.scenario {
        Some(s) if s != scenario => {
            return Err(HarnessError::Config(format!(
                "config is for {}, not {}",
                s.name(),
                scenario.name()
            )))
        }
        _ => cfg.scenario = Some(scenario),
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::JsonLines => OutputFormat::JsonLines,
        };
    }
    if let Some(path) = &args.edge_list {
        cfg.graph = GraphKind::EdgeList;
        cfg.edge_list = Some(path.clone());
    }
    cfg.one_based |= args.one_based;
    cfg.unchecked |= args.unchecked;
    cfg.shared_lambda |= args.shared_lambda;
    if let Some(lambda) = args.lambda {
        cfg.lambda = lambda;
        cfg.lambda_policy = LambdaChoice::Fixed;
    }
    if let Some(policy) = args.lambda_policy {
        cfg.lambda_policy = match policy {
            PolicyArg::Fixed => LambdaChoice::Fixed,
            PolicyArg::Theory => LambdaChoice::Theory,
            PolicyArg::TheoryMissing => LambdaChoice::TheoryMissing,
            PolicyArg::Cv => LambdaChoice::Cv,
        };
    }
    if let Some(delta) = args.delta {
        cfg.delta = delta;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = vec![alpha];
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    if let Some(max_iter) = args.max_iter {
        cfg.max_iter = max_iter;
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (scenario, args) = cli.command.split();
    let cfg = build_config(scenario, &args)?;
    let report = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let written = write_outputs(&report, path, cfg.format)
                .with_context(|| format!("writing report to {}", path.display()))?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_detail_csv(&report, &mut lock)?;
            lock.flush()?;
        }
    }
    if report.non_converged > 0 {
        eprintln!("warning: {} solve(s) did not reach tolerance", report.non_converged);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config = err
                .downcast_ref::<HarnessError>()
                .is_some_and(HarnessError::is_config_error);
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
