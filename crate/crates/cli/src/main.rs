use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dnn_error_core::approx::{build_grid_approximant, Grid};
use dnn_error_core::bounds::{evaluate_overall, ProblemConfig};
use dnn_error_core::experiment::{emit_report, emit_timings, run_experiment, ExperimentConfig, Verdict};
use dnn_error_core::net::VectorizedParams;
use dnn_error_core::netfile::NetworkFile;
use dnn_error_core::rng::Seed;
use dnn_error_core::target::TargetSpec;
use dnn_error_core::train::{generate_dataset, mc_error, sample_candidates, select_min, ErrorNorm};

/// Error analysis for ReLU networks trained by minimum Monte Carlo.
#[derive(Parser)]
#[command(name = "dnn-error-lab", version)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the grid interpolation network for a target and write it as a network file.
    BuildApprox {
        #[arg(long)]
        config: PathBuf,
        /// Network file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Select a network by minimum Monte Carlo and report its error.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Network file for the selected parameters.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the end-to-end bound for a problem configuration.
    VerifyBounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a seeded multi-trial experiment and write its report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxConfig {
    grid: Grid,
    lip: f64,
    u: f64,
    v: f64,
    target: TargetSpec,
}

fn default_n_mc() -> usize {
    10_000
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainConfig {
    problem: ProblemConfig,
    target: TargetSpec,
    #[serde(default = "default_n_mc")]
    n_mc: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    norm: ErrorNorm,
}

#[derive(Serialize)]
struct TrainReport {
    index: usize,
    risk: f64,
    error: f64,
    std_error: f64,
    norm: ErrorNorm,
    seed: u64,
}

#[derive(Serialize)]
struct HypothesisFlags {
    tau_ok: bool,
    dfrak_ok: bool,
    radius_ok: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    log_opt: f64,
    log_gen: f64,
    total: f64,
    vacuous: bool,
    hypotheses: HypothesisFlags,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn build_approx(config: &Path, out: &Path) -> Result<ExitCode> {
    let cfg: ApproxConfig = read_json(config)?;
    cfg.target.validate(cfg.grid.dim())?;
    let approx = build_grid_approximant(|x| cfg.target.eval(x), &cfg.grid, cfg.lip, cfg.u, cfg.v)?;
    NetworkFile::new(&approx.params, Some(approx.clip))?.write(out)?;
    print_json(&serde_json::json!({
        "dims": approx.params.arch(),
        "params": approx.params.len(),
        "bound": approx.bound,
        "out": out,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn train(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<ExitCode> {
    let cfg: TrainConfig = read_json(config)?;
    let p = &cfg.problem;
    p.validate()?;
    cfg.target.validate(p.d)?;
    let seed = Seed::from(seed.unwrap_or(cfg.seed));
    let phi = |x: &[f64]| cfg.target.eval(x);
    let arch = p.architecture()?;
    let data = generate_dataset(phi, p.d, p.a, p.b, p.u, p.v, p.m, seed)?;
    let pool = sample_candidates(p.dfrak, p.r, p.k, seed)?;
    let sel = select_min(&pool, &arch, p.u, p.v, &data)?;
    let xi = VectorizedParams::new(sel.xi.clone(), arch)?;
    let (error, std_error) = mc_error(&xi, p.u, p.v, phi, p.a, p.b, cfg.n_mc, seed, cfg.norm)?;
    if let Some(out) = out {
        NetworkFile::new(&xi, Some((p.u, p.v)))?.write(out)?;
    }
    print_json(&TrainReport { index: sel.index, risk: sel.risk(), error, std_error, norm: cfg.norm, seed: seed.master })?;
    Ok(ExitCode::SUCCESS)
}

fn verify_bounds(config: &Path) -> Result<ExitCode> {
    let cfg: ProblemConfig = read_json(config)?;
    let report = evaluate_overall(&cfg)?;
    let h = report.hypotheses;
    print_json(&VerifyReport {
        log_opt: report.log_optimization_term,
        log_gen: report.log_generalization_term,
        total: report.clamped_total,
        vacuous: report.vacuous(),
        hypotheses: HypothesisFlags { tau_ok: h.tau_ok, dfrak_ok: h.dfrak_ok, radius_ok: h.radius_ok },
    })?;
    // the report is printed either way; a violated hypothesis is still an error
    cfg.check_hypotheses()?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg: ExperimentConfig = read_json(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    let dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| anyhow!("no report directory: pass --out or set \"output\" in the config"))?;
    let outcome = run_experiment(&cfg)?;
    emit_report(&outcome.records, &outcome.summary, &dir)?;
    emit_timings(&outcome.wall_times, &dir)?;
    print_json(&outcome.summary)?;
    Ok(match outcome.summary.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(2),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::BuildApprox { config, out } => build_approx(&config, &out),
        Command::Train { config, seed, out } => train(&config, seed, out.as_deref()),
        Command::VerifyBounds { config } => verify_bounds(&config),
        Command::Experiment { config, seed, out } => experiment(&config, seed, out),
    }
}

fn main() -> ExitCode {
    // clap would exit with 2 on bad usage, which is reserved for a failed verdict
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
