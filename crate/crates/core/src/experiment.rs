//! Seeded multi-trial experiments that compare observed failure frequencies
//! with the closed-form bounds.
//!
//! Trial `t` draws all of its randomness from `Seed { master, trial: t }`,
//! so trials can run in any order on any number of threads and the report
//! is the same. Wall-clock times go to a separate file to keep the trial
//! table byte-reproducible.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{build_grid_approximant, Grid};
use crate::bounds::{
    clamped_total, generalization_bound, hoeffding_bound, informative_regime, optimization_bound,
    overall_bound, Hypotheses, InformativeRegime, ProblemConfig,
};
use crate::error::{contract, shape, Result};
use crate::net::{realize_clipped_scalar, Architecture, VectorizedParams};
use crate::rng::{uniform_cube, Purpose, Seed};
use crate::stats::{pairwise_sum, wilson, Z95};
use crate::target::TargetSpec;
use crate::train::{
    bias_variance_check, draw_points, generate_dataset, mc_error, sample_candidates, select_min, ErrorNorm, NoiseSpec,
};

fn default_n_mc() -> usize {
    10_000
}

/// One experiment: what to simulate, how often, and where to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub trials: usize,
    /// Monte Carlo sample size for integrals over the input distribution.
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    pub master_seed: u64,
    /// Report directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// Minimum Monte Carlo training of `(d, τ, ..., τ, 1)` networks; failure
    /// means the `L²` (or `L¹`) error exceeds `ε`.
    Overall {
        problem: ProblemConfig,
        target: TargetSpec,
        #[serde(default)]
        norm: ErrorNorm,
    },
    /// `K` uniform draws on `[a, b]^𝔡` minimizing `Lip ‖θ - ϑ*‖∞`; failure
    /// means the best draw is more than `ε` above the optimum.
    Optimization { dfrak: usize, k: usize, a: f64, b: f64, lip: f64, eps: f64, optimum: Vec<f64> },
    /// Largest gap between empirical and true risk over `k` random
    /// parameter vectors; failure means the gap is at least `ε`.
    Generalization {
        dims: Architecture,
        dfrak: usize,
        m: usize,
        r: f64,
        u: f64,
        v: f64,
        /// Inputs are uniform on `[-b, b]^{l_0}`.
        b: f64,
        eps: f64,
        k: usize,
        target: TargetSpec,
    },
    /// Mean of `n` Bernoulli(`p`) variables; failure means it deviates from
    /// `p` by at least `ε`.
    Hoeffding { n: usize, eps: f64, p: f64 },
    /// Grid interpolation network; failure means the observed sup error on
    /// `n_mc` random points exceeds the guaranteed bound.
    Approximation { grid: Grid, lip: f64, u: f64, v: f64, target: TargetSpec },
    /// Bias-variance identity with bounded label noise; failure means the
    /// Monte Carlo gap exceeds three standard errors.
    BiasVariance {
        d: usize,
        a: f64,
        b: f64,
        u: f64,
        v: f64,
        model: TargetSpec,
        target: TargetSpec,
        noise: NoiseSpec,
    },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Overall { .. } => "overall",
            Mode::Optimization { .. } => "optimization",
            Mode::Generalization { .. } => "generalization",
            Mode::Hoeffding { .. } => "hoeffding",
            Mode::Approximation { .. } => "approximation",
            Mode::BiasVariance { .. } => "bias_variance",
        }
    }
}

/// `P(|Z| > 3)` for a standard normal `Z`: the false-alarm rate of the
/// three-standard-error check when the identity holds.
pub const THREE_SIGMA_TAIL: f64 = 0.002_699_796_063_260_207;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Structural checks plus every quantitative hypothesis of the bound
    /// the mode is compared with.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(contract("trials must be at least 1"));
        }
        if self.n_mc < 2 {
            return Err(contract("n_mc must be at least 2"));
        }
        match &self.mode {
            Mode::Overall { problem, target, .. } => {
                problem.check_hypotheses()?;
                target.validate(problem.d)?;
                if target.lipschitz() > problem.lip {
                    return Err(contract(format!(
                        "target is {}-Lipschitz, more than the configured L = {}",
                        target.lipschitz(),
                        problem.lip
                    )));
                }
            }
            Mode::Optimization { dfrak, k, a, b, lip, eps, optimum } => {
                optimization_bound(*dfrak, *k, *a, *b, *lip, *eps)?;
                if optimum.len() != *dfrak {
                    return Err(shape(format!("optimum has {} entries, expected {dfrak}", optimum.len())));
                }
                if optimum.iter().any(|x| !(a <= x && x <= b)) {
                    return Err(contract("optimum must lie in [a, b]^𝔡"));
                }
            }
            Mode::Generalization { dims, dfrak, m, r, u, v, b, eps, k, target } => {
                generalization_bound(dims, *dfrak, *m, *r, *u, *v, *b, *eps)?;
                if *k == 0 {
                    return Err(contract("need at least one candidate"));
                }
                target.validate(dims.in_dim())?;
            }
            Mode::Hoeffding { n, eps, p } => {
                if *n == 0 || !(0.0..=1.0).contains(p) || !(*eps >= 0.0) {
                    return Err(contract("need n >= 1, p in [0, 1] and ε >= 0"));
                }
            }
            Mode::Approximation { grid, lip, u, v, target } => {
                Grid::new(grid.p.clone(), grid.q.clone(), grid.n)?;
                target.validate(grid.dim())?;
                if !(u < v) || !(*lip >= 0.0) {
                    return Err(contract("need u < v and L >= 0"));
                }
                if target.lipschitz() > *lip {
                    return Err(contract(format!("target is {}-Lipschitz, more than L = {lip}", target.lipschitz())));
                }
            }
            Mode::BiasVariance { d, a, b, u, v, model, target, noise } => {
                model.validate(*d)?;
                target.validate(*d)?;
                if !(a < b) || !(u < v) || !(noise.bound() >= 0.0) {
                    return Err(contract("need a < b, u < v and a non-negative noise bound"));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&fs::read_to_string(path)?)
}

/// One row of the trial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// Empirical risk of the selected network, where a network is trained.
    pub risk: Option<f64>,
    /// Monte Carlo estimate of the error integral, where one is measured.
    pub l2_error: Option<f64>,
    /// The quantity compared against `threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub event: bool,
}

/// The bound a mode is compared with, in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub log_bound: f64,
    /// `min{1, exp(log_bound)}`.
    pub paper_bound: f64,
    pub vacuous: bool,
}

impl BoundSummary {
    fn from_log(log_bound: f64) -> Self {
        Self { log_bound, paper_bound: clamped_total(log_bound, f64::NEG_INFINITY), vacuous: log_bound >= 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Which seeds produced the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    /// Trial stream ids run, `0..trials`.
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub trials: u64,
    pub events: u64,
    pub freq: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub paper_bound: f64,
    pub log_bound: f64,
    pub vacuous: bool,
    pub verdict: Verdict,
    pub seeds: Seeds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Hypotheses>,
    /// Sample sizes at which the bound would drop below 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informative: Option<InformativeRegime>,
}

/// `PASS` iff the lower Wilson limit does not exceed `min{1, bound}`.
pub fn verdict(wilson_lo: f64, paper_bound: f64) -> Verdict {
    if wilson_lo <= paper_bound.min(1.0) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Frequency, 95% Wilson interval and verdict for the given records.
pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord], bound: &BoundSummary) -> Result<Summary> {
    if records.is_empty() {
        return Err(contract("no trial records"));
    }
    let n = records.len() as u64;
    let events = records.iter().filter(|r| r.event).count() as u64;
    let (wilson_lo, wilson_hi) = wilson(events, n, Z95);
    let (hypotheses, informative) = match &cfg.mode {
        Mode::Overall { problem, .. } => (Some(problem.hypotheses()), Some(informative_regime(problem)?)),
        _ => (None, None),
    };
    Ok(Summary {
        mode: cfg.mode.name().to_string(),
        trials: n,
        events,
        freq: events as f64 / n as f64,
        wilson_lo,
        wilson_hi,
        paper_bound: bound.paper_bound,
        log_bound: bound.log_bound,
        vacuous: bound.vacuous,
        verdict: verdict(wilson_lo, bound.paper_bound),
        seeds: Seeds { master: cfg.master_seed, trials: n },
        hypotheses,
        informative,
    })
}

/// Records, summary and per-trial wall times of one run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub bound: BoundSummary,
    /// Seconds per trial, in trial order.
    pub wall_times: Vec<f64>,
}

/// The bound the mode is compared with.
pub fn mode_bound(cfg: &ExperimentConfig) -> Result<BoundSummary> {
    Ok(match &cfg.mode {
        Mode::Overall { problem, .. } => {
            let report = overall_bound(problem)?;
            BoundSummary::from_log(report.log_total())
        }
        Mode::Optimization { dfrak, k, a, b, lip, eps, .. } => {
            BoundSummary::from_log(optimization_bound(*dfrak, *k, *a, *b, *lip, *eps)?)
        }
        Mode::Generalization { dims, dfrak, m, r, u, v, b, eps, .. } => {
            BoundSummary::from_log(generalization_bound(dims, *dfrak, *m, *r, *u, *v, *b, *eps)?)
        }
        Mode::Hoeffding { n, eps, .. } => BoundSummary::from_log(hoeffding_bound(*eps, *n, &vec![(0.0, 1.0); *n])?),
        // the sup error bound is deterministic, so failures have probability 0
        Mode::Approximation { .. } => BoundSummary::from_log(f64::NEG_INFINITY),
        Mode::BiasVariance { .. } => BoundSummary::from_log(THREE_SIGMA_TAIL.ln()),
    })
}

/// Runs all trials (in parallel) and summarizes them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let bound = mode_bound(cfg)?;
    let shared = prepare(cfg)?;
    let timed: Vec<(TrialRecord, f64)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let rec = run_trial(cfg, &shared, Seed::new(cfg.master_seed, t))?;
            Ok((rec, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let (records, wall_times): (Vec<_>, Vec<_>) = timed.into_iter().unzip();
    let summary = summarize(cfg, &records, &bound)?;
    Ok(ExperimentOutcome { records, summary, bound, wall_times })
}

/// Work shared by all trials of a run.
enum Shared {
    None,
    Approximant { params: VectorizedParams, bound: f64 },
}

fn prepare(cfg: &ExperimentConfig) -> Result<Shared> {
    Ok(match &cfg.mode {
        Mode::Approximation { grid, lip, u, v, target } => {
            let approx = build_grid_approximant(|x| target.eval(x), grid, *lip, *u, *v)?;
            Shared::Approximant { params: approx.params, bound: approx.bound }
        }
        _ => Shared::None,
    })
}

fn run_trial(cfg: &ExperimentConfig, shared: &Shared, seed: Seed) -> Result<TrialRecord> {
    let trial = seed.trial;
    Ok(match &cfg.mode {
        Mode::Overall { problem: p, target, norm } => {
            let phi = |x: &[f64]| target.eval(x);
            let arch = p.architecture()?;
            let data = generate_dataset(phi, p.d, p.a, p.b, p.u, p.v, p.m, seed)?;
            let pool = sample_candidates(p.dfrak, p.r, p.k, seed)?;
            let sel = select_min(&pool, &arch, p.u, p.v, &data)?;
            let xi = VectorizedParams::new(sel.xi.clone(), arch)?;
            let (err, _) = mc_error(&xi, p.u, p.v, phi, p.a, p.b, cfg.n_mc, seed, *norm)?;
            let threshold = match norm {
                ErrorNorm::L2 => p.eps * p.eps,
                ErrorNorm::L1 => p.eps,
            };
            TrialRecord { trial, risk: Some(sel.risk()), l2_error: Some(err), statistic: err, threshold, event: err > threshold }
        }
        Mode::Optimization { dfrak, k, a, b, lip, eps, optimum } => {
            let values: Vec<f64> = (0..*k as u64)
                .map(|i| {
                    let theta = uniform_cube(&mut seed.stream(Purpose::Candidates, i), *dfrak, *a, *b);
                    lip * theta.iter().zip(optimum).map(|(t, o)| (t - o).abs()).fold(0.0, f64::max)
                })
                .collect();
            let best = values.iter().copied().fold(f64::INFINITY, f64::min);
            TrialRecord { trial, risk: None, l2_error: None, statistic: best, threshold: *eps, event: best > *eps }
        }
        Mode::Generalization { dims, m, r, u, v, b, eps, k, target, dfrak } => {
            let phi = |x: &[f64]| target.eval(x);
            let d = dims.in_dim();
            let data = generate_dataset(phi, d, -b, *b, *u, *v, *m, seed)?;
            let pool = sample_candidates(*dfrak, *r, *k, seed)?;
            let eval = draw_points(seed, Purpose::Evaluation, cfg.n_mc, d, -b, *b);
            let labels: Vec<f64> = eval.iter().map(|x| phi(x)).collect();
            let train_x: Vec<&[f64]> = data.samples.iter().map(|s| s.x.as_slice()).collect();
            let train_y: Vec<f64> = data.samples.iter().map(|s| s.y).collect();
            let gaps: Vec<f64> = pool
                .thetas()
                .par_iter()
                .map(|theta| {
                    let mut scratch = (Vec::new(), Vec::new());
                    let mut risk = |xs: &[&[f64]], ys: &[f64]| {
                        let sq: Vec<f64> = xs
                            .iter()
                            .zip(ys)
                            .map(|(x, y)| {
                                let e = realize_clipped_scalar(theta, dims, *u, *v, x, &mut scratch) - y;
                                e * e
                            })
                            .collect();
                        pairwise_sum(&sq) / xs.len() as f64
                    };
                    let empirical = risk(&train_x, &train_y);
                    let eval_x: Vec<&[f64]> = eval.iter().map(Vec::as_slice).collect();
                    (empirical - risk(&eval_x, &labels)).abs()
                })
                .collect();
            let worst = gaps.iter().copied().fold(0.0, f64::max);
            TrialRecord { trial, risk: None, l2_error: None, statistic: worst, threshold: *eps, event: worst >= *eps }
        }
        Mode::Hoeffding { n, eps, p } => {
            let mut rng = seed.stream(Purpose::Data, 0);
            let unit = Uniform::new(0.0, 1.0).expect("valid interval");
            let successes = (0..*n).filter(|_| unit.sample(&mut rng) < *p).count();
            let nf = *n as f64;
            // compare |S - Np| >= εN rather than the mean, which rounds
            let dev = (successes as f64 - nf * p).abs();
            TrialRecord {
                trial,
                risk: None,
                l2_error: None,
                statistic: dev / nf,
                threshold: *eps,
                event: dev >= eps * nf,
            }
        }
        Mode::Approximation { grid, u, v, target, .. } => {
            let Shared::Approximant { params, bound } = shared else {
                unreachable!("approximant prepared before trials")
            };
            let mut rng = seed.stream(Purpose::Evaluation, 0);
            let mut scratch = (Vec::new(), Vec::new());
            let mut worst: f64 = 0.0;
            for i in 0..cfg.n_mc {
                // first point of each trial is a random corner of the box
                let x: Vec<f64> = if i == 0 {
                    grid.p.iter().zip(&grid.q).map(|(p, q)| if rng.random::<bool>() { *q } else { *p }).collect()
                } else {
                    crate::rng::uniform_point(&mut rng, &grid.p, &grid.q)
                };
                let y = realize_clipped_scalar(params.theta(), params.arch(), *u, *v, &x, &mut scratch);
                worst = worst.max((y - target.eval(&x)).abs());
            }
            TrialRecord { trial, risk: None, l2_error: None, statistic: worst, threshold: *bound, event: worst > *bound }
        }
        Mode::BiasVariance { d, a, b, u, v, model, target, noise } => {
            let bv = bias_variance_check(|x| model.eval(x), |x| target.eval(x), *noise, *d, *a, *b, *u, *v, cfg.n_mc, seed)?;
            let threshold = 3.0 * bv.std_error;
            TrialRecord {
                trial,
                risk: None,
                l2_error: Some(bv.lhs),
                statistic: bv.gap.abs(),
                threshold,
                event: bv.gap.abs() > threshold,
            }
        }
    })
}

/// Writes `trials.csv` and `summary.json` into `dir`.
pub fn emit_report(records: &[TrialRecord], summary: &Summary, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("trials.csv"))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

/// Writes `timings.csv` (trial, seconds) into `dir`. Not reproducible by
/// nature, so kept apart from the report.
pub fn emit_timings(wall_times: &[f64], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("timings.csv"))?;
    w.write_record(["trial", "wall_time_s"])?;
    for (t, s) in wall_times.iter().enumerate() {
        w.write_record([t.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
