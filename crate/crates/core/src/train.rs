//! Data generation, empirical risk, minimum Monte Carlo selection and
//! Monte Carlo error estimates.
//!
//! Random draws come from [`Seed`] streams whose layout depends only on the
//! item index, so results do not depend on the number of worker threads.

use rand::distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, shape, Result};
use crate::net::{realize_clipped_scalar, Architecture, VectorizedParams};
use crate::rng::{uniform_cube, Purpose, Seed};
use crate::stats::{mean_and_stderr, pairwise_sum};

/// Points per random stream when drawing many inputs.
const CHUNK: usize = 256;

/// `count` uniform points in `[a, b]^d`. Point `i` comes from stream
/// `i / CHUNK` of `purpose`, so any prefix is stable under growing `count`.
pub fn draw_points(seed: Seed, purpose: Purpose, count: usize, d: usize, a: f64, b: f64) -> Vec<Vec<f64>> {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = seed.stream(purpose, c as u64);
            let n = CHUNK.min(count - c * CHUNK);
            (0..n).map(move |_| uniform_cube(&mut rng, d, a, b)).collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Training data with inputs in `[a, b]^d` and labels in `[u, v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    /// `None` for user-supplied inputs.
    pub seed: Option<(u64, u64)>,
    pub a: f64,
    pub b: f64,
    pub u: f64,
    pub v: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }
}

fn label<F: Fn(&[f64]) -> f64>(phi: &F, x: Vec<f64>, u: f64, v: f64) -> Result<LabeledSample> {
    let y = phi(&x);
    if !(u <= y && y <= v) {
        return Err(contract(format!("target value {y} at {x:?} lies outside [{u}, {v}]")));
    }
    Ok(LabeledSample { x, y })
}

/// `m` i.i.d. uniform inputs on `[a, b]^d` labelled by `phi`.
#[allow(clippy::too_many_arguments)]
pub fn generate_dataset<F>(phi: F, d: usize, a: f64, b: f64, u: f64, v: f64, m: usize, seed: Seed) -> Result<Dataset>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(b > a) || !(v > u) || m == 0 || d == 0 {
        return Err(contract("need b > a, v > u, M >= 1 and d >= 1"));
    }
    let samples = draw_points(seed, Purpose::Data, m, d, a, b)
        .into_iter()
        .map(|x| label(&phi, x, u, v))
        .collect::<Result<_>>()?;
    Ok(Dataset { samples, seed: Some((seed.master, seed.trial)), a, b, u, v })
}

/// Labels user-chosen inputs (for example grid points) with `phi`.
pub fn dataset_from_points<F>(phi: F, points: Vec<Vec<f64>>, u: f64, v: f64) -> Result<Dataset>
where
    F: Fn(&[f64]) -> f64,
{
    if points.is_empty() || !(v > u) {
        return Err(contract("need at least one point and v > u"));
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(shape("points must share one positive dimension"));
    }
    let a = points.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let b = points.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let samples = points.into_iter().map(|x| label(&phi, x, u, v)).collect::<Result<_>>()?;
    Ok(Dataset { samples, seed: None, a, b, u, v })
}

fn check_scalar_net(arch: &Architecture, d: usize) -> Result<()> {
    if arch.out_dim() != 1 {
        return Err(shape(format!("expected a scalar-output network, got output dimension {}", arch.out_dim())));
    }
    if arch.in_dim() != d {
        return Err(shape(format!("network expects inputs of dimension {}, data has {d}", arch.in_dim())));
    }
    Ok(())
}

fn risk_of(theta: &[f64], arch: &Architecture, u: f64, v: f64, data: &Dataset) -> f64 {
    let mut scratch = (Vec::new(), Vec::new());
    let sq: Vec<f64> = data
        .samples
        .iter()
        .map(|s| {
            let r = realize_clipped_scalar(theta, arch, u, v, &s.x, &mut scratch) - s.y;
            r * r
        })
        .collect();
    pairwise_sum(&sq) / data.len() as f64
}

/// `(1/M) Σ (𝒩_θ(x_m) - y_m)²` for the network clipped to `[u, v]`.
pub fn empirical_risk(params: &VectorizedParams, u: f64, v: f64, data: &Dataset) -> Result<f64> {
    if !(u < v) {
        return Err(contract("need u < v"));
    }
    check_scalar_net(params.arch(), data.dim())?;
    Ok(risk_of(params.theta(), params.arch(), u, v, data))
}

/// `K` parameter vectors drawn uniformly from `[-R, R]^𝔡`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    thetas: Vec<Vec<f64>>,
    r: f64,
}

impl CandidatePool {
    /// A pool of explicit vectors, all of length `𝔡` inside `[-R, R]^𝔡`.
    pub fn from_thetas(thetas: Vec<Vec<f64>>, r: f64) -> Result<Self> {
        if thetas.is_empty() {
            return Err(contract("candidate pool is empty"));
        }
        let len = thetas[0].len();
        if thetas.iter().any(|t| t.len() != len) {
            return Err(shape("candidates must share one length"));
        }
        if thetas.iter().flatten().any(|x| !(x.abs() <= r)) {
            return Err(contract(format!("candidate coordinate outside [-{r}, {r}]")));
        }
        Ok(Self { thetas, r })
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// Candidate `k` comes from its own stream, so a pool of size `K'` > `K`
/// under the same seed extends the pool of size `K`.
pub fn sample_candidates(dfrak: usize, r: f64, k: usize, seed: Seed) -> Result<CandidatePool> {
    if !(r > 0.0 && r.is_finite()) || k == 0 || dfrak == 0 {
        return Err(contract("need R > 0, K >= 1 and 𝔡 >= 1"));
    }
    let thetas = (0..k)
        .into_par_iter()
        .map(|i| uniform_cube(&mut seed.stream(Purpose::Candidates, i as u64), dfrak, -r, r))
        .collect();
    Ok(CandidatePool { thetas, r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub xi: Vec<f64>,
    /// 1-based index of the first minimizer.
    pub index: usize,
    pub risks: Vec<f64>,
}

impl SelectionResult {
    pub fn risk(&self) -> f64 {
        self.risks[self.index - 1]
    }
}

/// Evaluates every candidate and keeps the first one of minimal empirical
/// risk.
pub fn select_min(pool: &CandidatePool, arch: &Architecture, u: f64, v: f64, data: &Dataset) -> Result<SelectionResult> {
    if !(u < v) {
        return Err(contract("need u < v"));
    }
    check_scalar_net(arch, data.dim())?;
    if pool.thetas[0].len() < arch.param_count() {
        return Err(shape(format!(
            "candidates have {} entries, architecture needs {}",
            pool.thetas[0].len(),
            arch.param_count()
        )));
    }
    let risks: Vec<f64> = pool.thetas.par_iter().map(|t| risk_of(t, arch, u, v, data)).collect();
    let mut best = 0;
    for (i, r) in risks.iter().enumerate() {
        if *r < risks[best] {
            best = i;
        }
    }
    Ok(SelectionResult { xi: pool.thetas[best].clone(), index: best + 1, risks })
}

/// Which Monte Carlo error functional to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    /// `∫ |𝒩 - φ|² dℙ`
    #[default]
    L2,
    /// `∫ |𝒩 - φ| dℙ`
    L1,
}

/// Monte Carlo estimate of `∫ |𝒩_θ - φ|^p dℙ` (`p = 2` or `1`) under the
/// uniform distribution on `[a, b]^d`, with its standard error. Draws come
/// from the evaluation stream, independent of the training data.
#[allow(clippy::too_many_arguments)]
pub fn mc_error<F>(
    params: &VectorizedParams,
    u: f64,
    v: f64,
    phi: F,
    a: f64,
    b: f64,
    n_mc: usize,
    seed: Seed,
    norm: ErrorNorm,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_mc < 2 {
        return Err(contract("need n_mc >= 2"));
    }
    if !(u < v && a < b) {
        return Err(contract("need u < v and a < b"));
    }
    let arch = params.arch();
    check_scalar_net(arch, arch.in_dim())?;
    let points = draw_points(seed, Purpose::Evaluation, n_mc, arch.in_dim(), a, b);
    let errs: Vec<f64> = points
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let mut scratch = (Vec::new(), Vec::new());
            chunk
                .iter()
                .map(|x| {
                    let e = (realize_clipped_scalar(params.theta(), arch, u, v, x, &mut scratch) - phi(x)).abs();
                    match norm {
                        ErrorNorm::L2 => e * e,
                        ErrorNorm::L1 => e,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(mean_and_stderr(&errs))
}

/// `∫ |𝒩_θ - φ|² dℙ` estimate and standard error.
#[allow(clippy::too_many_arguments)]
pub fn l2_error<F>(params: &VectorizedParams, u: f64, v: f64, phi: F, a: f64, b: f64, n_mc: usize, seed: Seed) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    mc_error(params, u, v, phi, a, b, n_mc, seed, ErrorNorm::L2)
}

/// Bounded, symmetric, mean-zero label noise independent of the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    Uniform { half_width: f64 },
    Rademacher { magnitude: f64 },
}

impl NoiseSpec {
    pub fn bound(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Uniform { half_width } => half_width,
            Self::Rademacher { magnitude } => magnitude,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Uniform { half_width } => half_width * half_width / 3.0,
            Self::Rademacher { magnitude } => magnitude * magnitude,
        }
    }
}

/// Monte Carlo estimates of the three terms of
/// `E|f(X) - Y|² = E|f(X) - E[Y|X]|² + E|Y - E[Y|X]|²` from shared draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasVariance {
    pub lhs: f64,
    pub bias_term: f64,
    pub noise_term: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub gap: f64,
    /// Standard error of the per-draw difference whose mean is `gap`.
    pub std_error: f64,
}

/// `Y = φ(X) + ξ` with `X` uniform on `[a, b]^d` and `ξ ~ noise`, so that
/// `E[Y|X] = φ(X)`. Labels must stay in `[u, v]`.
#[allow(clippy::too_many_arguments)]
pub fn bias_variance_check<F, G>(
    f: F,
    phi: G,
    noise: NoiseSpec,
    d: usize,
    a: f64,
    b: f64,
    u: f64,
    v: f64,
    n_mc: usize,
    seed: Seed,
) -> Result<BiasVariance>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    if n_mc < 2 || !(a < b) || !(u < v) {
        return Err(contract("need n_mc >= 2, a < b and u < v"));
    }
    if !(noise.bound() >= 0.0 && noise.bound().is_finite()) {
        return Err(contract("noise bound must be finite and non-negative"));
    }
    let xs = draw_points(seed, Purpose::Evaluation, n_mc, d, a, b);
    let chunks = n_mc.div_ceil(CHUNK);
    let rows: Vec<[f64; 4]> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = seed.stream(Purpose::Noise, c as u64);
            let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid interval");
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n_mc);
            xs[lo..hi]
                .iter()
                .map(|x| {
                    let xi = match noise {
                        NoiseSpec::None => 0.0,
                        NoiseSpec::Uniform { half_width } => half_width * unit.sample(&mut rng),
                        NoiseSpec::Rademacher { magnitude } => {
                            if unit.sample(&mut rng) < 0.0 {
                                -magnitude
                            } else {
                                magnitude
                            }
                        }
                    };
                    let (fx, px) = (f(x), phi(x));
                    let y = px + xi;
                    let l = (fx - y) * (fx - y);
                    let bt = (fx - px) * (fx - px);
                    let nt = (y - px) * (y - px);
                    [l, bt, nt, y]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    if let Some(row) = rows.iter().find(|r| !(u <= r[3] && r[3] <= v)) {
        return Err(contract(format!("noisy label {} lies outside [{u}, {v}]", row[3])));
    }
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    let n = n_mc as f64;
    let lhs = pairwise_sum(&col(0)) / n;
    let bias_term = pairwise_sum(&col(1)) / n;
    let noise_term = pairwise_sum(&col(2)) / n;
    let diffs: Vec<f64> = rows.iter().map(|r| r[0] - r[1] - r[2]).collect();
    let (_, std_error) = mean_and_stderr(&diffs);
    let rhs = bias_term + noise_term;
    Ok(BiasVariance { lhs, bias_term, noise_term, rhs, gap: lhs - rhs, std_error })
}
