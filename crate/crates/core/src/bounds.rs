//! Closed-form probability bounds, evaluated in natural-log space.
//!
//! Every evaluator returns `ln(bound)`; `f64::NEG_INFINITY` stands for a
//! bound of zero. Callers exponentiate only at the end, through
//! [`clamped_total`], because quantities such as `(τ+1)^{τ𝔡}` leave the
//! double range already for tiny configurations.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::exact::{check_dfrak, check_radius, check_tau, ln_biguint};
use crate::net::Architecture;

/// `ln` of the covering-number bound for a ball of radius `R` by balls of
/// radius `r` in a `dim`-dimensional normed space: `0` if `r >= R`, else
/// `dim · ln(4R/r)`.
pub fn covering_number_ball(dim: usize, big_r: f64, r: f64) -> Result<f64> {
    if !(big_r > 0.0 && r > 0.0) {
        return Err(contract(format!("radii must be positive, got R = {big_r}, r = {r}")));
    }
    Ok(if r >= big_r { 0.0 } else { dim as f64 * (4.0 * big_r / r).ln() })
}

/// Grid cover of `[a, b]^d` in the `ℓ¹` metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeCover {
    /// Subdivisions per axis: the smallest `N >= 1` with `d(b-a)/(2N) <= r`.
    pub n: u64,
    /// `(N+1)^d`, an upper bound on the covering number.
    pub count: BigUint,
}

impl CubeCover {
    pub fn ln_count(&self) -> f64 {
        ln_biguint(&self.count)
    }
}

pub fn covering_number_cube_l1(d: usize, a: f64, b: f64, r: f64) -> Result<CubeCover> {
    if d == 0 {
        return Err(contract("dimension must be positive"));
    }
    if !(b > a) || !(r > 0.0) {
        return Err(contract(format!("need b > a and r > 0, got [{a}, {b}], r = {r}")));
    }
    let ratio = d as f64 * (b - a) / (2.0 * r);
    let mut n = (ratio.ceil() as u64).max(1);
    // guard against the division rounding just below an integer
    while n > 1 && d as f64 * (b - a) / (2.0 * (n - 1) as f64) <= r {
        n -= 1;
    }
    while d as f64 * (b - a) / (2.0 * n as f64) > r {
        n += 1;
    }
    Ok(CubeCover { n, count: BigUint::from(n + 1).pow(d as u32) })
}

/// `ln 2 - 2ε²N² / Σ(b_n - a_n)²` for the deviation of a sum of `N`
/// independent bounded variables from its mean by at least `εN`.
pub fn hoeffding_bound(eps: f64, n: usize, ranges: &[(f64, f64)]) -> Result<f64> {
    if ranges.len() != n {
        return Err(contract(format!("{n} variables but {} ranges", ranges.len())));
    }
    if ranges.iter().any(|(a, b)| !(b >= a)) {
        return Err(contract("every range needs a_n <= b_n"));
    }
    let spread: f64 = ranges.iter().map(|(a, b)| (b - a) * (b - a)).sum();
    if spread == 0.0 {
        return Err(contract("all ranges are degenerate"));
    }
    let nf = n as f64;
    Ok(LN_2 - 2.0 * eps * eps * nf * nf / spread)
}

/// Uniform deviation of the empirical risk from the true risk over
/// `[-R, R]^𝔡` for clipped networks with architecture `dims` on inputs in
/// `[-b, b]^{l_0}`:
/// `ln 2 + 𝔡 ln max{1, 32L max{1,b} (‖l‖∞+1)^L R^L (v-u)/ε} - ε²M/(2(v-u)⁴)`.
#[allow(clippy::too_many_arguments)]
pub fn generalization_bound(
    dims: &Architecture,
    dfrak: usize,
    m: usize,
    big_r: f64,
    u: f64,
    v: f64,
    b: f64,
    eps: f64,
) -> Result<f64> {
    if !(big_r >= 1.0) {
        return Err(contract(format!("R must be at least 1, got {big_r}")));
    }
    if dims.out_dim() != 1 {
        return Err(contract("generalization bound needs a scalar output"));
    }
    if dims.param_count() > dfrak {
        return Err(contract(format!("architecture needs {} parameters but 𝔡 = {dfrak}", dims.param_count())));
    }
    if !(v > u && eps > 0.0 && b > 0.0) {
        return Err(contract("need v > u, ε > 0 and b > 0"));
    }
    let depth = dims.depth() as f64;
    let width = dims.max_width() as f64;
    let spread = v - u;
    let ln_bracket = (32.0 * depth).ln() + b.max(1.0).ln() + depth * (width + 1.0).ln() + depth * big_r.ln()
        + spread.ln()
        - eps.ln();
    Ok(LN_2 + dfrak as f64 * ln_bracket.max(0.0) - eps * eps * m as f64 / (2.0 * spread.powi(4)))
}

/// `-K min{1, (ε / (Lip (b-a)))^𝔡}`: minimum of `K` uniform draws on
/// `[a, b]^𝔡` of a `Lip`-Lipschitz (in `‖·‖∞`) function exceeding its value
/// at any fixed point by more than `ε`.
pub fn optimization_bound(dfrak: usize, k: usize, a: f64, b: f64, lip: f64, eps: f64) -> Result<f64> {
    if k == 0 || dfrak == 0 {
        return Err(contract("need K >= 1 and 𝔡 >= 1"));
    }
    if !(b > a && lip > 0.0 && eps > 0.0) {
        return Err(contract("need b > a, Lip > 0 and ε > 0"));
    }
    let ln_ratio = eps.ln() - lip.ln() - (b - a).ln();
    Ok(-(k as f64) * (dfrak as f64 * ln_ratio).min(0.0).exp())
}

/// Parameters of the end-to-end estimate for minimum Monte Carlo training
/// of `(d, τ, ..., τ, 1)` clipped networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub d: usize,
    pub dfrak: usize,
    pub k: usize,
    pub m: usize,
    pub tau: usize,
    pub eps: f64,
    pub lip: f64,
    pub a: f64,
    pub b: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl ProblemConfig {
    /// Checks the structural preconditions (not the quantitative hypotheses).
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.dfrak == 0 || self.k == 0 || self.m == 0 || self.tau == 0 {
            return Err(contract("d, 𝔡, K, M and τ must all be positive"));
        }
        let finite = [self.eps, self.lip, self.a, self.b, self.u, self.v, self.r];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(contract("all real parameters must be finite"));
        }
        if !(self.eps > 0.0) {
            return Err(contract(format!("ε must be positive, got {}", self.eps)));
        }
        if !(self.lip >= 0.0) {
            return Err(contract(format!("L must be non-negative, got {}", self.lip)));
        }
        if !(self.b > self.a) || !(self.v > self.u) {
            return Err(contract("need b > a and v > u"));
        }
        Ok(())
    }

    /// Checks every quantitative hypothesis with exact arithmetic, reporting
    /// the first violated one.
    pub fn check_hypotheses(&self) -> Result<()> {
        self.validate()?;
        check_radius(self.r, self.lip, self.a, self.b, self.u, self.v)?;
        check_tau(self.tau, self.d, self.lip, self.a, self.b, self.eps)?;
        check_dfrak(self.dfrak, self.d, self.tau)?;
        Ok(())
    }

    pub fn hypotheses(&self) -> Hypotheses {
        Hypotheses {
            tau_ok: check_tau(self.tau, self.d, self.lip, self.a, self.b, self.eps).is_ok(),
            dfrak_ok: check_dfrak(self.dfrak, self.d, self.tau).is_ok(),
            radius_ok: check_radius(self.r, self.lip, self.a, self.b, self.u, self.v).is_ok(),
        }
    }

    /// `(d, τ, ..., τ, 1)` with `τ` entries.
    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::uniform_hidden(self.d, self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub tau_ok: bool,
    pub dfrak_ok: bool,
    pub radius_ok: bool,
}

impl Hypotheses {
    pub fn all(&self) -> bool {
        self.tau_ok && self.dfrak_ok && self.radius_ok
    }
}

/// The two summands of the end-to-end estimate and their clamped sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub log_optimization_term: f64,
    pub log_generalization_term: f64,
    /// The width hypothesis that makes the approximation error at most `ε/2`.
    pub approx_threshold_ok: bool,
    /// `min{1, exp(log_opt) + exp(log_gen)}`.
    pub clamped_total: f64,
    pub hypotheses: Hypotheses,
}

impl BoundReport {
    /// `ln(exp(log_opt) + exp(log_gen))`, unclamped.
    pub fn log_total(&self) -> f64 {
        log_add_exp(self.log_optimization_term, self.log_generalization_term)
    }

    /// The unclamped bound is at least 1.
    pub fn vacuous(&self) -> bool {
        self.log_total() >= 0.0
    }
}

/// `ln(e^x + e^y)` without overflow.
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `min{1, e^x + e^y}`.
pub fn clamped_total(log_x: f64, log_y: f64) -> f64 {
    let l = log_add_exp(log_x, log_y);
    if l >= 0.0 {
        1.0
    } else {
        l.exp()
    }
}

/// `τ ln(τ+1) + τ ln R`, i.e. `ln((τ+1)^τ R^τ)`.
fn ln_width_factor(tau: usize, r: f64) -> f64 {
    let t = tau as f64;
    t * (t + 1.0).ln() + t * r.ln()
}

/// `ln` of `exp(-K min{1, ε^{2𝔡} / (16(v-u)(τ+1)^τ R^τ)^𝔡})`.
pub fn overall_optimization_term(cfg: &ProblemConfig) -> f64 {
    let df = cfg.dfrak as f64;
    let ln_ratio = df * (2.0 * cfg.eps.ln() - (16.0 * (cfg.v - cfg.u)).ln() - ln_width_factor(cfg.tau, cfg.r));
    -(cfg.k as f64) * ln_ratio.min(0.0).exp()
}

/// `ln` of `2 exp(𝔡 ln max{1, 128(τ+1)^τ R^τ (v-u)/ε²} - ε⁴M / (32(v-u)⁴))`.
pub fn overall_generalization_term(cfg: &ProblemConfig) -> f64 {
    let spread = cfg.v - cfg.u;
    let ln_bracket = 128f64.ln() + ln_width_factor(cfg.tau, cfg.r) + spread.ln() - 2.0 * cfg.eps.ln();
    LN_2 + cfg.dfrak as f64 * ln_bracket.max(0.0) - cfg.eps.powi(4) * cfg.m as f64 / (32.0 * spread.powi(4))
}

/// Evaluates the estimate whether or not its hypotheses hold; the report
/// records which ones do.
pub fn evaluate_overall(cfg: &ProblemConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let hypotheses = cfg.hypotheses();
    let log_optimization_term = overall_optimization_term(cfg);
    let log_generalization_term = overall_generalization_term(cfg);
    Ok(BoundReport {
        log_optimization_term,
        log_generalization_term,
        approx_threshold_ok: hypotheses.tau_ok,
        clamped_total: clamped_total(log_optimization_term, log_generalization_term),
        hypotheses,
    })
}

/// Upper bound on `P(‖𝒩_Ξ - φ‖_{L²} > ε)` for the minimum Monte Carlo
/// selection `Ξ`. Fails with the violated inequality if a hypothesis does
/// not hold.
pub fn overall_bound(cfg: &ProblemConfig) -> Result<BoundReport> {
    cfg.check_hypotheses()?;
    evaluate_overall(cfg)
}

/// `L max{1,|a|,|b|} (‖l‖∞+1)^L max{1,R}^{L-1}`: the sup-norm distance of
/// two realizations on `[a,b]^{l_0}` with parameters in `[-R,R]^𝔡` is at
/// most this times `‖θ - ϑ‖∞`. Clipping does not change it.
pub fn lipschitz_coefficient(arch: &Architecture, a: f64, b: f64, r: f64) -> Result<f64> {
    if !(b >= a) || !(r > 0.0) {
        return Err(contract("need b >= a and R > 0"));
    }
    let depth = arch.depth() as i32;
    let scale = 1f64.max(a.abs()).max(b.abs());
    Ok(depth as f64 * scale * (arch.max_width() as f64 + 1.0).powi(depth) * r.max(1.0).powi(depth - 1))
}

/// `(v-u) · total^{1/p} + ε`: bound on the `p`-th moment (to the power
/// `1/p`) of the `L²` error, from the tail bound at `ε`.
pub fn lp_error_bound(cfg: &ProblemConfig, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(contract(format!("p must be at least 1, got {p}")));
    }
    let report = overall_bound(cfg)?;
    if !(cfg.eps <= (cfg.v - cfg.u).sqrt()) {
        return Err(contract(format!("need ε <= √(v-u), got ε = {}", cfg.eps)));
    }
    Ok((cfg.v - cfg.u) * report.clamped_total.powf(1.0 / p) + cfg.eps)
}

/// `c = max{32(v-u)⁴, 256(v-u+1)R}`.
pub fn generic_constant(u: f64, v: f64, r: f64) -> f64 {
    let s = v - u;
    (32.0 * s.powi(4)).max(256.0 * (s + 1.0) * r)
}

/// The single-constant form `exp(-K(cτ)^{-τ𝔡} ε^{2𝔡}) + 2 exp(𝔡 ln((cτ)^τ ε^{-2}) - ε⁴M/c)`,
/// as the two log terms.
pub fn c_form_terms(cfg: &ProblemConfig) -> Result<(f64, f64)> {
    cfg.check_hypotheses()?;
    let c = generic_constant(cfg.u, cfg.v, cfg.r);
    let (t, df) = (cfg.tau as f64, cfg.dfrak as f64);
    let ln_ct = (c * t).ln();
    let log_opt = -(cfg.k as f64) * (df * (2.0 * cfg.eps.ln() - t * ln_ct)).exp();
    let log_gen = LN_2 + df * (t * ln_ct - 2.0 * cfg.eps.ln()) - cfg.eps.powi(4) * cfg.m as f64 / c;
    Ok((log_opt, log_gen))
}

/// Sample sizes at which each summand drops to at most 1/2, so the total is
/// at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformativeRegime {
    /// `ln` of the smallest such `K` (it is usually far beyond any integer type).
    pub ln_k_min: f64,
    /// Smallest such `M`, as a float for the same reason.
    pub m_min: f64,
}

pub fn informative_regime(cfg: &ProblemConfig) -> Result<InformativeRegime> {
    cfg.validate()?;
    // exp(-K q) <= 1/2  <=>  K >= ln 2 / q
    let df = cfg.dfrak as f64;
    let ln_q = (df * (2.0 * cfg.eps.ln() - (16.0 * (cfg.v - cfg.u)).ln() - ln_width_factor(cfg.tau, cfg.r))).min(0.0);
    let ln_k_min = (LN_2.ln() - ln_q).max(0.0);
    // ln 2 + 𝔡 B - ε⁴M/(32 s⁴) <= -ln 2
    let spread = cfg.v - cfg.u;
    let ln_bracket =
        (128f64.ln() + ln_width_factor(cfg.tau, cfg.r) + spread.ln() - 2.0 * cfg.eps.ln()).max(0.0);
    let m_min = ((2.0 * LN_2 + df * ln_bracket) * 32.0 * spread.powi(4) / cfg.eps.powi(4)).ceil().max(1.0);
    Ok(InformativeRegime { ln_k_min, m_min })
}
