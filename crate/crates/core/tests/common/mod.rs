//! Helpers shared by the integration tests: random networks and an
//! arbitrary-precision reference for the closed-form bounds.
//!
//! The reference works on exact rationals and takes logarithms through the
//! decimal expansion of big integers, a route that shares no code with the
//! library's own evaluators.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dnn_error_core::matrix::Matrix;
use dnn_error_core::net::{Layer, StructuredNetwork};
use dnn_error_core::rng::{Purpose, Seed};

pub fn rng(tag: u64) -> ChaCha8Rng {
    Seed::new(0x00AC_CE55, tag).stream(Purpose::Aux, 0)
}

/// Dense layers with entries uniform in `[-scale, scale]`.
pub fn random_net(rng: &mut ChaCha8Rng, dims: &[usize], scale: f64) -> StructuredNetwork {
    let layers = dims
        .windows(2)
        .map(|w| {
            let data = (0..w[0] * w[1]).map(|_| rng.random_range(-scale..=scale)).collect();
            let bias = (0..w[1]).map(|_| rng.random_range(-scale..=scale)).collect();
            Layer::new(Matrix::new(w[1], w[0], data).unwrap(), bias).unwrap()
        })
        .collect();
    StructuredNetwork::new(layers).unwrap()
}

/// Dims `(l_0, ..., l_depth)` with every entry in `1..=max_width`.
pub fn random_dims(rng: &mut ChaCha8Rng, depth: usize, max_width: usize) -> Vec<usize> {
    (0..=depth).map(|_| rng.random_range(1..=max_width)).collect()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..=hi)).collect()
}

/// `|a - b| <= tol · max(|a|, |b|)`, with equality accepted outright.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---- exact reference -------------------------------------------------------

pub fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn qi(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `ln n` for a positive integer from its leading decimal digits.
pub fn ln_int(n: &BigInt) -> f64 {
    assert!(n.is_positive());
    let digits = n.to_string();
    let lead = &digits[..digits.len().min(17)];
    let mantissa: f64 = format!("{}.{}", &lead[..1], &lead[1..]).parse().unwrap();
    mantissa.ln() + (digits.len() - 1) as f64 * std::f64::consts::LN_10
}

/// `ln x` for a positive rational. Near 1 the quotient is expanded to 40
/// decimal places first so the subtraction does not cancel.
pub fn ln_q(x: &BigRational) -> f64 {
    assert!(x.is_positive());
    let scale = BigInt::from(10u32).pow(40);
    let diff = x - BigRational::one();
    if diff.abs() < BigRational::new(BigInt::one(), BigInt::from(2)) {
        let scaled = (diff * BigRational::from_integer(scale.clone())).round().to_integer();
        let d: f64 = scaled.to_string().parse::<f64>().unwrap() / 1e40;
        return d.ln_1p();
    }
    ln_int(x.numer()) - ln_int(x.denom())
}

/// Nearest double to a rational, through its decimal expansion.
pub fn to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_q(&x.abs()).exp()
}

pub fn pow(x: &BigRational, n: usize) -> BigRational {
    num_traits::pow(x.clone(), n)
}

pub fn max_q(a: BigRational, b: BigRational) -> BigRational {
    if a >= b {
        a
    } else {
        b
    }
}

/// `ln 2 - 2ε²N² / Σ(b-a)²`.
pub fn ref_hoeffding(eps: f64, ranges: &[(f64, f64)]) -> f64 {
    let n = qi(ranges.len() as u64);
    let spread: BigRational = ranges.iter().map(|(a, b)| pow(&(q(*b) - q(*a)), 2)).sum();
    let e = q(eps);
    std::f64::consts::LN_2 - exact_f64(&(qi(2) * &e * &e * &n * &n / spread))
}

/// Exact rational to double via a 60-digit decimal expansion (sign kept).
pub fn exact_f64(x: &BigRational) -> f64 {
    let scale = BigInt::from(10u32).pow(60);
    let scaled = (x * BigRational::from_integer(scale)).round().to_integer();
    let text = scaled.to_string();
    format!("{text}e-60").parse().unwrap()
}

/// `ln 2 + 𝔡 max{0, ln(32 L max{1,b} (w+1)^L R^L (v-u)/ε)} - ε²M/(2(v-u)⁴)`.
#[allow(clippy::too_many_arguments)]
pub fn ref_generalization(depth: usize, width: usize, dfrak: usize, m: usize, r: f64, u: f64, v: f64, b: f64, eps: f64) -> f64 {
    let s = q(v) - q(u);
    let bracket = qi(32) * qi(depth as u64) * max_q(qi(1), q(b)) * pow(&qi(width as u64 + 1), depth) * pow(&q(r), depth)
        * &s
        / q(eps);
    let ln_b = ln_q(&bracket).max(0.0);
    let decay = pow(&q(eps), 2) * qi(m as u64) / (qi(2) * pow(&s, 4));
    std::f64::consts::LN_2 + dfrak as f64 * ln_b - exact_f64(&decay)
}

/// `-K min{1, (ε/(Lip(b-a)))^𝔡}`.
pub fn ref_optimization(dfrak: usize, k: usize, a: f64, b: f64, lip: f64, eps: f64) -> f64 {
    let ratio = q(eps) / (q(lip) * (q(b) - q(a)));
    let ln_min = (dfrak as f64 * ln_q(&ratio)).min(0.0);
    -(k as f64) * ln_min.exp()
}

/// `(term₁, term₂)` of the end-to-end estimate, both as logs.
#[allow(clippy::too_many_arguments)]
pub fn ref_overall(dfrak: usize, k: usize, m: usize, tau: usize, eps: f64, u: f64, v: f64, r: f64) -> (f64, f64) {
    let s = q(v) - q(u);
    let width_factor = pow(&qi(tau as u64 + 1), tau) * pow(&q(r), tau);
    let ratio = pow(&q(eps), 2) / (qi(16) * &s * &width_factor);
    let t1 = -(k as f64) * (dfrak as f64 * ln_q(&ratio)).min(0.0).exp();
    let bracket = qi(128) * &width_factor * &s / pow(&q(eps), 2);
    let decay = pow(&q(eps), 4) * qi(m as u64) / (qi(32) * pow(&s, 4));
    let t2 = std::f64::consts::LN_2 + dfrak as f64 * ln_q(&bracket).max(0.0) - exact_f64(&decay);
    (t1, t2)
}

/// `dim ln(4R/r)` or 0.
pub fn ref_ball(dim: usize, big_r: f64, r: f64) -> f64 {
    if q(r) >= q(big_r) {
        0.0
    } else {
        dim as f64 * ln_q(&(qi(4) * q(big_r) / q(r)))
    }
}

/// `L max{1,|a|,|b|} (w+1)^L max{1,R}^{L-1}` exactly.
pub fn ref_lipschitz(depth: usize, width: usize, a: f64, b: f64, r: f64) -> BigRational {
    let scale = max_q(max_q(qi(1), q(a).abs()), q(b).abs());
    qi(depth as u64) * scale * pow(&qi(width as u64 + 1), depth) * pow(&max_q(qi(1), q(r)), depth - 1)
}
