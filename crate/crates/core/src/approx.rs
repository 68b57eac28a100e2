//! Exact ReLU interpolation of Lipschitz data and the regular grids used to
//! turn it into uniform approximation guarantees.
//!
//! Given samples `f(z)` on a finite set `𝓜` and a constant `L`, the function
//! `F(x) = max_{z ∈ 𝓜} [f(z) - L |x - z|₁]` is the largest `L`-Lipschitz
//! (in `ℓ¹`) function that agrees with `f` on `𝓜`. It is realized exactly by
//! a ReLU network: one layer computes `|x_i - z_i|`, one layer assembles the
//! candidates `f(z) - L δ(x, z)`, and the maximum network selects the best.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::calculus::{compose, max_net};
use crate::error::{contract, shape, Result};
use crate::matrix::Matrix;
use crate::net::{to_vector, Layer, StructuredNetwork, VectorizedParams};

/// Distinct sample points with their values and a Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    lipschitz: f64,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(contract(format!("need at least two sample points, got {}", points.len())));
        }
        if values.len() != points.len() {
            return Err(shape(format!("{} points but {} values", points.len(), values.len())));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(shape("sample points must share one positive dimension"));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(contract(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(contract(format!("sample points {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { points, values, lipschitz })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// First pair `(i, j)` whose values differ by more than `L δ(z_i, z_j)`
    /// (with relative slack `rel_tol`), if any.
    pub fn lipschitz_violation(&self, rel_tol: f64) -> Option<(usize, usize)> {
        for i in 0..self.len() {
            for j in 0..i {
                let allowed = self.lipschitz * l1_distance(&self.points[i], &self.points[j]);
                let diff = (self.values[i] - self.values[j]).abs();
                if diff > allowed * (1.0 + rel_tol) + rel_tol * diff {
                    return Some((j, i));
                }
            }
        }
        None
    }
}

/// `Σ |x_i - y_i|`.
pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// `max_{z ∈ 𝓜} [f(z) - L δ(x, z)]`.
pub fn lipschitz_extension_eval(samples: &SampleSet, x: &[f64]) -> Result<f64> {
    if x.len() != samples.dim() {
        return Err(shape(format!("point has dimension {}, samples have {}", x.len(), samples.dim())));
    }
    Ok(samples
        .points
        .iter()
        .zip(&samples.values)
        .map(|(z, fz)| fz - samples.lipschitz * l1_distance(x, z))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// The ReLU network whose realization equals [`lipschitz_extension_eval`].
///
/// Dims are `(d, 2d|𝓜|, 2|𝓜|-1, 2|𝓜|-3, ..., 3, 1)` and the parameters are
/// bounded by `max{1, L, max_z |z|∞, 2 max_z |f(z)|}`.
pub fn interpolation_net(samples: &SampleSet) -> Result<StructuredNetwork> {
    let d = samples.dim();
    let n = samples.len();
    let mut w1 = Matrix::zeros(2 * d * n, d);
    let mut b1 = Vec::with_capacity(2 * d * n);
    let mut w2 = Matrix::zeros(n, 2 * d * n);
    for (s, z) in samples.points.iter().enumerate() {
        for (i, &zi) in z.iter().enumerate() {
            let row = 2 * d * s + 2 * i;
            w1.set(row, i, 1.0);
            w1.set(row + 1, i, -1.0);
            b1.push(-zi);
            b1.push(zi);
        }
        for c in 0..2 * d {
            w2.set(s, 2 * d * s + c, -samples.lipschitz);
        }
    }
    let distances = StructuredNetwork::new(vec![
        Layer::new(w1, b1)?,
        Layer::new(w2, samples.values.clone())?,
    ])?;
    compose(&max_net(n)?, &distances)
}

/// Axis-aligned box `Π [p_i, q_i]` subdivided into `N` steps per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub n: usize,
}

impl Grid {
    pub fn new(p: Vec<f64>, q: Vec<f64>, n: usize) -> Result<Self> {
        let grid = Self { p, q, n };
        grid.validate()?;
        Ok(grid)
    }

    /// Same box `[a, b]^d` on every axis.
    pub fn cube(d: usize, a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(vec![a; d], vec![b; d], n)
    }

    fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p.len() != self.q.len() {
            return Err(shape("grid corners must have the same positive dimension"));
        }
        if self.n == 0 {
            return Err(contract("grid needs N >= 1"));
        }
        if self.p.iter().zip(&self.q).any(|(p, q)| !(p <= q) || !p.is_finite() || !q.is_finite()) {
            return Err(contract("grid corners must be finite with p_i <= q_i"));
        }
        if !self.p.iter().zip(&self.q).any(|(p, q)| q > p) {
            return Err(contract("degenerate grid box: q_i = p_i on every axis"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// `Σ (q_i - p_i)`.
    pub fn l1_diameter(&self) -> f64 {
        self.p.iter().zip(&self.q).map(|(p, q)| q - p).sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.p.iter().zip(&self.q)).all(|(xi, (p, q))| p <= xi && xi <= q)
    }
}

/// All `(N+1)^d` lattice points `p_i + (k_i/N)(q_i - p_i)`, in lexicographic
/// order of the multi-index `(k_1, ..., k_d)` (last index fastest).
pub fn grid_points(grid: &Grid) -> Result<Vec<Vec<f64>>> {
    grid.validate()?;
    let d = grid.dim();
    let side = grid.n + 1;
    let count = side
        .checked_pow(d as u32)
        .ok_or_else(|| contract("grid has too many points to enumerate"))?;
    let coord = |i: usize, k: usize| {
        if k == grid.n {
            grid.q[i]
        } else {
            grid.p[i] + (k as f64 / grid.n as f64) * (grid.q[i] - grid.p[i])
        }
    };
    let mut points = Vec::with_capacity(count);
    let mut index = vec![0usize; d];
    for _ in 0..count {
        points.push(index.iter().enumerate().map(|(i, &k)| coord(i, k)).collect());
        for i in (0..d).rev() {
            index[i] += 1;
            if index[i] < side {
                break;
            }
            index[i] = 0;
        }
    }
    Ok(points)
}

/// Clipped interpolation network on a grid, with its guaranteed uniform error.
#[derive(Debug, Clone, PartialEq)]
pub struct GridApproximant {
    pub params: VectorizedParams,
    pub clip: (f64, f64),
    /// `(L / N) Σ (q_i - p_i)`.
    pub bound: f64,
}

/// Samples `f` on the grid and returns the clipped interpolation network.
///
/// `f` must map the box into `[u, v]` and be `L`-Lipschitz. The range is
/// checked at every grid point; the Lipschitz condition is spot-checked on
/// neighbouring grid points (in `ℓ¹`, which the Euclidean condition implies).
pub fn build_grid_approximant<F>(f: F, grid: &Grid, lipschitz: f64, u: f64, v: f64) -> Result<GridApproximant>
where
    F: Fn(&[f64]) -> f64,
{
    if !(u < v) {
        return Err(contract(format!("clip range needs u < v, got [{u}, {v}]")));
    }
    let mut points = grid_points(grid)?;
    // axes with q_i = p_i produce repeated points
    points.dedup();
    let values: Vec<f64> = points.iter().map(|x| f(x)).collect();
    if let Some((x, y)) = points.iter().zip(&values).find(|(_, y)| !(u..=v).contains(*y)) {
        return Err(contract(format!("f({x:?}) = {y} lies outside [{u}, {v}]")));
    }
    let samples = SampleSet::new(points, values, lipschitz)?;
    check_grid_lipschitz(&samples, grid)?;
    let net = interpolation_net(&samples)?;
    Ok(GridApproximant {
        params: to_vector(&net),
        clip: (u, v),
        bound: lipschitz / grid.n as f64 * grid.l1_diameter(),
    })
}

fn check_grid_lipschitz(samples: &SampleSet, grid: &Grid) -> Result<()> {
    let pts = samples.points();
    let vals = samples.values();
    let l = samples.lipschitz();
    // neighbours along the last axis are adjacent in lexicographic order;
    // along other axes they sit a fixed stride apart
    let live: Vec<usize> = (0..grid.dim()).filter(|&i| grid.q[i] > grid.p[i]).collect();
    let mut stride = 1;
    for &axis in live.iter().rev() {
        for a in 0..pts.len().saturating_sub(stride) {
            let b = a + stride;
            let differs_only_on_axis =
                (0..grid.dim()).all(|i| i == axis || pts[a][i] == pts[b][i]);
            if !differs_only_on_axis {
                continue;
            }
            let allowed = l * l1_distance(&pts[a], &pts[b]);
            let diff = (vals[a] - vals[b]).abs();
            if diff > allowed * (1.0 + 1e-12) + 1e-15 {
                return Err(contract(format!(
                    "f is not {l}-Lipschitz between {:?} and {:?}: |Δf| = {diff} > {allowed}",
                    pts[a], pts[b]
                )));
            }
        }
        stride *= grid.n + 1;
    }
    Ok(())
}

/// Parameter counts for the grid interpolation network with `|𝓜| = (N+1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBudget {
    /// Exact `Σ l_k (l_{k-1} + 1)` for dims `(d, 2d|𝓜|, 2|𝓜|-1, ..., 3, 1)`.
    pub exact: BigUint,
    /// `2d²(N+1)^d + 5d(N+1)^{2d} + (4/3)(N+1)^{3d}`.
    pub closed_form_bound: BigRational,
}

pub fn param_budget_grid(d: usize, n: usize) -> Result<ParamBudget> {
    if d == 0 {
        return Err(contract("dimension must be positive"));
    }
    let m = BigUint::from(n + 1).pow(d as u32);
    if m < BigUint::from(2u32) {
        return Err(contract(format!("grid with N = {n} has fewer than two points")));
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let bd = BigUint::from(d);
    // first layer: 2dm (d + 1); second: (2m - 1)(2dm + 1)
    let first = &two * &bd * &m * (&bd + &one);
    let second = (&two * &m - &one) * (&two * &bd * &m + &one);
    // remaining layers: Σ_{i=1}^{m-1} (2i - 1)(2i + 2) = 4 S2 + 2 S1 - 2(m - 1)
    let mm1 = &m - &one;
    let s1 = &mm1 * &m / &two;
    let s2 = &mm1 * &m * (&two * &m - &one) / BigUint::from(6u32);
    let rest = BigUint::from(4u32) * s2 + &two * s1 - &two * &mm1;
    let exact = first + second + rest;

    let side = num_bigint::BigInt::from(n + 1);
    let di = num_bigint::BigInt::from(d);
    let p1 = side.pow(d as u32);
    let p2 = side.pow(2 * d as u32);
    let p3 = side.pow(3 * d as u32);
    let integral = num_bigint::BigInt::from(2) * &di * &di * p1 + num_bigint::BigInt::from(5) * &di * p2;
    let closed_form_bound = BigRational::from_integer(integral)
        + BigRational::new(num_bigint::BigInt::from(4) * p3, num_bigint::BigInt::from(3));
    debug_assert!(!closed_form_bound.is_zero());
    Ok(ParamBudget { exact, closed_form_bound })
}
