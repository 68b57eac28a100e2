//! Structured and vectorized descriptions of fully connected networks.
//!
//! A [`StructuredNetwork`] is an ordered list of `(W_k, B_k)` layers. A
//! [`VectorizedParams`] is a flat parameter vector together with the layer
//! dimensions that say how to read it: per layer, the weight matrix row-major
//! followed by the bias, layers concatenated in order. [`to_vector`] and
//! [`StructuredNetwork::from_params`] translate between the two.

use serde::{Deserialize, Serialize};

use crate::error::{contract, shape, Error, Result};
use crate::matrix::Matrix;

/// Layer dimensions `(l_0, l_1, ..., l_L)` with `L >= 1` and every entry positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture(Vec<usize>);

impl Architecture {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(shape(format!(
                "an architecture needs at least an input and an output dimension, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(shape(format!("layer dimensions must be positive, got {dims:?}")));
        }
        Ok(Self(dims))
    }

    /// The architecture `(d, tau, tau, ..., tau, 1)` with `tau` entries in
    /// total, i.e. depth `tau - 1` and `tau - 2` hidden layers of width `tau`.
    pub fn uniform_hidden(input_dim: usize, tau: usize) -> Result<Self> {
        if tau < 3 {
            return Err(contract(format!("uniform hidden architecture needs tau >= 3, got {tau}")));
        }
        let mut dims = vec![tau; tau];
        dims[0] = input_dim;
        dims[tau - 1] = 1;
        Self::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Number of affine layers `L`.
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn in_dim(&self) -> usize {
        self.0[0]
    }

    pub fn out_dim(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    /// Largest layer dimension, `max_k l_k`.
    pub fn max_width(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `sum_k l_k (l_{k-1} + 1)`.
    pub fn param_count(&self) -> usize {
        self.0.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Offset of layer `k` (zero-based) inside a parameter vector.
    pub fn layer_offset(&self, k: usize) -> usize {
        self.0[..=k].windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(arch: Architecture) -> Self {
        arch.0
    }
}

/// One affine layer `x -> W x + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(shape(format!(
                "bias of length {} does not match {} weight rows",
                bias.len(),
                weights.rows()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.weights.mul_vec(x)?;
        for (yi, bi) in y.iter_mut().zip(&self.bias) {
            *yi += bi;
        }
        Ok(y)
    }
}

/// A network in structured form.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredNetwork {
    layers: Vec<Layer>,
}

impl StructuredNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(shape("a network needs at least one layer"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(shape(format!(
                    "layer {} has input dimension {} but layer {} outputs {}",
                    k + 2,
                    pair[1].in_dim(),
                    k + 1,
                    pair[0].out_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Reads the first `param_count(arch)` entries of `params` back into
    /// matrices and biases. Padding entries are ignored.
    pub fn from_params(params: &VectorizedParams) -> Self {
        let dims = params.arch().dims();
        let theta = params.theta();
        let mut offset = 0;
        let layers = dims
            .windows(2)
            .map(|w| {
                let (s, r) = (w[0], w[1]);
                let weights = Matrix::new(r, s, theta[offset..offset + r * s].to_vec())
                    .expect("architecture dimensions are positive");
                let bias = theta[offset + r * s..offset + r * s + r].to_vec();
                offset += r * (s + 1);
                Layer { weights, bias }
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn architecture(&self) -> Architecture {
        let mut dims = Vec::with_capacity(self.layers.len() + 1);
        dims.push(self.in_dim());
        dims.extend(self.layers.iter().map(Layer::out_dim));
        Architecture(dims)
    }

    pub fn param_count(&self) -> usize {
        self.architecture().param_count()
    }
}

/// A flat parameter vector read through an architecture. The vector may be
/// longer than the architecture needs; trailing entries are inert padding.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedParams {
    theta: Vec<f64>,
    arch: Architecture,
}

impl VectorizedParams {
    pub fn new(theta: Vec<f64>, arch: Architecture) -> Result<Self> {
        let needed = arch.param_count();
        if theta.len() < needed {
            return Err(shape(format!(
                "architecture {:?} needs {needed} parameters, got {}",
                arch.dims(),
                theta.len()
            )));
        }
        Ok(Self { theta, arch })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    /// Total length of the parameter vector, padding included.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Zero-pads the vector to `len` entries.
    pub fn padded(mut self, len: usize) -> Result<Self> {
        if len < self.theta.len() {
            return Err(contract(format!(
                "cannot pad a vector of length {} down to {len}",
                self.theta.len()
            )));
        }
        self.theta.resize(len, 0.0);
        Ok(self)
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }
}

/// Componentwise activation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// `max{x, 0}`
    Rect,
    /// `max{lo, min{x, hi}}`; infinite endpoints are allowed.
    Clip { lo: f64, hi: f64 },
    Identity,
}

impl Activation {
    pub fn clip(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(contract(format!("clipping needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self::Clip { lo, hi })
    }

    #[inline]
    pub fn scalar(self, x: f64) -> f64 {
        match self {
            Self::Rect => x.max(0.0),
            Self::Clip { lo, hi } => x.min(hi).max(lo),
            Self::Identity => x,
        }
    }
}

/// Applies `act` to every coordinate.
pub fn activation_apply(act: Activation, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&xi| act.scalar(xi)).collect()
}

fn activation_in_place(act: Activation, x: &mut [f64]) {
    for xi in x {
        *xi = act.scalar(*xi);
    }
}

/// The affine map reading an `out_dim x in_dim` weight block row-major from
/// `theta[offset..]`, followed by the `out_dim` bias entries.
pub fn affine_apply(
    theta: &[f64],
    offset: usize,
    out_dim: usize,
    in_dim: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != in_dim {
        return Err(shape(format!("input has length {}, expected {in_dim}", x.len())));
    }
    let end = offset + out_dim * in_dim + out_dim;
    if theta.len() < end {
        return Err(shape(format!(
            "parameter vector of length {} too short, need {end}",
            theta.len()
        )));
    }
    let weights = &theta[offset..offset + out_dim * in_dim];
    let bias = &theta[offset + out_dim * in_dim..end];
    Ok(weights
        .chunks_exact(in_dim)
        .zip(bias)
        .map(|(row, b)| row.iter().zip(x).fold(0.0, |acc, (w, xi)| acc + w * xi) + b)
        .collect())
}

/// Realization of a vectorized network with one activation per layer
/// (the last entry acts on the output layer).
pub fn realize_vectorized(
    params: &VectorizedParams,
    activations: &[Activation],
    x: &[f64],
) -> Result<Vec<f64>> {
    let dims = params.arch.dims();
    if activations.len() != dims.len() - 1 {
        return Err(shape(format!(
            "{} activations given for a network of depth {}",
            activations.len(),
            dims.len() - 1
        )));
    }
    let mut offset = 0;
    let mut h = x.to_vec();
    for (w, &act) in dims.windows(2).zip(activations) {
        let (s, r) = (w[0], w[1]);
        h = affine_apply(&params.theta, offset, r, s, &h)?;
        activation_in_place(act, &mut h);
        offset += r * (s + 1);
    }
    Ok(h)
}

/// Rectified hidden layers and a clip to `[u, v]` on the output layer.
pub fn realize_clipped(params: &VectorizedParams, u: f64, v: f64, x: &[f64]) -> Result<Vec<f64>> {
    let clip = Activation::clip(u, v)?;
    let mut acts = vec![Activation::Rect; params.arch.depth()];
    *acts.last_mut().expect("depth >= 1") = clip;
    realize_vectorized(params, &acts, x)
}

/// Scalar-output convenience for [`realize_clipped`] that skips the
/// activation list allocation. Used in the hot loops of training.
pub(crate) fn realize_clipped_scalar(
    theta: &[f64],
    arch: &Architecture,
    u: f64,
    v: f64,
    x: &[f64],
    scratch: &mut (Vec<f64>, Vec<f64>),
) -> f64 {
    let dims = arch.dims();
    let (cur, next) = scratch;
    cur.clear();
    cur.extend_from_slice(x);
    let mut offset = 0;
    let depth = dims.len() - 1;
    for (k, w) in dims.windows(2).enumerate() {
        let (s, r) = (w[0], w[1]);
        next.clear();
        let weights = &theta[offset..offset + r * s];
        let bias = &theta[offset + r * s..offset + r * s + r];
        for (row, b) in weights.chunks_exact(s).zip(bias) {
            let z = row.iter().zip(cur.iter()).fold(0.0, |acc, (w, xi)| acc + w * xi) + b;
            next.push(if k + 1 == depth { z.min(v).max(u) } else { z.max(0.0) });
        }
        std::mem::swap(cur, next);
        offset += r * (s + 1);
    }
    cur[0]
}

/// Realization of a structured network: `act` on every hidden layer, no
/// activation on the output layer.
pub fn realize_structured(net: &StructuredNetwork, act: Activation, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != net.in_dim() {
        return Err(shape(format!(
            "input has length {}, network expects {}",
            x.len(),
            net.in_dim()
        )));
    }
    let mut h = x.to_vec();
    let last = net.depth() - 1;
    for (k, layer) in net.layers.iter().enumerate() {
        h = layer.apply(&h)?;
        if k < last {
            activation_in_place(act, &mut h);
        }
    }
    Ok(h)
}

/// Flattens a structured network: per layer the weights row-major, then the
/// bias. The result has exactly `param_count` entries.
pub fn to_vector(net: &StructuredNetwork) -> VectorizedParams {
    let arch = net.architecture();
    let mut theta = Vec::with_capacity(arch.param_count());
    for layer in &net.layers {
        theta.extend_from_slice(layer.weights.as_slice());
        theta.extend_from_slice(&layer.bias);
    }
    VectorizedParams { theta, arch }
}

/// `max_i |x_i|`.
pub fn inf_norm(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Domain("maximum norm of an empty vector".into()));
    }
    Ok(x.iter().fold(0.0, |m, xi| m.max(xi.abs())))
}

/// Operator norm of `W` with respect to the maximum norm (max absolute row sum).
pub fn matrix_inf_operator_norm(w: &Matrix) -> f64 {
    w.inf_operator_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(dims: &[usize]) -> Architecture {
        Architecture::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn architecture_counts() {
        let a = arch(&[2, 3, 1]);
        assert_eq!(a.depth(), 2);
        assert_eq!(a.param_count(), 3 * 3 + 4);
        assert_eq!(a.layer_offset(0), 0);
        assert_eq!(a.layer_offset(1), 9);
        assert_eq!(a.max_width(), 3);
        assert!(Architecture::new(vec![2]).is_err());
        assert!(Architecture::new(vec![2, 0, 1]).is_err());
    }

    #[test]
    fn uniform_hidden_param_count() {
        // tau(d+1) + (tau-3) tau (tau+1) + tau + 1
        for d in 1..4 {
            for tau in 3..10 {
                let a = Architecture::uniform_hidden(d, tau).unwrap();
                assert_eq!(a.dims().len(), tau);
                assert_eq!(a.param_count(), tau * (d + 1) + (tau - 3) * tau * (tau + 1) + tau + 1);
            }
        }
    }

    #[test]
    fn affine_examples() {
        let theta = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(affine_apply(&theta, 0, 2, 2, &[3.0, 5.0]).unwrap(), vec![3.0, 5.0]);
        assert_eq!(affine_apply(&[2.0, -1.0, 7.0], 0, 1, 2, &[1.0, 1.0]).unwrap(), vec![8.0]);
        let padded = [9.0, 9.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(affine_apply(&padded, 2, 2, 2, &[3.0, 5.0]).unwrap(), vec![3.0, 5.0]);
    }

    #[test]
    fn affine_errors() {
        assert!(matches!(affine_apply(&[1.0, 2.0], 0, 1, 2, &[1.0, 1.0]), Err(Error::Shape(_))));
        assert!(matches!(affine_apply(&[1.0, 2.0, 3.0], 0, 1, 2, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn activation_examples() {
        assert_eq!(activation_apply(Activation::Rect, &[-2.0, 0.0, 3.0]), vec![0.0, 0.0, 3.0]);
        let clip = Activation::clip(0.0, 1.0).unwrap();
        assert_eq!(activation_apply(clip, &[-0.5, 0.5, 2.0]), vec![0.0, 0.5, 1.0]);
        let open = Activation::clip(f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(activation_apply(open, &[-7.0, 4.0]), vec![-7.0, 4.0]);
        assert!(Activation::clip(1.0, 1.0).is_err());
    }

    #[test]
    fn clipped_single_layer() {
        let p = VectorizedParams::new(vec![1.0, 0.0], arch(&[1, 1])).unwrap();
        assert_eq!(realize_clipped(&p, 0.0, 1.0, &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(realize_clipped(&p, 0.0, 1.0, &[0.3]).unwrap(), vec![0.3]);
        let c = 1.234_567;
        assert_eq!(realize_vectorized(&p, &[Activation::Identity], &[c]).unwrap(), vec![c]);
        assert!(realize_clipped(&p, 1.0, 0.0, &[0.3]).is_err());
    }

    #[test]
    fn vectorized_rejects_short_theta() {
        assert!(VectorizedParams::new(vec![1.0], arch(&[1, 1])).is_err());
        let p = VectorizedParams::new(vec![1.0, 0.0], arch(&[1, 1])).unwrap();
        assert!(realize_vectorized(&p, &[], &[1.0]).is_err());
    }

    #[test]
    fn to_vector_order() {
        let w = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let net = StructuredNetwork::new(vec![Layer::new(w, vec![5.0, 6.0]).unwrap()]).unwrap();
        assert_eq!(to_vector(&net).theta(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        let scalar = |w: f64, b: f64| Layer::new(Matrix::new(1, 1, vec![w]).unwrap(), vec![b]).unwrap();
        let chain = StructuredNetwork::new(vec![scalar(1.0, 0.0), scalar(1.0, 0.0)]).unwrap();
        assert_eq!(to_vector(&chain).theta(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(StructuredNetwork::from_params(&to_vector(&chain)), chain);
    }

    #[test]
    fn structured_single_layer_skips_activation() {
        let w = Matrix::from_rows(&[[-1.0, 2.0]]).unwrap();
        let net = StructuredNetwork::new(vec![Layer::new(w, vec![-10.0]).unwrap()]).unwrap();
        assert_eq!(realize_structured(&net, Activation::Rect, &[1.0, 1.0]).unwrap(), vec![-9.0]);
        assert!(realize_structured(&net, Activation::Rect, &[1.0]).is_err());
    }

    #[test]
    fn structured_rejects_broken_chain() {
        let a = Layer::new(Matrix::zeros(3, 2), vec![0.0; 3]).unwrap();
        let b = Layer::new(Matrix::zeros(1, 2), vec![0.0]).unwrap();
        assert!(StructuredNetwork::new(vec![a, b]).is_err());
        assert!(StructuredNetwork::new(vec![]).is_err());
        assert!(Layer::new(Matrix::zeros(2, 2), vec![0.0]).is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(inf_norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(inf_norm(&[-3.0, 2.0]).unwrap(), 3.0);
        assert!(matches!(inf_norm(&[]), Err(Error::Domain(_))));
        assert_eq!(matrix_inf_operator_norm(&Matrix::identity(3)), 1.0);
        let w = Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.0]]).unwrap();
        // both rows sum to 3 in absolute value
        assert_eq!(matrix_inf_operator_norm(&w), 3.0);
        assert_eq!(matrix_inf_operator_norm(&Matrix::zeros(2, 3)), 0.0);
    }

    #[test]
    fn operator_norm_matches_sign_vector_enumeration() {
        // sup over v != 0 of |Wv|/|v| is attained on {-1, 1}^n
        let w = Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.0]]).unwrap();
        let mut best: f64 = 0.0;
        for mask in 0..4u32 {
            let v: Vec<f64> = (0..2).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
            best = best.max(inf_norm(&w.mul_vec(&v).unwrap()).unwrap());
        }
        assert_eq!(best, 3.0);
        assert_eq!(best, matrix_inf_operator_norm(&w));
    }

    #[test]
    fn architecture_json_validates() {
        let a: Architecture = serde_json::from_str("[2,3,1]").unwrap();
        assert_eq!(a.dims(), &[2, 3, 1]);
        assert!(serde_json::from_str::<Architecture>("[2]").is_err());
        assert!(serde_json::from_str::<Architecture>("[2,0,1]").is_err());
    }
}
