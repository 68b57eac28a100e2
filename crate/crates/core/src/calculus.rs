//! Structural operations on networks: composition, parallelization, linear
//! maps, ReLU identity networks, powers, depth extension, embedding into a
//! larger architecture, and the exact maximum networks.

use crate::error::{contract, shape, Result};
use crate::matrix::Matrix;
use crate::net::{to_vector, Architecture, Layer, StructuredNetwork, VectorizedParams};

/// `outer • inner`: a network whose ReLU realization is
/// `realize(outer) ∘ realize(inner)`.
///
/// The last layer of `inner` and the first layer of `outer` merge into the
/// single seam layer `(W₁ 𝔚, W₁ 𝔅 + B₁)`, so the depth of the result is
/// `depth(outer) + depth(inner) - 1`.
pub fn compose(outer: &StructuredNetwork, inner: &StructuredNetwork) -> Result<StructuredNetwork> {
    if outer.in_dim() != inner.out_dim() {
        return Err(shape(format!(
            "cannot compose: outer network takes {} inputs, inner network produces {}",
            outer.in_dim(),
            inner.out_dim()
        )));
    }
    let (inner_last, inner_front) = inner.layers().split_last().expect("non-empty");
    let (outer_first, outer_rest) = outer.layers().split_first().expect("non-empty");

    let seam_w = outer_first.weights.matmul(&inner_last.weights)?;
    let mut seam_b = outer_first.weights.mul_vec(&inner_last.bias)?;
    for (b, b1) in seam_b.iter_mut().zip(&outer_first.bias) {
        *b += b1;
    }

    let mut layers = Vec::with_capacity(inner.depth() + outer.depth() - 1);
    layers.extend_from_slice(inner_front);
    layers.push(Layer::new(seam_w, seam_b)?);
    layers.extend_from_slice(outer_rest);
    StructuredNetwork::new(layers)
}

/// Block-diagonal stacking of equal-depth networks. The realization maps
/// `(x_1, ..., x_n)` to `(realize(net_1)(x_1), ..., realize(net_n)(x_n))`.
pub fn parallelize(nets: &[StructuredNetwork]) -> Result<StructuredNetwork> {
    let first = nets.first().ok_or_else(|| contract("parallelization of zero networks"))?;
    let depth = first.depth();
    if let Some(bad) = nets.iter().find(|n| n.depth() != depth) {
        return Err(contract(format!(
            "parallelization needs equal depths, got {depth} and {}",
            bad.depth()
        )));
    }
    let layers = (0..depth)
        .map(|k| {
            let rows: usize = nets.iter().map(|n| n.layers()[k].out_dim()).sum();
            let cols: usize = nets.iter().map(|n| n.layers()[k].in_dim()).sum();
            let mut w = Matrix::zeros(rows, cols);
            let mut bias = Vec::with_capacity(rows);
            let (mut r, mut c) = (0, 0);
            for n in nets {
                let layer = &n.layers()[k];
                w.put_block(r, c, &layer.weights);
                bias.extend_from_slice(&layer.bias);
                r += layer.out_dim();
                c += layer.in_dim();
            }
            Layer::new(w, bias)
        })
        .collect::<Result<Vec<_>>>()?;
    StructuredNetwork::new(layers)
}

/// The single-layer network `(W, 0)`.
pub fn matrix_net(w: Matrix) -> StructuredNetwork {
    let bias = vec![0.0; w.rows()];
    StructuredNetwork::new(vec![Layer { weights: w, bias }]).expect("single layer")
}

/// The ReLU identity network on `R^d`, dims `(d, 2d, d)`, realizing
/// `x = max{x, 0} - max{-x, 0}` coordinatewise.
pub fn identity_net(d: usize) -> Result<StructuredNetwork> {
    if d == 0 {
        return Err(contract("identity network dimension must be positive"));
    }
    let one = StructuredNetwork::new(vec![
        Layer::new(Matrix::new(2, 1, vec![1.0, -1.0])?, vec![0.0, 0.0])?,
        Layer::new(Matrix::new(1, 2, vec![1.0, -1.0])?, vec![0.0])?,
    ])?;
    parallelize(&vec![one; d])
}

/// `net^{•n}`: `n = 0` gives the single identity-matrix layer, `n >= 1`
/// gives `net • net^{•(n-1)}`.
pub fn power(net: &StructuredNetwork, n: usize) -> Result<StructuredNetwork> {
    if net.in_dim() != net.out_dim() {
        return Err(contract(format!(
            "powers need equal input and output dimension, got {} and {}",
            net.in_dim(),
            net.out_dim()
        )));
    }
    let mut acc = matrix_net(Matrix::identity(net.out_dim()));
    for _ in 0..n {
        acc = compose(net, &acc)?;
    }
    Ok(acc)
}

/// Pads `net` to depth `target_depth` by composing powers of `psi` after it.
/// With `psi = identity_net(out_dim)` the ReLU realization is unchanged.
pub fn extend(
    target_depth: usize,
    psi: &StructuredNetwork,
    net: &StructuredNetwork,
) -> Result<StructuredNetwork> {
    if net.depth() > target_depth {
        return Err(contract(format!(
            "cannot extend a network of depth {} to depth {target_depth}",
            net.depth()
        )));
    }
    if net.out_dim() != psi.in_dim() {
        return Err(contract(format!(
            "extension network takes {} inputs but the network outputs {}",
            psi.in_dim(),
            net.out_dim()
        )));
    }
    compose(&power(psi, target_depth - net.depth())?, net)
}

/// Re-embeds a vectorized network into a deeper and wider architecture
/// without changing its (clipped) ReLU realization and without increasing
/// the maximum norm of the parameters beyond `max{1, |θ|∞}`.
///
/// The depth is padded with identity networks, each layer is widened with
/// zero rows and columns, and the result has exactly
/// `target.param_count()` entries.
///
/// Preconditions (with `l` the source and `𝔩` the target dims, `L ≤ 𝔏`):
/// `𝔩_0 = l_0`, `𝔩_𝔏 = l_L`, `𝔩_i ≥ l_i` for `i < L` and `𝔩_i ≥ 2 l_L`
/// for `L ≤ i < 𝔏`.
pub fn embed(params: &VectorizedParams, target: &Architecture) -> Result<VectorizedParams> {
    let src = params.arch().dims();
    let dst = target.dims();
    let (depth, target_depth) = (src.len() - 1, dst.len() - 1);
    let out = src[depth];
    if target_depth < depth {
        return Err(contract(format!(
            "target depth {target_depth} is smaller than source depth {depth}"
        )));
    }
    if dst[0] != src[0] || dst[target_depth] != out {
        return Err(contract(format!(
            "target {dst:?} must keep input dimension {} and output dimension {out}",
            src[0]
        )));
    }
    if let Some(i) = (1..depth).find(|&i| dst[i] < src[i]) {
        return Err(contract(format!(
            "target width {} at layer {i} is below source width {}",
            dst[i], src[i]
        )));
    }
    if let Some(i) = (depth..target_depth).find(|&i| dst[i] < 2 * out) {
        return Err(contract(format!(
            "target width {} at layer {i} is below twice the output dimension {out}",
            dst[i]
        )));
    }

    let net = StructuredNetwork::from_params(params);
    let deep = if target_depth > depth {
        extend(target_depth, &identity_net(out)?, &net)?
    } else {
        net
    };
    let layers = deep
        .layers()
        .iter()
        .enumerate()
        .map(|(k, layer)| {
            let mut w = Matrix::zeros(dst[k + 1], dst[k]);
            w.put_block(0, 0, &layer.weights);
            let mut bias = layer.bias.clone();
            bias.resize(dst[k + 1], 0.0);
            Layer::new(w, bias)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(to_vector(&StructuredNetwork::new(layers)?))
}

/// The two-input maximum network
/// `((1 -1; 0 1; 0 -1), 0), ((1 1 -1), 0)`.
fn max2() -> StructuredNetwork {
    StructuredNetwork::new(vec![
        Layer::new(
            Matrix::from_rows(&[[1.0, -1.0], [0.0, 1.0], [0.0, -1.0]]).expect("static"),
            vec![0.0; 3],
        )
        .expect("static"),
        Layer::new(Matrix::from_rows(&[[1.0, 1.0, -1.0]]).expect("static"), vec![0.0]).expect("static"),
    ])
    .expect("static")
}

/// ReLU network computing `max{x_1, ..., x_k}` exactly, with dims
/// `(k, 2k-1, 2k-3, ..., 3, 1)` and all parameters in `{-1, 0, 1}`.
///
/// Built by the recursion `φ_{k+1} = φ_k • P₂(φ₂, I_{k-1})`: each stage
/// folds the first two coordinates into their maximum and carries the rest
/// through identity networks.
pub fn max_net(k: usize) -> Result<StructuredNetwork> {
    if k < 2 {
        return Err(contract(format!("maximum network needs k >= 2, got {k}")));
    }
    let base = max2();
    let mut phi = base.clone();
    for j in 2..k {
        let stage = parallelize(&[base.clone(), identity_net(j - 1)?])?;
        phi = compose(&phi, &stage)?;
    }
    Ok(phi)
}
