//! The trainable spectral model: per-channel polynomial filters over the
//! orthonormal Jacobi basis composed with a linear or MLP feature
//! transform. Forward, losses, and exact reverse-mode gradients for
//! (α, θ) plus forward-over-reverse gradients for the basis exponents
//! (a, b) via the dual tangents of the basis application.

use crate::graphcore::SparseMatrix;
use crate::jacobi::{apply_orthonormal_basis, BasisParams, BasisSignals, JacobiError};
use crate::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what}: got {got}, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("loss mask is empty")]
    EmptyMask,
    #[error("stale forward cache: model was modified after the forward pass")]
    StaleCache,
    #[error("filter fitting works on single-channel signals, got {channels}")]
    MultiChannelFilterFit { channels: usize },
    #[error("coefficient scale factor must be > 1, got {q}")]
    BadScaleFactor { q: f64 },
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
}

/// Feature transform t_θ: identity (filter fitting), linear, or a
/// one-hidden-layer ReLU MLP.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Linear {
        w: Mat,
        bias: Vec<f64>,
    },
    Mlp {
        w1: Mat,
        b1: Vec<f64>,
        w2: Mat,
        b2: Vec<f64>,
    },
}

impl Transform {
    /// Uniform fan-in initialization: entries of each weight matrix drawn
    /// from U(−1/√fan_in, 1/√fan_in), biases zero.
    pub fn linear_init(input_dim: usize, output_dim: usize, rng: &mut impl Rng) -> Self {
        Transform::Linear {
            w: init_weights(input_dim, output_dim, rng),
            bias: vec![0.0; output_dim],
        }
    }

    pub fn mlp_init(input_dim: usize, hidden: usize, output_dim: usize, rng: &mut impl Rng) -> Self {
        Transform::Mlp {
            w1: init_weights(input_dim, hidden, rng),
            b1: vec![0.0; hidden],
            w2: init_weights(hidden, output_dim, rng),
            b2: vec![0.0; output_dim],
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Linear { .. } => "linear",
            Transform::Mlp { .. } => "mlp",
        }
    }

    /// Output channel count for a given input width (None for identity,
    /// which passes the input through).
    fn output_dim(&self) -> Option<usize> {
        match self {
            Transform::Identity => None,
            Transform::Linear { w, .. } => Some(w.cols()),
            Transform::Mlp { w2, .. } => Some(w2.cols()),
        }
    }

    fn input_dim(&self) -> Option<usize> {
        match self {
            Transform::Identity => None,
            Transform::Linear { w, .. } => Some(w.rows()),
            Transform::Mlp { w1, .. } => Some(w1.rows()),
        }
    }
}

fn init_weights(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    let bound = 1.0 / (rows as f64).sqrt();
    let mut w = Mat::zeros(rows, cols);
    for v in w.data_mut() {
        *v = rng.random_range(-bound..bound);
    }
    w
}

/// Full trainable state: basis exponents, per-channel filter
/// coefficients α ((K+1)×c), and the feature transform.
#[derive(Clone, Debug)]
pub struct FilterModel {
    basis: BasisParams,
    alpha: Mat,
    transform: Transform,
    dropout_rate: f64,
    train_ab: bool,
    nonce: u64,
}

impl FilterModel {
    /// Builds a model with the identity-like coefficient start:
    /// α[0][·] = 1, all higher orders 0.
    pub fn new(
        basis: BasisParams,
        channels: usize,
        transform: Transform,
        dropout_rate: f64,
        train_ab: bool,
    ) -> Result<Self, ModelError> {
        if let Some(out) = transform.output_dim() {
            if out != channels {
                return Err(ModelError::ShapeMismatch {
                    what: "transform output channels",
                    got: out,
                    expected: channels,
                });
            }
        }
        assert!((0.0..1.0).contains(&dropout_rate), "dropout rate in [0, 1)");
        let mut alpha = Mat::zeros(basis.len(), channels);
        for j in 0..channels {
            alpha[(0, j)] = 1.0;
        }
        Ok(FilterModel {
            basis,
            alpha,
            transform,
            dropout_rate,
            train_ab,
            nonce: 0,
        })
    }

    pub fn basis(&self) -> &BasisParams {
        &self.basis
    }

    pub fn alpha(&self) -> &Mat {
        &self.alpha
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn train_ab(&self) -> bool {
        self.train_ab
    }

    pub fn channels(&self) -> usize {
        self.alpha.cols()
    }

    pub fn set_alpha(&mut self, alpha: Mat) {
        assert_eq!(alpha.rows(), self.basis.len());
        assert_eq!(alpha.cols(), self.alpha.cols());
        self.alpha = alpha;
        self.nonce += 1;
    }

    pub fn set_transform(&mut self, transform: Transform) {
        self.transform = transform;
        self.nonce += 1;
    }

    /// Mutable views of α and θ storage, in the fixed order the
    /// optimizer walks them (α, then transform weights/biases).
    /// Invalidates outstanding forward caches.
    pub fn main_param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.nonce += 1;
        let mut slices = vec![self.alpha.data_mut()];
        match &mut self.transform {
            Transform::Identity => {}
            Transform::Linear { w, bias } => {
                slices.push(w.data_mut());
                slices.push(bias.as_mut_slice());
            }
            Transform::Mlp { w1, b1, w2, b2 } => {
                slices.push(w1.data_mut());
                slices.push(b1.as_mut_slice());
                slices.push(w2.data_mut());
                slices.push(b2.as_mut_slice());
            }
        }
        slices
    }

    /// Immutable counterpart of [`Self::main_param_slices_mut`].
    pub fn main_param_slices(&self) -> Vec<&[f64]> {
        let mut slices = vec![self.alpha.data()];
        match &self.transform {
            Transform::Identity => {}
            Transform::Linear { w, bias } => {
                slices.push(w.data());
                slices.push(bias.as_slice());
            }
            Transform::Mlp { w1, b1, w2, b2 } => {
                slices.push(w1.data());
                slices.push(b1.as_slice());
                slices.push(w2.data());
                slices.push(b2.as_slice());
            }
        }
        slices
    }

    /// Updates (a, b), projecting into the feasibility box.
    pub fn set_ab(&mut self, a: f64, b: f64) {
        self.basis.a = a;
        self.basis.b = b;
        self.basis.project_into_box();
        self.nonce += 1;
    }

    /// Per-channel squared filter RMS norm: Σ_k α[k][j]². Because the
    /// basis is orthonormal this equals the quadrature norm
    /// ⟨g_α, g_α⟩_w of the learned filter.
    pub fn filter_rms_norm_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.alpha.cols()];
        for k in 0..self.alpha.rows() {
            for (j, acc) in out.iter_mut().enumerate() {
                acc_add_sq(acc, self.alpha[(k, j)]);
            }
        }
        out
    }

    /// The learned filter value g_α(μ) per channel at a point μ of the
    /// propagation-matrix spectrum.
    pub fn filter_values_at(&self, mu: f64) -> Result<Vec<f64>, ModelError> {
        let basis = crate::jacobi::eval_orthonormal_basis_scalar(&self.basis, mu)?;
        let mut out = vec![0.0; self.alpha.cols()];
        for (k, &pk) in basis.iter().enumerate() {
            for (j, acc) in out.iter_mut().enumerate() {
                *acc += self.alpha[(k, j)] * pk;
            }
        }
        Ok(out)
    }

    /// Returns a copy with every coefficient multiplied by q > 1; θ and
    /// (a, b) are untouched. Output logits scale exactly by q because
    /// the filter stage is linear in α.
    pub fn scale_coefficients(&self, q: f64) -> Result<FilterModel, ModelError> {
        if !(q > 1.0) {
            return Err(ModelError::BadScaleFactor { q });
        }
        let mut scaled = self.clone();
        scaled.alpha.scale(q);
        scaled.nonce += 1;
        Ok(scaled)
    }
}

fn acc_add_sq(acc: &mut f64, v: f64) {
    *acc += v * v;
}

/// Cache of one transform forward pass, retained for backward.
#[derive(Clone, Debug)]
pub struct TransformCache {
    /// Input after input-site dropout (Linear and Mlp).
    x_dropped: Option<Mat>,
    /// MLP pre-activations (for the ReLU mask).
    z1: Option<Mat>,
    /// MLP hidden activations after ReLU and dropout.
    a1_dropped: Option<Mat>,
    /// Dropout scale factors applied to the hidden layer.
    hidden_mask: Option<Mat>,
}

/// Inverted-scaling dropout: entries are zeroed with probability `rate`
/// and survivors are scaled by 1/(1−rate), so evaluation needs no
/// rescaling. Returns the applied mask of scale factors.
fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut impl Rng) -> Mat {
    let keep_scale = 1.0 / (1.0 - rate);
    let mut mask = Mat::zeros(rows, cols);
    for v in mask.data_mut() {
        *v = if rng.random::<f64>() < rate { 0.0 } else { keep_scale };
    }
    mask
}

fn hadamard(x: &Mat, mask: &Mat) -> Mat {
    let mut out = x.clone();
    for (v, m) in out.data_mut().iter_mut().zip(mask.data().iter()) {
        *v *= m;
    }
    out
}

fn add_bias_rows(m: &mut Mat, bias: &[f64]) {
    for r in 0..m.rows() {
        for (v, b) in m.row_mut(r).iter_mut().zip(bias.iter()) {
            *v += b;
        }
    }
}

/// Applies the feature transform. Dropout fires only in train mode at
/// the input of each affine layer.
pub fn transform_forward(
    model: &FilterModel,
    x: &Mat,
    train_mode: bool,
    rng: &mut impl Rng,
) -> Result<(Mat, TransformCache), ModelError> {
    if let Some(dim) = model.transform.input_dim() {
        if x.cols() != dim {
            return Err(ModelError::ShapeMismatch {
                what: "feature columns",
                got: x.cols(),
                expected: dim,
            });
        }
    }
    let drop = train_mode && model.dropout_rate > 0.0;
    match &model.transform {
        Transform::Identity => Ok((
            x.clone(),
            TransformCache { x_dropped: None, z1: None, a1_dropped: None, hidden_mask: None },
        )),
        Transform::Linear { w, bias } => {
            let x_used = if drop {
                hadamard(x, &dropout_mask(x.rows(), x.cols(), model.dropout_rate, rng))
            } else {
                x.clone()
            };
            let mut h = x_used.matmul(w);
            add_bias_rows(&mut h, bias);
            Ok((
                h,
                TransformCache {
                    x_dropped: Some(x_used),
                    z1: None,
                    a1_dropped: None,
                    hidden_mask: None,
                },
            ))
        }
        Transform::Mlp { w1, b1, w2, b2 } => {
            let x_used = if drop {
                hadamard(x, &dropout_mask(x.rows(), x.cols(), model.dropout_rate, rng))
            } else {
                x.clone()
            };
            let mut z1 = x_used.matmul(w1);
            add_bias_rows(&mut z1, b1);
            let mut a1 = z1.clone();
            for v in a1.data_mut() {
                *v = v.max(0.0);
            }
            let (a1_used, hidden_mask) = if drop {
                let mask = dropout_mask(a1.rows(), a1.cols(), model.dropout_rate, rng);
                (hadamard(&a1, &mask), Some(mask))
            } else {
                (a1, None)
            };
            let mut h = a1_used.matmul(w2);
            add_bias_rows(&mut h, b2);
            Ok((
                h,
                TransformCache {
                    x_dropped: Some(x_used),
                    z1: Some(z1),
                    a1_dropped: Some(a1_used),
                    hidden_mask,
                },
            ))
        }
    }
}

/// Everything backward needs from one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    nonce: u64,
    h: Mat,
    transform: TransformCache,
    basis: BasisSignals,
}

impl ForwardCache {
    /// The filtered per-degree signals B_k·t_θ(X).
    pub fn basis_signals(&self) -> &BasisSignals {
        &self.basis
    }
}

/// Full model forward: Ŷ[:, j] = Σ_k α[k][j] · (P*_k(P) · t_θ(X))[:, j].
pub fn gnn_forward(
    model: &FilterModel,
    pmat: &SparseMatrix,
    x: &Mat,
    train_mode: bool,
    rng: &mut impl Rng,
) -> Result<(Mat, ForwardCache), ModelError> {
    let (h, tcache) = transform_forward(model, x, train_mode, rng)?;
    if h.cols() != model.alpha.cols() {
        return Err(ModelError::ShapeMismatch {
            what: "filter channels",
            got: h.cols(),
            expected: model.alpha.cols(),
        });
    }
    let basis = apply_orthonormal_basis(pmat, &h, &model.basis, model.train_ab)?;
    let mut yhat = Mat::zeros(h.rows(), h.cols());
    for (k, bk) in basis.values.iter().enumerate() {
        for v in 0..yhat.rows() {
            for j in 0..yhat.cols() {
                yhat[(v, j)] += model.alpha[(k, j)] * bk[(v, j)];
            }
        }
    }
    let cache = ForwardCache { nonce: model.nonce, h, transform: tcache, basis };
    Ok((yhat, cache))
}

/// Gradient of the data loss with respect to every trainable parameter.
/// Frozen parameter groups keep zero entries.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub d_alpha: Mat,
    pub d_transform: TransformGradients,
    pub d_a: f64,
    pub d_b: f64,
}

#[derive(Clone, Debug)]
pub enum TransformGradients {
    Identity,
    Linear {
        d_w: Mat,
        d_bias: Vec<f64>,
    },
    Mlp {
        d_w1: Mat,
        d_b1: Vec<f64>,
        d_w2: Mat,
        d_b2: Vec<f64>,
    },
}

impl Gradients {
    pub fn zeros_like(model: &FilterModel) -> Gradients {
        let d_transform = match &model.transform {
            Transform::Identity => TransformGradients::Identity,
            Transform::Linear { w, bias } => TransformGradients::Linear {
                d_w: Mat::zeros(w.rows(), w.cols()),
                d_bias: vec![0.0; bias.len()],
            },
            Transform::Mlp { w1, b1, w2, b2 } => TransformGradients::Mlp {
                d_w1: Mat::zeros(w1.rows(), w1.cols()),
                d_b1: vec![0.0; b1.len()],
                d_w2: Mat::zeros(w2.rows(), w2.cols()),
                d_b2: vec![0.0; b2.len()],
            },
        };
        Gradients {
            d_alpha: Mat::zeros(model.alpha.rows(), model.alpha.cols()),
            d_transform,
            d_a: 0.0,
            d_b: 0.0,
        }
    }

    /// Slices aligned with [`FilterModel::main_param_slices_mut`].
    pub fn main_slices(&self) -> Vec<&[f64]> {
        let mut slices = vec![self.d_alpha.data()];
        match &self.d_transform {
            TransformGradients::Identity => {}
            TransformGradients::Linear { d_w, d_bias } => {
                slices.push(d_w.data());
                slices.push(d_bias.as_slice());
            }
            TransformGradients::Mlp { d_w1, d_b1, d_w2, d_b2 } => {
                slices.push(d_w1.data());
                slices.push(d_b1.as_slice());
                slices.push(d_w2.data());
                slices.push(d_b2.as_slice());
            }
        }
        slices
    }

    pub fn main_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut slices = vec![self.d_alpha.data_mut()];
        match &mut self.d_transform {
            TransformGradients::Identity => {}
            TransformGradients::Linear { d_w, d_bias } => {
                slices.push(d_w.data_mut());
                slices.push(d_bias.as_mut_slice());
            }
            TransformGradients::Mlp { d_w1, d_b1, d_w2, d_b2 } => {
                slices.push(d_w1.data_mut());
                slices.push(d_b1.as_mut_slice());
                slices.push(d_w2.data_mut());
                slices.push(d_b2.as_mut_slice());
            }
        }
        slices
    }

    pub fn is_finite(&self) -> bool {
        self.d_a.is_finite()
            && self.d_b.is_finite()
            && self.main_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Exact reverse-mode gradients for α and θ; (a, b) gradients pair the
/// upstream with the cached forward tangents (forward-over-reverse).
/// `pmat` must be the matrix the forward ran with.
pub fn backward(
    model: &FilterModel,
    pmat: &SparseMatrix,
    cache: &ForwardCache,
    upstream: &Mat,
) -> Result<Gradients, ModelError> {
    if cache.nonce != model.nonce {
        return Err(ModelError::StaleCache);
    }
    let n = cache.h.rows();
    let c = cache.h.cols();
    if upstream.rows() != n || upstream.cols() != c {
        return Err(ModelError::ShapeMismatch {
            what: "upstream rows",
            got: upstream.rows() * upstream.cols().max(1),
            expected: n * c,
        });
    }
    let mut grads = Gradients::zeros_like(model);

    // dα[k][j] = Σ_v upstream[v,j] · (B_k H)[v,j].
    for (k, bk) in cache.basis.values.iter().enumerate() {
        for v in 0..n {
            for j in 0..c {
                grads.d_alpha[(k, j)] += upstream[(v, j)] * bk[(v, j)];
            }
        }
    }

    // d(a, b) from the cached tangent signals:
    // dL/da = Σ_kvj upstream[v,j] · α[k][j] · (∂(B_k H)/∂a)[v,j].
    if model.train_ab {
        let tangents = cache
            .basis
            .tangents
            .as_ref()
            .expect("train_ab forward caches tangents");
        for k in 0..cache.basis.values.len() {
            let (ta, tb) = (&tangents.da[k], &tangents.db[k]);
            for v in 0..n {
                for j in 0..c {
                    let u = upstream[(v, j)] * model.alpha[(k, j)];
                    grads.d_a += u * ta[(v, j)];
                    grads.d_b += u * tb[(v, j)];
                }
            }
        }
    }

    // dL/dH[:, j] = Σ_k α[k][j] · (B_k upstream)[:, j]; B_k is symmetric
    // (a polynomial of the symmetric P), so B_kᵀ = B_k.
    let basis_g = apply_orthonormal_basis(pmat, upstream, &model.basis, false)?;
    let mut d_h = Mat::zeros(n, c);
    for (k, gk) in basis_g.values.iter().enumerate() {
        for v in 0..n {
            for j in 0..c {
                d_h[(v, j)] += model.alpha[(k, j)] * gk[(v, j)];
            }
        }
    }

    match (&model.transform, &mut grads.d_transform) {
        (Transform::Identity, TransformGradients::Identity) => {}
        (Transform::Linear { .. }, TransformGradients::Linear { d_w, d_bias }) => {
            let x_used = cache.transform.x_dropped.as_ref().expect("linear cache");
            *d_w = x_used.t_matmul(&d_h);
            col_sums_into(&d_h, d_bias);
        }
        (Transform::Mlp { w2, .. }, TransformGradients::Mlp { d_w1, d_b1, d_w2, d_b2 }) => {
            let x_used = cache.transform.x_dropped.as_ref().expect("mlp cache");
            let z1 = cache.transform.z1.as_ref().expect("mlp cache");
            let a1_used = cache.transform.a1_dropped.as_ref().expect("mlp cache");
            *d_w2 = a1_used.t_matmul(&d_h);
            col_sums_into(&d_h, d_b2);
            let mut d_a1 = d_h.matmul_t(w2);
            if let Some(mask) = &cache.transform.hidden_mask {
                d_a1 = hadamard(&d_a1, mask);
            }
            // ReLU gate.
            for (v, &z) in d_a1.data_mut().iter_mut().zip(z1.data().iter()) {
                if z <= 0.0 {
                    *v = 0.0;
                }
            }
            *d_w1 = x_used.t_matmul(&d_a1);
            col_sums_into(&d_a1, d_b1);
        }
        _ => unreachable!("gradient layout mirrors the transform"),
    }

    Ok(grads)
}

fn col_sums_into(m: &Mat, out: &mut [f64]) {
    out.fill(0.0);
    for r in 0..m.rows() {
        for (j, v) in m.row(r).iter().enumerate() {
            out[j] += v;
        }
    }
}

/// Mean cross-entropy over the masked nodes, log-sum-exp stabilized.
pub fn cross_entropy(yhat: &Mat, labels: &[usize], mask: &[usize]) -> Result<f64, ModelError> {
    Ok(cross_entropy_with_grad(yhat, labels, mask)?.0)
}

/// Cross-entropy plus dL/dŶ (softmax − onehot, averaged over the mask).
pub fn cross_entropy_with_grad(
    yhat: &Mat,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, Mat), ModelError> {
    if mask.is_empty() {
        return Err(ModelError::EmptyMask);
    }
    if labels.len() != yhat.rows() {
        return Err(ModelError::ShapeMismatch {
            what: "label count",
            got: labels.len(),
            expected: yhat.rows(),
        });
    }
    let inv = 1.0 / mask.len() as f64;
    let mut grad = Mat::zeros(yhat.rows(), yhat.cols());
    let mut loss = 0.0;
    for &v in mask {
        loss += node_cross_entropy_into(yhat, labels[v], v, Some((&mut grad, inv)));
    }
    Ok((loss * inv, grad))
}

/// Per-node CE terms −log softmax(Ŷ_v)[y_v] for each masked node.
pub fn per_node_cross_entropy(yhat: &Mat, labels: &[usize], mask: &[usize]) -> Vec<f64> {
    mask.iter()
        .map(|&v| node_cross_entropy_into(yhat, labels[v], v, None))
        .collect()
}

fn node_cross_entropy_into(
    yhat: &Mat,
    label: usize,
    v: usize,
    grad: Option<(&mut Mat, f64)>,
) -> f64 {
    let row = yhat.row(v);
    let row_max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut denom = 0.0;
    for &x in row {
        denom += (x - row_max).exp();
    }
    let log_denom = denom.ln();
    if let Some((g, scale)) = grad {
        for (j, &x) in row.iter().enumerate() {
            let softmax = (x - row_max).exp() / denom;
            let onehot = if j == label { 1.0 } else { 0.0 };
            g[(v, j)] += (softmax - onehot) * scale;
        }
    }
    log_denom - (row[label] - row_max)
}

/// (1/n)·‖ŷ − y‖² for single-channel signals, with its gradient.
pub fn squared_error_with_grad(yhat: &Mat, target: &Mat) -> Result<(f64, Mat), ModelError> {
    if yhat.cols() != 1 {
        return Err(ModelError::MultiChannelFilterFit { channels: yhat.cols() });
    }
    if target.rows() != yhat.rows() || target.cols() != 1 {
        return Err(ModelError::ShapeMismatch {
            what: "target rows",
            got: target.rows(),
            expected: yhat.rows(),
        });
    }
    let n = yhat.rows() as f64;
    let mut grad = Mat::zeros(yhat.rows(), 1);
    let mut loss = 0.0;
    for v in 0..yhat.rows() {
        let diff = yhat[(v, 0)] - target[(v, 0)];
        loss += diff * diff;
        grad[(v, 0)] = 2.0 * diff / n;
    }
    Ok((loss / n, grad))
}

/// The filter-fitting objective: mean squared error of the model output
/// (identity transform, no dropout) against a target signal.
pub fn squared_filter_loss(
    model: &FilterModel,
    pmat: &SparseMatrix,
    x_in: &Mat,
    y_target: &Mat,
) -> Result<f64, ModelError> {
    if x_in.cols() != 1 {
        return Err(ModelError::MultiChannelFilterFit { channels: x_in.cols() });
    }
    // Eval mode never samples, so any seeded rng will do.
    let mut rng = eval_rng();
    let (yhat, _) = gnn_forward(model, pmat, x_in, false, &mut rng)?;
    Ok(squared_error_with_grad(&yhat, y_target)?.0)
}

/// Throwaway rng for eval-mode forwards (dropout is off, nothing is drawn).
pub fn eval_rng() -> impl Rng {
    use rand::SeedableRng;
    rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(0)
}

/// JSON checkpoint: basis order and exponents, coefficients in row-major
/// order, the transform with its shapes, and the hash of the exact
/// config that produced the model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub alpha_rows: usize,
    pub alpha_cols: usize,
    pub alpha: Vec<f64>,
    pub mode: String,
    pub theta: Transform,
    pub dropout_rate: f64,
    pub train_ab: bool,
    pub config_hash: String,
}

impl FilterModel {
    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint {
            k: self.basis.max_degree,
            a: self.basis.a,
            b: self.basis.b,
            alpha_rows: self.alpha.rows(),
            alpha_cols: self.alpha.cols(),
            alpha: self.alpha.data().to_vec(),
            mode: self.transform.mode_name().into(),
            theta: self.transform.clone(),
            dropout_rate: self.dropout_rate,
            train_ab: self.train_ab,
            config_hash: config_hash.into(),
        }
    }

    pub fn from_checkpoint(cp: &Checkpoint) -> Result<FilterModel, ModelError> {
        let basis = BasisParams::new(cp.k, cp.a, cp.b)?;
        if cp.alpha.len() != cp.alpha_rows * cp.alpha_cols || cp.alpha_rows != cp.k + 1 {
            return Err(ModelError::ShapeMismatch {
                what: "checkpoint alpha length",
                got: cp.alpha.len(),
                expected: (cp.k + 1) * cp.alpha_cols,
            });
        }
        let mut model = FilterModel::new(
            basis,
            cp.alpha_cols,
            cp.theta.clone(),
            cp.dropout_rate,
            cp.train_ab,
        )?;
        model.set_alpha(Mat::from_vec(cp.alpha_rows, cp.alpha_cols, cp.alpha.clone()));
        Ok(model)
    }
}
