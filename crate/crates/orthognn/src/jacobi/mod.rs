//! Orthonormal Jacobi polynomial basis: closed-form norms, the
//! three-term recurrence, and derivatives with respect to the weight
//! exponents (a, b).
//!
//! The weight function is w(λ) = (1−λ)^a (1+λ)^b on [−1, 1]. Each
//! orthogonal polynomial P_i is normalized by its closed-form norm
//! ‖P_i‖² = 2^{a+b+1} Γ(i+a+1) Γ(i+b+1) / ((2i+a+b+1) Γ(i+a+b+1) i!),
//! giving ⟨P*_i, P*_j⟩_w = δ_ij. Derivatives of the norms come from the
//! digamma function; derivatives of the recurrence itself flow through
//! [`DualReal`] arithmetic.

mod dual;
mod special;

pub use dual::DualReal;
pub use special::{digamma, log_gamma};

use crate::graphcore::{spmv_into, SparseMatrix};
use crate::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower edge of the trainable (a, b) box: −1 + εab with εab = 1e−3.
/// The weight stops being integrable at exactly −1.
pub const AB_MIN: f64 = -1.0 + 1e-3;
/// Upper edge of the trainable (a, b) box.
pub const AB_MAX: f64 = 2.0;

#[derive(Debug, Error)]
pub enum JacobiError {
    #[error("{func} requires a positive argument, got {x}")]
    NonPositiveArgument { func: &'static str, x: f64 },
    #[error("invalid Jacobi exponents a={a}, b={b}: both must be > -1 and finite")]
    InvalidParams { a: f64, b: f64 },
    #[error("basis evaluation point {x} lies outside [-1, 1]")]
    PointOutsideDomain { x: f64 },
    #[error("signal has {got} rows but the propagation matrix is {expected}x{expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Maximum degree K plus the trainable weight exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub max_degree: usize,
    pub a: f64,
    pub b: f64,
}

impl BasisParams {
    pub fn new(max_degree: usize, a: f64, b: f64) -> Result<Self, JacobiError> {
        if !(a > -1.0 && b > -1.0 && a.is_finite() && b.is_finite()) {
            return Err(JacobiError::InvalidParams { a, b });
        }
        Ok(BasisParams { max_degree, a, b })
    }

    /// Number of basis polynomials, K + 1.
    pub fn len(&self) -> usize {
        self.max_degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Clamp (a, b) into the trainable box [AB_MIN, AB_MAX]. Applied
    /// after every optimizer step.
    pub fn project_into_box(&mut self) {
        self.a = self.a.clamp(AB_MIN, AB_MAX);
        self.b = self.b.clamp(AB_MIN, AB_MAX);
    }
}

/// ln ‖P_i‖² together with its (a, b) tangents.
///
/// For i = 0 the tabulated formula degenerates (the product
/// (a+b+1)·Γ(a+b+1) is 0·∞ at a+b = −1), so the Beta form
/// 2^{a+b+1} B(a+1, b+1) = 2^{a+b+1} Γ(a+1) Γ(b+1) / Γ(a+b+2)
/// is used instead; it is the analytic limit and keeps the Chebyshev
/// corner a = b = −1/2 finite.
fn log_norm_sq_dual(i: usize, a: f64, b: f64) -> DualReal {
    let ln2 = std::f64::consts::LN_2;
    if i == 0 {
        let value = (a + b + 1.0) * ln2 + lg(a + 1.0) + lg(b + 1.0) - lg(a + b + 2.0);
        let da = ln2 + dg(a + 1.0) - dg(a + b + 2.0);
        let db = ln2 + dg(b + 1.0) - dg(a + b + 2.0);
        return DualReal::new(value, da, db);
    }
    let i_f = i as f64;
    let s = 2.0 * i_f + a + b + 1.0;
    let value = (a + b + 1.0) * ln2 + lg(i_f + a + 1.0) + lg(i_f + b + 1.0)
        - s.ln()
        - lg(i_f + a + b + 1.0)
        - lg(i_f + 1.0);
    let common = ln2 - 1.0 / s - dg(i_f + a + b + 1.0);
    DualReal::new(
        value,
        common + dg(i_f + a + 1.0),
        common + dg(i_f + b + 1.0),
    )
}

// The norm formulas only ever see arguments > 0 when a, b > -1, so the
// unwraps cannot fire for validated BasisParams.
fn lg(x: f64) -> f64 {
    special::log_gamma(x).expect("log_gamma argument must be positive")
}

fn dg(x: f64) -> f64 {
    special::digamma(x).expect("digamma argument must be positive")
}

/// Closed-form ‖P_i‖² from the norm table.
pub fn jacobi_norm_sq(i: usize, p: &BasisParams) -> f64 {
    log_norm_sq_dual(i, p.a, p.b).value.exp()
}

/// ‖P_i‖² as a dual number (value plus ∂/∂a, ∂/∂b).
pub fn jacobi_norm_sq_dual(i: usize, p: &BasisParams) -> DualReal {
    log_norm_sq_dual(i, p.a, p.b).exp()
}

/// Partials (∂/∂a, ∂/∂b) of ‖P_i‖², assembled from digamma terms:
/// ∂‖P_i‖²/∂a = ‖P_i‖² · ∂ ln ‖P_i‖²/∂a.
pub fn jacobi_norm_grad(i: usize, p: &BasisParams) -> (f64, f64) {
    let d = jacobi_norm_sq_dual(i, p);
    (d.da, d.db)
}

/// Coefficients of P_1(x) = c0 + c1·x.
fn p1_coeffs(a: DualReal, b: DualReal) -> (DualReal, DualReal) {
    let c0 = a * 0.5 - b * 0.5;
    let c1 = a * 0.5 + b * 0.5 + 1.0;
    (c0, c1)
}

/// Coefficients of the degree-i step (i ≥ 2):
/// P_i = (A·x + B)·P_{i−1} − C·P_{i−2}.
fn step_coeffs(i: usize, a: DualReal, b: DualReal) -> (DualReal, DualReal, DualReal) {
    let i_f = i as f64;
    let two_i_ab = a + b + 2.0 * i_f;
    let lead = two_i_ab - 1.0; // 2i + a + b − 1
    let denom = (a + b + i_f) * (two_i_ab - 2.0) * (2.0 * i_f);
    let coeff_a = lead * two_i_ab * (two_i_ab - 2.0) / denom;
    let coeff_b = lead * (a * a - b * b) / denom;
    let coeff_c = (a + (i_f - 1.0)) * (b + (i_f - 1.0)) * two_i_ab * 2.0 / denom;
    (coeff_a, coeff_b, coeff_c)
}

/// Orthonormal basis values P*_0(x) … P*_K(x) at a scalar point.
pub fn eval_orthonormal_basis_scalar(
    p: &BasisParams,
    x: f64,
) -> Result<Vec<f64>, JacobiError> {
    Ok(eval_orthonormal_basis_dual(p, x)?
        .into_iter()
        .map(|d| d.value)
        .collect())
}

/// Same evaluation with (a, b) tangents propagated through every
/// recurrence coefficient and through the norms.
pub fn eval_orthonormal_basis_dual(
    p: &BasisParams,
    x: f64,
) -> Result<Vec<DualReal>, JacobiError> {
    if x.abs() > 1.0 + 1e-12 || !x.is_finite() {
        return Err(JacobiError::PointOutsideDomain { x });
    }
    let a = DualReal::var_a(p.a);
    let b = DualReal::var_b(p.b);
    let xc = DualReal::constant(x);

    let mut out = Vec::with_capacity(p.len());
    // Unnormalized recurrence state; normalization happens per degree on
    // the way out, not inside the recurrence.
    let mut prev2 = DualReal::constant(1.0);
    out.push(prev2 / norm(0, p));
    if p.max_degree == 0 {
        return Ok(out);
    }
    let (c0, c1) = p1_coeffs(a, b);
    let mut prev1 = c0 + c1 * xc;
    out.push(prev1 / norm(1, p));
    for i in 2..=p.max_degree {
        let (ca, cb, cc) = step_coeffs(i, a, b);
        let current = (ca * xc + cb) * prev1 - cc * prev2;
        out.push(current / norm(i, p));
        prev2 = prev1;
        prev1 = current;
    }
    Ok(out)
}

fn norm(i: usize, p: &BasisParams) -> DualReal {
    jacobi_norm_sq_dual(i, p).sqrt()
}

/// The basis applied to a signal: values[k] = P*_k(P)·X, with optional
/// tangent signals ∂/∂a and ∂/∂b.
#[derive(Clone, Debug)]
pub struct BasisSignals {
    pub values: Vec<Mat>,
    pub tangents: Option<BasisTangents>,
}

#[derive(Clone, Debug)]
pub struct BasisTangents {
    pub da: Vec<Mat>,
    pub db: Vec<Mat>,
}

/// Evaluates B_k = P*_k(P)·X for k = 0..K using only sparse mat-vec
/// products (the three-term recurrence in matrix form — no dense powers
/// of P are ever formed). With `with_tangents` the derivative signals
/// ∂B_k/∂a and ∂B_k/∂b are carried alongside.
pub fn apply_orthonormal_basis(
    pmat: &SparseMatrix,
    x: &Mat,
    p: &BasisParams,
    with_tangents: bool,
) -> Result<BasisSignals, JacobiError> {
    if x.rows() != pmat.dim() {
        return Err(JacobiError::DimensionMismatch {
            got: x.rows(),
            expected: pmat.dim(),
        });
    }
    let a = DualReal::var_a(p.a);
    let b = DualReal::var_b(p.b);
    let count = p.len();
    let zero = || Mat::zeros(x.rows(), x.cols());

    let mut values = Vec::with_capacity(count);
    let mut tan_a: Vec<Mat> = Vec::new();
    let mut tan_b: Vec<Mat> = Vec::new();

    // Unnormalized matrix recurrence state and its tangents.
    let mut v_prev2 = x.clone();
    let mut v_prev1 = zero();
    let (mut ta_prev2, mut tb_prev2) = (zero(), zero());
    let (mut ta_prev1, mut tb_prev1) = (zero(), zero());

    let push = |vals: &mut Vec<Mat>,
                ta: &mut Vec<Mat>,
                tb: &mut Vec<Mat>,
                v: &Mat,
                va: &Mat,
                vb: &Mat,
                i: usize| {
        let nu = norm(i, p);
        vals.push(v.scaled(1.0 / nu.value));
        if with_tangents {
            // d(v/ν) = dv/ν − v·dν/ν².
            let inv = 1.0 / nu.value;
            let mut da = va.scaled(inv);
            da.add_scaled(v, -nu.da * inv * inv);
            ta.push(da);
            let mut db = vb.scaled(inv);
            db.add_scaled(v, -nu.db * inv * inv);
            tb.push(db);
        }
    };

    push(&mut values, &mut tan_a, &mut tan_b, &v_prev2, &ta_prev2, &tb_prev2, 0);

    if p.max_degree >= 1 {
        let (c0, c1) = p1_coeffs(a, b);
        let mut px = zero();
        spmv_into(pmat, x, &mut px);
        let mut v1 = x.scaled(c0.value);
        v1.add_scaled(&px, c1.value);
        let mut ta1 = x.scaled(c0.da);
        ta1.add_scaled(&px, c1.da);
        let mut tb1 = x.scaled(c0.db);
        tb1.add_scaled(&px, c1.db);
        push(&mut values, &mut tan_a, &mut tan_b, &v1, &ta1, &tb1, 1);
        v_prev1 = v1;
        ta_prev1 = ta1;
        tb_prev1 = tb1;
    }

    let mut scratch = zero();
    for i in 2..=p.max_degree {
        let (ca, cb, cc) = step_coeffs(i, a, b);
        spmv_into(pmat, &v_prev1, &mut scratch);
        let pv = &scratch;

        let mut v = pv.scaled(ca.value);
        v.add_scaled(&v_prev1, cb.value);
        v.add_scaled(&v_prev2, -cc.value);

        let (mut ta, mut tb) = (zero(), zero());
        if with_tangents {
            let mut pta = zero();
            spmv_into(pmat, &ta_prev1, &mut pta);
            ta = pta.scaled(ca.value);
            ta.add_scaled(pv, ca.da);
            ta.add_scaled(&ta_prev1, cb.value);
            ta.add_scaled(&v_prev1, cb.da);
            ta.add_scaled(&ta_prev2, -cc.value);
            ta.add_scaled(&v_prev2, -cc.da);

            let mut ptb = zero();
            spmv_into(pmat, &tb_prev1, &mut ptb);
            tb = ptb.scaled(ca.value);
            tb.add_scaled(pv, ca.db);
            tb.add_scaled(&tb_prev1, cb.value);
            tb.add_scaled(&v_prev1, cb.db);
            tb.add_scaled(&tb_prev2, -cc.value);
            tb.add_scaled(&v_prev2, -cc.db);
        }

        push(&mut values, &mut tan_a, &mut tan_b, &v, &ta, &tb, i);
        v_prev2 = std::mem::replace(&mut v_prev1, v);
        ta_prev2 = std::mem::replace(&mut ta_prev1, ta);
        tb_prev2 = std::mem::replace(&mut tb_prev1, tb);
    }

    let tangents = with_tangents.then_some(BasisTangents { da: tan_a, db: tan_b });
    Ok(BasisSignals { values, tangents })
}

#[cfg(test)]
mod tests;
