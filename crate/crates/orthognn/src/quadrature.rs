//! Gauss–Jacobi quadrature via Golub–Welsch: nodes are the eigenvalues
//! of the symmetric Jacobi tridiagonal matrix, weights come from the
//! first components of its eigenvectors. This is the independent oracle
//! for the weighted inner product ⟨f, g⟩ = ∫ f g (1−λ)^a (1+λ)^b dλ —
//! it never touches the closed-form norms it is used to check.

use crate::jacobi::{log_gamma, JacobiError};
use crate::tridiag::ql_implicit_shift;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("quadrature requires at least one node")]
    EmptyRule,
    #[error("invalid weight exponents a={a}, b={b}: both must be > -1 and finite")]
    InvalidParams { a: f64, b: f64 },
    #[error("tridiagonal QL iteration failed to converge within {max_iters} sweeps")]
    NonConvergence { max_iters: usize },
    #[error("constructed rule violates {what}")]
    DegenerateRule { what: &'static str },
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
}

/// Gauss–Jacobi rule: m nodes in (−1, 1) with positive weights, exact
/// for polynomials of degree ≤ 2m−1 against (1−λ)^a (1+λ)^b.
#[derive(Clone, Debug)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl QuadRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix together
/// with the first component of each unit eigenvector. Implicit-shift QL
/// with an iteration cap of 50·m sweeps.
pub fn tridiag_eig_symmetric(
    diag: &[f64],
    offdiag: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    let m = diag.len();
    if m == 0 {
        return Err(QuadratureError::EmptyRule);
    }
    assert_eq!(offdiag.len(), m - 1, "offdiag must have length m-1");

    let mut d = diag.to_vec();
    let mut e = Vec::with_capacity(m);
    e.extend_from_slice(offdiag);
    e.push(0.0);

    // First row of the accumulated eigenvector matrix: z[j] is the first
    // component of the eigenvector that ends up in column j.
    let mut z = vec![0.0; m];
    z[0] = 1.0;

    let max_iters = 50 * m;
    ql_implicit_shift(&mut d, &mut e, max_iters, |i, c, s| {
        let h = z[i + 1];
        z[i + 1] = s * z[i] + c * h;
        z[i] = c * z[i] - s * h;
    })
    .map_err(|()| QuadratureError::NonConvergence { max_iters })?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("eigenvalues are finite"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let first_components: Vec<f64> = order.iter().map(|&i| z[i]).collect();
    Ok((eigenvalues, first_components))
}

/// Total mass μ₀ = ∫ w dλ = 2^{a+b+1} B(a+1, b+1).
pub fn total_mass(a: f64, b: f64) -> Result<f64, QuadratureError> {
    if !(a > -1.0 && b > -1.0 && a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::InvalidParams { a, b });
    }
    let ln = (a + b + 1.0) * std::f64::consts::LN_2 + log_gamma(a + 1.0)?
        + log_gamma(b + 1.0)?
        - log_gamma(a + b + 2.0)?;
    Ok(ln.exp())
}

/// Builds the m-point Gauss–Jacobi rule for exponents (a, b).
pub fn gauss_jacobi(m: usize, a: f64, b: f64) -> Result<QuadRule, QuadratureError> {
    if m == 0 {
        return Err(QuadratureError::EmptyRule);
    }
    if !(a > -1.0 && b > -1.0 && a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::InvalidParams { a, b });
    }
    let mu0 = total_mass(a, b)?;

    // Recurrence coefficients of the monic Jacobi polynomials, arranged
    // as the symmetric tridiagonal (Jacobi) matrix.
    let mut diag = Vec::with_capacity(m);
    diag.push((b - a) / (a + b + 2.0));
    for k in 1..m {
        let k_f = k as f64;
        let s = 2.0 * k_f + a + b;
        diag.push((b * b - a * a) / (s * (s + 2.0)));
    }
    let mut offdiag = Vec::with_capacity(m.saturating_sub(1));
    for k in 1..m {
        let k_f = k as f64;
        let s = 2.0 * k_f + a + b;
        // (k+a+b)/(s−1) cancels to exactly 1 at k = 1; evaluating it
        // directly is 0/0 when a+b = −1 (the Chebyshev corner).
        let ratio = if k == 1 { 1.0 } else { (k_f + a + b) / (s - 1.0) };
        let inner = k_f * (k_f + a) * (k_f + b) * ratio / (s + 1.0);
        offdiag.push(2.0 / s * inner.sqrt());
    }

    let (nodes, first_components) = tridiag_eig_symmetric(&diag, &offdiag)?;
    let weights: Vec<f64> = first_components.iter().map(|&z| mu0 * z * z).collect();

    // Construction sanity: nodes confined and ordered, mass preserved.
    for pair in nodes.windows(2) {
        if pair[0] >= pair[1] {
            return Err(QuadratureError::DegenerateRule { what: "strictly increasing nodes" });
        }
    }
    if nodes[0] <= -1.0 || nodes[m - 1] >= 1.0 {
        return Err(QuadratureError::DegenerateRule { what: "nodes inside (-1, 1)" });
    }
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(QuadratureError::DegenerateRule { what: "positive weights" });
    }
    let mass: f64 = weights.iter().sum();
    if (mass - mu0).abs() > 1e-10 * mu0 {
        return Err(QuadratureError::DegenerateRule { what: "total mass" });
    }

    Ok(QuadRule { nodes, weights, a, b })
}

/// Σ_i w_i f(x_i) g(x_i).
pub fn weighted_inner_product(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    rule: &QuadRule,
) -> f64 {
    rule.nodes
        .iter()
        .zip(rule.weights.iter())
        .map(|(&x, &w)| w * f(x) * g(x))
        .sum()
}

/// Closed-form moments I_d = ∫ λ^d w dλ for d = 0..=d_max, via the
/// first-order recurrence grounded in the Beta function:
/// I_0 = 2^{a+b+1} B(a+1, b+1), I_{d+1} = ((b−a) I_d + d I_{d−1}) / (a+b+2+d).
/// Algebraically independent of the Golub–Welsch construction, which is
/// the point: it is the oracle for quadrature exactness.
pub fn weight_moments(d_max: usize, a: f64, b: f64) -> Result<Vec<f64>, QuadratureError> {
    let mu0 = total_mass(a, b)?;
    let mut moments = Vec::with_capacity(d_max + 1);
    moments.push(mu0);
    if d_max == 0 {
        return Ok(moments);
    }
    moments.push((b - a) * mu0 / (a + b + 2.0));
    for d in 1..d_max {
        let d_f = d as f64;
        let next = ((b - a) * moments[d] + d_f * moments[d - 1]) / (a + b + 2.0 + d_f);
        moments.push(next);
    }
    Ok(moments)
}
