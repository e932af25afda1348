//! Numeric verification of the basis machinery: quadrature
//! orthonormality, closed-form norms against the quadrature oracle,
//! finite-difference checks of the (a, b) derivatives, and the
//! coefficient-penalty ≡ filter-norm identity. Used by the `verify-basis`
//! subcommand and by the acceptance tests.

use crate::jacobi::{
    eval_orthonormal_basis_dual, eval_orthonormal_basis_scalar, jacobi_norm_grad, jacobi_norm_sq,
    BasisParams,
};
use crate::quadrature::{gauss_jacobi, weighted_inner_product, QuadratureError};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// One named defect measurement with its tolerance.
#[derive(Clone, Debug)]
pub struct Check {
    pub what: String,
    pub defect: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.defect.is_finite() && self.defect <= self.tolerance
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn max_defect(&self, prefix: &str) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.what.starts_with(prefix))
            .fold(0.0, |m, c| m.max(c.defect))
    }

    fn record(&mut self, what: String, defect: f64, tolerance: f64) {
        self.checks.push(Check { what, defect, tolerance });
    }
}

/// Max |⟨P*_i, P*_j⟩_w − δ_ij| over i, j ≤ K with an m-node rule.
pub fn orthonormality_defect(k: usize, a: f64, b: f64, m: usize) -> Result<f64, QuadratureError> {
    let p = BasisParams::new(k, a, b)?;
    let rule = gauss_jacobi(m, a, b)?;
    let table: Vec<Vec<f64>> = rule
        .nodes()
        .iter()
        .map(|&x| eval_orthonormal_basis_scalar(&p, x).expect("nodes stay in (-1, 1)"))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..=k {
        for j in i..=k {
            let mut acc = 0.0;
            for (t, &w) in rule.weights().iter().enumerate() {
                acc += w * table[t][i] * table[t][j];
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - want).abs());
        }
    }
    Ok(worst)
}

/// Max relative defect of the closed-form ‖P_i‖² against the quadrature
/// value, i ≤ K.
pub fn norm_defect(k: usize, a: f64, b: f64) -> Result<f64, QuadratureError> {
    let p = BasisParams::new(k, a, b)?;
    let rule = gauss_jacobi(k + 1, a, b)?;
    let mut worst = 0.0f64;
    for i in 0..=k {
        let closed = jacobi_norm_sq(i, &p);
        // ⟨P*_i, P*_i⟩ should be 1; scale back up by the closed form to
        // compare the unnormalized norms.
        let quad = weighted_inner_product(
            |x| eval_orthonormal_basis_scalar(&p, x).expect("node in domain")[i],
            |x| eval_orthonormal_basis_scalar(&p, x).expect("node in domain")[i],
            &rule,
        ) * closed;
        worst = worst.max(((quad - closed) / closed).abs());
    }
    Ok(worst)
}

/// Max relative mismatch between analytic (a, b) derivatives and central
/// finite differences: norm gradients and the basis tangents at sampled
/// points.
pub fn gradient_fd_defect(
    k: usize,
    a: f64,
    b: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, QuadratureError> {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let rel = |got: f64, fd: f64| (got - fd).abs() / fd.abs().max(1e-3);

    for i in 0..=k {
        let (da, db) = jacobi_norm_grad(i, &BasisParams::new(k, a, b)?);
        let nsq = |aa: f64, bb: f64| -> Result<f64, QuadratureError> {
            Ok(jacobi_norm_sq(i, &BasisParams::new(k, aa, bb)?))
        };
        let fd_a = (nsq(a + h, b)? - nsq(a - h, b)?) / (2.0 * h);
        let fd_b = (nsq(a, b + h)? - nsq(a, b - h)?) / (2.0 * h);
        worst = worst.max(rel(da, fd_a)).max(rel(db, fd_b));
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..samples {
        let x: f64 = rng.random_range(-1.0..1.0);
        let duals = eval_orthonormal_basis_dual(&BasisParams::new(k, a, b)?, x)?;
        let eval = |aa: f64, bb: f64| -> Result<Vec<f64>, QuadratureError> {
            Ok(eval_orthonormal_basis_scalar(&BasisParams::new(k, aa, bb)?, x)?)
        };
        let up_a = eval(a + h, b)?;
        let dn_a = eval(a - h, b)?;
        let up_b = eval(a, b + h)?;
        let dn_b = eval(a, b - h)?;
        for i in 0..=k {
            worst = worst.max(rel(duals[i].da, (up_a[i] - dn_a[i]) / (2.0 * h)));
            worst = worst.max(rel(duals[i].db, (up_b[i] - dn_b[i]) / (2.0 * h)));
        }
    }
    Ok(worst)
}

/// Max |Σ α_i² − ⟨g_α, g_α⟩_w| over random coefficient draws: the
/// orthonormality-based regularizer identity.
pub fn regularizer_identity_defect(
    k: usize,
    a: f64,
    b: f64,
    draws: usize,
    seed: u64,
) -> Result<f64, QuadratureError> {
    let p = BasisParams::new(k, a, b)?;
    let rule = gauss_jacobi(k + 1, a, b)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let alpha: Vec<f64> = (0..=k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let direct: f64 = alpha.iter().map(|v| v * v).sum();
        let g = |x: f64| -> f64 {
            let basis = eval_orthonormal_basis_scalar(&p, x).expect("node in domain");
            alpha.iter().zip(basis.iter()).map(|(c, v)| c * v).sum()
        };
        let quad = weighted_inner_product(g, g, &rule);
        worst = worst.max((quad - direct).abs());
    }
    Ok(worst)
}

/// The full verification battery at one (a, b) point.
pub fn verify_basis_point(k: usize, a: f64, b: f64, seed: u64) -> Result<VerifyOutcome, QuadratureError> {
    let mut out = VerifyOutcome::default();
    out.record(
        format!("orthonormality(K={k}, a={a}, b={b})"),
        orthonormality_defect(k, a, b, k + 1)?,
        1e-8,
    );
    out.record(format!("norm_closed_form(K={k}, a={a}, b={b})"), norm_defect(k, a, b)?, 1e-8);
    out.record(
        format!("gradient_fd(K={k}, a={a}, b={b})"),
        gradient_fd_defect(k, a, b, 5, seed)?,
        1e-4,
    );
    out.record(
        format!("regularizer_identity(K={k}, a={a}, b={b})"),
        regularizer_identity_defect(k, a, b, 5, seed)?,
        1e-8,
    );
    Ok(out)
}

/// The verification battery over the 7×7 exponent grid on [−0.9, 2]².
pub fn verify_basis_grid(k: usize, seed: u64) -> Result<VerifyOutcome, QuadratureError> {
    let mut out = VerifyOutcome::default();
    for &a in &grid_points() {
        for &b in &grid_points() {
            let point = verify_basis_point(k, a, b, seed)?;
            out.checks.extend(point.checks);
        }
    }
    Ok(out)
}

/// 7 evenly spaced exponents spanning [−0.9, 2].
pub fn grid_points() -> [f64; 7] {
    let mut pts = [0.0; 7];
    for (i, p) in pts.iter_mut().enumerate() {
        *p = -0.9 + i as f64 * (2.9 / 6.0);
    }
    pts
}
