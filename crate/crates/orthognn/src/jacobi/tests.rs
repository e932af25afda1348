use super::*;
use crate::graphcore::{build_graph, propagation_matrix, SelfLoopPolicy};
use crate::quadrature::{gauss_jacobi, weighted_inner_product};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn params(k: usize, a: f64, b: f64) -> BasisParams {
    BasisParams::new(k, a, b).unwrap()
}

#[test]
fn norm_sq_small_cases() {
    // ∫ 1 dλ = 2, ∫ λ² dλ = 2/3 over [-1, 1].
    assert!((jacobi_norm_sq(0, &params(0, 0.0, 0.0)) - 2.0).abs() < 1e-14);
    assert!((jacobi_norm_sq(1, &params(1, 0.0, 0.0)) - 2.0 / 3.0).abs() < 1e-14);
    assert!((jacobi_norm_sq(2, &params(2, 0.0, 0.0)) - 0.4).abs() < 1e-14);
}

#[test]
fn chebyshev_corner_norm_is_pi() {
    // The a+b+1 = 0 degeneracy: the Beta form keeps i = 0 finite.
    let p = params(0, -0.5, -0.5);
    assert!((jacobi_norm_sq(0, &p) - std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn norm_grad_analytic_value_at_origin() {
    // d/da of 2^{a+b+1} B(a+1, b+1) at a=b=0 is 2(ln 2 − 1).
    let (da, db) = jacobi_norm_grad(0, &params(0, 0.0, 0.0));
    let want = 2.0 * (std::f64::consts::LN_2 - 1.0);
    assert!((da - want).abs() < 1e-12, "{da} vs {want}");
    assert!((db - want).abs() < 1e-12);
}

#[test]
fn norm_grad_symmetric_at_equal_exponents() {
    for i in 0..8 {
        for &ab in &[-0.5, 0.0, 0.7, 2.0] {
            let (da, db) = jacobi_norm_grad(i, &params(i.max(1), ab, ab));
            assert!((da - db).abs() < 1e-12 * da.abs().max(1.0), "i={i} ab={ab}");
        }
    }
}

#[test]
fn norm_grad_matches_finite_differences() {
    let h = 1e-5;
    for &(i, a, b) in &[(3usize, 0.7, -0.2), (0, 0.3, 1.1), (6, -0.4, 1.9)] {
        let (da, db) = jacobi_norm_grad(i, &params(6, a, b));
        let fd_a = (jacobi_norm_sq(i, &params(6, a + h, b)) - jacobi_norm_sq(i, &params(6, a - h, b)))
            / (2.0 * h);
        let fd_b = (jacobi_norm_sq(i, &params(6, a, b + h)) - jacobi_norm_sq(i, &params(6, a, b - h)))
            / (2.0 * h);
        assert!((da - fd_a).abs() <= 1e-6 * fd_a.abs().max(1e-3), "i={i} da={da} fd={fd_a}");
        assert!((db - fd_b).abs() <= 1e-6 * fd_b.abs().max(1e-3), "i={i} db={db} fd={fd_b}");
    }
}

#[test]
fn basis_degree_zero_is_inverse_norm() {
    let vals = eval_orthonormal_basis_scalar(&params(0, 0.0, 0.0), 0.37).unwrap();
    assert_eq!(vals.len(), 1);
    assert!((vals[0] - 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);
    // Any exponents: P*_0(x) = 1/‖P_0‖ independent of x.
    let p = params(0, 1.2, -0.6);
    let v1 = eval_orthonormal_basis_scalar(&p, -0.9).unwrap()[0];
    let v2 = eval_orthonormal_basis_scalar(&p, 0.9).unwrap()[0];
    assert_eq!(v1, v2);
    assert!((v1 - 1.0 / jacobi_norm_sq(0, &p).sqrt()).abs() < 1e-15);
}

#[test]
fn basis_degree_one_at_right_endpoint() {
    // a=b=0: P_1(x) = x, ‖P_1‖² = 2/3, so P*_1(1) = √1.5.
    let vals = eval_orthonormal_basis_scalar(&params(1, 0.0, 0.0), 1.0).unwrap();
    assert!((vals[1] - 1.5_f64.sqrt()).abs() < 1e-14);
}

#[test]
fn basis_degree_two_at_zero() {
    // Legendre P_2(0) = −1/2 and ‖P_2‖² = 2/5.
    let vals = eval_orthonormal_basis_scalar(&params(2, 0.0, 0.0), 0.0).unwrap();
    let want = -0.5 / 0.4_f64.sqrt();
    assert!((vals[2] - want).abs() < 1e-14);
}

#[test]
fn legendre_special_case_reduction() {
    // At a=b=0 the orthonormal basis is normalized Legendre:
    // P*_k = P_k · √((2k+1)/2), with P_k from the classic recurrence.
    fn legendre(k: usize, x: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, x);
        if k == 0 {
            return p0;
        }
        for i in 1..k {
            let i_f = i as f64;
            let next = ((2.0 * i_f + 1.0) * x * p1 - i_f * p0) / (i_f + 1.0);
            p0 = p1;
            p1 = next;
        }
        p1
    }
    let p = params(10, 0.0, 0.0);
    for &x in &[-1.0, -0.42, 0.0, 0.3, 0.99, 1.0] {
        let vals = eval_orthonormal_basis_scalar(&p, x).unwrap();
        for k in 0..=10 {
            let want = legendre(k, x) * ((2.0 * k as f64 + 1.0) / 2.0).sqrt();
            assert!((vals[k] - want).abs() < 1e-12, "k={k} x={x}: {} vs {want}", vals[k]);
        }
    }
}

#[test]
fn evaluation_point_domain_checked() {
    let p = params(3, 0.0, 0.0);
    assert!(eval_orthonormal_basis_scalar(&p, 1.0 + 1e-13).is_ok());
    assert!(matches!(
        eval_orthonormal_basis_scalar(&p, 1.0 + 1e-9),
        Err(JacobiError::PointOutsideDomain { .. })
    ));
    assert!(eval_orthonormal_basis_scalar(&p, f64::NAN).is_err());
}

#[test]
fn invalid_exponents_rejected() {
    assert!(BasisParams::new(3, -1.0, 0.0).is_err());
    assert!(BasisParams::new(3, 0.0, -2.0).is_err());
    assert!(BasisParams::new(3, f64::NAN, 0.0).is_err());
}

#[test]
fn projection_clamps_into_box() {
    let mut p = params(2, 0.0, 0.0);
    p.a = -5.0;
    p.b = 7.0;
    p.project_into_box();
    assert_eq!(p.a, AB_MIN);
    assert_eq!(p.b, AB_MAX);
}

#[test]
fn quadrature_orthonormality_spot_grid() {
    // ⟨P*_i, P*_j⟩_w = δ_ij, inner product by Gauss–Jacobi with K+1
    // nodes (exact for degree ≤ 2K+1). Full 7×7 grid runs in the
    // acceptance suite; a coarse grid here keeps unit tests quick.
    let k = 10usize;
    for &a in &[-0.9, -0.5, 0.0, 1.0, 2.0] {
        for &b in &[-0.9, 0.0, 2.0] {
            let p = params(k, a, b);
            let rule = gauss_jacobi(k + 1, a, b).unwrap();
            let mut table = vec![vec![0.0; k + 1]; rule.len()];
            for (t, &x) in rule.nodes().iter().enumerate() {
                table[t] = eval_orthonormal_basis_scalar(&p, x).unwrap();
            }
            for i in 0..=k {
                for j in i..=k {
                    let mut acc = 0.0;
                    for (t, &w) in rule.weights().iter().enumerate() {
                        acc += w * table[t][i] * table[t][j];
                    }
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (acc - want).abs() <= 1e-8,
                        "a={a} b={b} i={i} j={j}: {acc}"
                    );
                }
            }
        }
    }
}

#[test]
fn closed_form_norm_matches_quadrature_oracle() {
    // ‖P_i‖² via the (unnormalized) recurrence + quadrature vs the
    // closed form, relative 1e-8, i ≤ 10.
    for &(a, b) in &[(-0.9, -0.9), (-0.5, -0.5), (0.0, 0.0), (0.7, -0.2), (2.0, 2.0), (1.3, 0.4)] {
        let k = 10usize;
        let p = params(k, a, b);
        let rule = gauss_jacobi(k + 1, a, b).unwrap();
        for i in 0..=k {
            // Unnormalized P_i = P*_i · ‖P_i‖; so ⟨P*_i, P*_i⟩·‖P_i‖² is
            // the quadrature value of ⟨P_i, P_i⟩.
            let closed = jacobi_norm_sq(i, &p);
            let quad = weighted_inner_product(
                |x| eval_orthonormal_basis_scalar(&p, x).unwrap()[i],
                |x| eval_orthonormal_basis_scalar(&p, x).unwrap()[i],
                &rule,
            ) * closed;
            assert!(
                ((quad - closed) / closed).abs() <= 1e-8,
                "a={a} b={b} i={i}: {quad} vs {closed}"
            );
        }
    }
}

#[test]
fn dual_tangents_match_finite_differences() {
    // 20 random (x, a, b) points, every degree k ≤ K, step 1e-5,
    // relative tolerance 1e-4.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let k = 6usize;
    let h = 1e-5;
    for trial in 0..20 {
        let x: f64 = rng.random_range(-1.0..1.0);
        let a: f64 = rng.random_range(-0.9..2.0);
        let b: f64 = rng.random_range(-0.9..2.0);
        let duals = eval_orthonormal_basis_dual(&params(k, a, b), x).unwrap();
        let up_a = eval_orthonormal_basis_scalar(&params(k, a + h, b), x).unwrap();
        let dn_a = eval_orthonormal_basis_scalar(&params(k, a - h, b), x).unwrap();
        let up_b = eval_orthonormal_basis_scalar(&params(k, a, b + h), x).unwrap();
        let dn_b = eval_orthonormal_basis_scalar(&params(k, a, b - h), x).unwrap();
        for i in 0..=k {
            let fd_a = (up_a[i] - dn_a[i]) / (2.0 * h);
            let fd_b = (up_b[i] - dn_b[i]) / (2.0 * h);
            assert!(
                (duals[i].da - fd_a).abs() <= 1e-4 * fd_a.abs().max(1e-3),
                "trial {trial} i={i}: da {} vs fd {fd_a}",
                duals[i].da
            );
            assert!(
                (duals[i].db - fd_b).abs() <= 1e-4 * fd_b.abs().max(1e-3),
                "trial {trial} i={i}: db {} vs fd {fd_b}",
                duals[i].db
            );
        }
    }
}

#[test]
fn matrix_application_degree_zero_and_one() {
    let g = build_graph(&[(0, 1)], 2, SelfLoopPolicy::Reject).unwrap();
    let pm = propagation_matrix(&g, false).unwrap();
    let x = Mat::column(&[0.3, -0.8]);

    let b0 = apply_orthonormal_basis(&pm, &x, &params(0, 0.7, -0.2), false).unwrap();
    let norm0 = jacobi_norm_sq(0, &params(0, 0.7, -0.2)).sqrt();
    for r in 0..2 {
        assert!((b0.values[0][(r, 0)] - x[(r, 0)] / norm0).abs() < 1e-15);
    }

    // a=b=0, degree 1: B_1 = (P·X)·√1.5.
    let b1 = apply_orthonormal_basis(&pm, &x, &params(1, 0.0, 0.0), false).unwrap();
    let px = crate::graphcore::spmv(&pm, &x).unwrap();
    for r in 0..2 {
        assert!((b1.values[1][(r, 0)] - px[(r, 0)] * 1.5_f64.sqrt()).abs() < 1e-15);
    }
}

#[test]
fn matrix_application_matches_spectral_expansion_on_k2() {
    // P of K2 has eigenpairs (+1, (1,1)/√2) and (−1, (1,−1)/√2); for
    // x = e_0 the projections are both 1/2, so
    // P*_k(P) x = (P*_k(1)·(1,1) + P*_k(−1)·(1,−1)) / 2.
    let g = build_graph(&[(0, 1)], 2, SelfLoopPolicy::Reject).unwrap();
    let pm = propagation_matrix(&g, false).unwrap();
    let x = Mat::column(&[1.0, 0.0]);
    let p = params(2, 0.0, 0.0);
    let signals = apply_orthonormal_basis(&pm, &x, &p, false).unwrap();
    let at_pos = eval_orthonormal_basis_scalar(&p, 1.0).unwrap();
    let at_neg = eval_orthonormal_basis_scalar(&p, -1.0).unwrap();
    for k in 0..=2 {
        let want0 = 0.5 * (at_pos[k] + at_neg[k]);
        let want1 = 0.5 * (at_pos[k] - at_neg[k]);
        assert!((signals.values[k][(0, 0)] - want0).abs() < 1e-10, "k={k}");
        assert!((signals.values[k][(1, 0)] - want1).abs() < 1e-10, "k={k}");
    }
}

#[test]
fn matrix_tangents_match_finite_differences() {
    // Tangent signals of apply_orthonormal_basis against central
    // differences over (a, b) on a small path graph, two channels.
    let g = build_graph(&[(0, 1), (1, 2), (2, 3), (1, 3)], 4, SelfLoopPolicy::Reject).unwrap();
    let pm = propagation_matrix(&g, false).unwrap();
    let x = Mat::from_rows(&[
        vec![0.5, -1.0],
        vec![1.5, 0.25],
        vec![-0.75, 2.0],
        vec![0.1, 0.4],
    ]);
    let (k, a, b) = (5usize, 0.6, -0.3);
    let h = 1e-5;
    let dual = apply_orthonormal_basis(&pm, &x, &params(k, a, b), true).unwrap();
    let tang = dual.tangents.unwrap();
    let up_a = apply_orthonormal_basis(&pm, &x, &params(k, a + h, b), false).unwrap();
    let dn_a = apply_orthonormal_basis(&pm, &x, &params(k, a - h, b), false).unwrap();
    let up_b = apply_orthonormal_basis(&pm, &x, &params(k, a, b + h), false).unwrap();
    let dn_b = apply_orthonormal_basis(&pm, &x, &params(k, a, b - h), false).unwrap();
    for i in 0..=k {
        let mut fd_a = up_a.values[i].clone();
        fd_a.add_scaled(&dn_a.values[i], -1.0);
        fd_a.scale(1.0 / (2.0 * h));
        let mut fd_b = up_b.values[i].clone();
        fd_b.add_scaled(&dn_b.values[i], -1.0);
        fd_b.scale(1.0 / (2.0 * h));
        assert!(
            tang.da[i].max_abs_diff(&fd_a) <= 1e-4 * fd_a.max_abs().max(1e-3),
            "degree {i} da"
        );
        assert!(
            tang.db[i].max_abs_diff(&fd_b) <= 1e-4 * fd_b.max_abs().max(1e-3),
            "degree {i} db"
        );
    }
}

#[test]
fn matrix_application_dimension_check() {
    let g = build_graph(&[(0, 1)], 2, SelfLoopPolicy::Reject).unwrap();
    let pm = propagation_matrix(&g, false).unwrap();
    let x = Mat::column(&[1.0, 2.0, 3.0]);
    assert!(matches!(
        apply_orthonormal_basis(&pm, &x, &params(2, 0.0, 0.0), false),
        Err(JacobiError::DimensionMismatch { got: 3, expected: 2 })
    ));
}
