//! Spectral graph filtering with a learnable orthonormal Jacobi basis.
//!
//! The crate trains polynomial graph filters g(P) = Σ_k α_k P*_k(P) where
//! {P*_k} are Jacobi polynomials orthonormal under the weight
//! (1−λ)^a (1+λ)^b on [−1, 1] and the exponents (a, b) are themselves
//! trainable. Orthonormality makes the plain ℓ2 penalty on the
//! coefficients equal to the RMS norm of the filter function, which is
//! what keeps filter amplitudes from drifting during training.
//!
//! Independent oracles back every numeric claim: Gauss–Jacobi quadrature
//! (Golub–Welsch) for inner products and norms, and a dense symmetric
//! eigendecomposition for exact spectral filtering.

pub mod cli;
pub mod graphcore;
pub mod jacobi;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod train;
pub mod verify;

mod mat;
mod tridiag;

pub use mat::Mat;
