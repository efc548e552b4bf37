//! Numerical kernels shared by every engine: Gaussian-weighted quadrature,
//! bracketed root finding, monotone inversion and shape-preserving interpolation.

mod interp;
mod normal;
mod quadrature;
mod roots;

pub use interp::{LogHermiteGrid, Pchip};
pub use normal::{norm_cdf, norm_pdf, norm_quantile};
pub use quadrature::{
    gauss_hermite_rule, gauss_legendre_rule, gaussian_integrate, tanh_sinh_unit, Pair, QuadratureScheme,
    QuadratureSpec, Scalar,
};
pub use roots::{bracketed_root, expanding_inverse, monotone_inverse};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("integrand is not finite at y = {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root finder did not converge after {iterations} iterations")]
    MaxIterations { iterations: usize },
    #[error("target {y} lies outside the image [{lo}, {hi}] of the bracket")]
    OutOfRange { y: f64, lo: f64, hi: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}
