//! Univariate and tensor-product B-spline bases and Gauss quadrature.

mod gauss;
mod knots;
mod tensor;

pub use gauss::{gauss_rule, GaussRule};
pub use knots::{eval_basis, BasisValues, KnotVector};
pub use tensor::TensorSplineSpace;
