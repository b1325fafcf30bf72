//! Reduced-basis approximation of parametric eigenvalue problems for
//! orthotropic linear elasticity on weakly coupled multi-patch isogeometric
//! discretizations.
//!
//! The crate is layered bottom-up:
//!
//! - [`spline`]: knot vectors, B-spline evaluation and Gauss quadrature.
//! - [`geometry`]: multi-patch volumes, interfaces, Dirichlet faces and the
//!   shipped test geometries.
//! - [`material`]: orthotropic stiffness, admissibility and the thickness
//!   pullback of the material law.
//! - [`discretize`]: affine stiffness/mass components, the mortar coupling
//!   operator and the constrained (kernel) space of the coupling.
//! - [`eigen`]: dense generalized symmetric-definite eigensolvers.
//! - [`reduced`]: POD, greedy enrichment and the offline/online residual
//!   estimator.
//! - [`workbench`]: study configuration, persistence and batch commands.

pub mod discretize;
pub mod eigen;
mod error;
pub mod geometry;
pub mod material;
pub mod mtx;
pub mod reduced;
pub mod sparse;
pub mod spline;
pub mod workbench;



pub use discretize::{AffineSystem, ConstrainedSpace, DetailedModel, DofMap};
pub use eigen::{saddle_point_evp, solve_gevp, EigenPairs, SaddlePointPairs};
pub use error::{Error, Result};
pub use reduced::{
    Aggregation, EstimatorData, GreedyConfig, GreedyStatus, GreedyStep, ReducedModel,
};
pub use geometry::{build_test_geometry, Face, FaceRef, MultiPatchModel, Patch, TestGeometry};
pub use material::{ParamId, ParameterBox, ParameterSample, StiffnessVoigt};

pub use sparse::CsrMatrix;
pub use spline::{gauss_rule, KnotVector, TensorSplineSpace};
