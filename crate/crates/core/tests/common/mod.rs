#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbmortar_core::material::ParamId;
use rbmortar_core::geometry::{GeometryMap, REFERENCE_THICKNESS};
use rbmortar_core::{
    DetailedModel, EigenPairs, Face, FaceRef, KnotVector, MultiPatchModel, ParameterBox, ParameterSample, Patch,
    ReducedModel, TensorSplineSpace,
};

/// Residual dual norm computed in the detailed space: `|L^-1 r|` with
/// `A_ref = L L^T` and `r = A(mu) u - lambda M(mu) u`.
pub fn direct_estimate(detailed: &DetailedModel, rm: &ReducedModel, mu: &ParameterSample, pairs: &EigenPairs) -> Vec<f64> {
    let a_ref = detailed.stiffness(&rm.reference).unwrap();
    let l = a_ref.cholesky().unwrap().l();
    let (a, m) = (detailed.stiffness(mu).unwrap(), detailed.mass(mu).unwrap());
    (0..pairs.len())
        .map(|i| {
            let u = &rm.basis * pairs.vectors.column(i);
            let r = &a * &u - &m * &u * pairs.values[i];
            rm.estimator.stability * l.solve_lower_triangular(&r).unwrap().norm()
        })
        .collect()
}

/// Box of the three-parameter study: `E_y`, `G_xy` and thickness varied,
/// everything else at the reference values.
pub fn three_parameter_box() -> ParameterBox {
    ParameterBox::p1()
        .with_range(ParamId::Thickness, 0.5, 2.0)
        .restricted_to(&[ParamId::EY, ParamId::GXy, ParamId::Thickness], &ParameterSample::reference())
}

pub fn samples(bx: &ParameterBox, n: usize, seed: u64) -> Vec<ParameterSample> {
    bx.sample_many(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn m_norm(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v)).sqrt()
}

/// Full 6x6 compliance in Voigt order built from the engineering constants
/// with `nu_ij = -eps_j / eps_i`.
pub fn compliance_6x6(mu: &ParameterSample) -> nalgebra::Matrix6<f64> {
    let mut s = nalgebra::Matrix6::zeros();
    s[(0, 0)] = 1.0 / mu.e_x;
    s[(1, 1)] = 1.0 / mu.e_y;
    s[(2, 2)] = 1.0 / mu.e_z;
    s[(0, 1)] = -mu.nu_xy / mu.e_x;
    s[(1, 2)] = -mu.nu_yz / mu.e_y;
    s[(2, 0)] = -mu.nu_zx / mu.e_z;
    s[(1, 0)] = s[(0, 1)];
    s[(2, 1)] = s[(1, 2)];
    s[(0, 2)] = s[(2, 0)];
    s[(3, 3)] = 1.0 / mu.g_yz;
    s[(4, 4)] = 1.0 / mu.g_zx;
    s[(5, 5)] = 1.0 / mu.g_xy;
    s
}

/// Width of the excluded band around the boundary of positive definiteness.
pub const ADMISSIBILITY_BAND: f64 = 1e-9;

/// Positive definiteness of the 6x6 compliance decided from its spectrum
/// after scaling to unit diagonal; `None` within the band.
pub fn admissibility_oracle(mu: &ParameterSample) -> Option<bool> {
    let s = compliance_6x6(mu);
    let d = nalgebra::Matrix6::from_diagonal(&s.diagonal().map(|x| 1.0 / x.sqrt()));
    let lmin = (d * s * d).symmetric_eigenvalues().min();
    (lmin.abs() > ADMISSIBILITY_BAND).then_some(lmin > 0.0)
}

/// Uniform draw in the box without any admissibility filter.
pub fn raw_draw(bx: &ParameterBox, rng: &mut impl Rng) -> ParameterSample {
    let (lo, hi) = (bx.lower.to_array(), bx.upper.to_array());
    let mut a = [0.0; 11];
    for i in 0..11 {
        a[i] = if lo[i] < hi[i] { rng.random_range(lo[i]..hi[i]) } else { lo[i] };
    }
    ParameterSample::from_array(a)
}

/// One patch with a repeated knot at `y = 0.5`: the conforming counterpart
/// of two matching halves.
pub fn conforming_slab() -> MultiPatchModel {
    let t = REFERENCE_THICKNESS;
    let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.25, 0.5, 0.5, 0.75, 1.0, 1.0, 1.0]).unwrap();
    let space = TensorSplineSpace::new([
        KnotVector::uniform(2, 3).unwrap(),
        kv,
        KnotVector::uniform(2, 1).unwrap(),
    ]);
    MultiPatchModel {
        name: "slab_conforming".into(),
        patches: vec![Patch::new(GeometryMap::boxed([0.0; 3], [2.0, 1.0, t]), space)],
        interfaces: vec![],
        dirichlet: vec![FaceRef::new(0, Face::VMin)],
    }
}
