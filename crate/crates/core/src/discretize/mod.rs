//! Discrete operators: degree-of-freedom numbering, affine stiffness and mass
//! components, the mortar coupling operator and the constrained space on
//! which the detailed eigenproblem is posed.

mod assembly;
mod constrained;
mod mortar;

use nalgebra::{DMatrix, DVector};

use crate::eigen::{solve_gevp, EigenPairs};
use crate::error::{Error, Result};
use crate::geometry::MultiPatchModel;
use crate::material::{mass_weight, stiffness_from_engineering, transform_tensor, ParameterSample, StiffnessVoigt};
use crate::sparse::CsrMatrix;

pub use assembly::{assemble_components, assemble_direct, strain, VOIGT_PAIRS};
pub use constrained::{constrained_basis, numerical_rank, ConstrainedSpace, RANK_TOL};
pub use mortar::{assemble_mortar, MultiplierLayout};

/// Coefficient names of the stiffness components, `t` the thickness factor.
pub const THETA_A_NAMES: [&str; 9] = [
    "A11", "A12", "A22", "A13/t^2", "A23/t^2", "A33/t^4", "G_yz/t^2", "G_zx/t^2", "G_xy",
];

/// Coefficient names of the mass components.
pub const THETA_M_NAMES: [&str; 2] = ["rho", "rho/t^2"];

/// Vector degrees of freedom `3 (offset_p + l) + c` with the clamped ones
/// split off.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    offsets: Vec<usize>,
    n: usize,
    free: Vec<usize>,
    fixed: Vec<usize>,
}

impl DofMap {
    pub fn new(model: &MultiPatchModel) -> Self {
        let mut offsets = Vec::with_capacity(model.patches.len() + 1);
        let mut s = 0;
        for p in &model.patches {
            offsets.push(s);
            s += p.space.dim();
        }
        offsets.push(s);
        let mut clamped = vec![false; 3 * s];
        for f in &model.dirichlet {
            for l in model.patches[f.patch].face_dofs(f.face) {
                for c in 0..3 {
                    clamped[3 * (offsets[f.patch] + l) + c] = true;
                }
            }
        }
        let (fixed, free): (Vec<usize>, Vec<usize>) = (0..3 * s).partition(|&g| clamped[g]);
        Self {
            offsets,
            n: 3 * s,
            free,
            fixed,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn global(&self, patch: usize, l: usize, c: usize) -> usize {
        3 * (self.offsets[patch] + l) + c
    }

    /// Inverse of [`DofMap::global`].
    pub fn local(&self, g: usize) -> (usize, usize, usize) {
        let s = g / 3;
        let p = self.offsets.partition_point(|&o| o <= s) - 1;
        (p, s - self.offsets[p], g % 3)
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Physical location of the Greville point of each scalar function,
    /// indexed by `offset_p + l`.
    pub fn greville_points(&self, model: &MultiPatchModel) -> Result<Vec<[f64; 3]>> {
        let mut out = Vec::with_capacity(self.n / 3);
        for p in &model.patches {
            for l in 0..p.space.dim() {
                out.push(p.geometry.eval(p.space.greville(l))?.0);
            }
        }
        Ok(out)
    }

    /// Extends a vector on the free degrees of freedom by zero.
    pub fn extend(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (k, &g) in self.free.iter().enumerate() {
            out[g] = x[k];
        }
        out
    }
}

/// Stiffness coefficients: entries of the pulled-back tensor at
/// [`VOIGT_PAIRS`].
pub fn theta_a(mu: &ParameterSample) -> Result<Vec<f64>> {
    let c = transform_tensor(&stiffness_from_engineering(mu)?, mu.thickness)?;
    Ok(VOIGT_PAIRS.iter().map(|&(i, j)| c.entry(i, j)).collect())
}

/// Mass coefficients `(rho, rho / t^2)`.
pub fn theta_m(mu: &ParameterSample) -> Result<Vec<f64>> {
    let w = mass_weight(mu.thickness)?;
    if !(mu.density > 0.0 && mu.density.is_finite()) {
        return Err(Error::Inadmissible(format!("density {} must be positive", mu.density)));
    }
    Ok(vec![mu.density * w[0], mu.density * w[2]])
}

/// Parameter-independent components over all displacement degrees of
/// freedom together with the coupling operator.
#[derive(Debug, Clone)]
pub struct AffineSystem {
    pub dofs: DofMap,
    pub stiffness: Vec<CsrMatrix>,
    pub mass: Vec<CsrMatrix>,
    pub coupling: CsrMatrix,
}

impl AffineSystem {
    pub fn assemble(model: &MultiPatchModel) -> Result<Self> {
        model.validate()?;
        let dofs = DofMap::new(model);
        let (stiffness, mass) = assemble_components(model, &dofs)?;
        let coupling = assemble_mortar(model, &dofs)?;
        Ok(Self {
            dofs,
            stiffness,
            mass,
            coupling,
        })
    }

    pub fn qa(&self) -> usize {
        self.stiffness.len()
    }

    pub fn qm(&self) -> usize {
        self.mass.len()
    }

    pub fn stiffness_at(&self, mu: &ParameterSample) -> Result<CsrMatrix> {
        combine(&theta_a(mu)?, &self.stiffness)
    }

    pub fn mass_at(&self, mu: &ParameterSample) -> Result<CsrMatrix> {
        combine(&theta_m(mu)?, &self.mass)
    }

    /// Static equilibrium without body load: prescribed values on the clamped
    /// degrees of freedom, weak continuity across interfaces. Returns the
    /// full displacement vector.
    pub fn solve_dirichlet(&self, mu: &ParameterSample, fixed_values: &DVector<f64>) -> Result<DVector<f64>> {
        let (free, fixed) = (self.dofs.free(), self.dofs.fixed());
        if fixed_values.len() != fixed.len() {
            return Err(Error::Dimension(format!(
                "{} prescribed values for {} clamped degrees of freedom",
                fixed_values.len(),
                fixed.len()
            )));
        }
        let a = self.stiffness_at(mu)?;
        let rows: Vec<usize> = (0..self.coupling.nrows()).collect();
        let b_free = self.coupling.submatrix(&rows, free);
        let b_fixed = self.coupling.submatrix(&rows, fixed);
        let space = constrained_basis(&b_free)?;
        let u_p = space.particular_solution(&-b_fixed.mul_vec(fixed_values))?;
        let a_ff = a.submatrix(free, free);
        let a_fd = a.submatrix(free, fixed);
        let z = space.basis();
        let rhs = -(z.transpose() * (a_fd.mul_vec(fixed_values) + a_ff.mul_vec(&u_p)));
        let k = a_ff.project(z);
        let y = k
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("constrained stiffness".into()))?
            .solve(&rhs);
        let u_free = u_p + z * y;
        let mut u = DVector::zeros(self.dofs.len());
        for (k, &g) in free.iter().enumerate() {
            u[g] = u_free[k];
        }
        for (k, &g) in fixed.iter().enumerate() {
            u[g] = fixed_values[k];
        }
        Ok(u)
    }

    /// Coupling operator restricted to the free degrees of freedom.
    pub fn free_coupling(&self) -> CsrMatrix {
        let rows: Vec<usize> = (0..self.coupling.nrows()).collect();
        self.coupling.submatrix(&rows, self.dofs.free())
    }
}

fn combine(theta: &[f64], comps: &[CsrMatrix]) -> Result<CsrMatrix> {
    let terms: Vec<(f64, &CsrMatrix)> = theta.iter().copied().zip(comps).collect();
    CsrMatrix::linear_combination(&terms)
}

pub fn assemble_affine(model: &MultiPatchModel) -> Result<AffineSystem> {
    AffineSystem::assemble(model)
}

/// Stiffness and mass at `mu` assembled in one pass with the full pulled-back
/// tensor.
pub fn assemble_monolithic(model: &MultiPatchModel, mu: &ParameterSample) -> Result<(CsrMatrix, CsrMatrix)> {
    let c = transform_tensor(&stiffness_from_engineering(mu)?, mu.thickness)?;
    let w = mass_weight(mu.thickness)?;
    let dofs = DofMap::new(model);
    assemble_direct(model, &dofs, &c, w.map(|v| v * mu.density))
}

/// Smallest eigenpairs of the constrained pencil for a fixed tensor and
/// mass weight, assembled directly without the affine split.
pub fn direct_eigenpairs(model: &MultiPatchModel, c: &StiffnessVoigt, mass_weight: [f64; 3], k: usize) -> Result<EigenPairs> {
    model.validate()?;
    let dofs = DofMap::new(model);
    let (a, m) = assemble_direct(model, &dofs, c, mass_weight)?;
    let b = assemble_mortar(model, &dofs)?;
    let rows: Vec<usize> = (0..b.nrows()).collect();
    let space = constrained_basis(&b.submatrix(&rows, dofs.free()))?;
    let z = space.basis();
    let a = a.submatrix(dofs.free(), dofs.free()).project(z);
    let m = m.submatrix(dofs.free(), dofs.free()).project(z);
    solve_gevp(&a, &m, k)
}

/// The detailed (truth) model: affine components projected onto the
/// constrained space.
#[derive(Debug, Clone)]
pub struct DetailedModel {
    pub model: MultiPatchModel,
    pub system: AffineSystem,
    pub space: ConstrainedSpace,
    stiffness_x: Vec<DMatrix<f64>>,
    mass_x: Vec<DMatrix<f64>>,
}

impl DetailedModel {
    pub fn new(model: MultiPatchModel) -> Result<Self> {
        let system = AffineSystem::assemble(&model)?;
        let space = constrained_basis(&system.free_coupling())?;
        Ok(Self::from_parts(model, system, space))
    }

    pub fn from_parts(model: MultiPatchModel, system: AffineSystem, space: ConstrainedSpace) -> Self {
        let free = system.dofs.free();
        let z = space.basis();
        let project = |comps: &[CsrMatrix]| -> Vec<DMatrix<f64>> {
            comps.iter().map(|a| a.submatrix(free, free).project(z)).collect()
        };
        let stiffness_x = project(&system.stiffness);
        let mass_x = project(&system.mass);
        Self {
            model,
            system,
            space,
            stiffness_x,
            mass_x,
        }
    }

    /// Dimension of the constrained space.
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn qa(&self) -> usize {
        self.stiffness_x.len()
    }

    pub fn qm(&self) -> usize {
        self.mass_x.len()
    }

    pub fn stiffness_components(&self) -> &[DMatrix<f64>] {
        &self.stiffness_x
    }

    pub fn mass_components(&self) -> &[DMatrix<f64>] {
        &self.mass_x
    }

    pub fn stiffness(&self, mu: &ParameterSample) -> Result<DMatrix<f64>> {
        Ok(dense_combination(&theta_a(mu)?, &self.stiffness_x))
    }

    pub fn mass(&self, mu: &ParameterSample) -> Result<DMatrix<f64>> {
        Ok(dense_combination(&theta_m(mu)?, &self.mass_x))
    }

    /// `k` smallest eigenpairs in constrained coordinates. The pencil is
    /// solved at unit density and rescaled afterwards.
    pub fn solve(&self, mu: &ParameterSample, k: usize) -> Result<EigenPairs> {
        theta_m(mu)?;
        let pairs = solve_gevp(&self.stiffness(mu)?, &self.mass(&mu.with_density(1.0))?, k)?;
        Ok(pairs.with_mass_scaled(mu.density))
    }

    /// Constrained coordinates to free degrees of freedom.
    pub fn to_free(&self, x: &DVector<f64>) -> DVector<f64> {
        self.space.basis() * x
    }

    /// Constrained coordinates to all degrees of freedom, zero on clamped
    /// faces.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        self.system.dofs.extend(&self.to_free(x))
    }
}

pub(crate) fn dense_combination(theta: &[f64], comps: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (r, c) = comps.first().map_or((0, 0), |m| m.shape());
    let mut out = DMatrix::zeros(r, c);
    for (t, m) in theta.iter().zip(comps) {
        out.zip_apply(m, |o, v| *o += t * v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_slab2, build_test_geometry, TestGeometry};

    #[test]
    fn dof_numbering_round_trips() {
        let m = build_test_geometry(TestGeometry::Slab2).unwrap();
        let d = DofMap::new(&m);
        for g in [0, 5, d.len() / 2, d.len() - 1] {
            let (p, l, c) = d.local(g);
            assert_eq!(d.global(p, l, c), g);
        }
        assert_eq!(d.free().len() + d.fixed().len(), d.len());
    }

    #[test]
    fn component_count_and_symmetry() {
        let m = build_test_geometry(TestGeometry::UnitCube).unwrap();
        let s = AffineSystem::assemble(&m).unwrap();
        assert_eq!((s.qa(), s.qm()), (9, 2));
        for a in s.stiffness.iter().chain(&s.mass) {
            assert!(a.asymmetry() <= 1e-13 * a.max_abs());
        }
        assert_eq!(s.coupling.nrows(), 0);
    }

    #[test]
    fn thickness_scales_the_out_of_plane_coefficient() {
        let mu = ParameterSample::reference();
        let t1 = theta_a(&mu).unwrap();
        let t2 = theta_a(&mu.with_thickness(2.0)).unwrap();
        assert_eq!(t2[5], t1[5] / 16.0);
        assert_eq!(t2[8], t1[8]);
        assert_eq!(theta_m(&mu.with_thickness(2.0)).unwrap(), vec![720.0, 180.0]);
    }

    #[test]
    fn total_mass_is_the_volume() {
        let m = build_slab2([2, 1, 1], [3, 1, 1]).unwrap();
        let s = AffineSystem::assemble(&m).unwrap();
        let ones = DVector::from_fn(s.dofs.len(), |g, _| if g % 3 == 0 { 1.0 } else { 0.0 });
        let total = ones.dot(&s.mass[0].mul_vec(&ones));
        assert!((total - m.volume().unwrap()).abs() < 1e-13);
    }

    #[test]
    fn rigid_translation_has_no_strain_energy() {
        let m = build_test_geometry(TestGeometry::Bracket3).unwrap();
        let s = AffineSystem::assemble(&m).unwrap();
        for c in 0..3 {
            let u = DVector::from_fn(s.dofs.len(), |g, _| if g % 3 == c { 1.0 } else { 0.0 });
            for a in &s.stiffness {
                assert!(a.mul_vec(&u).amax() < 1e-10 * a.max_abs());
            }
            assert!(s.coupling.mul_vec(&u).amax() < 1e-13);
        }
    }
}
