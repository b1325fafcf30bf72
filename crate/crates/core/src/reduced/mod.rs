//! Reduced-basis layer: mass-orthonormal bases in constrained coordinates,
//! POD initialization, greedy enrichment driven by the residual estimator,
//! reduced eigensolves and error measures.

mod estimator;
mod greedy;
mod metrics;
mod pod;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discretize::{dense_combination, theta_a, theta_m, DetailedModel};
use crate::eigen::{solve_gevp, EigenPairs};
use crate::error::{Error, Result};
use crate::material::ParameterSample;

pub use estimator::EstimatorData;
pub use greedy::{greedy_enrich, indicators, Aggregation, GreedyConfig, GreedyStatus, GreedyStep};
pub use metrics::{eigenfunction_error, EigenfunctionError};
pub use pod::{pod_init, pod_modes, PodResult};

/// Relative norm below which an orthogonalized candidate is dropped.
pub const DROP_TOL: f64 = 1e-10;

/// Reduced model answering online queries without touching the detailed
/// space (except for lifting eigenvectors).
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub reference: ParameterSample,
    /// Basis in constrained coordinates, orthonormal in the reference mass.
    pub basis: DMatrix<f64>,
    pub stiffness: Vec<DMatrix<f64>>,
    pub mass: Vec<DMatrix<f64>>,
    pub estimator: EstimatorData,
    pub history: Vec<GreedyStep>,
    pub status: Option<GreedyStatus>,
}

/// Result of an online query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineResult {
    pub eigenvalues: Vec<f64>,
    pub estimates: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<f64>>>,
}

impl ReducedModel {
    /// Empty model at `reference` for the given detailed problem.
    pub fn empty(detailed: &DetailedModel, reference: ParameterSample, stability: f64) -> Result<Self> {
        let a_ref = detailed.stiffness(&reference)?;
        Ok(Self {
            reference,
            basis: DMatrix::zeros(detailed.dim(), 0),
            stiffness: vec![DMatrix::zeros(0, 0); detailed.qa()],
            mass: vec![DMatrix::zeros(0, 0); detailed.qm()],
            estimator: EstimatorData::new(&a_ref, detailed.qa(), detailed.qm(), stability)?,
            history: Vec::new(),
            status: None,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Orthonormalizes `candidates` against the basis in the reference mass
    /// and appends the independent ones, up to `limit`. Reduced components
    /// and estimator data are extended by the new rows and columns only.
    pub fn enrich(&mut self, detailed: &DetailedModel, candidates: &DMatrix<f64>, limit: usize) -> Result<usize> {
        let m_ref = detailed.mass(&self.reference)?;
        let new = orthonormalize_against(&self.basis, &m_ref, candidates, limit);
        if new.ncols() == 0 {
            return Ok(0);
        }
        for (r, full) in self.stiffness.iter_mut().zip(detailed.stiffness_components()) {
            *r = extend_projection(r, &self.basis, &new, full);
        }
        for (r, full) in self.mass.iter_mut().zip(detailed.mass_components()) {
            *r = extend_projection(r, &self.basis, &new, full);
        }
        self.estimator
            .extend(detailed.stiffness_components(), detailed.mass_components(), &new)?;
        let n_old = self.basis.ncols();
        let mut basis = DMatrix::zeros(self.basis.nrows(), n_old + new.ncols());
        basis.columns_mut(0, n_old).copy_from(&self.basis);
        basis.columns_mut(n_old, new.ncols()).copy_from(&new);
        self.basis = basis;
        Ok(new.ncols())
    }

    pub fn reduced_stiffness(&self, mu: &ParameterSample) -> Result<DMatrix<f64>> {
        Ok(dense_combination(&theta_a(mu)?, &self.stiffness))
    }

    pub fn reduced_mass(&self, mu: &ParameterSample) -> Result<DMatrix<f64>> {
        Ok(dense_combination(&theta_m(mu)?, &self.mass))
    }

    /// Residual estimates of reduced pairs at `mu`.
    pub fn estimate(&self, mu: &ParameterSample, pairs: &EigenPairs) -> Result<Vec<f64>> {
        self.estimator.online_estimate(&theta_a(mu)?, &theta_m(mu)?, pairs)
    }

    /// Eigenpairs and estimates at `mu`.
    pub fn query(&self, mu: &ParameterSample, k: usize, coefficients: bool) -> Result<OnlineResult> {
        let pairs = solve_reduced(self, mu, k)?;
        let estimates = self.estimate(mu, &pairs)?;
        let coefficients = coefficients.then(|| {
            (0..pairs.len())
                .map(|i| pairs.vectors.column(i).iter().copied().collect())
                .collect()
        });
        Ok(OnlineResult {
            eigenvalues: pairs.values,
            estimates,
            coefficients,
        })
    }

    /// Model restricted to the first `n` basis vectors (nested subspace).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::Dimension(format!("basis has {} vectors, requested {n}", self.len())));
        }
        let cut = |v: &Vec<DMatrix<f64>>| v.iter().map(|m| m.view((0, 0), (n, n)).into_owned()).collect();
        Ok(Self {
            reference: self.reference,
            basis: self.basis.columns(0, n).into_owned(),
            stiffness: cut(&self.stiffness),
            mass: cut(&self.mass),
            estimator: self.estimator.truncated(n)?,
            history: self.history.clone(),
            status: self.status,
        })
    }

    /// Reduced coefficient vectors to constrained coordinates.
    pub fn expand(&self, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * coeffs
    }
}

/// The `k` smallest pairs of the reduced pencil at `mu`, solved at unit
/// density and rescaled.
pub fn solve_reduced(rm: &ReducedModel, mu: &ParameterSample, k: usize) -> Result<EigenPairs> {
    let a = rm.reduced_stiffness(mu)?;
    theta_m(mu)?;
    let m = rm.reduced_mass(&mu.with_density(1.0))?;
    let pairs = solve_gevp(&a, &m, k).map_err(|e| match e {
        Error::NotPositiveDefinite(_) => Error::NotPositiveDefinite("reduced mass matrix; the basis is corrupted".into()),
        other => other,
    })?;
    Ok(pairs.with_mass_scaled(mu.density))
}

/// `[V W]^T A [V W]` from `V^T A V`.
fn extend_projection(old: &DMatrix<f64>, v: &DMatrix<f64>, w: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = (v.ncols(), w.ncols());
    let aw = a * w;
    let vaw = v.transpose() * &aw;
    let waw = w.transpose() * &aw;
    let mut out = DMatrix::zeros(n + k, n + k);
    out.view_mut((0, 0), (n, n)).copy_from(old);
    out.view_mut((0, n), (n, k)).copy_from(&vaw);
    out.view_mut((n, 0), (k, n)).copy_from(&vaw.transpose());
    out.view_mut((n, n), (k, k)).copy_from(&((&waw + waw.transpose()) * 0.5));
    out
}

/// Modified Gram-Schmidt with one re-orthogonalization pass in the inner
/// product `m`. Candidates whose remainder falls below [`DROP_TOL`] of their
/// norm are skipped; at most `limit` vectors are returned.
pub fn orthonormalize_against(basis: &DMatrix<f64>, m: &DMatrix<f64>, candidates: &DMatrix<f64>, limit: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut mcols: Vec<DVector<f64>> = cols.iter().map(|c| m * c).collect();
    let n0 = cols.len();
    for cand in candidates.column_iter() {
        if cols.len() - n0 >= limit {
            break;
        }
        let mut v = cand.into_owned();
        let norm0 = v.dot(&(m * &v)).max(0.0).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (b, mb) in cols.iter().zip(&mcols) {
                let c = mb.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let mv = m * &v;
        let norm = v.dot(&mv).max(0.0).sqrt();
        if norm <= DROP_TOL * norm0 {
            continue;
        }
        cols.push(v / norm);
        mcols.push(mv / norm);
    }
    let new = &cols[n0..];
    let mut out = DMatrix::zeros(basis.nrows(), new.len());
    for (j, c) in new.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}
