//! Offline/online decomposition of the residual dual norm.
//!
//! For a reduced pair `(lambda, V c)` the residual functional has the Riesz
//! representative `sum_{n,q} w_{n,q} xi_{n,q}` where `xi_{n,q}` solves
//! `A_ref xi = K_q zeta_n` (stiffness blocks) or `A_ref xi = M_q zeta_n` (mass
//! blocks). With `A_ref = L L^T` and `Y = [L^-1 K_q zeta_n ...] = Q R`, the
//! dual norm is `|R w|`, which avoids the cancellation of `w^T G w`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::eigen::EigenPairs;
use crate::error::{Error, Result};

/// Relative norm below which a new Riesz block is treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
struct OfflineState {
    chol: Cholesky<f64, Dyn>,
    /// Orthonormal basis of the span of the Riesz vectors (in `L^-1` scaled
    /// coordinates).
    q: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimatorData {
    qa: usize,
    qm: usize,
    n: usize,
    /// Upper trapezoidal factor `R` with `Y = Q R`, columns ordered
    /// `n * (qa + qm) + q`.
    factor: DMatrix<f64>,
    /// `R^T R`: reference-energy inner products of all Riesz vectors.
    gram: DMatrix<f64>,
    pub stability: f64,
    offline: Option<OfflineState>,
}

impl EstimatorData {
    /// Empty estimator for the reference stiffness `a_ref`.
    pub fn new(a_ref: &DMatrix<f64>, qa: usize, qm: usize, stability: f64) -> Result<Self> {
        let chol = a_ref
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("reference stiffness on the constrained space".into()))?;
        let dim = a_ref.nrows();
        Ok(Self {
            qa,
            qm,
            n: 0,
            factor: DMatrix::zeros(0, 0),
            gram: DMatrix::zeros(0, 0),
            stability,
            offline: Some(OfflineState {
                chol,
                q: DMatrix::zeros(dim, 0),
            }),
        })
    }

    /// Rebuilds online-only data from stored factor and Gram matrices.
    pub fn from_stored(qa: usize, qm: usize, n: usize, factor: DMatrix<f64>, gram: DMatrix<f64>, stability: f64) -> Result<Self> {
        let p = n * (qa + qm);
        if factor.ncols() != p || gram.shape() != (p, p) {
            return Err(Error::Dimension(format!(
                "estimator blocks {:?}/{:?} do not match {n} basis vectors with {} components",
                factor.shape(),
                gram.shape(),
                qa + qm
            )));
        }
        Ok(Self {
            qa,
            qm,
            n,
            factor,
            gram,
            stability,
            offline: None,
        })
    }

    pub fn qa(&self) -> usize {
        self.qa
    }

    pub fn qm(&self) -> usize {
        self.qm
    }

    /// Number of basis vectors covered.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn can_extend(&self) -> bool {
        self.offline.is_some()
    }

    /// Appends the Riesz blocks of new basis vectors `cols`; only the new
    /// rows and columns of the factor and Gram matrix are computed.
    pub fn extend(&mut self, stiffness: &[DMatrix<f64>], mass: &[DMatrix<f64>], cols: &DMatrix<f64>) -> Result<()> {
        if stiffness.len() != self.qa || mass.len() != self.qm {
            return Err(Error::Dimension("component counts differ from the estimator layout".into()));
        }
        let st = self
            .offline
            .as_mut()
            .ok_or_else(|| Error::Config("estimator was loaded without offline data".into()))?;
        let l = st.chol.l();
        let qt = self.qa + self.qm;
        let p_old = self.n * qt;
        let p_new = p_old + cols.ncols() * qt;
        let mut factor = DMatrix::zeros(self.factor.nrows(), p_new);
        factor.view_mut((0, 0), self.factor.shape()).copy_from(&self.factor);
        let mut rows = self.factor.nrows();
        for c in 0..cols.ncols() {
            let zeta = cols.column(c);
            for (qi, comp) in stiffness.iter().chain(mass).enumerate() {
                let f = comp * zeta;
                let y = l
                    .solve_lower_triangular(&f)
                    .ok_or_else(|| Error::NotPositiveDefinite("reference stiffness factor".into()))?;
                let (h, resid) = project_out(&st.q, y);
                let norm = resid.norm();
                let scale = h.norm().hypot(norm);
                let new_row = norm > DEPENDENCE_TOL * scale && st.q.ncols() < st.q.nrows();
                if new_row {
                    st.q = st.q.clone().insert_column(st.q.ncols(), 0.0);
                    let last = st.q.ncols() - 1;
                    st.q.set_column(last, &(resid / norm));
                    factor = factor.insert_row(rows, 0.0);
                    rows += 1;
                }
                let j = p_old + c * qt + qi;
                for (i, v) in h.iter().enumerate() {
                    factor[(i, j)] = *v;
                }
                if new_row {
                    factor[(rows - 1, j)] = norm;
                }
            }
        }
        let gram_new = factor.transpose() * &factor;
        self.gram = (&gram_new + gram_new.transpose()) * 0.5;
        self.factor = factor;
        self.n += cols.ncols();
        Ok(())
    }

    /// Estimator restricted to the first `n` basis vectors.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.n {
            return Err(Error::Dimension(format!("cannot truncate {} basis vectors to {n}", self.n)));
        }
        let p = n * (self.qa + self.qm);
        let factor = self.factor.columns(0, p).into_owned();
        let rows = (0..factor.nrows()).rev().find(|&i| factor.row(i).amax() != 0.0).map_or(0, |i| i + 1);
        Ok(Self {
            qa: self.qa,
            qm: self.qm,
            n,
            factor: factor.rows(0, rows).into_owned(),
            gram: self.gram.view((0, 0), (p, p)).into_owned(),
            stability: self.stability,
            offline: None,
        })
    }

    /// Weight vector of one reduced pair.
    pub fn weights(&self, theta_a: &[f64], theta_m: &[f64], lambda: f64, coeffs: &DVector<f64>) -> DVector<f64> {
        let qt = self.qa + self.qm;
        let mut w = DVector::zeros(self.n * qt);
        for n in 0..self.n {
            for (q, t) in theta_a.iter().enumerate() {
                w[n * qt + q] = t * coeffs[n];
            }
            for (q, t) in theta_m.iter().enumerate() {
                w[n * qt + self.qa + q] = -lambda * t * coeffs[n];
            }
        }
        w
    }

    /// Dual norm of the residual of every pair, scaled by the stability
    /// constant. Cost depends only on the reduced dimensions.
    pub fn online_estimate(&self, theta_a: &[f64], theta_m: &[f64], pairs: &EigenPairs) -> Result<Vec<f64>> {
        if theta_a.len() != self.qa || theta_m.len() != self.qm || pairs.vectors.nrows() != self.n {
            return Err(Error::Dimension("online estimate inputs do not match the estimator".into()));
        }
        Ok((0..pairs.len())
            .map(|i| {
                let w = self.weights(theta_a, theta_m, pairs.values[i], &pairs.vector(i));
                self.stability * (&self.factor * w).norm()
            })
            .collect())
    }

    /// Same quantity through the Gram matrix, `sqrt(max(w^T G w, 0))`.
    pub fn gram_estimate(&self, theta_a: &[f64], theta_m: &[f64], lambda: f64, coeffs: &DVector<f64>) -> f64 {
        let w = self.weights(theta_a, theta_m, lambda, coeffs);
        self.stability * w.dot(&(&self.gram * &w)).max(0.0).sqrt()
    }
}

/// Two passes of classical Gram-Schmidt against the orthonormal columns of
/// `q`; returns the coefficients and the remainder.
fn project_out(q: &DMatrix<f64>, mut y: DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let mut h = DVector::zeros(q.ncols());
    if q.ncols() == 0 {
        return (h, y);
    }
    for _ in 0..2 {
        let c = q.transpose() * &y;
        y -= q * &c;
        h += c;
    }
    (h, y)
}
