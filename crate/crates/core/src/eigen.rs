//! Dense generalized symmetric-definite eigensolvers: a direct solver for
//! `A x = lambda M x` and a saddle-point solver that keeps the coupling as a
//! Lagrange multiplier.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative gap below which neighbouring eigenvalues form one cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Ascending eigenvalues with `M`-orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    /// Pairs of the pencil `(A, rho M)` from those of `(A, M)`.
    pub fn with_mass_scaled(mut self, rho: f64) -> Self {
        for l in &mut self.values {
            *l /= rho;
        }
        self.vectors /= rho.sqrt();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// Maximal runs of eigenvalues whose consecutive relative gaps are below
    /// `gap`.
    pub fn clusters(&self, gap: f64) -> Vec<Range<usize>> {
        clusters(&self.values, gap)
    }

    /// Largest `||A x - lambda M x|| / ||A x||` over the pairs.
    pub fn max_relative_residual(&self, a: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
        (0..self.len())
            .map(|i| {
                let x = self.vectors.column(i);
                let ax = a * x;
                let r = &ax - m * x * self.values[i];
                r.norm() / ax.norm().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

pub fn clusters(values: &[f64], gap: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            (b - a).abs() > gap * a.abs().max(b.abs())
        };
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Flips each column so its entry of largest magnitude (first on ties) is
/// positive.
pub fn orient_columns(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col.len() > 0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn check_pencil(a: &DMatrix<f64>, m: &DMatrix<f64>, k: usize) -> Result<usize> {
    let n = a.nrows();
    if a.ncols() != n || m.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "pencil shapes {:?} and {:?} are not square and equal",
            a.shape(),
            m.shape()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::EigenCountOutOfRange { requested: k, dim: n });
    }
    Ok(n)
}

/// Full eigendecomposition of a symmetric matrix.
fn symmetric_eigen(c: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = c.nrows();
    let fc = faer::Mat::<f64>::from_fn(n, n, |i, j| c[(i, j)]);
    let eig = fc
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("symmetric eigensolver: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let values = (0..n).map(|i| s[i]).collect();
    Ok((values, DMatrix::from_fn(n, n, |i, j| u[(i, j)])))
}

/// `L^-1 B L^-T` symmetrized.
fn congruence(l: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let x = l.solve_lower_triangular(b)?;
    let c = l.solve_lower_triangular(&x.transpose())?;
    Some((&c + c.transpose()) * 0.5)
}

/// The `k` smallest eigenpairs of the symmetric pencil `(A, M)`, sorted
/// ascending, with `M`-orthonormal vectors.
///
/// With `A = L L^T` positive definite the largest eigenvalues `1 / lambda`
/// of `L^-1 M L^-T` are computed, which keeps the relative accuracy of the
/// smallest `lambda`. A semidefinite `A` falls back to `L^-1 A L^-T` with
/// `M = L L^T`.
pub fn solve_gevp(a: &DMatrix<f64>, m: &DMatrix<f64>, k: usize) -> Result<EigenPairs> {
    let n = check_pencil(a, m, k)?;
    let singular = || Error::NotPositiveDefinite("pencil factor is singular".into());
    if let Some(chol) = a.clone().cholesky() {
        let l = chol.l();
        let c = congruence(&l, m).ok_or_else(singular)?;
        let (nu, y) = symmetric_eigen(&c)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| nu[j].total_cmp(&nu[i]).then(i.cmp(&j)));
        if !(nu[order[n - 1]] > 0.0) {
            return Err(Error::NotPositiveDefinite("mass matrix".into()));
        }
        let values: Vec<f64> = order[..k].iter().map(|&i| 1.0 / nu[i]).collect();
        let w = DMatrix::from_fn(n, k, |r, c| y[(r, order[c])] / nu[order[c]].sqrt());
        let mut vectors = l.transpose().solve_upper_triangular(&w).ok_or_else(singular)?;
        orient_columns(&mut vectors);
        return Ok(EigenPairs { values, vectors });
    }
    let l = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?
        .l();
    let c = congruence(&l, a).ok_or_else(singular)?;
    let (eigenvalues, eigenvectors) = symmetric_eigen(&c)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order[..k].iter().map(|&i| eigenvalues[i]).collect();
    let w = DMatrix::from_fn(n, k, |r, c| eigenvectors[(r, order[c])]);
    let mut vectors = l.transpose().solve_upper_triangular(&w).ok_or_else(singular)?;
    orient_columns(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// Eigenpairs of the saddle-point problem together with the multiplier of
/// each eigenvector.
#[derive(Debug, Clone)]
pub struct SaddlePointPairs {
    pub pairs: EigenPairs,
    /// Multiplier coefficients, one column per eigenpair.
    pub multipliers: DMatrix<f64>,
    pub iterations: usize,
}

/// Largest `||A u + B^T tau - lambda M u|| / ||A u||` over the pairs.
pub fn saddle_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, m: &DMatrix<f64>, sp: &SaddlePointPairs) -> f64 {
    (0..sp.pairs.len())
        .map(|i| {
            let u = sp.pairs.vectors.column(i);
            let au = a * u;
            let r = &au + b.transpose() * sp.multipliers.column(i) - m * u * sp.pairs.values[i];
            r.norm() / au.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Smallest eigenpairs of `A u + B^T tau = lambda M u`, `B u = 0`, by block
/// inverse iteration on the saddle-point operator with Rayleigh-Ritz
/// extraction. Requires `B` of full row rank.
pub fn saddle_point_evp(a: &DMatrix<f64>, b: &DMatrix<f64>, m: &DMatrix<f64>, k: usize) -> Result<SaddlePointPairs> {
    let n = check_pencil(a, m, k)?;
    let r = b.nrows();
    if r > 0 && b.ncols() != n {
        return Err(Error::Dimension(format!("coupling has {} columns, expected {n}", b.ncols())));
    }
    if r == 0 {
        let pairs = solve_gevp(a, m, k)?;
        return Ok(SaddlePointPairs {
            multipliers: DMatrix::zeros(0, k),
            pairs,
            iterations: 0,
        });
    }
    let rank = b.clone().svd(false, false).rank(crate::discretize::RANK_TOL * b.amax().max(f64::MIN_POSITIVE));
    if rank < r {
        return Err(Error::RankDeficient { rank, rows: r });
    }
    if k > n - r {
        return Err(Error::EigenCountOutOfRange { requested: k, dim: n - r });
    }
    let mut kkt = DMatrix::zeros(n + r, n + r);
    kkt.view_mut((0, 0), (n, n)).copy_from(a);
    kkt.view_mut((0, n), (n, r)).copy_from(&b.transpose());
    kkt.view_mut((n, 0), (r, n)).copy_from(b);
    let lu = kkt.lu();
    let solve = |rhs_top: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut rhs = DMatrix::zeros(n + r, rhs_top.ncols());
        rhs.view_mut((0, 0), (n, rhs_top.ncols())).copy_from(rhs_top);
        lu.solve(&rhs)
            .ok_or_else(|| Error::NotPositiveDefinite("saddle-point operator is singular".into()))
    };

    let p = (2 * k).max(k + 8).min(n - r);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let mut prev: Option<Vec<f64>> = None;
    let max_iter = 2000;
    for it in 1..=max_iter {
        let y = solve(&(m * &x))?.rows(0, n).into_owned();
        let ar = y.transpose() * a * &y;
        let mr = y.transpose() * m * &y;
        let rr = solve_gevp(&((&ar + ar.transpose()) * 0.5), &((&mr + mr.transpose()) * 0.5), p)?;
        x = &y * &rr.vectors;
        let converged = prev.as_ref().is_some_and(|old| {
            (0..k).all(|i| (rr.values[i] - old[i]).abs() <= 1e-14 * rr.values[i].abs())
        });
        prev = Some(rr.values.clone());
        if converged {
            let values = rr.values[..k].to_vec();
            let mut vectors = x.columns(0, k).into_owned();
            orient_columns(&mut vectors);
            let rhs = m * &vectors * DMatrix::from_diagonal(&DVector::from_column_slice(&values));
            let s = solve(&rhs)?;
            let multipliers = s.rows(n, r).into_owned();
            return Ok(SaddlePointPairs {
                pairs: EigenPairs { values, vectors },
                multipliers,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(format!("saddle-point iteration after {max_iter} steps")))
}
