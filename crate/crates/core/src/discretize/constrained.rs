//! Orthonormal basis of the kernel of the coupling operator through a
//! Householder QR factorization with column pivoting of its transpose.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative threshold on the diagonal of the triangular factor below which
/// a coupling row is treated as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Householder factorization `B^T P = Q R` truncated at the numerical rank.
#[derive(Debug, Clone)]
struct PivotedQr {
    n: usize,
    rows: usize,
    rank: usize,
    /// Householder vectors, column `k` holds `v_k` in rows `k..n`.
    v: DMatrix<f64>,
    beta: Vec<f64>,
    /// Leading `rank` rows of the triangular factor, pivoted column order.
    r: DMatrix<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    fn new(b: &CsrMatrix) -> Result<Self> {
        if b.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("coupling operator has non-finite entries".into()));
        }
        let (rows, n) = (b.nrows(), b.ncols());
        let mut a = b.transpose().to_dense();
        let mut perm: Vec<usize> = (0..rows).collect();
        let steps = rows.min(n);
        let mut v = DMatrix::zeros(n, steps);
        let mut beta = Vec::with_capacity(steps);
        let mut rank = 0;
        let mut r00 = 0.0;
        for k in 0..steps {
            let (mut best, mut best_norm) = (k, -1.0);
            for j in k..rows {
                let s = a.column(j).rows(k, n - k).norm_squared();
                if s > best_norm {
                    best = j;
                    best_norm = s;
                }
            }
            let norm = best_norm.sqrt();
            if k == 0 {
                r00 = norm;
            }
            if norm <= RANK_TOL * r00 || norm == 0.0 {
                break;
            }
            a.swap_columns(k, best);
            perm.swap(k, best);
            let x0 = a[(k, k)];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let mut vk = a.column(k).rows(k, n - k).into_owned();
            vk[0] -= alpha;
            let vtv = vk.norm_squared();
            let bk = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
            for j in k..rows {
                let mut full = a.column_mut(j);
                let mut col = full.rows_mut(k, n - k);
                let s = bk * vk.dot(&col);
                col.axpy(-s, &vk, 1.0);
            }
            a[(k, k)] = alpha;
            for i in k + 1..n {
                a[(i, k)] = 0.0;
            }
            v.column_mut(k).rows_mut(k, n - k).copy_from(&vk);
            beta.push(bk);
            rank = k + 1;
        }
        let r = a.view((0, 0), (rank, rows)).clone_owned();
        Ok(Self {
            n,
            rows,
            rank,
            v: v.columns(0, rank).clone_owned(),
            beta,
            r,
            perm,
        })
    }

    /// Applies `Q = H_0 H_1 ... H_{rank-1}` to the columns of `x`.
    fn apply_q(&self, x: &mut DMatrix<f64>) {
        for k in (0..self.rank).rev() {
            let vk = self.v.column(k).rows(k, self.n - k).into_owned();
            for j in 0..x.ncols() {
                let mut full = x.column_mut(j);
                let mut col = full.rows_mut(k, self.n - k);
                let s = self.beta[k] * vk.dot(&col);
                col.axpy(-s, &vk, 1.0);
            }
        }
    }
}

/// Kernel basis `Z` of a coupling operator `B` with `B Z = 0` and
/// `Z^T Z = I`.
#[derive(Debug, Clone)]
pub struct ConstrainedSpace {
    z: DMatrix<f64>,
    qr: Option<PivotedQr>,
    n: usize,
    rows: usize,
}

impl ConstrainedSpace {
    pub fn identity(n: usize) -> Self {
        Self {
            z: DMatrix::identity(n, n),
            qr: None,
            n,
            rows: 0,
        }
    }

    /// Rebuilds a space from a stored basis; particular solutions are not
    /// available on such a space.
    pub fn from_basis(z: DMatrix<f64>, rows: usize) -> Self {
        let n = z.nrows();
        Self { z, qr: None, n, rows }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Dimension of the kernel.
    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    /// Dimension of the unconstrained space.
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.n - self.dim()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.rows
    }

    /// A solution of `B u = f` of the form `u = Q [y; 0]`; fails if the
    /// system is inconsistent beyond the rank tolerance.
    pub fn particular_solution(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        let Some(qr) = &self.qr else {
            if f.iter().all(|v| *v == 0.0) {
                return Ok(DVector::zeros(self.n));
            }
            return Err(Error::Dimension("no factorization available for a particular solution".into()));
        };
        if f.len() != qr.rows {
            return Err(Error::Dimension(format!("right-hand side has {} rows, expected {}", f.len(), qr.rows)));
        }
        let fp = DVector::from_fn(qr.rows, |i, _| f[qr.perm[i]]);
        let mut y = DVector::zeros(qr.rank);
        for i in 0..qr.rank {
            let s: f64 = (0..i).map(|k| qr.r[(k, i)] * y[k]).sum();
            y[i] = (fp[i] - s) / qr.r[(i, i)];
        }
        let scale = fp.amax().max(f64::MIN_POSITIVE);
        for i in qr.rank..qr.rows {
            let s: f64 = (0..qr.rank).map(|k| qr.r[(k, i)] * y[k]).sum();
            if (fp[i] - s).abs() > 1e-9 * scale {
                return Err(Error::Dimension("constraint system is inconsistent".into()));
            }
        }
        let mut u = DMatrix::zeros(qr.n, 1);
        u.view_mut((0, 0), (qr.rank, 1)).copy_from(&y);
        qr.apply_q(&mut u);
        Ok(u.column(0).into_owned())
    }
}

/// Orthonormal kernel basis of `b` (rows are constraints).
pub fn constrained_basis(b: &CsrMatrix) -> Result<ConstrainedSpace> {
    let n = b.ncols();
    if b.nrows() == 0 {
        return Ok(ConstrainedSpace::identity(n));
    }
    let qr = PivotedQr::new(b)?;
    if qr.rank < qr.rows {
        log::warn!("coupling operator has effective rank {} of {} rows", qr.rank, qr.rows);
    }
    let mut z = DMatrix::zeros(n, n - qr.rank);
    for j in 0..n - qr.rank {
        z[(qr.rank + j, j)] = 1.0;
    }
    qr.apply_q(&mut z);
    Ok(ConstrainedSpace {
        z,
        n,
        rows: qr.rows,
        qr: Some(qr),
    })
}

/// Numerical rank of `b` under [`RANK_TOL`].
pub fn numerical_rank(b: &CsrMatrix) -> Result<usize> {
    if b.nrows() == 0 {
        return Ok(0);
    }
    Ok(PivotedQr::new(b)?.rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_dense(&DMatrix::from_row_slice(
            3,
            5,
            &[1.0, -1.0, 0.0, 0.0, 0.5, 0.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.5],
        ))
    }

    #[test]
    fn kernel_is_orthonormal_and_annihilated() {
        let b = sample();
        let s = constrained_basis(&b).unwrap();
        assert_eq!(s.dim(), 2);
        let z = s.basis();
        assert!((z.transpose() * z - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!(b.mul_dense(z).amax() < 1e-14);
    }

    #[test]
    fn dependent_rows_reduce_the_rank() {
        let b = sample();
        let d = b.to_dense();
        let mut e = DMatrix::zeros(4, 5);
        e.rows_mut(0, 3).copy_from(&d);
        let sum = d.row(0) + d.row(1) * 2.0;
        e.row_mut(3).copy_from(&sum);
        let bb = CsrMatrix::from_dense(&e);
        assert_eq!(numerical_rank(&bb).unwrap(), 3);
        let s = constrained_basis(&bb).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(!s.is_full_rank());
        let f = &e * DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 3.0]);
        let u = s.particular_solution(&f).unwrap();
        assert!((&e * u - &f).amax() < 1e-12);
        let mut g = f.clone();
        g[3] += 1.0;
        assert!(s.particular_solution(&g).is_err());
    }

    #[test]
    fn empty_coupling_gives_identity() {
        let s = constrained_basis(&CsrMatrix::zeros(0, 4)).unwrap();
        assert_eq!(s.basis(), &DMatrix::<f64>::identity(4, 4));
    }
}
