//! Subspace-based error of reduced eigenfunctions.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::{EigenPairs, CLUSTER_GAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionError {
    /// `||u - P u||_M` with `P` the `M`-orthogonal projection onto the
    /// matched detailed eigenspace.
    pub error: f64,
    /// Indices of the matched detailed cluster.
    pub cluster: Range<usize>,
    /// Set when two clusters were equally close.
    pub ambiguous: bool,
}

/// Error of each reduced eigenvector (columns of `reduced_vectors`,
/// `M`-normalized, in detailed coordinates) against the detailed eigenspace
/// whose eigenvalue cluster is nearest to the reduced eigenvalue. Invariant
/// under sign flips and rotations within a cluster.
pub fn eigenfunction_error(
    detailed: &EigenPairs,
    reduced_values: &[f64],
    reduced_vectors: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Vec<EigenfunctionError> {
    let clusters = detailed.clusters(CLUSTER_GAP);
    reduced_values
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let dist: Vec<f64> = clusters
                .iter()
                .map(|c| {
                    c.clone()
                        .map(|j| (lam - detailed.values[j]).abs() / detailed.values[j].abs())
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let mut best = 0;
            for (c, d) in dist.iter().enumerate() {
                if *d < dist[best] {
                    best = c;
                }
            }
            let ambiguous = dist.iter().enumerate().any(|(c, d)| {
                c != best && (d - dist[best]).abs() <= 1e-12 * d.max(dist[best]).max(f64::MIN_POSITIVE)
            });
            let cluster = clusters[best].clone();
            let u = reduced_vectors.column(i);
            let mu = m * u;
            let mut e = u.into_owned();
            for j in cluster.clone() {
                let v = detailed.vectors.column(j);
                e.axpy(-v.dot(&mu), &v, 1.0);
            }
            EigenfunctionError {
                error: e.dot(&(m * &e)).max(0.0).sqrt(),
                cluster,
                ambiguous,
            }
        })
        .collect()
}
