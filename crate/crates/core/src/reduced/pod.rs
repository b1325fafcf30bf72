//! Proper orthogonal decomposition of eigenvector snapshots in the
//! reference mass inner product.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discretize::DetailedModel;
use crate::eigen::orient_columns;
use crate::error::{Error, Result};

use super::{GreedyConfig, ReducedModel};

/// Squared singular values below this fraction of the largest are treated
/// as numerically zero.
pub const POD_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct PodResult {
    /// Retained modes, orthonormal in the inner product used.
    pub modes: DMatrix<f64>,
    /// All singular values of the snapshot matrix, descending.
    pub singular_values: Vec<f64>,
}

/// Leading modes of `snapshots` in the inner product `m` via the snapshot
/// correlation matrix, at most `max_modes` of them.
pub fn pod_modes(snapshots: &DMatrix<f64>, m: &DMatrix<f64>, max_modes: usize) -> PodResult {
    let c = snapshots.transpose() * m * snapshots;
    let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..c.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let sigma2: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let top = sigma2.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..order.len())
        .filter(|&r| top > 0.0 && sigma2[r] > POD_TOL * top)
        .take(max_modes)
        .collect();
    let mut modes = DMatrix::zeros(snapshots.nrows(), keep.len());
    for (j, &r) in keep.iter().enumerate() {
        let w = eig.eigenvectors.column(order[r]);
        modes.set_column(j, &(snapshots * w / sigma2[r].sqrt()));
    }
    orient_columns(&mut modes);
    PodResult {
        modes,
        singular_values: sigma2.iter().map(|s| s.sqrt()).collect(),
    }
}

/// Initial basis: `K` detailed eigenvectors at `ceil(n_init / K)` training
/// parameters drawn with the configured seed, compressed by POD to at most
/// `n_init` modes.
pub fn pod_init(detailed: &DetailedModel, cfg: &GreedyConfig) -> Result<ReducedModel> {
    cfg.validate()?;
    let n_snap = cfg.n_init.div_ceil(cfg.k).min(cfg.training.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let picks = sample(&mut rng, cfg.training.len(), n_snap).into_vec();
    let n = detailed.dim();
    let k = cfg.k.min(n);
    let mut snapshots = DMatrix::zeros(n, picks.len() * k);
    for (s, &i) in picks.iter().enumerate() {
        let pairs = detailed.solve(&cfg.training[i], k)?;
        snapshots.columns_mut(s * k, k).copy_from(&pairs.vectors);
    }
    let m_ref = detailed.mass(&cfg.reference)?;
    let pod = pod_modes(&snapshots, &m_ref, cfg.n_init);
    let mut rm = ReducedModel::empty(detailed, cfg.reference, cfg.stability)?;
    rm.enrich(detailed, &pod.modes, cfg.n_init)?;
    if rm.is_empty() {
        return Err(Error::Config("initial snapshots are all zero".into()));
    }
    log::info!("initial basis of {} modes from {} snapshots", rm.len(), snapshots.ncols());
    Ok(rm)
}
