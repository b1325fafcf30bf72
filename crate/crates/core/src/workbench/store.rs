//! On-disk layout of a model directory.
//!
//! ```text
//! DIR/study.json              configuration of the offline run
//! DIR/geometry.json           multi-patch model
//! DIR/training_set.json       training parameters
//! DIR/greedy_history.csv      one row per greedy iteration
//! DIR/detailed/system.json    sizes and parameter-function names
//! DIR/detailed/{stiffness,mass}_{q}.mtx, coupling.mtx, kernel.mtx
//! DIR/reduced/metadata.json   N, K, reference parameter, history, status
//! DIR/reduced/basis.mtx, {stiffness,mass}_{q}.mtx
//! DIR/reduced/estimator_gram.mtx, estimator_factor.mtx
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::discretize::{AffineSystem, ConstrainedSpace, DetailedModel, DofMap, THETA_A_NAMES, THETA_M_NAMES};
use crate::geometry::MultiPatchModel;
use crate::material::{ParamId, ParameterSample};
use crate::mtx;
use crate::reduced::{EstimatorData, GreedyStatus, GreedyStep, ReducedModel};
use crate::{Error, Result};

pub const STUDY_FILE: &str = "study.json";
pub const GEOMETRY_FILE: &str = "geometry.json";
pub const TRAINING_FILE: &str = "training_set.json";
pub const HISTORY_FILE: &str = "greedy_history.csv";
const DETAILED_DIR: &str = "detailed";
const REDUCED_DIR: &str = "reduced";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMetadata {
    pub n_dofs: usize,
    pub n_free: usize,
    pub n_constrained: usize,
    pub coupling_rows: usize,
    pub theta_a: Vec<String>,
    pub theta_m: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMetadata {
    pub n: usize,
    pub k: usize,
    pub n_constrained: usize,
    pub reference: ParameterSample,
    pub theta_a: Vec<String>,
    pub theta_m: Vec<String>,
    pub stability: f64,
    pub status: Option<GreedyStatus>,
    pub history: Vec<GreedyStep>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Parse {
        path: path.into(),
        msg: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn component_path(dir: &Path, kind: &str, q: usize) -> PathBuf {
    dir.join(format!("{kind}_{q}.mtx"))
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub fn save_detailed(dir: &Path, detailed: &DetailedModel) -> Result<()> {
    create_dir(dir)?;
    detailed.model.save(&dir.join(GEOMETRY_FILE))?;
    let sub = dir.join(DETAILED_DIR);
    create_dir(&sub)?;
    let sys = &detailed.system;
    for (q, a) in sys.stiffness.iter().enumerate() {
        mtx::write_sparse(&component_path(&sub, "stiffness", q), a)?;
    }
    for (q, m) in sys.mass.iter().enumerate() {
        mtx::write_sparse(&component_path(&sub, "mass", q), m)?;
    }
    mtx::write_sparse(&sub.join("coupling.mtx"), &sys.coupling)?;
    mtx::write_dense(&sub.join("kernel.mtx"), detailed.space.basis())?;
    let meta = SystemMetadata {
        n_dofs: sys.dofs.len(),
        n_free: sys.dofs.free().len(),
        n_constrained: detailed.dim(),
        coupling_rows: sys.coupling.nrows(),
        theta_a: names(&THETA_A_NAMES),
        theta_m: names(&THETA_M_NAMES),
    };
    write_json(&sub.join("system.json"), &meta)
}

pub fn load_detailed(dir: &Path) -> Result<DetailedModel> {
    let model = MultiPatchModel::load(&dir.join(GEOMETRY_FILE))?;
    let sub = dir.join(DETAILED_DIR);
    let meta: SystemMetadata = read_json(&sub.join("system.json"))?;
    let dofs = DofMap::new(&model);
    if dofs.len() != meta.n_dofs || dofs.free().len() != meta.n_free {
        return Err(Error::Dimension(format!(
            "{}: stored system has {} dofs ({} free), geometry yields {} ({} free)",
            sub.display(),
            meta.n_dofs,
            meta.n_free,
            dofs.len(),
            dofs.free().len()
        )));
    }
    let stiffness = (0..meta.theta_a.len())
        .map(|q| mtx::read_sparse(&component_path(&sub, "stiffness", q)))
        .collect::<Result<Vec<_>>>()?;
    let mass = (0..meta.theta_m.len())
        .map(|q| mtx::read_sparse(&component_path(&sub, "mass", q)))
        .collect::<Result<Vec<_>>>()?;
    let coupling = mtx::read_sparse(&sub.join("coupling.mtx"))?;
    let z = mtx::read_dense(&sub.join("kernel.mtx"))?;
    if z.nrows() != meta.n_free || z.ncols() != meta.n_constrained {
        return Err(Error::Dimension(format!(
            "kernel basis is {}x{}, expected {}x{}",
            z.nrows(),
            z.ncols(),
            meta.n_free,
            meta.n_constrained
        )));
    }
    let system = AffineSystem {
        dofs,
        stiffness,
        mass,
        coupling,
    };
    let space = ConstrainedSpace::from_basis(z, meta.coupling_rows);
    Ok(DetailedModel::from_parts(model, system, space))
}

pub fn save_reduced(dir: &Path, rm: &ReducedModel, k: usize) -> Result<()> {
    let sub = dir.join(REDUCED_DIR);
    create_dir(&sub)?;
    mtx::write_dense(&sub.join("basis.mtx"), &rm.basis)?;
    for (q, a) in rm.stiffness.iter().enumerate() {
        mtx::write_dense(&component_path(&sub, "stiffness", q), a)?;
    }
    for (q, m) in rm.mass.iter().enumerate() {
        mtx::write_dense(&component_path(&sub, "mass", q), m)?;
    }
    mtx::write_dense(&sub.join("estimator_gram.mtx"), rm.estimator.gram())?;
    mtx::write_dense(&sub.join("estimator_factor.mtx"), rm.estimator.factor())?;
    let meta = ReducedMetadata {
        n: rm.len(),
        k,
        n_constrained: rm.basis.nrows(),
        reference: rm.reference,
        theta_a: names(&THETA_A_NAMES),
        theta_m: names(&THETA_M_NAMES),
        stability: rm.estimator.stability,
        status: rm.status,
        history: rm.history.clone(),
    };
    write_json(&sub.join("metadata.json"), &meta)
}

pub fn load_reduced_metadata(dir: &Path) -> Result<ReducedMetadata> {
    read_json(&dir.join(REDUCED_DIR).join("metadata.json"))
}

/// Loads the reduced model. Without `with_basis` the basis matrix is left
/// with zero rows so that online queries never read detailed-space data.
pub fn load_reduced(dir: &Path, with_basis: bool) -> Result<(ReducedModel, ReducedMetadata)> {
    let sub = dir.join(REDUCED_DIR);
    let meta = load_reduced_metadata(dir)?;
    let read_square = |kind: &str, q: usize| -> Result<DMatrix<f64>> {
        let path = component_path(&sub, kind, q);
        let a = mtx::read_dense(&path)?;
        if a.shape() != (meta.n, meta.n) {
            return Err(Error::Dimension(format!("{}: expected {}x{}", path.display(), meta.n, meta.n)));
        }
        Ok(a)
    };
    let stiffness = (0..meta.theta_a.len())
        .map(|q| read_square("stiffness", q))
        .collect::<Result<Vec<_>>>()?;
    let mass = (0..meta.theta_m.len())
        .map(|q| read_square("mass", q))
        .collect::<Result<Vec<_>>>()?;
    let basis = if with_basis {
        mtx::read_dense(&sub.join("basis.mtx"))?
    } else {
        DMatrix::zeros(0, meta.n)
    };
    let estimator = EstimatorData::from_stored(
        meta.theta_a.len(),
        meta.theta_m.len(),
        meta.n,
        mtx::read_dense(&sub.join("estimator_factor.mtx"))?,
        mtx::read_dense(&sub.join("estimator_gram.mtx"))?,
        meta.stability,
    )?;
    let rm = ReducedModel {
        reference: meta.reference,
        basis,
        stiffness,
        mass,
        estimator,
        history: meta.history.clone(),
        status: meta.status,
    };
    Ok((rm, meta))
}

/// Greedy history as CSV: basis size, the selected parameter, the maximal
/// indicator over the training set, the number of added vectors and the
/// training index.
pub fn write_history(path: &Path, history: &[GreedyStep]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["n".to_string()];
    header.extend(ParamId::ALL.iter().map(|p| p.name().to_string()));
    header.extend(["max_indicator", "added", "index"].map(String::from));
    w.write_record(&header)?;
    for s in history {
        let mut row = vec![s.n.to_string()];
        row.extend(s.mu.to_array().iter().map(|v| format!("{v:e}")));
        row.extend([format!("{:e}", s.max_indicator), s.added.to_string(), s.index.to_string()]);
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
