//! Batch studies: configuration, the offline/online/validate commands and
//! their persisted artifacts.

pub mod store;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{build_test_geometry, MultiPatchModel, TestGeometry};
use crate::material::{admissibility_report, ParamId, ParameterBox, ParameterSample};
use crate::reduced::{eigenfunction_error, greedy_enrich, pod_init, solve_reduced, Aggregation, GreedyConfig, GreedyStatus};
use crate::{DetailedModel, Error, Result};

/// Extra detailed eigenpairs computed during validation so that clusters
/// reaching past `K` are resolved.
pub const VALIDATION_EXTRA_PAIRS: usize = 3;

/// Named shipped geometry or a JSON file with a multi-patch model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySource {
    Named(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxPreset {
    #[default]
    P1,
    P2,
    Custom { lower: ParameterSample, upper: ParameterSample },
}

fn default_k() -> usize {
    5
}
fn default_training() -> usize {
    200
}
fn default_n_init() -> usize {
    25
}
fn default_n_max() -> usize {
    60
}
fn default_validation() -> usize {
    100
}
fn default_thickness() -> [f64; 2] {
    [0.5, 2.0]
}
fn default_stability() -> f64 {
    1.0
}
fn default_margin() -> f64 {
    1e-3
}

/// Configuration of one reduced-basis study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub geometry: GeometrySource,
    #[serde(default)]
    pub preset: BoxPreset,
    /// Thickness range `[lo, hi]` of the box.
    #[serde(default = "default_thickness")]
    pub thickness: [f64; 2],
    /// Pins the thickness to 1.
    #[serde(default)]
    pub fixed_thickness: bool,
    /// Parameters varied inside the box; all others are pinned to the
    /// reference values. `None` varies every parameter of the preset.
    #[serde(default)]
    pub varied: Option<Vec<ParamId>>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_training")]
    pub training_size: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default = "default_stability")]
    pub stability: f64,
    #[serde(default = "default_validation")]
    pub validation_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_margin")]
    pub c0: f64,
    #[serde(default = "default_margin")]
    pub c1: f64,
    pub output: PathBuf,
}

impl StudyConfig {
    /// Defaults for everything but the geometry and the output directory.
    pub fn new(geometry: GeometrySource, output: impl Into<PathBuf>) -> Self {
        Self {
            geometry,
            preset: BoxPreset::P1,
            thickness: default_thickness(),
            fixed_thickness: false,
            varied: None,
            k: default_k(),
            training_size: default_training(),
            n_init: default_n_init(),
            n_max: default_n_max(),
            tolerance: 0.0,
            aggregation: Aggregation::Relative,
            stability: default_stability(),
            validation_samples: default_validation(),
            seed: 0,
            c0: default_margin(),
            c1: default_margin(),
            output: output.into(),
        }
    }

    /// Reads a configuration; relative geometry and output paths are
    /// resolved against the directory of the file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = store::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        if let GeometrySource::File { file } = &mut cfg.geometry {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.thickness;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("thickness range [{lo}, {hi}] is invalid")));
        }
        if self.training_size == 0 {
            return Err(Error::Config("training set must not be empty".into()));
        }
        self.parameter_box()?;
        Ok(())
    }

    pub fn model(&self) -> Result<MultiPatchModel> {
        match &self.geometry {
            GeometrySource::Named(name) => build_test_geometry(name.parse::<TestGeometry>()?),
            GeometrySource::File { file } => MultiPatchModel::load(file),
        }
    }

    pub fn parameter_box(&self) -> Result<ParameterBox> {
        let bx = match &self.preset {
            BoxPreset::P1 => ParameterBox::p1(),
            BoxPreset::P2 => ParameterBox::p2(),
            BoxPreset::Custom { lower, upper } => ParameterBox::new(*lower, *upper)?,
        };
        let [lo, hi] = if self.fixed_thickness { [1.0, 1.0] } else { self.thickness };
        let mut bx = bx.with_range(ParamId::Thickness, lo, hi).with_margins(self.c0, self.c1);
        if let Some(varied) = &self.varied {
            bx = bx.restricted_to(varied, &ParameterSample::reference());
        }
        bx.check()?;
        Ok(bx)
    }

    pub fn training_set(&self) -> Result<Vec<ParameterSample>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.parameter_box()?.sample_many(self.training_size, &mut rng)
    }

    pub fn greedy_config(&self, training: Vec<ParameterSample>) -> GreedyConfig {
        GreedyConfig {
            k: self.k,
            training,
            n_init: self.n_init,
            n_max: self.n_max,
            tolerance: self.tolerance,
            aggregation: self.aggregation,
            stability: self.stability,
            seed: self.seed,
            reference: ParameterSample::reference(),
        }
    }
}

/// Outcome of an offline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSummary {
    pub output: PathBuf,
    pub n_constrained: usize,
    pub n: usize,
    pub status: Option<GreedyStatus>,
    pub initial_indicator: Option<f64>,
    pub final_indicator: Option<f64>,
    pub seconds: f64,
}

/// Assembly, POD initialization and greedy enrichment; writes the model
/// directory.
pub fn cmd_offline(cfg: &StudyConfig) -> Result<OfflineSummary> {
    let start = Instant::now();
    cfg.validate()?;
    let training = cfg.training_set()?;
    let detailed = DetailedModel::new(cfg.model()?)?;
    info!("detailed model: {} constrained unknowns", detailed.dim());
    let gcfg = cfg.greedy_config(training);
    gcfg.validate()?;
    let rm = greedy_enrich(&detailed, pod_init(&detailed, &gcfg)?, &gcfg)?;
    if rm.status == Some(GreedyStatus::Stagnated) {
        warn!("greedy stagnated at N = {}", rm.len());
    }
    let dir = &cfg.output;
    store::save_detailed(dir, &detailed)?;
    store::save_reduced(dir, &rm, cfg.k)?;
    store::write_json(&dir.join(store::STUDY_FILE), cfg)?;
    store::write_json(&dir.join(store::TRAINING_FILE), &gcfg.training)?;
    store::write_history(&dir.join(store::HISTORY_FILE), &rm.history)?;
    Ok(OfflineSummary {
        output: dir.clone(),
        n_constrained: detailed.dim(),
        n: rm.len(),
        status: rm.status,
        initial_indicator: rm.history.first().map(|s| s.max_indicator),
        final_indicator: rm.history.last().map(|s| s.max_indicator),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// One parameter or a list of parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleInput {
    One(ParameterSample),
    Many(Vec<ParameterSample>),
}

pub fn read_samples(path: &Path) -> Result<Vec<ParameterSample>> {
    Ok(match store::read_json::<SampleInput>(path)? {
        SampleInput::One(mu) => vec![mu],
        SampleInput::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineQuery {
    pub mu: ParameterSample,
    /// Whether `mu` lies inside the training box.
    pub in_box: bool,
    pub eigenvalues: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Eigenvectors in constrained coordinates, one entry per eigenpair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineReport {
    pub n: usize,
    pub queries: Vec<OnlineQuery>,
    pub seconds: f64,
}

/// Reduced eigenpairs and estimates at each parameter. `density` overrides
/// the density of every sample; `eigenvectors` lifts the reduced vectors
/// with the stored basis.
pub fn cmd_online(
    dir: &Path,
    samples: &[ParameterSample],
    k: Option<usize>,
    density: Option<f64>,
    eigenvectors: bool,
) -> Result<OnlineReport> {
    let cfg: StudyConfig = store::read_json(&dir.join(store::STUDY_FILE))?;
    let bx = cfg.parameter_box()?;
    let (rm, meta) = store::load_reduced(dir, eigenvectors)?;
    let k = k.unwrap_or(meta.k);
    let start = Instant::now();
    let mut queries = Vec::with_capacity(samples.len());
    for mu in samples {
        let mu = density.map_or(*mu, |rho| mu.with_density(rho));
        admissibility_report(&mu, &bx)?;
        let pairs = solve_reduced(&rm, &mu, k)?;
        let estimates = rm.estimate(&mu, &pairs)?;
        let vectors = eigenvectors.then(|| {
            let full = rm.expand(&pairs.vectors);
            full.column_iter().map(|c| c.iter().copied().collect()).collect()
        });
        queries.push(OnlineQuery {
            mu,
            in_box: bx.contains(&mu),
            eigenvalues: pairs.values,
            estimates,
            eigenvectors: vectors,
        });
    }
    Ok(OnlineReport {
        n: rm.len(),
        queries,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean and maximal errors of eigenpair `index` (1-based) at basis size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub n: usize,
    pub index: usize,
    pub mean_rel: f64,
    pub mean_abs: f64,
    pub mean_eigfun: f64,
    pub max_rel: f64,
    pub max_eigfun: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub rows: Vec<ValidationRow>,
    pub csv: PathBuf,
    /// Basis sizes at which higher eigenvalues have smaller relative but
    /// larger absolute errors than lower ones.
    pub ordering_holds: Vec<usize>,
}

impl ValidationReport {
    pub fn at(&self, n: usize) -> Vec<&ValidationRow> {
        self.rows.iter().filter(|r| r.n == n).collect()
    }
}

/// Basis sizes visited by the greedy together with the final size.
pub fn nested_sizes(history: &[crate::reduced::GreedyStep], k: usize, n: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = history.iter().map(|s| s.n).filter(|&m| m >= k && m <= n).collect();
    sizes.push(n);
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

/// Errors of the nested reduced models against detailed solves on
/// `samples` random parameters of the study box. Writes
/// `validation_<samples>_<seed>.csv` into the model directory.
pub fn cmd_validate(dir: &Path, samples: usize, seed: u64, sizes: Option<&[usize]>) -> Result<ValidationReport> {
    if samples == 0 {
        return Err(Error::Config("validation needs at least one sample".into()));
    }
    let cfg: StudyConfig = store::read_json(&dir.join(store::STUDY_FILE))?;
    let bx = cfg.parameter_box()?;
    let params = bx.sample_many(samples, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let detailed = store::load_detailed(dir)?;
    let (rm, meta) = store::load_reduced(dir, true)?;
    let k = meta.k.min(rm.len());
    let sizes = match sizes {
        Some(s) => s.iter().copied().filter(|&m| m >= k && m <= rm.len()).collect(),
        None => nested_sizes(&rm.history, k, rm.len()),
    };
    let models = sizes.iter().map(|&n| rm.truncated(n)).collect::<Result<Vec<_>>>()?;
    let k_det = (k + VALIDATION_EXTRA_PAIRS).min(detailed.dim());

    // per sample: per size: per index (rel, abs, eigfun)
    let per_sample: Vec<Vec<Vec<[f64; 3]>>> = params
        .par_iter()
        .map(|mu| -> Result<_> {
            let det = detailed.solve(mu, k_det)?;
            let m = detailed.mass(mu)?;
            models
                .iter()
                .map(|t| {
                    let red = solve_reduced(t, mu, k)?;
                    let err = eigenfunction_error(&det, &red.values, &t.expand(&red.vectors), &m);
                    Ok((0..k)
                        .map(|i| {
                            let abs = red.values[i] - det.values[i];
                            [abs / det.values[i], abs, err[i].error]
                        })
                        .collect())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let s = samples as f64;
    let mut rows = Vec::new();
    let mut ordering_holds = Vec::new();
    for (j, &n) in sizes.iter().enumerate() {
        let at_n: Vec<ValidationRow> = (0..k)
            .map(|i| {
                let vals = per_sample.iter().map(|p| p[j][i]);
                let (mut row, mut max_rel, mut max_ef) = ([0.0; 3], 0.0f64, 0.0f64);
                for v in vals {
                    row.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                    max_rel = max_rel.max(v[0]);
                    max_ef = max_ef.max(v[2]);
                }
                ValidationRow {
                    n,
                    index: i + 1,
                    mean_rel: row[0] / s,
                    mean_abs: row[1] / s,
                    mean_eigfun: row[2] / s,
                    max_rel,
                    max_eigfun: max_ef,
                }
            })
            .collect();
        let ordered = at_n
            .windows(2)
            .all(|w| w[1].mean_rel <= w[0].mean_rel && w[1].mean_abs >= w[0].mean_abs);
        if ordered {
            ordering_holds.push(n);
        }
        rows.extend(at_n);
    }
    let csv_path = dir.join(format!("validation_{samples}_{seed}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(ValidationReport {
        samples,
        rows,
        csv: csv_path,
        ordering_holds,
    })
}
