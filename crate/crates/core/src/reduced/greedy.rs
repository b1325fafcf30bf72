//! Greedy enrichment over a training set with the aggregated residual
//! indicator of several eigenpairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::DetailedModel;
use crate::error::{Error, Result};
use crate::material::ParameterSample;

use super::{solve_reduced, ReducedModel};

/// How the estimates of the `K` pairs are combined into one indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `max_i eta_i / lambda_i`.
    #[default]
    Relative,
    /// `max_i eta_i`.
    Absolute,
}

impl Aggregation {
    pub fn aggregate(self, values: &[f64], estimates: &[f64]) -> f64 {
        estimates
            .iter()
            .zip(values)
            .map(|(e, l)| match self {
                Aggregation::Relative => e / l.abs(),
                Aggregation::Absolute => *e,
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct GreedyConfig {
    pub k: usize,
    pub training: Vec<ParameterSample>,
    pub n_init: usize,
    pub n_max: usize,
    pub tolerance: f64,
    pub aggregation: Aggregation,
    pub stability: f64,
    pub seed: u64,
    pub reference: ParameterSample,
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.n_init == 0 {
            return Err(Error::Config("initial basis size must be at least 1".into()));
        }
        if self.n_max < self.n_init {
            return Err(Error::Config(format!(
                "maximal basis size {} below initial size {}",
                self.n_max, self.n_init
            )));
        }
        if self.training.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        if !(self.stability > 0.0) || !(self.tolerance >= 0.0) {
            return Err(Error::Config("stability must be positive and tolerance nonnegative".into()));
        }
        Ok(())
    }
}

/// One row of the greedy history: basis size before enrichment, the
/// largest indicator over the training set, the number of vectors added and
/// the selected training parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub n: usize,
    pub max_indicator: f64,
    pub added: usize,
    pub index: usize,
    pub mu: ParameterSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyStatus {
    /// The largest indicator fell below the tolerance.
    Converged,
    /// The basis reached its maximal size.
    BasisLimit,
    /// Two consecutive selections added no independent vector.
    Stagnated,
}

/// Aggregated indicator at every training parameter.
pub fn indicators(rm: &ReducedModel, training: &[ParameterSample], k: usize, aggregation: Aggregation) -> Result<Vec<f64>> {
    let k = k.min(rm.len());
    training
        .par_iter()
        .map(|mu| {
            let pairs = solve_reduced(rm, mu, k)?;
            let eta = rm.estimate(mu, &pairs)?;
            Ok(aggregation.aggregate(&pairs.values, &eta))
        })
        .collect()
}

/// Position and value of the largest entry, first on ties.
fn argmax(v: &[f64]) -> Result<(usize, f64)> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.is_nan() {
            return Err(Error::Config(format!("indicator at training parameter {i} is not a number")));
        }
        if *x > v[best] {
            best = i;
        }
    }
    Ok((best, v[best]))
}

/// Enriches `rm` until the tolerance or the maximal size is reached, adding
/// the `K` detailed eigenvectors at the worst training parameter per step.
pub fn greedy_enrich(detailed: &DetailedModel, mut rm: ReducedModel, cfg: &GreedyConfig) -> Result<ReducedModel> {
    cfg.validate()?;
    if rm.is_empty() {
        return Err(Error::Config("greedy enrichment needs a nonempty initial basis".into()));
    }
    let mut idle = 0;
    loop {
        let n = rm.len();
        let ind = indicators(&rm, &cfg.training, cfg.k, cfg.aggregation)?;
        let (best, max) = argmax(&ind)?;
        let mu = cfg.training[best];
        let step = |added| GreedyStep {
            n,
            max_indicator: max,
            added,
            index: best,
            mu,
        };
        if max <= cfg.tolerance {
            rm.history.push(step(0));
            rm.status = Some(GreedyStatus::Converged);
            break;
        }
        if n >= cfg.n_max {
            rm.history.push(step(0));
            rm.status = Some(GreedyStatus::BasisLimit);
            break;
        }
        let pairs = detailed.solve(&mu, cfg.k)?;
        let added = rm.enrich(detailed, &pairs.vectors, cfg.n_max - n)?;
        log::info!("N = {n}: max indicator {max:.3e} at training parameter {best}, added {added}");
        rm.history.push(step(added));
        if added == 0 {
            idle += 1;
            if idle >= 2 {
                log::warn!("greedy stagnated at N = {n}");
                rm.status = Some(GreedyStatus::Stagnated);
                break;
            }
        } else {
            idle = 0;
        }
    }
    Ok(rm)
}
