use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::boost::{rusboost_fit, BoostConfig, BoostedModel, InitDistribution};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{svc_fit, SvcConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededRusConfig {
    pub svc: SvcConfig,
    /// Initial weight multiplier for SVC support vectors.
    pub beta: f64,
    pub boost: BoostConfig,
}

impl Default for SeededRusConfig {
    fn default() -> Self {
        SeededRusConfig {
            svc: SvcConfig::default(),
            beta: 2.0,
            boost: BoostConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub support_ids: Vec<usize>,
    pub beta: f64,
    pub support_count: usize,
}

/// Initial distribution giving rows in `support` `beta` times the weight of the rest.
pub fn support_weighted_distribution(
    data: &Dataset,
    support: &BTreeSet<usize>,
    beta: f64,
) -> Vec<f64> {
    let raw: Vec<f64> = data
        .row_ids()
        .iter()
        .map(|id| if support.contains(id) { beta } else { 1.0 })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// RUSBoost started from a distribution that up-weights the support vectors
/// of an SVC fitted to the same data.
pub fn svc_seeded_rusboost_fit(
    data: &Dataset,
    config: &SeededRusConfig,
) -> Result<(BoostedModel, SeedReport)> {
    if !(config.beta >= 1.0 && config.beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta = {} must be >= 1",
            config.beta
        )));
    }
    let svc = svc_fit(data, &config.svc)?;
    let support: BTreeSet<usize> = svc.support_indices().into_iter().collect();
    let init = support_weighted_distribution(data, &support, config.beta);
    let boost = BoostConfig {
        init: InitDistribution::Explicit(init),
        ..config.boost.clone()
    };
    let model = rusboost_fit(data, &boost)?;
    Ok((
        model,
        SeedReport {
            support_count: support.len(),
            support_ids: support.into_iter().collect(),
            beta: config.beta,
        },
    ))
}
