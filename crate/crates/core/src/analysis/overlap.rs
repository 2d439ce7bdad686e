use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bench::{prepare, BenchmarkSpec, OverlapSpec, WeightSnapshot};
use crate::dataset::Dataset;
use crate::ensembles::{rusboost_fit, BoostConfig, BoostedModel, InitDistribution};
use crate::error::{Error, Result};
use crate::learners::{svc_fit, SvcConfig};
use crate::seed;

/// Mean overlap reported for the original clinical cohort; printed for
/// comparison only.
pub const REFERENCE_OVERLAP: f64 = 0.839;

/// Row ids of the `k` largest weights; equal weights prefer the lower id.
/// Returned ascending.
pub fn top_weight_ids(weights: &[f64], row_ids: &[usize], k: usize) -> Result<Vec<usize>> {
    if weights.len() != row_ids.len() {
        return Err(Error::Experiment(format!(
            "{} weights for {} rows",
            weights.len(),
            row_ids.len()
        )));
    }
    if k > weights.len() {
        return Err(Error::Experiment(format!(
            "k = {k} exceeds n = {}",
            weights.len()
        )));
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .total_cmp(&weights[a])
            .then(row_ids[a].cmp(&row_ids[b]))
    });
    let mut ids: Vec<usize> = order[..k].iter().map(|&i| row_ids[i]).collect();
    ids.sort_unstable();
    Ok(ids)
}

pub fn top_weight_indices(model: &BoostedModel, k: usize) -> Result<Vec<usize>> {
    top_weight_ids(&model.final_distribution, &model.row_ids, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRun {
    pub seed: u64,
    pub k: usize,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub runs: Vec<OverlapRun>,
    pub mean: f64,
    pub n: usize,
    pub k: usize,
    /// Expected overlap of a uniformly random k-subset, k / n.
    pub baseline: f64,
    pub snapshot: WeightSnapshot,
    pub support_ids: Vec<usize>,
    pub reference: f64,
}

/// Compares SVC support vectors with the most heavily weighted rows of
/// plain RUSBoost over `runs` boosting seeds.
pub fn overlap_experiment(
    data: &Dataset,
    svc: &SvcConfig,
    boost: &BoostConfig,
    runs: usize,
    snapshot: WeightSnapshot,
) -> Result<OverlapReport> {
    if runs == 0 {
        return Err(Error::Experiment("overlap needs at least one run".into()));
    }
    let support: BTreeSet<usize> = svc_fit(data, svc)?.support_indices().into_iter().collect();
    let k = support.len();
    if k == 0 {
        return Err(Error::Experiment("SVC found no support vectors".into()));
    }
    let runs = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let run_seed = seed::derive(boost.seed, r);
            let cfg = BoostConfig {
                init: InitDistribution::Uniform,
                seed: run_seed,
                ..boost.clone()
            };
            let model = rusboost_fit(data, &cfg)?;
            let weights = match snapshot {
                WeightSnapshot::Final => &model.final_distribution,
                WeightSnapshot::MaxOverRounds => &model.max_distribution,
            };
            let top = top_weight_ids(weights, &model.row_ids, k)?;
            let shared = top.iter().filter(|id| support.contains(id)).count();
            Ok(OverlapRun {
                seed: run_seed,
                k,
                overlap: shared as f64 / k as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = runs.iter().map(|r| r.overlap).sum::<f64>() / runs.len() as f64;
    Ok(OverlapReport {
        mean,
        n: data.n(),
        k,
        baseline: k as f64 / data.n() as f64,
        snapshot,
        support_ids: support.into_iter().collect(),
        reference: REFERENCE_OVERLAP,
        runs,
    })
}

/// Runs the experiment on the training partition of the spec's first seed.
pub fn run_overlap(spec: &BenchmarkSpec, runs: Option<usize>) -> Result<OverlapReport> {
    spec.validate()?;
    let o = spec.overlap.clone().unwrap_or_default();
    let OverlapSpec {
        svc,
        boost,
        snapshot,
        ..
    } = &o;
    let (train, _) = prepare(spec, spec.seeds[0])?;
    overlap_experiment(&train, svc, boost, runs.unwrap_or(o.runs), *snapshot)
}
