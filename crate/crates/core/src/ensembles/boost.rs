//! Binary AdaBoost.M2 with class-probability weak learners, and RUSBoost.
//!
//! With weak output `h(x, y)` the probability assigned to label `y` and
//! `h(x, y) + h(x, !y) = 1`, each round computes
//!
//! * pseudo-loss `e = 1/2 sum_i D(i) (1 - h(x_i, y_i) + h(x_i, !y_i))`
//! * `a = e / (1 - e)`
//! * `D'(i) ~ D(i) a^(1/2 (1 + h(x_i, y_i) - h(x_i, !y_i)))`
//! * stage weight `ln(1 / a)`.

use serde::{Deserialize, Serialize};

use super::rus::rus;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{cart_fit, CartConfig, CartTree};
use crate::seed;

pub const MIN_PSEUDO_LOSS: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "weights", rename_all = "snake_case")]
pub enum InitDistribution {
    #[default]
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub rounds: usize,
    pub base: CartConfig,
    #[serde(default)]
    pub init: InitDistribution,
    /// Post-sampling minority share; 1 disables undersampling.
    pub rus_minority_fraction: f64,
    pub max_retries_per_round: usize,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds: 50,
            base: CartConfig::with_depth(3),
            init: InitDistribution::Uniform,
            rus_minority_fraction: 0.5,
            max_retries_per_round: 5,
            seed: 0,
        }
    }
}

impl BoostConfig {
    /// Plain AdaBoost: same settings without undersampling.
    pub fn adaboost(rounds: usize, base: CartConfig, seed: u64) -> Self {
        BoostConfig {
            rounds,
            base,
            rus_minority_fraction: 1.0,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub tree: CartTree,
    /// `ln(1 / a_t)`, always positive.
    pub weight: f64,
    pub pseudo_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub stages: Vec<Stage>,
    /// Distribution after the last completed round, aligned with `row_ids`.
    pub final_distribution: Vec<f64>,
    /// Elementwise maximum of every distribution seen during training.
    pub max_distribution: Vec<f64>,
    pub row_ids: Vec<usize>,
    pub rounds_completed: usize,
    pub config: BoostConfig,
    pub dim: usize,
}

/// Per-round diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    /// `D_t` used for the round.
    pub distribution: Vec<f64>,
    /// `h_t(x_i, y_i)` on every training row.
    pub true_label_confidence: Vec<f64>,
    pub pseudo_loss: f64,
    /// Rejected draws (pseudo-loss >= 0.5) before this round succeeded.
    pub retries: usize,
}

fn initial_distribution(data: &Dataset, init: &InitDistribution) -> Result<Vec<f64>> {
    let n = data.n();
    match init {
        InitDistribution::Uniform => Ok(vec![1.0 / n as f64; n]),
        InitDistribution::Explicit(d) => {
            if d.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "initial distribution has {} entries for {n} rows",
                    d.len()
                )));
            }
            if d.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                return Err(Error::InvalidArgument(
                    "initial distribution must be nonnegative".into(),
                ));
            }
            let sum: f64 = d.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "initial distribution sums to {sum}, not 1"
                )));
            }
            Ok(d.clone())
        }
    }
}

pub fn adaboost_fit(data: &Dataset, config: &BoostConfig) -> Result<BoostedModel> {
    let config = BoostConfig {
        rus_minority_fraction: 1.0,
        ..config.clone()
    };
    boost(data, &config, None)
}

/// AdaBoost.M2 whose weak learners see a fresh undersample each round while
/// losses and reweighting use the full training set.
pub fn rusboost_fit(data: &Dataset, config: &BoostConfig) -> Result<BoostedModel> {
    boost(data, config, None)
}

/// [`rusboost_fit`] that also returns one [`RoundTrace`] per completed round.
pub fn rusboost_trace(
    data: &Dataset,
    config: &BoostConfig,
) -> Result<(BoostedModel, Vec<RoundTrace>)> {
    let mut trace = Vec::new();
    let model = boost(data, config, Some(&mut trace))?;
    Ok((model, trace))
}

fn boost(
    data: &Dataset,
    config: &BoostConfig,
    mut trace: Option<&mut Vec<RoundTrace>>,
) -> Result<BoostedModel> {
    if !data.has_both_classes() {
        return Err(Error::Fit("boosting needs both classes".into()));
    }
    if !(config.rus_minority_fraction > 0.0 && config.rus_minority_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rus_minority_fraction {} outside (0, 1]",
            config.rus_minority_fraction
        )));
    }
    let n = data.n();
    let mut dist = initial_distribution(data, &config.init)?;
    let mut max_dist = dist.clone();
    let mut rng = seed::rng(config.seed);
    let mut stages = Vec::with_capacity(config.rounds);
    let mut confidence = vec![0.0; n];

    'rounds: for round in 0..config.rounds {
        let round_seed = seed::derive(config.seed, round as u64);
        let mut attempt = 0;
        let (tree, loss) = loop {
            let sample = rus(data, &dist, config.rus_minority_fraction, &mut rng)?;
            let base = CartConfig {
                seed: seed::derive(round_seed, attempt as u64),
                ..config.base.clone()
            };
            let tree = cart_fit(&sample.data, &sample.distribution, &base)?;
            let mut loss = 0.0;
            for i in 0..n {
                let p = tree.proba(data.row(i));
                confidence[i] = if data.label(i) == 1 { p } else { 1.0 - p };
                // 1/2 (1 - h(x,y) + h(x,!y)) with h(x,!y) = 1 - h(x,y)
                loss += dist[i] * (1.0 - confidence[i]);
            }
            if loss < 0.5 {
                break (tree, loss);
            }
            attempt += 1;
            if attempt > config.max_retries_per_round {
                break 'rounds;
            }
        };
        let perfect = loss <= MIN_PSEUDO_LOSS;
        let loss = loss.max(MIN_PSEUDO_LOSS);
        let a = loss / (1.0 - loss);
        if let Some(t) = trace.as_deref_mut() {
            t.push(RoundTrace {
                distribution: dist.clone(),
                true_label_confidence: confidence.clone(),
                pseudo_loss: loss,
                retries: attempt,
            });
        }
        for i in 0..n {
            // exponent 1/2 (1 + h(x,y) - h(x,!y)) = h(x,y)
            dist[i] *= a.powf(confidence[i]);
        }
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|w| *w /= total);
        for (m, w) in max_dist.iter_mut().zip(&dist) {
            *m = m.max(*w);
        }
        stages.push(Stage {
            tree,
            weight: (1.0 / a).ln(),
            pseudo_loss: loss,
        });
        if perfect {
            break;
        }
    }
    if stages.is_empty() {
        return Err(Error::Fit(
            "no boosting round achieved pseudo-loss below 0.5".into(),
        ));
    }
    Ok(BoostedModel {
        rounds_completed: stages.len(),
        stages,
        final_distribution: dist,
        max_distribution: max_dist,
        row_ids: data.row_ids().to_vec(),
        config: config.clone(),
        dim: data.dim(),
    })
}

impl BoostedModel {
    /// `sum_t w_t h_t(x, minority) / sum_t w_t`.
    pub(crate) fn score_unchecked(&self, row: &[f64]) -> f64 {
        let (num, den) = self.stages.iter().fold((0.0, 0.0), |(num, den), s| {
            (num + s.weight * s.tree.proba(row), den + s.weight)
        });
        num / den
    }

    /// `sum_t w_t h_t(x, minority) - 1/2 sum_t w_t`.
    pub(crate) fn signed_score(&self, row: &[f64]) -> f64 {
        self.stages
            .iter()
            .map(|s| s.weight * (s.tree.proba(row) - 0.5))
            .sum()
    }
}
