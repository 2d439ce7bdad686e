use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{cart_fit, CartConfig, CartTree, Criterion};
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    #[default]
    Resample,
    /// Every tree sees the training set unchanged. Test hook.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    /// Features drawn per split: `None` = round(sqrt(d)), `Some(0)` = all.
    pub max_features: Option<usize>,
    pub balanced: bool,
    /// Per-class draw size in balanced mode; `None` = minority class size.
    pub per_class: Option<usize>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    #[serde(default)]
    pub bootstrap: Bootstrap,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            max_features: None,
            balanced: false,
            per_class: None,
            max_depth: 0,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
            bootstrap: Bootstrap::Resample,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn balanced(trees: usize, seed: u64) -> Self {
        ForestConfig {
            trees,
            balanced: true,
            seed,
            ..Self::default()
        }
    }

    fn features_per_split(&self, dim: usize) -> usize {
        match self.max_features {
            None => ((dim as f64).sqrt().round() as usize).clamp(1, dim.max(1)),
            Some(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<CartTree>,
    pub config: ForestConfig,
    pub dim: usize,
}

/// Training positions of tree `index`, repeats allowed.
///
/// Plain forests draw `n` rows with replacement. Balanced forests draw `K`
/// rows with replacement from the minority class and `K` from the majority.
pub fn forest_sample(data: &Dataset, config: &ForestConfig, index: usize) -> Result<Vec<usize>> {
    if config.bootstrap == Bootstrap::Identity {
        return Ok((0..data.n()).collect());
    }
    let mut rng = seed::rng(seed::derive(config.seed, index as u64));
    if config.balanced {
        let minority = data.indices_of(1);
        let majority = data.indices_of(0);
        if minority.is_empty() || majority.is_empty() {
            return Err(Error::Fit("balanced forest needs both classes".into()));
        }
        let k = config.per_class.unwrap_or(minority.len());
        if k == 0 {
            return Err(Error::InvalidArgument(
                "per-class sample size must be positive".into(),
            ));
        }
        let mut out = Vec::with_capacity(2 * k);
        out.extend((0..k).map(|_| minority[rng.random_range(0..minority.len())]));
        out.extend((0..k).map(|_| majority[rng.random_range(0..majority.len())]));
        Ok(out)
    } else {
        let n = data.n();
        Ok((0..n).map(|_| rng.random_range(0..n)).collect())
    }
}

fn fit(data: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    if config.trees == 0 {
        return Err(Error::InvalidArgument(
            "forest needs at least one tree".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::Fit("empty dataset".into()));
    }
    let m = config.features_per_split(data.dim());
    let trees = (0..config.trees)
        .into_par_iter()
        .map(|t| {
            let positions = forest_sample(data, config, t)?;
            let sample = data.subset(&positions);
            let cart = CartConfig {
                max_depth: config.max_depth,
                min_samples_leaf: config.min_samples_leaf,
                criterion: config.criterion,
                max_features: m,
                seed: seed::derive(seed::derive(config.seed, t as u64), u64::MAX),
            };
            cart_fit(&sample, &vec![1.0; sample.n()], &cart)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        config: config.clone(),
        dim: data.dim(),
    })
}

pub fn random_forest_fit(data: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    fit(
        data,
        &ForestConfig {
            balanced: false,
            ..config.clone()
        },
    )
}

/// Balanced Random Forest: every tree grows unpruned on a class-balanced bootstrap.
pub fn brf_fit(data: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    data.require_both_classes()?;
    fit(
        data,
        &ForestConfig {
            balanced: true,
            ..config.clone()
        },
    )
}

impl ForestModel {
    /// Fraction of trees voting minority.
    pub(crate) fn score_unchecked(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.proba(row) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}
