use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boost::{adaboost_fit, BoostConfig, BoostedModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::CartConfig;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyConfig {
    pub subsets: usize,
    pub rounds: usize,
    pub base: CartConfig,
    pub seed: u64,
}

impl Default for EasyConfig {
    fn default() -> Self {
        EasyConfig {
            subsets: 10,
            rounds: 10,
            base: CartConfig::with_depth(2),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyModel {
    pub members: Vec<BoostedModel>,
    pub config: EasyConfig,
    pub dim: usize,
}

/// Positions of the balanced subset used by member `index`: all minority
/// rows plus as many majority rows drawn without replacement.
pub fn easy_subset(data: &Dataset, config: &EasyConfig, index: usize) -> Vec<usize> {
    let minority = data.indices_of(1);
    let majority = data.indices_of(0);
    let take = minority.len().min(majority.len());
    let mut rng = seed::rng(seed::derive(config.seed, index as u64));
    let mut out: Vec<usize> = index::sample(&mut rng, majority.len(), take)
        .into_iter()
        .map(|k| majority[k])
        .chain(minority)
        .collect();
    out.sort_unstable();
    out
}

/// EasyEnsemble: AdaBoost on independent balanced undersamples, combined by
/// summing every member's signed stage votes.
pub fn easy_ensemble_fit(data: &Dataset, config: &EasyConfig) -> Result<EasyModel> {
    if config.subsets == 0 || config.rounds == 0 {
        return Err(Error::InvalidArgument(
            "subsets and rounds must be positive".into(),
        ));
    }
    data.require_both_classes()?;
    let members = (0..config.subsets)
        .into_par_iter()
        .map(|i| {
            let subset = data.subset(&easy_subset(data, config, i));
            let boost = BoostConfig::adaboost(
                config.rounds,
                config.base.clone(),
                seed::derive(seed::derive(config.seed, i as u64), u64::MAX),
            );
            adaboost_fit(&subset, &boost)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EasyModel {
        members,
        config: config.clone(),
        dim: data.dim(),
    })
}

impl EasyModel {
    /// `sum_i (sum_j w_ij h_ij(x, minority) - 1/2 sum_j w_ij)`; positive means minority.
    pub fn signed_score(&self, row: &[f64]) -> f64 {
        self.members.iter().map(|m| m.signed_score(row)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_gaussian;

    #[test]
    fn subsets_are_twice_the_minority() {
        let d = synth_gaussian(300, 0.1, 2, 1.5, 1).unwrap();
        let cfg = EasyConfig {
            subsets: 4,
            ..EasyConfig::default()
        };
        for i in 0..4 {
            let s = easy_subset(&d, &cfg, i);
            assert_eq!(s.len(), 60);
            assert_eq!(s.iter().filter(|&&p| d.label(p) == 1).count(), 30);
        }
        let m = easy_ensemble_fit(&d, &cfg).unwrap();
        assert!(m.members.iter().all(|b| b.row_ids.len() == 60));
    }

    #[test]
    fn single_member_matches_its_adaboost() {
        let d = synth_gaussian(200, 0.15, 2, 1.5, 2).unwrap();
        let cfg = EasyConfig {
            subsets: 1,
            rounds: 5,
            ..EasyConfig::default()
        };
        let m = easy_ensemble_fit(&d, &cfg).unwrap();
        let subset = d.subset(&easy_subset(&d, &cfg, 0));
        let solo = adaboost_fit(
            &subset,
            &BoostConfig::adaboost(
                5,
                cfg.base.clone(),
                seed::derive(seed::derive(0, 0), u64::MAX),
            ),
        )
        .unwrap();
        assert_eq!(m.members[0], solo);
        for row in d.rows() {
            let ada = solo.score_unchecked(row) >= 0.5;
            assert_eq!(m.signed_score(row) >= 0.0, ada);
        }
    }
}
