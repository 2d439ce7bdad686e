use rand::seq::index;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Result of one random undersampling draw.
#[derive(Debug, Clone)]
pub struct RusSample {
    /// Positions into the source dataset, ascending.
    pub positions: Vec<usize>,
    pub data: Dataset,
    /// Source weights restricted to `positions`, renormalised to sum 1.
    pub distribution: Vec<f64>,
}

/// Random undersampling of the majority class.
///
/// Keeps every minority row and the largest number of majority rows, drawn
/// uniformly without replacement, for which `minority / total >=
/// minority_fraction`. A fraction of 1 (or more) disables sampling and
/// consumes no randomness.
pub fn rus(
    data: &Dataset,
    distribution: &[f64],
    minority_fraction: f64,
    rng: &mut Rng,
) -> Result<RusSample> {
    if distribution.len() != data.n() {
        return Err(Error::Sampling(format!(
            "{} weights for {} rows",
            distribution.len(),
            data.n()
        )));
    }
    if !(minority_fraction > 0.0) {
        return Err(Error::Sampling(format!(
            "minority fraction {minority_fraction} must be positive"
        )));
    }
    let minority = data.indices_of(1);
    let majority = data.indices_of(0);
    if minority.is_empty() {
        return Err(Error::Sampling("no minority rows".into()));
    }
    let positions: Vec<usize> = if minority_fraction >= 1.0 {
        (0..data.n()).collect()
    } else {
        let allowed = (minority.len() as f64 * (1.0 - minority_fraction) / minority_fraction + 1e-9)
            .floor() as usize;
        if allowed >= majority.len() {
            (0..data.n()).collect()
        } else {
            let mut keep: Vec<usize> = index::sample(rng, majority.len(), allowed)
                .into_iter()
                .map(|k| majority[k])
                .chain(minority.iter().copied())
                .collect();
            keep.sort_unstable();
            keep
        }
    };
    let mut weights: Vec<f64> = positions.iter().map(|&i| distribution[i]).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        let u = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = u);
    }
    Ok(RusSample {
        data: if positions.len() == data.n() {
            data.clone()
        } else {
            data.subset(&positions)
        },
        positions,
        distribution: weights,
    })
}
