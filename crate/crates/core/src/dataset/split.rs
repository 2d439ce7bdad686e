use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    #[serde(default = "yes")]
    pub stratified: bool,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.29,
            stratified: true,
            seed: 0,
        }
    }
}

/// Seeded train/test partition. Stratified splits hold out
/// `round(count * test_fraction)` rows of each class, clamped so both
/// sides keep at least one row per class.
pub fn stratified_split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_positions(data.labels(), spec)?;
    Ok((data.subset(&train), data.subset(&test)))
}

/// Ascending (train, test) positions for rows with the given labels.
pub fn split_positions(labels: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test_fraction {} outside (0, 1)",
            spec.test_fraction
        )));
    }
    let mut rng = seed::rng(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        (0..2u8)
            .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    let mut test = Vec::new();
    let mut train = Vec::new();
    for (class, mut members) in groups.into_iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::Split(if spec.stratified {
                format!(
                    "class {class} has {} member(s); need at least 2",
                    members.len()
                )
            } else {
                "need at least 2 rows".into()
            }));
        }
        let take = ((members.len() as f64 * spec.test_fraction).round() as usize)
            .clamp(1, members.len() - 1);
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
