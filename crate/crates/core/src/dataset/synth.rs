use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;

use super::schema::{FeatureKind, FeatureSpec, RawRecord, RecordSchema};
use super::Dataset;
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Share of minority-class probability mass moved onto the reversed level ordering.
pub const AEFI_MINORITY_TILT: f64 = 0.6;
/// Probability of emitting the declared unknown level, in both classes.
pub const AEFI_UNKNOWN_RATE: f64 = 0.05;

fn check_params(n: usize, minority_fraction: f64) -> Result<usize> {
    if !(minority_fraction > 0.0 && minority_fraction < 0.5) {
        return Err(Error::Generation(format!(
            "minority fraction {minority_fraction} outside (0, 0.5)"
        )));
    }
    if (n as f64) * minority_fraction < 2.0 {
        return Err(Error::Generation(format!(
            "n = {n} at fraction {minority_fraction} yields fewer than 2 minority rows"
        )));
    }
    Ok(((n as f64) * minority_fraction).round() as usize)
}

/// Shuffled label vector with exactly `minority` ones.
fn labels(n: usize, minority: usize, rng: &mut Rng) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n - minority)).collect();
    labels.shuffle(rng);
    labels
}

/// Two isotropic unit-variance Gaussian clouds. The majority is centred at
/// the origin; the minority centre sits at distance `separation` along the
/// all-ones diagonal.
pub fn synth_gaussian(
    n: usize,
    minority_fraction: f64,
    dims: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    let minority = check_params(n, minority_fraction)?;
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::Generation(format!(
            "separation {separation} must be >= 0"
        )));
    }
    if dims == 0 {
        return Err(Error::Generation("dims must be positive".into()));
    }
    let mut rng = seed::rng(seed);
    let labels = labels(n, minority, &mut rng);
    let shift = separation / (dims as f64).sqrt();
    let mut rows = Vec::with_capacity(n);
    for &label in &labels {
        let row: Vec<f64> = (0..dims)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + if label == 1 { shift } else { 0.0 }
            })
            .collect();
        rows.push(row);
    }
    Dataset::from_rows(&rows, labels)
}

/// Level weights for one class.
///
/// With `L` ordinary levels, the majority weight of level `j` is `L - j`
/// (earlier levels are common). The minority mixes that table with its
/// reverse, `j + 1`, in proportion [`AEFI_MINORITY_TILT`]. A declared unknown
/// level receives [`AEFI_UNKNOWN_RATE`] of the mass in both classes.
fn level_weights(spec: &FeatureSpec, minority: bool) -> Vec<f64> {
    let unknown = spec
        .unknown_level
        .as_deref()
        .and_then(|u| spec.level_index(u));
    let ordinary: Vec<usize> = (0..spec.levels.len())
        .filter(|&i| Some(i) != unknown)
        .collect();
    let l = ordinary.len() as f64;
    let mut w = vec![0.0; spec.levels.len()];
    for (j, &idx) in ordinary.iter().enumerate() {
        let j = j as f64;
        let base = (l - j) / (l * (l + 1.0) / 2.0);
        let rev = (j + 1.0) / (l * (l + 1.0) / 2.0);
        w[idx] = if minority {
            (1.0 - AEFI_MINORITY_TILT) * base + AEFI_MINORITY_TILT * rev
        } else {
            base
        };
    }
    if let Some(u) = unknown {
        for v in w.iter_mut() {
            *v *= 1.0 - AEFI_UNKNOWN_RATE;
        }
        w[u] = AEFI_UNKNOWN_RATE;
    }
    w
}

/// Schema-conformant synthetic records with class-conditional level
/// frequencies (see `level_weights`). Numeric features take the integer
/// values 1 to 4 under the same four-level tables.
pub fn synth_aefi(
    n: usize,
    minority_fraction: f64,
    schema: &RecordSchema,
    seed: u64,
) -> Result<Vec<RawRecord>> {
    schema.validate()?;
    let minority = check_params(n, minority_fraction)?;
    let mut rng = seed::rng(seed);
    let labels = labels(n, minority, &mut rng);

    let numeric_levels = FeatureSpec::categorical("n", "n", &["1", "2", "3", "4"]);
    let tables: Vec<[WeightedIndex<f64>; 2]> = schema
        .features
        .iter()
        .map(|f| {
            let spec = if f.kind == FeatureKind::Numeric {
                &numeric_levels
            } else {
                f
            };
            [false, true]
                .map(|m| WeightedIndex::new(level_weights(spec, m)).expect("positive weights"))
        })
        .collect();

    let mut out = Vec::with_capacity(n);
    for &label in &labels {
        let mut r = RawRecord::new();
        for (f, table) in schema.features.iter().zip(&tables) {
            let idx = table[usize::from(label)].sample(&mut rng);
            let value = match f.kind {
                FeatureKind::Numeric => (idx + 1).to_string(),
                _ => f.levels[idx].clone(),
            };
            r.set(&f.name, Some(value));
        }
        let outcome = if label == 1 {
            &schema.target.positive
        } else {
            &schema.target.negative
        };
        r.set(&schema.target.name, Some(outcome.clone()));
        out.push(r);
    }
    Ok(out)
}
