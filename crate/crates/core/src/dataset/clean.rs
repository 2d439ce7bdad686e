use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureKind, MissingPolicy, RawRecord, RecordSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    /// Cells filled in, over all features.
    pub filled: usize,
    /// Records removed by the age threshold.
    pub dropped: usize,
    pub filled_by_feature: BTreeMap<String, usize>,
}

/// Drops over-age records, then fills missing feature cells per policy.
///
/// Fill values (mode or median) are computed over the records that survive
/// the age rule. The target column is never filled.
pub fn clean(
    records: &[RawRecord],
    schema: &RecordSchema,
) -> Result<(Vec<RawRecord>, CleanReport)> {
    let mut report = CleanReport::default();
    let max_age = f64::from(schema.max_age_days);
    let mut kept: Vec<RawRecord> = Vec::with_capacity(records.len());
    for r in records {
        match schema.age_days(r) {
            Some(age) if age > max_age => report.dropped += 1,
            _ => kept.push(r.clone()),
        }
    }

    for f in &schema.features {
        let missing: Vec<usize> = (0..kept.len())
            .filter(|&i| kept[i].get(&f.name).is_none())
            .collect();
        if missing.is_empty() {
            continue;
        }
        let fill = match f.missing_policy {
            MissingPolicy::MapToUnknown => f
                .unknown_level
                .clone()
                .ok_or_else(|| Error::Clean(format!("`{}` has no unknown level", f.name)))?,
            MissingPolicy::FillMode => {
                let observed: Vec<&str> = kept.iter().filter_map(|r| r.get(&f.name)).collect();
                mode(&observed, &f.levels).ok_or_else(|| {
                    Error::Clean(format!("all values of `{}` are missing; no mode", f.name))
                })?
            }
            MissingPolicy::FillMedian => {
                debug_assert_eq!(f.kind, FeatureKind::Numeric);
                let mut values: Vec<f64> = kept
                    .iter()
                    .filter_map(|r| r.get(&f.name))
                    .filter_map(|v| v.parse::<f64>().ok())
                    .collect();
                let m = median(&mut values).ok_or_else(|| {
                    Error::Clean(format!("all values of `{}` are missing; no median", f.name))
                })?;
                m.to_string()
            }
        };
        for &i in &missing {
            kept[i].set(&f.name, Some(fill.clone()));
        }
        report.filled += missing.len();
        report
            .filled_by_feature
            .insert(f.name.clone(), missing.len());
    }
    Ok((kept, report))
}

/// Most frequent value; ties go to the earlier declared level, then to the
/// lexicographically smaller value.
fn mode(values: &[&str], levels: &[String]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let rank = |v: &str| levels.iter().position(|l| l == v).unwrap_or(usize::MAX);
    counts
        .into_iter()
        .max_by(|(a, ca), (b, cb)| {
            ca.cmp(cb)
                .then_with(|| rank(b).cmp(&rank(a)))
                .then_with(|| b.cmp(a))
        })
        .map(|(v, _)| v.to_string())
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    })
}
