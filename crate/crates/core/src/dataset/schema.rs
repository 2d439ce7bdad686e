use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Binned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    FillMode,
    FillMedian,
    MapToUnknown,
}

/// One input column of a record.
///
/// Categorical features list their levels in display order. Binned features
/// list interval labels of the form `"<lo>-<hi><suffix>"` (e.g. `"0-258days"`);
/// a binned cell may hold either one of those labels or a raw number, which
/// is mapped to the interval containing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// Human-readable label for forms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    /// A member of `levels` that absorbs unseen or missing values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unknown_level: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub missing_policy: MissingPolicy,
}

impl FeatureSpec {
    pub fn numeric(name: &str, label: &str, unit: Option<&str>) -> Self {
        FeatureSpec {
            name: name.into(),
            label: Some(label.into()),
            kind: FeatureKind::Numeric,
            levels: Vec::new(),
            unknown_level: None,
            unit: unit.map(Into::into),
            missing_policy: MissingPolicy::FillMedian,
        }
    }

    pub fn categorical(name: &str, label: &str, levels: &[&str]) -> Self {
        FeatureSpec {
            name: name.into(),
            label: Some(label.into()),
            kind: FeatureKind::Categorical,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            unknown_level: None,
            unit: None,
            missing_policy: MissingPolicy::FillMode,
        }
    }

    pub fn binned(name: &str, label: &str, intervals: &[&str]) -> Self {
        FeatureSpec {
            kind: FeatureKind::Binned,
            ..FeatureSpec::categorical(name, label, intervals)
        }
    }

    pub fn with_unknown(mut self, level: &str) -> Self {
        if !self.levels.iter().any(|l| l == level) {
            self.levels.push(level.into());
        }
        self.unknown_level = Some(level.into());
        self.missing_policy = MissingPolicy::MapToUnknown;
        self
    }

    /// Position of `level` in the level list.
    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    /// Parsed `(lo, hi)` bounds of every interval level, skipping the unknown level.
    pub fn intervals(&self) -> Vec<(usize, f64, f64)> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| Some(l.as_str()) != self.unknown_level.as_deref())
            .filter_map(|(i, l)| parse_interval(l).map(|(lo, hi)| (i, lo, hi)))
            .collect()
    }

    /// Resolves a binned cell (label or number) to its level index.
    pub fn bin_of(&self, value: &str) -> Option<usize> {
        if let Some(i) = self.level_index(value) {
            return Some(i);
        }
        let v: f64 = value.trim().parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        let intervals = self.intervals();
        let (_, first_lo, _) = *intervals.first()?;
        let (_, _, last_hi) = *intervals.last()?;
        if v < first_lo || v > last_hi {
            return None;
        }
        intervals
            .iter()
            .rev()
            .find(|(_, lo, _)| *lo <= v)
            .map(|(i, _, _)| *i)
    }

    /// Checks a single non-missing cell against the feature definition.
    pub fn check_value(&self, value: &str) -> std::result::Result<(), String> {
        match self.kind {
            FeatureKind::Numeric => match value.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(()),
                _ => Err(format!("`{value}` is not a finite number")),
            },
            FeatureKind::Categorical => {
                if self.level_index(value).is_some() || self.unknown_level.is_some() {
                    Ok(())
                } else {
                    Err(format!("unknown level `{value}`"))
                }
            }
            FeatureKind::Binned => {
                if self.bin_of(value).is_some() || self.unknown_level.is_some() {
                    Ok(())
                } else {
                    Err(format!("`{value}` matches no interval"))
                }
            }
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self.kind {
            FeatureKind::Numeric => {
                if !self.levels.is_empty() {
                    return Err("numeric features take no levels".into());
                }
                if self.missing_policy == MissingPolicy::FillMode {
                    return Err("numeric features use fill_median".into());
                }
            }
            FeatureKind::Categorical | FeatureKind::Binned => {
                if self.levels.is_empty() {
                    return Err("level list is empty".into());
                }
                let distinct: BTreeSet<&String> = self.levels.iter().collect();
                if distinct.len() != self.levels.len() {
                    return Err("duplicate levels".into());
                }
                if self.missing_policy == MissingPolicy::FillMedian {
                    return Err("fill_median applies to numeric features only".into());
                }
            }
        }
        if let Some(unknown) = &self.unknown_level {
            if self.level_index(unknown).is_none() {
                return Err(format!("unknown level `{unknown}` is not among the levels"));
            }
        }
        if self.missing_policy == MissingPolicy::MapToUnknown && self.unknown_level.is_none() {
            return Err("map_to_unknown requires an unknown_level".into());
        }
        if self.kind == FeatureKind::Binned {
            let declared = self
                .levels
                .iter()
                .filter(|l| Some(l.as_str()) != self.unknown_level.as_deref())
                .count();
            let intervals = self.intervals();
            if intervals.len() != declared {
                return Err("every binned level must read `<lo>-<hi><suffix>`".into());
            }
            for w in intervals.windows(2) {
                if w[0].2 >= w[1].1 {
                    return Err(format!(
                        "intervals `{}` and `{}` overlap or are out of order",
                        self.levels[w[0].0], self.levels[w[1].0]
                    ));
                }
            }
            if intervals.iter().any(|(_, lo, hi)| lo > hi) {
                return Err("interval with lo > hi".into());
            }
        }
        Ok(())
    }
}

/// Parses `"0-258days"` into `(0.0, 258.0)`.
pub fn parse_interval(label: &str) -> Option<(f64, f64)> {
    let (lo, rest) = label.split_once('-')?;
    let lo: f64 = lo.trim().parse().ok()?;
    let digits = rest
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(rest.len());
    let hi: f64 = rest[..digits].parse().ok()?;
    Some((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    /// Level encoded as 1 (the minority class of interest).
    pub positive: String,
    pub negative: String,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec {
            name: "hospitalization".into(),
            positive: "Yes".into(),
            negative: "No".into(),
        }
    }
}

impl TargetSpec {
    /// 1 for the positive level, 0 for the negative one.
    pub fn label_of(&self, record: &RawRecord) -> Result<u8> {
        match record.get(&self.name) {
            Some(v) if v == self.positive => Ok(1),
            Some(v) if v == self.negative => Ok(0),
            Some(v) => Err(Error::Encode {
                feature: self.name.clone(),
                message: format!("unknown outcome `{v}`"),
            }),
            None => Err(Error::Encode {
                feature: self.name.clone(),
                message: "missing outcome".into(),
            }),
        }
    }

    pub fn level_of(&self, label: u8) -> &str {
        if label == 1 {
            &self.positive
        } else {
            &self.negative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSchema {
    pub features: Vec<FeatureSpec>,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default = "default_max_age_days")]
    pub max_age_days: u32,
    /// Feature checked against `max_age_days`; defaults to `vaccination_age` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_feature: Option<String>,
}

fn default_max_age_days() -> u32 {
    6570
}

impl Default for RecordSchema {
    /// The twelve fields of the vaccination-reaction entry form.
    fn default() -> Self {
        let reaction = ["Normal", "Mild", "Moderate", "Severe"];
        RecordSchema {
            features: vec![
                FeatureSpec::numeric("vaccination_times", "Vaccination times", None),
                FeatureSpec::numeric("vaccination_dose", "Vaccination dose", Some("ml")),
                FeatureSpec::categorical("gender", "Gender", &["Male", "Female"]),
                FeatureSpec::categorical("fever", "Fever", &reaction),
                FeatureSpec::categorical(
                    "local_redness_swelling",
                    "Local redness and swelling",
                    &reaction,
                ),
                FeatureSpec::categorical("local_induration", "Local induration", &reaction),
                FeatureSpec::binned(
                    "vaccination_age",
                    "Vaccination age",
                    &["0-258days", "259-730days", "731-2190days", "2191-6570days"],
                ),
                FeatureSpec::categorical(
                    "inoculation_organization_form",
                    "Inoculation organization form",
                    &["Routine", "Campaign", "Emergency"],
                )
                .with_unknown("Unknown"),
                FeatureSpec::categorical(
                    "vaccine_name",
                    "Vaccine name",
                    &[
                        "BCG",
                        "HepB",
                        "OPV",
                        "DTaP",
                        "MMR",
                        "JE",
                        "MPSV",
                        "HepA",
                        "PPV23",
                        "Varicella",
                    ],
                ),
                FeatureSpec::categorical(
                    "inoculation_route",
                    "Inoculation route",
                    &["Oral", "Intramuscular", "Subcutaneous", "Intradermal"],
                ),
                FeatureSpec::binned(
                    "inoculation_interval",
                    "Inoculation interval",
                    &["0-9days", "10-29days", "30-89days", "90-3650days"],
                ),
                FeatureSpec::categorical(
                    "inoculation_site",
                    "Inoculation site",
                    &[
                        "Deltoid muscle of upper arm",
                        "Lateral thigh",
                        "Buttock",
                        "Mouth",
                        "Other",
                    ],
                ),
            ],
            target: TargetSpec::default(),
            max_age_days: default_max_age_days(),
            age_feature: None,
        }
    }
}

impl RecordSchema {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: RecordSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("schema declares no features".into()));
        }
        let mut seen = BTreeSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
            f.validate()
                .map_err(|m| Error::Schema(format!("feature `{}`: {m}", f.name)))?;
        }
        if seen.contains(self.target.name.as_str()) {
            return Err(Error::Schema(format!(
                "target `{}` collides with a feature",
                self.target.name
            )));
        }
        if self.target.positive == self.target.negative {
            return Err(Error::Schema("target levels must differ".into()));
        }
        if self.max_age_days == 0 {
            return Err(Error::Schema("max_age_days must be positive".into()));
        }
        if let Some(age) = &self.age_feature {
            if self.feature(age).is_none() {
                return Err(Error::Schema(format!(
                    "age feature `{age}` is not declared"
                )));
            }
        }
        Ok(())
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn age_feature(&self) -> Option<&FeatureSpec> {
        match &self.age_feature {
            Some(name) => self.feature(name),
            None => self.feature("vaccination_age"),
        }
    }

    /// Age in days of a record, if the age cell is present and interpretable.
    /// Interval labels resolve to their upper bound.
    pub fn age_days(&self, record: &RawRecord) -> Option<f64> {
        let spec = self.age_feature()?;
        let value = record.get(&spec.name)?;
        if let Ok(v) = value.trim().parse::<f64>() {
            return Some(v);
        }
        let idx = spec.level_index(value)?;
        parse_interval(&spec.levels[idx]).map(|(_, hi)| hi)
    }

    /// Validates feature cells of a record; missing cells are reported when `require_all`.
    pub fn check_record(&self, record: &RawRecord, require_all: bool) -> Vec<FieldError> {
        let mut errors = Vec::new();
        for key in record.values.keys() {
            if self.feature(key).is_none() && *key != self.target.name {
                errors.push(FieldError {
                    field: key.clone(),
                    message: "not a schema field".into(),
                });
            }
        }
        for f in &self.features {
            match record.get(&f.name) {
                Some(v) => {
                    if let Err(message) = f.check_value(v) {
                        errors.push(FieldError {
                            field: f.name.clone(),
                            message,
                        });
                    }
                }
                None if require_all => errors.push(FieldError {
                    field: f.name.clone(),
                    message: "missing value".into(),
                }),
                None => {}
            }
        }
        if let Some(outcome) = record.get(&self.target.name) {
            if outcome != self.target.positive && outcome != self.target.negative {
                errors.push(FieldError {
                    field: self.target.name.clone(),
                    message: format!(
                        "expected `{}` or `{}`",
                        self.target.positive, self.target.negative
                    ),
                });
            }
        }
        errors
    }
}

/// One input row before cleaning and encoding. Absent and empty cells are missing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawRecord {
    pub values: BTreeMap<String, Option<String>>,
}

impl RawRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        RawRecord {
            values: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), Some(v.into())))
                .collect(),
        }
    }

    /// The trimmed cell, or `None` when absent or empty.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.values
            .get(name)
            .and_then(|v| v.as_deref())
            .map(str::trim)
            .filter(|v| !v.is_empty())
    }

    pub fn set(&mut self, name: &str, value: Option<String>) {
        self.values.insert(name.to_string(), value);
    }
}
