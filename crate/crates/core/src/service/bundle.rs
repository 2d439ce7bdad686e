use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{default_plan, fit_algorithm, split_records, Native};
use crate::canon::to_canonical_json;
use crate::dataset::{Encoder, RawRecord, RecordSchema, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::model::{check_threshold, Model, DEFAULT_THRESHOLD};
use crate::seed;
use crate::tuning::{search, Params};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub algorithm: String,
    /// RFC 3339; absent unless supplied, so bundles stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_auc: Option<f64>,
    pub seed: u64,
    pub threshold: f64,
    #[serde(default)]
    pub params: Params,
}

/// Schema, fitted encoder and model: everything needed to score a raw record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u64,
    pub schema: RecordSchema,
    pub encoder: Encoder,
    pub model: Model,
    pub metadata: BundleMetadata,
}

pub fn serialize_model(bundle: &ModelBundle) -> Result<String> {
    to_canonical_json(bundle)
}

pub fn deserialize_model(text: &str) -> Result<ModelBundle> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
    {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::Version(v)),
        None => {
            return Err(Error::InvalidArgument(
                "bundle has no integer format_version".into(),
            ))
        }
    }
    let bundle: ModelBundle = serde_json::from_value(value)?;
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_model(bundle)?).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    deserialize_model(&text)
}

impl ModelBundle {
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        check_threshold(self.metadata.threshold)?;
        if self.encoder.dim != self.model.dim() {
            return Err(Error::Dimension {
                expected: self.encoder.dim,
                got: self.model.dim(),
            });
        }
        Ok(())
    }

    /// Validates and encodes a record, then scores it.
    pub fn score_record(&self, record: &RawRecord) -> Result<f64> {
        let errors = self.schema.check_record(record, true);
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        self.model.predict_score(&self.encoder.encode(record)?)
    }

    /// Label level for a score under the bundle's threshold.
    pub fn label_for(&self, score: f64) -> &str {
        self.schema
            .target
            .level_of(u8::from(score >= self.metadata.threshold))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub algorithm: String,
    pub params: Params,
    pub tune: bool,
    pub test_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
    pub trained_at: Option<String>,
}

impl TrainOptions {
    pub fn new(algorithm: &str, seed: u64) -> Self {
        TrainOptions {
            algorithm: algorithm.into(),
            params: Params::default(),
            tune: false,
            test_fraction: SplitSpec::default().test_fraction,
            seed,
            threshold: DEFAULT_THRESHOLD,
            trained_at: None,
        }
    }
}

/// Splits labelled records, optionally tunes, fits on the training side and
/// records the held-out AUC.
pub fn train_bundle(
    records: &[RawRecord],
    schema: &RecordSchema,
    opts: &TrainOptions,
) -> Result<ModelBundle> {
    check_threshold(opts.threshold)?;
    let split = SplitSpec {
        test_fraction: opts.test_fraction,
        stratified: true,
        seed: seed::derive(opts.seed, 1),
    };
    let (train, test, encoder) = split_records(records, schema, &split)?;
    let mut params = opts.params.clone();
    if opts.tune {
        let mut plan = default_plan(&opts.algorithm)?;
        plan.seed = seed::derive(opts.seed, 3);
        let learner = Native {
            name: opts.algorithm.clone(),
            fixed: opts.params.clone(),
        };
        params
            .0
            .extend(search(&train, &learner, &plan)?.best.params.0);
    }
    let model = fit_algorithm(&opts.algorithm, &train, &params, seed::derive(opts.seed, 2))?;
    let scores = test
        .rows()
        .map(|r| model.predict_score(r))
        .collect::<Result<Vec<_>>>()?;
    let bundle = ModelBundle {
        format_version: FORMAT_VERSION,
        schema: schema.clone(),
        encoder,
        model,
        metadata: BundleMetadata {
            algorithm: opts.algorithm.clone(),
            trained_at: opts.trained_at.clone(),
            holdout_auc: Some(auc(&scores, test.labels())?),
            seed: opts.seed,
            threshold: opts.threshold,
            params,
        },
    };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_aefi;

    fn bundle() -> ModelBundle {
        let schema = RecordSchema::default();
        let records = synth_aefi(300, 0.1, &schema, 5).unwrap();
        train_bundle(&records, &schema, &TrainOptions::new("decision_tree", 1)).unwrap()
    }

    #[test]
    fn round_trip_is_canonical() {
        let b = bundle();
        let text = serialize_model(&b).unwrap();
        let back = deserialize_model(&text).unwrap();
        assert_eq!(back, b);
        assert_eq!(serialize_model(&back).unwrap(), text);
    }

    #[test]
    fn unknown_version_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&serialize_model(&bundle()).unwrap()).unwrap();
        v["format_version"] = 999.into();
        assert!(matches!(
            deserialize_model(&v.to_string()),
            Err(Error::Version(999))
        ));
        assert!(deserialize_model("{not json").is_err());
    }

    #[test]
    fn score_record_validates() {
        let b = bundle();
        let mut r = synth_aefi(5, 0.4, &b.schema, 9).unwrap().remove(0);
        assert!(b.score_record(&r).is_ok());
        r.values.remove("gender");
        match b.score_record(&r) {
            Err(Error::Validation(f)) => assert_eq!(f[0].field, "gender"),
            other => panic!("{other:?}"),
        }
    }
}
