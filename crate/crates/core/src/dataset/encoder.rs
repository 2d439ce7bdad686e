use serde::{Deserialize, Serialize};

use super::schema::{FeatureKind, FeatureSpec, RawRecord, RecordSchema, TargetSpec};
use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnEncoding {
    /// `(x - mean) / std`, with `std = 1` substituted for constant columns.
    ZScore { mean: f64, std: f64 },
    /// One column per level starting at `offset`.
    OneHot { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub spec: FeatureSpec,
    pub encoding: ColumnEncoding,
}

/// Fitted mapping from raw records to numeric rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub features: Vec<EncodedFeature>,
    pub target: TargetSpec,
    pub dim: usize,
}

pub fn fit_encoder(records: &[RawRecord], schema: &RecordSchema) -> Result<Encoder> {
    if records.is_empty() {
        return Err(Error::Encode {
            feature: "*".into(),
            message: "cannot fit an encoder on zero records".into(),
        });
    }
    let mut features = Vec::with_capacity(schema.features.len());
    let mut offset = 0;
    for spec in &schema.features {
        let encoding = match spec.kind {
            FeatureKind::Numeric => {
                let values = records
                    .iter()
                    .map(|r| numeric_cell(spec, r))
                    .collect::<Result<Vec<f64>>>()?;
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                offset += 1;
                ColumnEncoding::ZScore {
                    mean,
                    std: if std > 0.0 { std } else { 1.0 },
                }
            }
            FeatureKind::Categorical | FeatureKind::Binned => {
                for r in records {
                    level_cell(spec, r)?;
                }
                let enc = ColumnEncoding::OneHot { offset };
                offset += spec.levels.len();
                enc
            }
        };
        features.push(EncodedFeature {
            spec: spec.clone(),
            encoding,
        });
    }
    Ok(Encoder {
        features,
        target: schema.target.clone(),
        dim: offset,
    })
}

fn numeric_cell(spec: &FeatureSpec, record: &RawRecord) -> Result<f64> {
    let raw = record.get(&spec.name).ok_or_else(|| Error::Encode {
        feature: spec.name.clone(),
        message: "missing value".into(),
    })?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Encode {
            feature: spec.name.clone(),
            message: format!("`{raw}` is not a finite number"),
        }),
    }
}

fn level_cell(spec: &FeatureSpec, record: &RawRecord) -> Result<usize> {
    let raw = record.get(&spec.name).ok_or_else(|| Error::Encode {
        feature: spec.name.clone(),
        message: "missing value".into(),
    })?;
    let idx = match spec.kind {
        FeatureKind::Binned => spec.bin_of(raw),
        _ => spec.level_index(raw),
    };
    idx.or_else(|| {
        spec.unknown_level
            .as_deref()
            .and_then(|u| spec.level_index(u))
    })
    .ok_or_else(|| Error::Encode {
        feature: spec.name.clone(),
        message: format!("unseen value `{raw}`"),
    })
}

impl Encoder {
    pub fn encode(&self, record: &RawRecord) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.dim];
        self.encode_into(record, &mut row)?;
        Ok(row)
    }

    fn encode_into(&self, record: &RawRecord, row: &mut [f64]) -> Result<()> {
        let mut col = 0;
        for f in &self.features {
            match f.encoding {
                ColumnEncoding::ZScore { mean, std } => {
                    row[col] = (numeric_cell(&f.spec, record)? - mean) / std;
                    col += 1;
                }
                ColumnEncoding::OneHot { offset } => {
                    row[offset + level_cell(&f.spec, record)?] = 1.0;
                    col = offset + f.spec.levels.len();
                }
            }
        }
        debug_assert_eq!(col, self.dim);
        Ok(())
    }

    pub fn encode_label(&self, record: &RawRecord) -> Result<u8> {
        self.target.label_of(record)
    }

    /// Encodes labelled records; row ids are positions in `records`.
    pub fn encode_dataset(&self, records: &[RawRecord]) -> Result<Dataset> {
        let mut data = Vec::with_capacity(records.len() * self.dim);
        let mut labels = Vec::with_capacity(records.len());
        for r in records {
            data.extend(self.encode(r)?);
            labels.push(self.encode_label(r)?);
        }
        let features = ndarray::Array2::from_shape_vec((records.len(), self.dim), data)
            .expect("row-major buffer matches shape");
        Dataset::new(features, labels, (0..records.len()).collect())
            .map(|d| d.with_feature_names(self.column_names()))
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim);
        for f in &self.features {
            match f.encoding {
                ColumnEncoding::ZScore { .. } => names.push(f.spec.name.clone()),
                ColumnEncoding::OneHot { .. } => names.extend(
                    f.spec
                        .levels
                        .iter()
                        .map(|l| format!("{}={}", f.spec.name, l)),
                ),
            }
        }
        names
    }
}
