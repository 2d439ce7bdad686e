//! Record schema, CSV intake, cleaning, encoding, splitting and synthetic data.

mod clean;
mod encoder;
mod ingest;
mod schema;
mod split;
mod synth;

pub use clean::{clean, CleanReport};
pub use encoder::{fit_encoder, ColumnEncoding, EncodedFeature, Encoder};
pub use ingest::{load_csv, read_csv, write_csv};
pub use schema::{
    parse_interval, FeatureKind, FeatureSpec, MissingPolicy, RawRecord, RecordSchema, TargetSpec,
};
pub use split::{split_positions, stratified_split, SplitSpec};
pub use synth::{synth_aefi, synth_gaussian, AEFI_MINORITY_TILT, AEFI_UNKNOWN_RATE};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Encoded design matrix with binary labels (0 = majority/No, 1 = minority/Yes).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    row_ids: Vec<usize>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, row_ids: Vec<usize>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || row_ids.len() != n {
            return Err(Error::InvalidArgument(format!(
                "dataset with {n} rows, {} labels and {} ids",
                labels.len(),
                row_ids.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        let features = if features.is_standard_layout() {
            features
        } else {
            features.as_standard_layout().into_owned()
        };
        let feature_names = (0..features.ncols()).map(|j| format!("f{j}")).collect();
        Ok(Dataset {
            features,
            labels,
            row_ids,
            feature_names,
        })
    }

    /// Builds a dataset from row vectors; ids are `0..n`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let features = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Dataset::new(features, labels, (0..rows.len()).collect())
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        if names.len() == self.dim() {
            self.feature_names = names;
        }
        self
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// `[majority count, minority count]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.n() - ones, ones]
    }

    pub fn has_both_classes(&self) -> bool {
        let [a, b] = self.class_counts();
        a > 0 && b > 0
    }

    /// Positions (not ids) of rows with the given label.
    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Copies the rows at `positions`, repeats allowed, keeping their ids.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        let features = self.features.select(ndarray::Axis(0), positions);
        Dataset {
            features,
            labels: positions.iter().map(|&i| self.labels[i]).collect(),
            row_ids: positions.iter().map(|&i| self.row_ids[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(Error::Fit("both classes must be present".into()))
        }
    }
}
