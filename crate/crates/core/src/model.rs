//! A fitted model of any supported family behind one scoring interface.

use serde::{Deserialize, Serialize};

use crate::ensembles::{BoostedModel, EasyModel, ForestModel};
use crate::error::{Error, Result};
use crate::learners::{sigmoid, CartTree, KnnModel, LogRegModel, SvcModel};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Cart(CartTree),
    Forest(ForestModel),
    Boosted(BoostedModel),
    Easy(EasyModel),
    Svc(SvcModel),
    Logistic(LogRegModel),
    Knn(KnnModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Cart(m) => m.dim,
            Model::Forest(m) => m.dim,
            Model::Boosted(m) => m.dim,
            Model::Easy(m) => m.dim,
            Model::Svc(m) => m.dim,
            Model::Logistic(m) => m.weights.len(),
            Model::Knn(m) => m.rows.first().map_or(0, Vec::len),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Model::Cart(_) => "cart",
            Model::Forest(_) => "forest",
            Model::Boosted(_) => "boosted",
            Model::Easy(_) => "easy",
            Model::Svc(_) => "svc",
            Model::Logistic(_) => "logistic",
            Model::Knn(_) => "knn",
        }
    }

    /// Minority-class score in [0, 1], monotone in the model's decision value.
    pub fn predict_score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(match self {
            Model::Cart(m) => m.proba(row),
            Model::Forest(m) => m.score_unchecked(row),
            Model::Boosted(m) => m.score_unchecked(row),
            Model::Easy(m) => sigmoid(m.signed_score(row)),
            Model::Svc(m) => sigmoid(m.decision_unchecked(row)),
            Model::Logistic(m) => m.score_unchecked(row),
            Model::Knn(m) => m.fraction_unchecked(row),
        })
    }

    pub fn predict_label(&self, row: &[f64], threshold: f64) -> Result<u8> {
        check_threshold(threshold)?;
        Ok(u8::from(self.predict_score(row)? >= threshold))
    }
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1]"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::ensembles::{random_forest_fit, ForestConfig};
    use crate::learners::{cart_fit, CartConfig};

    fn pair() -> Dataset {
        Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0, 1]).unwrap()
    }

    #[test]
    fn thresholds_outside_unit_interval_rejected() {
        let d = pair();
        let m = Model::Cart(cart_fit(&d, &[0.5, 0.5], &CartConfig::default()).unwrap());
        assert_eq!(m.predict_label(&[1.0], 0.5).unwrap(), 1);
        assert_eq!(m.predict_label(&[0.0], 0.0).unwrap(), 1);
        assert!(m.predict_label(&[0.0], 1.0 + 1e-9).is_err());
        assert!(m.predict_label(&[0.0], -0.1).is_err());
        assert!(matches!(
            m.predict_score(&[0.0, 1.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn unanimous_forest_scores_one() {
        let d = Dataset::from_rows(
            &[vec![0.0], vec![0.1], vec![5.0], vec![5.1]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let cfg = ForestConfig {
            trees: 9,
            max_features: Some(0),
            balanced: true,
            seed: 4,
            ..ForestConfig::default()
        };
        let m = Model::Forest(crate::ensembles::brf_fit(&d, &cfg).unwrap());
        assert_eq!(m.predict_score(&[5.05]).unwrap(), 1.0);
        let rf = Model::Forest(random_forest_fit(&d, &cfg).unwrap());
        assert!(rf.predict_score(&[0.0]).unwrap() <= 1.0);
    }
}
