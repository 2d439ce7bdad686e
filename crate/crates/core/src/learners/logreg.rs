use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            learning_rate: 0.5,
            iterations: 500,
            l2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LogRegConfig,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `l2/2 * |w|^2` (bias unpenalised), with its gradient
/// `(dL/dw, dL/db)`.
pub fn logreg_objective(
    data: &Dataset,
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = data.n() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &label) in data.rows().zip(data.labels()) {
        let z = row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() + bias;
        let y = f64::from(label);
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, x) in grad.iter_mut().zip(row) {
            *g += r * x;
        }
        grad_b += r;
    }
    loss /= n;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad, grad_b / n)
}

/// Full-batch gradient descent with a fixed step and iteration count.
pub fn logreg_fit(data: &Dataset, config: &LogRegConfig) -> Result<LogRegModel> {
    if data.is_empty() {
        return Err(Error::Fit("empty dataset".into()));
    }
    let mut weights = vec![0.0; data.dim()];
    let mut bias = 0.0;
    for _ in 0..config.iterations {
        let (_, grad, grad_b) = logreg_objective(data, &weights, bias, config.l2);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        bias -= config.learning_rate * grad_b;
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::Fit("logistic regression diverged".into()));
    }
    Ok(LogRegModel {
        weights,
        bias,
        config: config.clone(),
    })
}

impl LogRegModel {
    pub(crate) fn score_unchecked(&self, row: &[f64]) -> f64 {
        sigmoid(
            row.iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
                + self.bias,
        )
    }

    pub fn score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: row.len(),
            });
        }
        Ok(self.score_unchecked(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_model_scores_half() {
        let m = LogRegModel {
            weights: vec![0.0; 3],
            bias: 0.0,
            config: LogRegConfig::default(),
        };
        assert_eq!(m.score(&[1.0, -4.0, 9.0]).unwrap(), 0.5);
    }

    #[test]
    fn separable_pair_is_learned() {
        let d = Dataset::from_rows(&[vec![-1.0], vec![1.0]], vec![0, 1]).unwrap();
        let m = logreg_fit(&d, &LogRegConfig::default()).unwrap();
        assert!(m.score(&[-1.0]).unwrap() < 0.5);
        assert!(m.score(&[1.0]).unwrap() > 0.5);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = crate::dataset::synth_gaussian(60, 0.3, 3, 1.5, 2).unwrap();
        let mut rng = crate::seed::rng(99);
        let l2 = 0.05;
        let h = 1e-6;
        for _ in 0..5 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let (_, grad, grad_b) = logreg_objective(&d, &w, b, l2);
            for j in 0..3 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (logreg_objective(&d, &wp, b, l2).0 - logreg_objective(&d, &wm, b, l2).0)
                    / (2.0 * h);
                assert!(
                    (fd - grad[j]).abs() <= 1e-5 * grad[j].abs().max(1e-3),
                    "{fd} vs {}",
                    grad[j]
                );
            }
            let fd = (logreg_objective(&d, &w, b + h, l2).0
                - logreg_objective(&d, &w, b - h, l2).0)
                / (2.0 * h);
            assert!((fd - grad_b).abs() <= 1e-5 * grad_b.abs().max(1e-3));
        }
    }

    #[test]
    fn empty_rejected() {
        let d = Dataset::from_rows(&[], vec![]).unwrap();
        assert!(logreg_fit(&d, &LogRegConfig::default()).is_err());
    }
}
