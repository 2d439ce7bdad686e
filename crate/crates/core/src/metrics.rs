//! Confusion-matrix statistics, ROC curves and rank AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub positive_class: u8,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same counts read with the other class as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
            positive_class: 1 - self.positive_class,
        }
    }

    /// Rows are actual classes (positive first), columns predicted.
    pub fn as_table(&self) -> [[u64; 2]; 2] {
        [[self.tp, self.fn_], [self.fp, self.tn]]
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8], positive_class: u8) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Metric(format!(
            "{} labels vs {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Metric("no labels".into()));
    }
    if positive_class > 1 {
        return Err(Error::Metric(format!(
            "positive class {positive_class} not in {{0, 1}}"
        )));
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fn_: 0,
        fp: 0,
        tn: 0,
        positive_class,
    };
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == positive_class, p == positive_class) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Every field is `None` when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Acc+, also recall and true-positive rate.
    pub acc_pos: Option<f64>,
    /// Acc-, also specificity and true-negative rate.
    pub acc_neg: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub g_mean: Option<f64>,
}

impl MetricsReport {
    pub fn recall(&self) -> Option<f64> {
        self.acc_pos
    }

    pub fn specificity(&self) -> Option<f64> {
        self.acc_neg
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn g_mean(acc_pos: f64, acc_neg: f64) -> f64 {
    (acc_pos * acc_neg).sqrt()
}

/// Harmonic mean of precision and recall; `None` when both are 0.
pub fn f1(precision: f64, recall: f64) -> Option<f64> {
    let s = precision + recall;
    (s > 0.0).then(|| 2.0 * precision * recall / s)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let acc_pos = ratio(cm.tp, cm.tp + cm.fn_);
    let acc_neg = ratio(cm.tn, cm.tn + cm.fp);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    MetricsReport {
        acc_pos,
        acc_neg,
        precision,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        f1: precision.zip(acc_pos).and_then(|(p, r)| f1(p, r)),
        g_mean: acc_pos.zip(acc_neg).map(|(a, b)| g_mean(a, b)),
    }
}

fn check_scores(scores: &[f64], labels: &[u8]) -> Result<(u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("AUC needs both classes".into()));
    }
    Ok((pos, neg))
}

/// Label-1 rows and label-0 rows grouped by distinct score, descending.
fn tie_groups(scores: &[f64], labels: &[u8]) -> Vec<(u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(u64, u64)> = Vec::new();
    let mut last = None;
    for i in order {
        let s = scores[i];
        if last != Some(s) {
            groups.push((0, 0));
            last = Some(s);
        }
        let g = groups.last_mut().unwrap();
        if labels[i] == 1 {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Probability that a random label-1 row outscores a random label-0 row, ties ½.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_scores(scores, labels)?;
    // twice the win count, kept integral so the result is exact
    let mut twice_wins: u128 = 0;
    let mut neg_below: u64 = labels.iter().filter(|&&y| y == 0).count() as u64;
    for (p, n) in tie_groups(scores, labels) {
        neg_below -= n;
        twice_wins += u128::from(p) * (2 * u128::from(neg_below) + u128::from(n));
    }
    Ok(twice_wins as f64 / (2 * u128::from(pos) * u128::from(neg)) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false-positive rate, true-positive rate), from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }
}

pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = check_scores(scores, labels)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (p, n) in tie_groups(scores, labels) {
        tp += p;
        fp += n;
        let next = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        // extend a vertical or horizontal run instead of adding a corner
        if let [.., a, b] = points[..] {
            if (a.0 == b.0 && b.0 == next.0) || (a.1 == b.1 && b.1 == next.1) {
                points.pop();
            }
        }
        points.push(next);
    }
    Ok(RocCurve { points })
}
