use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    InfoGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartConfig {
    /// 0 = unbounded.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    /// Features drawn per split; 0 = all.
    pub max_features: usize,
    pub seed: u64,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_depth: 0,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
            max_features: 0,
            seed: 0,
        }
    }
}

impl CartConfig {
    pub fn stump() -> Self {
        CartConfig {
            max_depth: 1,
            ..Self::default()
        }
    }

    pub fn with_depth(max_depth: usize) -> Self {
        CartConfig {
            max_depth,
            ..Self::default()
        }
    }
}

/// Gini impurity `1 - sum p_c^2` of a weighted two-class node.
pub fn gini(class_weights: [f64; 2]) -> Result<f64> {
    let total = check_weights(class_weights)?;
    Ok(1.0
        - class_weights
            .iter()
            .map(|w| (w / total).powi(2))
            .sum::<f64>())
}

/// Shannon entropy in bits.
pub fn entropy(class_weights: [f64; 2]) -> Result<f64> {
    let total = check_weights(class_weights)?;
    Ok(-class_weights
        .iter()
        .map(|w| w / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>())
}

fn check_weights(w: [f64; 2]) -> Result<f64> {
    if w.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Impurity(format!("invalid class weights {w:?}")));
    }
    let total = w[0] + w[1];
    if total <= 0.0 {
        return Err(Error::Impurity("both class weights are zero".into()));
    }
    Ok(total)
}

fn impurity(criterion: Criterion, w: [f64; 2]) -> f64 {
    let total = w[0] + w[1];
    if total <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w[0] / total, w[1] / total);
    match criterion {
        Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
        Criterion::InfoGain => [p0, p1]
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Weighted class totals `[majority, minority]` of the training rows reaching the leaf.
        weights: [f64; 2],
        minority_probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartTree {
    pub nodes: Vec<Node>,
    pub dim: usize,
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    depth: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

const MIN_GAIN: f64 = 1e-12;

/// Greedy weighted CART. No pruning.
pub fn cart_fit(data: &Dataset, weights: &[f64], config: &CartConfig) -> Result<CartTree> {
    if data.is_empty() {
        return Err(Error::Fit("empty dataset".into()));
    }
    if weights.len() != data.n() {
        return Err(Error::Fit(format!(
            "{} weights for {} rows",
            weights.len(),
            data.n()
        )));
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::Fit("weights must be finite and nonnegative".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Fit("total weight is zero".into()));
    }
    if config.max_features > data.dim() {
        return Err(Error::Fit(format!(
            "max_features {} exceeds dimension {}",
            config.max_features,
            data.dim()
        )));
    }
    let min_leaf = config.min_samples_leaf.max(1);
    let d = data.dim();
    let mut rng = seed::rng(config.seed);
    let mut nodes = vec![Node::Leaf {
        weights: [0.0; 2],
        minority_probability: 0.5,
    }];
    let mut stack = vec![Pending {
        node: 0,
        rows: (0..data.n()).collect(),
        depth: 0,
    }];
    let mut scratch: Vec<(f64, u8, f64)> = Vec::with_capacity(data.n());

    while let Some(Pending { node, rows, depth }) = stack.pop() {
        let mut w = [0.0; 2];
        for &i in &rows {
            w[usize::from(data.label(i))] += weights[i];
        }
        let can_split = w[0] > 0.0
            && w[1] > 0.0
            && (config.max_depth == 0 || depth < config.max_depth)
            && rows.len() >= 2 * min_leaf;
        let best = if can_split {
            let features: Vec<usize> = if config.max_features > 0 && config.max_features < d {
                let mut f = rand::seq::index::sample(&mut rng, d, config.max_features).into_vec();
                f.sort_unstable();
                f
            } else {
                (0..d).collect()
            };
            best_split(
                data,
                weights,
                &rows,
                &features,
                w,
                config.criterion,
                min_leaf,
                &mut scratch,
            )
        } else {
            None
        };
        match best {
            None => {
                let total = w[0] + w[1];
                nodes[node] = Node::Leaf {
                    weights: w,
                    minority_probability: if total > 0.0 { w[1] / total } else { 0.5 },
                };
            }
            Some(c) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| data.row(i)[c.feature] <= c.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf {
                    weights: [0.0; 2],
                    minority_probability: 0.5,
                });
                nodes.push(Node::Leaf {
                    weights: [0.0; 2],
                    minority_probability: 0.5,
                });
                nodes[node] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                stack.push(Pending {
                    node: right,
                    rows: right_rows,
                    depth: depth + 1,
                });
                stack.push(Pending {
                    node: left,
                    rows: left_rows,
                    depth: depth + 1,
                });
            }
        }
    }
    Ok(CartTree { nodes, dim: d })
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    data: &Dataset,
    weights: &[f64],
    rows: &[usize],
    features: &[usize],
    parent: [f64; 2],
    criterion: Criterion,
    min_leaf: usize,
    scratch: &mut Vec<(f64, u8, f64)>,
) -> Option<Candidate> {
    let total = parent[0] + parent[1];
    let parent_impurity = impurity(criterion, parent);
    let mut best: Option<Candidate> = None;
    let mut best_gain = MIN_GAIN;
    for &f in features {
        scratch.clear();
        scratch.extend(
            rows.iter()
                .map(|&i| (data.row(i)[f], data.label(i), weights[i])),
        );
        scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0.0; 2];
        for k in 0..scratch.len() - 1 {
            let (v, label, w) = scratch[k];
            left[usize::from(label)] += w;
            let next = scratch[k + 1].0;
            if v == next {
                continue;
            }
            let n_left = k + 1;
            if n_left < min_leaf || scratch.len() - n_left < min_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let (wl, wr) = (left[0] + left[1], right[0] + right[1]);
            if wl <= 0.0 || wr <= 1e-15 * total {
                continue;
            }
            let gain = parent_impurity
                - (wl / total) * impurity(criterion, left)
                - (wr / total) * impurity(criterion, right);
            if gain > best_gain + if best.is_some() { MIN_GAIN } else { 0.0 } {
                let mid = v + (next - v) / 2.0;
                best_gain = gain;
                best = Some(Candidate {
                    gain,
                    feature: f,
                    threshold: if mid < next { mid } else { v },
                });
            }
        }
    }
    debug_assert!(best.as_ref().is_none_or(|c| c.gain > 0.0));
    best
}

impl CartTree {
    /// Index of the leaf node reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
                Node::Leaf { .. } => return i,
            }
        }
    }

    /// Minority probability without a dimension check.
    pub(crate) fn proba(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf {
                minority_probability,
                ..
            } => minority_probability,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// `(label, minority probability)`; the label is 1 when the probability is at least 0.5.
    pub fn predict(&self, row: &[f64]) -> Result<(u8, f64)> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: row.len(),
            });
        }
        let p = self.proba(row);
        Ok((u8::from(p >= 0.5), p))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}
