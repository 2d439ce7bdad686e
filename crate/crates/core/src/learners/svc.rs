//! Soft-margin support vector classifier trained by sequential minimal
//! optimization on the dual, with first-order maximal-violating-pair
//! working-set selection.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `(gamma * <a, b> + coef0)^degree`
    Polynomial {
        degree: u32,
        gamma: f64,
        coef0: f64,
    },
    /// `exp(-gamma * |a - b|^2)`
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => (gamma * dot(a, b) + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Linear => true,
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => degree >= 1 && gamma > 0.0 && coef0.is_finite(),
            Kernel::Rbf { gamma } => gamma > 0.0 && gamma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid kernel {self:?}")))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvcConfig {
    pub c: f64,
    pub kernel: Kernel,
    pub tol: f64,
    /// Maximum number of pair updates.
    pub max_iter: usize,
    pub sv_threshold: f64,
    /// Echoed for provenance; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SvcConfig {
    fn default() -> Self {
        SvcConfig {
            c: 1.0,
            kernel: Kernel::Polynomial {
                degree: 3,
                gamma: 0.1,
                coef0: 1.0,
            },
            tol: 1e-3,
            max_iter: 1_000_000,
            sv_threshold: 1e-8,
            seed: 0,
        }
    }
}

impl SvcConfig {
    pub fn linear(c: f64) -> Self {
        SvcConfig {
            c,
            kernel: Kernel::Linear,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "C = {} must be positive",
                self.c
            )));
        }
        if !(self.tol > 0.0) || !(self.sv_threshold > 0.0) {
            return Err(Error::InvalidArgument(
                "tol and sv_threshold must be positive".into(),
            ));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Row ids of the support vectors, ascending.
    pub support_ids: Vec<usize>,
    pub bias: f64,
    pub kernel: Kernel,
    pub config: SvcConfig,
    pub converged: bool,
    pub iterations: usize,
    pub dim: usize,
}

const TAU: f64 = 1e-12;

pub fn svc_fit(data: &Dataset, config: &SvcConfig) -> Result<SvcModel> {
    config.validate()?;
    if !data.has_both_classes() {
        return Err(Error::Fit("SVC needs both classes".into()));
    }
    let (alpha, rho, converged, iterations) = solve_dual(data, config);

    let c = config.c;
    let eps = config.sv_threshold;
    let mut order: Vec<usize> = (0..data.n()).filter(|&i| alpha[i] > eps).collect();
    order.sort_by_key(|&i| (data.row_ids()[i], i));
    let y = |i: usize| if data.label(i) == 1 { 1.0 } else { -1.0 };
    debug_assert!(alpha.iter().all(|&a| (0.0..=c).contains(&a)));
    Ok(SvcModel {
        support_vectors: order.iter().map(|&i| data.row(i).to_vec()).collect(),
        dual_coef: order.iter().map(|&i| alpha[i] * y(i)).collect(),
        alphas: order.iter().map(|&i| alpha[i]).collect(),
        support_ids: order.iter().map(|&i| data.row_ids()[i]).collect(),
        bias: -rho,
        kernel: config.kernel,
        config: config.clone(),
        converged,
        iterations,
        dim: data.dim(),
    })
}

/// Returns `(alpha, rho, converged, iterations)` for
/// `min 1/2 a'Qa - e'a  s.t.  0 <= a <= C, y'a = 0`.
fn solve_dual(data: &Dataset, config: &SvcConfig) -> (Vec<f64>, f64, bool, usize) {
    let n = data.n();
    let c = config.c;
    let y: Vec<f64> = data
        .labels()
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = y[i] * y[j] * config.kernel.eval(data.row(i), data.row(j));
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q[i * n + j];
        let (qii, qjj) = (q[i * n + i], q[j * n + j]);
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
        }
    }

    let eps = config.sv_threshold;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c - eps {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= eps {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    (alpha, rho, converged, iterations)
}

impl SvcModel {
    pub(crate) fn decision_unchecked(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, row))
            .sum::<f64>()
            + self.bias
    }

    /// Signed margin `sum_i alpha_i y_i K(x_i, row) + b`; positive means minority.
    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: row.len(),
            });
        }
        Ok(self.decision_unchecked(row))
    }

    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        self.decision(row).map(|f| u8::from(f > 0.0))
    }

    pub fn support_indices(&self) -> Vec<usize> {
        self.support_ids.clone()
    }
}
