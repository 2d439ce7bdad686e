//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use aefi::dataset::Dataset;
use aefi::learners::{Kernel, SvcConfig, SvcModel};
use rand::Rng as _;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn b1_spec_path() -> PathBuf {
    workspace_root().join("specs/b1.json")
}

/// AUC by enumerating every (positive, negative) pair.
pub fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            pairs += 1;
            twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Dense soft-margin dual solution from projected gradient descent.
pub struct DualSolution {
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
}

impl DualSolution {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.y)
            .zip(&self.alpha)
            .map(|((r, y), a)| a * y * self.kernel.eval(r, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Euclidean projection onto `{0 <= a <= c, sum y_i a_i = 0}` by bisection on
/// the multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c))
            .collect()
    };
    let g = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-m, m);
    // g is nonincreasing in lam
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Minimizes `1/2 a'Qa - 1'a` with FISTA, `Q_ij = y_i y_j K(x_i, x_j)`.
pub fn dense_dual(data: &Dataset, kernel: Kernel, c: f64) -> DualSolution {
    let n = data.n();
    let rows: Vec<Vec<f64>> = data.rows().map(|r| r.to_vec()).collect();
    let y: Vec<f64> = data
        .labels()
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| y[i] * y[j] * kernel.eval(&rows[i], &rows[j]))
                .collect()
        })
        .collect();
    // Gershgorin bound on the largest eigenvalue
    let lip = q
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(1e-12, f64::max);
    let step = 1.0 / lip;
    let grad = |a: &[f64]| -> Vec<f64> {
        q.iter()
            .map(|r| r.iter().zip(a).map(|(qij, aj)| qij * aj).sum::<f64>() - 1.0)
            .collect()
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let g = grad(&z);
        let next = project(
            &z.iter()
                .zip(&g)
                .map(|(zi, gi)| zi - step * gi)
                .collect::<Vec<_>>(),
            &y,
            c,
        );
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved: f64 = next
            .iter()
            .zip(&a)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        z = next
            .iter()
            .zip(&a)
            .map(|(p, q)| p + (t - 1.0) / t_next * (p - q))
            .collect();
        a = next;
        t = t_next;
        if moved < 1e-14 {
            break;
        }
    }
    let eps = 1e-6 * c;
    let partial: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[j] * y[j] * kernel.eval(&rows[j], &rows[i]))
                .sum()
        })
        .collect();
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > eps && a[i] < c - eps).collect();
    let bias = if free.is_empty() {
        // any b in [lb, ub] satisfies KKT; take the midpoint
        let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let target = y[i] - partial[i];
            let at_upper = a[i] >= c - eps;
            if (y[i] > 0.0) != at_upper {
                lb = lb.max(target);
            } else {
                ub = ub.min(target);
            }
        }
        0.5 * (lb + ub)
    } else {
        free.iter().map(|&i| y[i] - partial[i]).sum::<f64>() / free.len() as f64
    };
    DualSolution {
        rows,
        y,
        alpha: a,
        bias,
        kernel,
    }
}

/// Alpha per training position; zero for rows that are not support vectors.
pub fn alphas_by_position(model: &SvcModel, data: &Dataset) -> Vec<f64> {
    data.row_ids()
        .iter()
        .map(|id| {
            model
                .support_ids
                .iter()
                .position(|s| s == id)
                .map_or(0.0, |k| model.alphas[k])
        })
        .collect()
}

/// Checks the KKT conditions of a fitted model against its training data.
pub fn check_kkt(model: &SvcModel, data: &Dataset, config: &SvcConfig) -> Result<(), String> {
    let (c, tol, eps) = (config.c, config.tol, config.sv_threshold);
    if !model.converged {
        return Err("solver did not converge".into());
    }
    let coef_sum: f64 = model.dual_coef.iter().sum();
    if coef_sum.abs() > tol {
        return Err(format!("|sum alpha_i y_i| = {coef_sum:e}"));
    }
    for (i, a) in alphas_by_position(model, data).into_iter().enumerate() {
        if !(-1e-12..=c + 1e-12).contains(&a) {
            return Err(format!("alpha[{i}] = {a} outside [0, {c}]"));
        }
        let y = if data.label(i) == 1 { 1.0 } else { -1.0 };
        let m = y * model.decision(data.row(i)).unwrap();
        let ok = if a <= eps {
            m >= 1.0 - 10.0 * tol
        } else if a < c - eps {
            (m - 1.0).abs() <= 10.0 * tol
        } else {
            m <= 1.0 + 10.0 * tol
        };
        if !ok {
            return Err(format!("row {i}: alpha {a:.6}, y*f = {m:.6}"));
        }
    }
    Ok(())
}

/// Small random SVC problem: labelled Gaussian blobs, a kernel and C drawn
/// from a fixed menu.
pub fn random_svc_instance(seed: u64, max_n: usize) -> (Dataset, SvcConfig) {
    let mut rng = aefi::seed::rng(seed);
    let n = rng.random_range(4..=max_n);
    let d = rng.random_range(1..=3);
    let shift = rng.random_range(0.0..2.5);
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
    labels[0] = 0;
    labels[1] = 1;
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            (0..d)
                .map(|_| {
                    let z: f64 =
                        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                    z + f64::from(l) * shift
                })
                .collect()
        })
        .collect();
    let kernel = match seed % 3 {
        0 => Kernel::Linear,
        1 => Kernel::Polynomial {
            degree: 2,
            gamma: 0.5,
            coef0: 1.0,
        },
        _ => Kernel::Rbf { gamma: 0.5 },
    };
    let c = [0.5, 1.0, 10.0][rng.random_range(0..3)];
    let config = SvcConfig {
        c,
        kernel,
        ..SvcConfig::default()
    };
    (Dataset::from_rows(&rows, labels).unwrap(), config)
}

/// Compares library and oracle labels on the training rows and on probe
/// points around them. Points inside the oracle's `band` around the boundary
/// are skipped. Returns the number of points compared.
pub fn compare_with_oracle(
    model: &SvcModel,
    oracle: &DualSolution,
    data: &Dataset,
    band: f64,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = aefi::seed::rng(seed ^ 0x5eed);
    let mut points: Vec<Vec<f64>> = data.rows().map(|r| r.to_vec()).collect();
    for _ in 0..20 {
        let base = data.row(rng.random_range(0..data.n()));
        points.push(
            base.iter()
                .map(|x| x + rng.random_range(-1.0..1.0))
                .collect(),
        );
    }
    let mut compared = 0;
    for p in &points {
        let want = oracle.decision(p);
        if want.abs() < band {
            continue;
        }
        let got = model.decision(p).unwrap();
        if (got > 0.0) != (want > 0.0) {
            return Err(format!("point {p:?}: library {got:.6}, oracle {want:.6}"));
        }
        compared += 1;
    }
    Ok(compared)
}

/// The record shown on the example entry form, as request features.
pub fn form_record() -> serde_json::Map<String, serde_json::Value> {
    let pairs = [
        ("vaccination_times", "4"),
        ("vaccination_dose", "0.5"),
        ("gender", "Male"),
        ("fever", "Normal"),
        ("local_redness_swelling", "Normal"),
        ("local_induration", "Normal"),
        ("vaccination_age", "0-258days"),
        ("inoculation_organization_form", "Unknown"),
        ("vaccine_name", "PPV23"),
        ("inoculation_route", "Oral"),
        ("inoculation_interval", "0-9days"),
        ("inoculation_site", "Deltoid muscle of upper arm"),
    ];
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::from(*v)))
        .collect()
}

/// A bundle trained on synthetic records.
pub fn small_bundle(algorithm: &str, seed: u64) -> aefi::service::ModelBundle {
    use aefi::dataset::{synth_aefi, RecordSchema};
    use aefi::service::{train_bundle, TrainOptions};
    let schema = RecordSchema::default();
    let records = synth_aefi(300, 0.15, &schema, seed).unwrap();
    train_bundle(&records, &schema, &TrainOptions::new(algorithm, seed)).unwrap()
}

/// Sends one request through the router and returns status and JSON body.
pub async fn call(
    app: &axum::Router,
    method: &str,
    uri: &str,
    body: Option<serde_json::Value>,
) -> (axum::http::StatusCode, serde_json::Value) {
    use http_body_util::BodyExt as _;
    use tower::ServiceExt as _;
    let mut req = axum::http::Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            axum::body::Body::from(v.to_string())
        }
        None => axum::body::Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

/// Trains a bundle, round-trips it through its JSON form and compares scores
/// on 100 fresh records bit for bit. Returns the model family tag.
pub fn round_trip_scores(algorithm: &str, seed: u64) -> Result<String, String> {
    use aefi::dataset::synth_aefi;
    use aefi::service::{deserialize_model, serialize_model};
    let bundle = small_bundle(algorithm, seed);
    let text = serialize_model(&bundle).map_err(|e| e.to_string())?;
    if serialize_model(&bundle).map_err(|e| e.to_string())? != text {
        return Err("two serializations differ".into());
    }
    let back = deserialize_model(&text).map_err(|e| e.to_string())?;
    if serialize_model(&back).map_err(|e| e.to_string())? != text {
        return Err("re-serialization differs".into());
    }
    let probes = synth_aefi(100, 0.2, &bundle.schema, seed ^ 0xabc).map_err(|e| e.to_string())?;
    for (i, mut r) in probes.into_iter().enumerate() {
        r.values.remove(&bundle.schema.target.name);
        let (a, b) = (bundle.score_record(&r), back.score_record(&r));
        match (a, b) {
            (Ok(a), Ok(b)) if a.to_bits() == b.to_bits() && a.to_string() == b.to_string() => {}
            // the cleaner would drop this record; both sides must agree on rejecting it
            (Err(a), Err(b)) if a.to_string() == b.to_string() => {}
            (a, b) => return Err(format!("record {i}: {a:?} vs {b:?}")),
        }
    }
    let family: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    family["model"]["family"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| "model has no family tag".into())
}

/// A benchmark spec small enough for debug builds.
pub fn small_spec() -> serde_json::Value {
    serde_json::json!({
        "data": {"kind": "synth_gaussian", "n": 300, "minority_fraction": 0.1, "dims": 4, "separation": 1.5},
        "split": {"test_fraction": 0.29, "stratified": true},
        "algorithms": [
            {"name": "decision_tree", "tuned": true},
            {"name": "brf", "params": {"trees": 20}},
            {"name": "rusboost", "params": {"rounds": 10}},
            {"name": "rusboost_svc", "params": {"rounds": 10}}
        ],
        "positive_class": "minority",
        "seeds": [1, 2],
        "threshold": 0.5,
        "overlap": {"runs": 2, "boost": {"rounds": 10}}
    })
}

pub fn aefi_cmd(threads: usize) -> std::process::Command {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_aefi"));
    cmd.env("RAYON_NUM_THREADS", threads.to_string())
        .env_remove("SOURCE_DATE_EPOCH");
    cmd
}

fn run_ok(cmd: &mut std::process::Command) -> Result<(), String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{:?} failed: {}",
            cmd,
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// Runs the CLI pipeline twice, with one and with four worker threads, and
/// compares every output byte for byte. Returns the number of files compared.
pub fn cli_determinism() -> Result<usize, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, small_spec().to_string()).map_err(|e| e.to_string())?;
    let mut compared = 0;
    let outs: Vec<std::path::PathBuf> = [1usize, 4]
        .iter()
        .map(|&threads| {
            let out = dir.path().join(format!("t{threads}"));
            run_ok(
                aefi_cmd(threads)
                    .args(["bench", "run", "--spec"])
                    .arg(&spec)
                    .arg("--out")
                    .arg(&out),
            )?;
            run_ok(
                aefi_cmd(threads)
                    .args(["bench", "overlap", "--spec"])
                    .arg(&spec)
                    .arg("--out")
                    .arg(&out),
            )?;
            let data = out.join("records.csv");
            run_ok(
                aefi_cmd(threads)
                    .args([
                        "--seed",
                        "5",
                        "data",
                        "synth",
                        "--kind",
                        "aefi",
                        "--n",
                        "300",
                        "--minority-fraction",
                        "0.15",
                        "--out",
                    ])
                    .arg(&data),
            )?;
            run_ok(
                aefi_cmd(threads)
                    .args([
                        "--seed", "5", "train", "--algo", "rusboost", "--tune", "--data",
                    ])
                    .arg(&data)
                    .arg("--out")
                    .arg(out.join("model.json")),
            )?;
            Ok(out)
        })
        .collect::<Result<_, String>>()?;
    for name in [
        "report.json",
        "report.csv",
        "report.md",
        "overlap.json",
        "overlap.md",
        "records.csv",
        "model.json",
    ] {
        let a = std::fs::read(outs[0].join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = std::fs::read(outs[1].join(name)).map_err(|e| format!("{name}: {e}"))?;
        if a != b {
            return Err(format!("{name} differs between thread counts"));
        }
        compared += 1;
    }
    Ok(compared)
}
