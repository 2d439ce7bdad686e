use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::registry::Registry;
use crate::dataset::{
    clean, fit_encoder, load_csv, split_positions, synth_aefi, synth_gaussian, Dataset, Encoder,
    RawRecord, RecordSchema, SplitSpec,
};
use crate::ensembles::BoostConfig;
use crate::error::{Error, Result};
use crate::learners::SvcConfig;
use crate::metrics::{auc, compute_metrics, confusion, ConfusionMatrix, MetricsReport};
use crate::model::{check_threshold, DEFAULT_THRESHOLD};
use crate::seed;
use crate::tuning::{search, Params, SearchPlan, Trial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    SynthGaussian {
        n: usize,
        minority_fraction: f64,
        dims: usize,
        separation: f64,
    },
    SynthAefi {
        n: usize,
        minority_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<PathBuf>,
    },
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<PathBuf>,
    },
}

fn default_test_fraction() -> f64 {
    SplitSpec::default().test_fraction
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "yes")]
    pub stratified: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            test_fraction: default_test_fraction(),
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(default)]
    pub tuned: bool,
    /// Overrides the algorithm's default search plan when tuned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SearchPlan>,
    /// Fixed hyperparameters; tuned candidates are layered on top.
    #[serde(default)]
    pub params: Params,
}

impl AlgorithmSpec {
    pub fn fixed(name: &str) -> Self {
        AlgorithmSpec {
            name: name.into(),
            tuned: false,
            plan: None,
            params: Params::default(),
        }
    }

    pub fn tuned(name: &str) -> Self {
        AlgorithmSpec {
            tuned: true,
            ..Self::fixed(name)
        }
    }
}

/// Which class the confusion-matrix metrics treat as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveClass {
    #[default]
    Minority,
    Majority,
}

impl PositiveClass {
    pub fn label(self) -> u8 {
        match self {
            PositiveClass::Minority => 1,
            PositiveClass::Majority => 0,
        }
    }
}

/// Which boosting distribution ranks rows in the overlap experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSnapshot {
    /// Distribution after the last completed round.
    #[default]
    Final,
    /// Per-row maximum over all rounds.
    MaxOverRounds,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSpec {
    #[serde(default)]
    pub svc: SvcConfig,
    #[serde(default)]
    pub boost: BoostConfig,
    #[serde(default)]
    pub snapshot: WeightSnapshot,
    #[serde(default = "ten")]
    pub runs: usize,
}

impl Default for OverlapSpec {
    fn default() -> Self {
        OverlapSpec {
            svc: SvcConfig::default(),
            boost: BoostConfig::default(),
            snapshot: WeightSnapshot::Final,
            runs: ten(),
        }
    }
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitOptions,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub positive_class: PositiveClass,
    pub seeds: Vec<u64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSpec>,
}

impl BenchmarkSpec {
    /// Reads a spec; relative data paths resolve against the spec's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: BenchmarkSpec = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut spec.data {
            DataSource::Csv { path, schema } => {
                resolve(path);
                schema.as_mut().map(resolve);
            }
            DataSource::SynthAefi { schema, .. } => {
                schema.as_mut().map(resolve);
            }
            DataSource::SynthGaussian { .. } => {}
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument(
                "benchmark lists no algorithms".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("benchmark lists no seeds".into()));
        }
        check_threshold(self.threshold)
    }
}

fn load_schema(path: &Option<PathBuf>) -> Result<RecordSchema> {
    match path {
        Some(p) => RecordSchema::from_path(p),
        None => Ok(RecordSchema::default()),
    }
}

/// Cleans labelled records, splits them, and fits the encoder on the training side only.
pub fn split_records(
    records: &[RawRecord],
    schema: &RecordSchema,
    split: &SplitSpec,
) -> Result<(Dataset, Dataset, Encoder)> {
    let (cleaned, _) = clean(records, schema)?;
    let labels = cleaned
        .iter()
        .map(|r| schema.target.label_of(r))
        .collect::<Result<Vec<u8>>>()?;
    let (train_pos, test_pos) = split_positions(&labels, split)?;
    let pick = |pos: &[usize]| pos.iter().map(|&i| cleaned[i].clone()).collect::<Vec<_>>();
    let encoder = fit_encoder(&pick(&train_pos), schema)?;
    let encode = |pos: &[usize]| -> Result<Dataset> {
        let d = encoder.encode_dataset(&pick(pos))?;
        Ok(
            Dataset::new(d.features().clone(), d.labels().to_vec(), pos.to_vec())?
                .with_feature_names(encoder.column_names()),
        )
    };
    Ok((encode(&train_pos)?, encode(&test_pos)?, encoder))
}

/// Train and test partitions for one run seed.
pub fn prepare(spec: &BenchmarkSpec, run_seed: u64) -> Result<(Dataset, Dataset)> {
    let split = SplitSpec {
        test_fraction: spec.split.test_fraction,
        stratified: spec.split.stratified,
        seed: seed::derive(run_seed, 1),
    };
    let data_seed = seed::derive(run_seed, 0);
    let records = match &spec.data {
        DataSource::SynthGaussian {
            n,
            minority_fraction,
            dims,
            separation,
        } => {
            let d = synth_gaussian(*n, *minority_fraction, *dims, *separation, data_seed)?;
            let (train, test) = split_positions(d.labels(), &split)?;
            return Ok((d.subset(&train), d.subset(&test)));
        }
        DataSource::SynthAefi {
            n,
            minority_fraction,
            schema,
        } => {
            let schema = load_schema(schema)?;
            (
                synth_aefi(*n, *minority_fraction, &schema, data_seed)?,
                schema,
            )
        }
        DataSource::Csv { path, schema } => {
            let schema = load_schema(schema)?;
            (load_csv(path, &schema)?, schema)
        }
    };
    let (train, test, _) = split_records(&records.0, &records.1, &split)?;
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub auc: f64,
    pub threshold: f64,
    pub test_ids: Vec<usize>,
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub algorithm: String,
    pub seed: u64,
    /// Parameters the final model was fitted with.
    pub params: Params,
    /// Best cross-validated AUC when tuned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<CellResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Means over the successful cells of one algorithm; a metric is `None`
/// when no cell defines it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub algorithm: String,
    pub ok: usize,
    pub failed: usize,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub g_mean: Option<f64>,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub spec: BenchmarkSpec,
    pub environment: Environment,
    /// Algorithm-major, seeds in spec order.
    pub cells: Vec<Cell>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub algorithm: String,
    pub seed: u64,
    /// Wall-clock seconds for tuning plus the final fit.
    pub train_seconds: f64,
}

pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<(BenchmarkReport, Vec<Timing>)> {
    run_benchmark_with(spec, &Registry::native())
}

pub fn run_benchmark_with(
    spec: &BenchmarkSpec,
    registry: &Registry,
) -> Result<(BenchmarkReport, Vec<Timing>)> {
    spec.validate()?;
    if let Some(a) = spec.algorithms.iter().find(|a| !registry.contains(&a.name)) {
        return Err(Error::InvalidArgument(format!(
            "unknown algorithm `{}`",
            a.name
        )));
    }
    let splits: Vec<Result<(Dataset, Dataset)>> =
        spec.seeds.par_iter().map(|&s| prepare(spec, s)).collect();
    let jobs: Vec<(usize, usize)> = (0..spec.algorithms.len())
        .flat_map(|a| (0..spec.seeds.len()).map(move |s| (a, s)))
        .collect();
    let outcomes: Vec<(Cell, Timing)> = jobs
        .into_par_iter()
        .map(|(a, s)| {
            let algo = &spec.algorithms[a];
            let run_seed = spec.seeds[s];
            let start = Instant::now();
            let mut cell = Cell {
                algorithm: algo.name.clone(),
                seed: run_seed,
                params: algo.params.clone(),
                cv_auc: None,
                result: None,
                error: None,
            };
            let outcome = match &splits[s] {
                Ok((train, test)) => {
                    run_cell(spec, registry, algo, run_seed, train, test, &mut cell)
                }
                Err(e) => Err(Error::Experiment(format!("data preparation failed: {e}"))),
            };
            if let Err(e) = outcome {
                cell.error = Some(e.to_string());
            }
            let timing = Timing {
                algorithm: algo.name.clone(),
                seed: run_seed,
                train_seconds: start.elapsed().as_secs_f64(),
            };
            (cell, timing)
        })
        .collect();
    let (cells, timings): (Vec<Cell>, Vec<Timing>) = outcomes.into_iter().unzip();
    let aggregates = aggregate(&spec.algorithms, &cells);
    Ok((
        BenchmarkReport {
            spec: spec.clone(),
            environment: Environment::current(),
            cells,
            aggregates,
        },
        timings,
    ))
}

fn run_cell(
    spec: &BenchmarkSpec,
    registry: &Registry,
    algo: &AlgorithmSpec,
    run_seed: u64,
    train: &Dataset,
    test: &Dataset,
    cell: &mut Cell,
) -> Result<()> {
    let mut params = algo.params.clone();
    if algo.tuned {
        let mut plan = match &algo.plan {
            Some(p) => p.clone(),
            None => registry.plan(&algo.name)?,
        };
        plan.seed = seed::derive(plan.seed, run_seed);
        let learner = registry.learner(&algo.name, &algo.params);
        let best = search(train, learner.as_ref(), &plan)?.best;
        params.0.extend(best.params.0);
        cell.cv_auc = Some(best.mean_auc);
    }
    cell.params = params.clone();
    let scorer = registry.fit(
        &algo.name,
        &Params::default(),
        train,
        &params,
        seed::derive(run_seed, 2),
    )?;
    let scores = test
        .rows()
        .map(|r| scorer.score(r))
        .collect::<Result<Vec<f64>>>()?;
    cell.result = Some(score_cell(
        &scores,
        test.labels(),
        test.row_ids(),
        spec.threshold,
        spec.positive_class.label(),
    )?);
    Ok(())
}

fn score_cell(
    scores: &[f64],
    labels: &[u8],
    ids: &[usize],
    threshold: f64,
    positive: u8,
) -> Result<CellResult> {
    let predictions: Vec<u8> = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
    let cm = confusion(labels, &predictions, positive)?;
    Ok(CellResult {
        confusion: cm,
        metrics: compute_metrics(&cm),
        auc: auc(scores, labels)?,
        threshold,
        test_ids: ids.to_vec(),
        labels: labels.to_vec(),
        scores: scores.to_vec(),
    })
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

fn aggregate(algorithms: &[AlgorithmSpec], cells: &[Cell]) -> Vec<Aggregate> {
    algorithms
        .iter()
        .map(|a| {
            let mine: Vec<&Cell> = cells.iter().filter(|c| c.algorithm == a.name).collect();
            let ok: Vec<&CellResult> = mine.iter().filter_map(|c| c.result.as_ref()).collect();
            let m = |f: fn(&CellResult) -> Option<f64>| mean_defined(ok.iter().map(|r| f(r)));
            Aggregate {
                algorithm: a.name.clone(),
                ok: ok.len(),
                failed: mine.len() - ok.len(),
                accuracy: m(|r| r.metrics.accuracy),
                precision: m(|r| r.metrics.precision),
                recall: m(|r| r.metrics.acc_pos),
                specificity: m(|r| r.metrics.acc_neg),
                f1: m(|r| r.metrics.f1),
                g_mean: m(|r| r.metrics.g_mean),
                auc: m(|r| Some(r.auc)),
            }
        })
        .collect()
}

/// Recomputes every metric cell and aggregate from the stored scores and labels.
pub fn verify_report(report: &BenchmarkReport) -> Result<()> {
    let fail = |m: String| Err(Error::Experiment(m));
    let positive = report.spec.positive_class.label();
    for c in &report.cells {
        let Some(r) = &c.result else { continue };
        let at = format!("{} seed {}", c.algorithm, c.seed);
        if r.scores.len() != r.labels.len() || r.test_ids.len() != r.labels.len() {
            return fail(format!("{at}: stored vectors differ in length"));
        }
        let again = score_cell(&r.scores, &r.labels, &r.test_ids, r.threshold, positive)?;
        if again.confusion != r.confusion {
            return fail(format!("{at}: confusion matrix does not match scores"));
        }
        if !same_metrics(&again.metrics, &r.metrics) || again.auc.to_bits() != r.auc.to_bits() {
            return fail(format!("{at}: metrics do not match scores"));
        }
        if let (Some(g), Some(a), Some(b)) =
            (r.metrics.g_mean, r.metrics.acc_pos, r.metrics.acc_neg)
        {
            if (g * g - a * b).abs() > 1e-9 {
                return fail(format!("{at}: g_mean^2 != recall * specificity"));
            }
        }
    }
    if aggregate(&report.spec.algorithms, &report.cells) != report.aggregates {
        return fail("aggregates do not match cells".into());
    }
    Ok(())
}

fn same_metrics(a: &MetricsReport, b: &MetricsReport) -> bool {
    let bits = |m: &MetricsReport| {
        [
            m.acc_pos,
            m.acc_neg,
            m.precision,
            m.accuracy,
            m.f1,
            m.g_mean,
        ]
        .map(|v| v.map(f64::to_bits))
    };
    bits(a) == bits(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneEntry {
    pub algorithm: String,
    pub plan: SearchPlan,
    pub leaderboard: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    /// Run seed whose training partition was searched.
    pub seed: u64,
    pub entries: Vec<TuneEntry>,
}

/// Full leaderboards for every algorithm on the first seed's training partition.
pub fn tune_benchmark(spec: &BenchmarkSpec) -> Result<TuneReport> {
    spec.validate()?;
    let registry = Registry::native();
    let run_seed = spec.seeds[0];
    let (train, _) = prepare(spec, run_seed)?;
    let entries = spec
        .algorithms
        .iter()
        .map(|a| {
            let mut plan = match &a.plan {
                Some(p) => p.clone(),
                None => registry.plan(&a.name)?,
            };
            plan.seed = seed::derive(plan.seed, run_seed);
            let learner = registry.learner(&a.name, &a.params);
            let leaderboard = search(&train, learner.as_ref(), &plan)?.leaderboard;
            Ok(TuneEntry {
                algorithm: a.name.clone(),
                plan,
                leaderboard,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TuneReport {
        seed: run_seed,
        entries,
    })
}
