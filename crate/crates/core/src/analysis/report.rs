use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bench::{BenchmarkReport, PositiveClass, Timing, TuneReport};
use super::overlap::OverlapReport;
use crate::canon::to_canonical_json;
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::Json,
        ReportFormat::Csv,
        ReportFormat::Markdown,
    ];

    fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Markdown => "report.md",
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn emit_report(
    report: &BenchmarkReport,
    formats: &[ReportFormat],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    formats
        .iter()
        .map(|&f| {
            let body = match f {
                ReportFormat::Json => to_canonical_json(report)?,
                ReportFormat::Csv => render_csv(report)?,
                ReportFormat::Markdown => render_markdown(report),
            };
            write(dir, f.file_name(), &body)
        })
        .collect()
}

/// Wall-clock times go in their own file so the report itself stays reproducible.
pub fn emit_timings(timings: &[Timing], dir: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "seed", "train_seconds"])
        .map_err(csv_err)?;
    for t in timings {
        w.write_record([
            t.algorithm.clone(),
            t.seed.to_string(),
            format!("{:.6}", t.train_seconds),
        ])
        .map_err(csv_err)?;
    }
    write(dir, "timings.csv", &csv_string(w)?)
}

pub fn emit_overlap(report: &OverlapReport, dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, "overlap.json", &to_canonical_json(report)?)?,
        write(dir, "overlap.md", &render_overlap(report))?,
    ])
}

pub fn emit_tune(report: &TuneReport, dir: &Path) -> Result<PathBuf> {
    write(dir, "tune.json", &to_canonical_json(report)?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Experiment(format!("csv: {e}"))
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Experiment(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}

fn raw(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One row per (algorithm, seed).
pub fn render_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "algorithm",
        "seed",
        "status",
        "accuracy",
        "precision",
        "recall",
        "specificity",
        "f1",
        "g_mean",
        "auc",
        "tp",
        "fn",
        "fp",
        "tn",
        "cv_auc",
        "error",
    ])
    .map_err(csv_err)?;
    for c in &report.cells {
        let mut row = vec![c.algorithm.clone(), c.seed.to_string()];
        match &c.result {
            Some(r) => {
                let m = &r.metrics;
                row.push("ok".into());
                row.extend(
                    [
                        m.accuracy,
                        m.precision,
                        m.acc_pos,
                        m.acc_neg,
                        m.f1,
                        m.g_mean,
                        Some(r.auc),
                    ]
                    .map(raw),
                );
                let cm = &r.confusion;
                row.extend([cm.tp, cm.fn_, cm.fp, cm.tn].map(|v| v.to_string()));
            }
            None => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 11));
            }
        }
        row.push(raw(c.cv_auc));
        row.push(c.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    csv_string(w)
}

fn summed_confusion(report: &BenchmarkReport, algorithm: &str) -> Option<ConfusionMatrix> {
    report
        .cells
        .iter()
        .filter(|c| c.algorithm == algorithm)
        .filter_map(|c| c.result.as_ref().map(|r| r.confusion))
        .reduce(|a, b| ConfusionMatrix {
            tp: a.tp + b.tp,
            fn_: a.fn_ + b.fn_,
            fp: a.fp + b.fp,
            tn: a.tn + b.tn,
            positive_class: a.positive_class,
        })
}

pub fn render_markdown(report: &BenchmarkReport) -> String {
    let spec = &report.spec;
    let (pos, neg) = match spec.positive_class {
        PositiveClass::Minority => ("minority", "majority"),
        PositiveClass::Majority => ("majority", "minority"),
    };
    let mut s = String::new();
    let _ = writeln!(s, "# Benchmark report\n");
    let _ = writeln!(
        s,
        "Positive class: {pos}. Threshold: {}. Seeds: {}. Values are means over successful seeds.\n",
        spec.threshold,
        spec.seeds.len()
    );

    let _ = writeln!(s, "## Evaluation metrics\n");
    let _ = writeln!(
        s,
        "| Algorithm | Accuracy | Precision | Recall | F1 | AUC | Confusion matrix |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for a in &report.aggregates {
        let cm = summed_confusion(report, &a.algorithm).map_or_else(
            || "n/a".into(),
            |c| format!("[[{}, {}], [{}, {}]]", c.tp, c.fn_, c.fp, c.tn),
        );
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            a.algorithm,
            cell(a.accuracy),
            cell(a.precision),
            cell(a.recall),
            cell(a.f1),
            cell(a.auc),
            cm
        );
    }

    let _ = writeln!(s, "\n## Imbalance comparison\n");
    let _ = write!(s, "| Metric |");
    for a in &report.aggregates {
        let _ = write!(s, " {} |", a.algorithm);
    }
    let _ = write!(s, "\n|---|");
    for _ in &report.aggregates {
        let _ = write!(s, "---|");
    }
    s.push('\n');
    type Pick = fn(&super::bench::Aggregate) -> Option<f64>;
    let rows: [(&str, Pick); 6] = [
        ("Precision", |a| a.precision),
        ("Recall", |a| a.recall),
        ("Specificity", |a| a.specificity),
        ("F1", |a| a.f1),
        ("G-mean", |a| a.g_mean),
        ("AUC", |a| a.auc),
    ];
    for (name, pick) in rows {
        let _ = write!(s, "| {name} |");
        for a in &report.aggregates {
            let _ = write!(s, " {} |", cell(pick(a)));
        }
        s.push('\n');
    }

    let _ = writeln!(s, "\n## Confusion matrices (summed over seeds)\n");
    for a in &report.aggregates {
        let _ = writeln!(s, "### {}\n", a.algorithm);
        match summed_confusion(report, &a.algorithm) {
            Some(c) => {
                let _ = writeln!(s, "| Actual \\ Predicted | {pos} | {neg} |");
                let _ = writeln!(s, "|---|---|---|");
                let _ = writeln!(s, "| {pos} | {} | {} |", c.tp, c.fn_);
                let _ = writeln!(s, "| {neg} | {} | {} |\n", c.fp, c.tn);
            }
            None => {
                let _ = writeln!(s, "No successful runs.\n");
            }
        }
    }

    let failed: Vec<_> = report.cells.iter().filter(|c| c.error.is_some()).collect();
    if !failed.is_empty() {
        let _ = writeln!(s, "## Failed cells\n");
        for c in failed {
            let _ = writeln!(
                s,
                "- {} seed {}: {}",
                c.algorithm,
                c.seed,
                c.error.as_deref().unwrap_or("")
            );
        }
    }
    s
}

pub fn render_overlap(report: &OverlapReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Support-vector overlap\n");
    let _ = writeln!(
        s,
        "n = {}, k = {} support vectors, snapshot: {:?}\n",
        report.n, report.k, report.snapshot
    );
    let _ = writeln!(s, "| Run seed | Overlap |");
    let _ = writeln!(s, "|---|---|");
    for r in &report.runs {
        let _ = writeln!(s, "| {} | {:.1}% |", r.seed, 100.0 * r.overlap);
    }
    let _ = writeln!(s, "\nMean overlap: {:.1}%", 100.0 * report.mean);
    let _ = writeln!(s, "Random baseline (k/n): {:.1}%", 100.0 * report.baseline);
    let _ = writeln!(
        s,
        "Reference value from the original clinical cohort (not reproduced here): {:.1}%",
        100.0 * report.reference
    );
    s
}
