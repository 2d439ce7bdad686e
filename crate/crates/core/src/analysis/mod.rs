//! Benchmark harness, report rendering and the support-vector overlap experiment.

mod bench;
mod overlap;
mod registry;
mod report;

pub use bench::{
    prepare, run_benchmark, run_benchmark_with, split_records, tune_benchmark, verify_report,
    Aggregate, AlgorithmSpec, BenchmarkReport, BenchmarkSpec, Cell, CellResult, DataSource,
    Environment, OverlapSpec, PositiveClass, SplitOptions, Timing, TuneEntry, TuneReport,
    WeightSnapshot,
};
pub use overlap::{
    overlap_experiment, run_overlap, top_weight_ids, top_weight_indices, OverlapReport, OverlapRun,
    REFERENCE_OVERLAP,
};
pub use registry::{
    default_plan, fit_algorithm, is_native, Native, Registry, NATIVE_ALGORITHMS, RUS_FRACTION,
};
pub use report::{
    emit_overlap, emit_report, emit_timings, emit_tune, render_csv, render_markdown,
    render_overlap, ReportFormat,
};
