use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use aefi::analysis::{
    emit_overlap, emit_report, emit_timings, emit_tune, render_overlap, run_benchmark, run_overlap,
    tune_benchmark, verify_report, BenchmarkSpec, ReportFormat,
};
use aefi::dataset::{load_csv, synth_aefi, synth_gaussian, write_csv, RecordSchema};
use aefi::service::{save_bundle, serve, train_bundle, ServeConfig, TrainOptions};
use aefi::tuning::{ParamValue, Params};

/// Class-imbalance benchmarks, model training and the prediction service.
#[derive(Parser)]
#[command(name = "aefi", version)]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark and overlap experiments.
    #[command(subcommand)]
    Bench(Bench),
    /// Dataset utilities.
    #[command(subcommand)]
    Data(Data),
    /// Fit a model on a labelled CSV and write a bundle.
    Train(TrainArgs),
    /// Run the HTTP prediction and record-entry service.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum Bench {
    /// Run every algorithm for every seed and write report files.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Report formats to write.
        #[arg(long, value_delimiter = ',', default_values = ["json", "csv", "markdown"])]
        format: Vec<Format>,
    },
    /// SVC support vectors vs. top-weighted RUSBoost rows.
    Overlap {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print search leaderboards on the first seed's training partition.
    Tune {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Gaussian,
    Aefi,
}

#[derive(Subcommand)]
enum Data {
    /// Write a seeded synthetic dataset as CSV.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        minority_fraction: f64,
        /// Gaussian only.
        #[arg(long, default_value_t = 8)]
        dims: usize,
        /// Gaussian only: distance between the class means.
        #[arg(long, default_value_t = 1.0)]
        separation: f64,
        /// Aefi only: schema file (default: built-in schema).
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    algo: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Run the algorithm's default search plan before the final fit.
    #[arg(long)]
    tune: bool,
    /// Fixed hyperparameter, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, ParamValue)>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0.29)]
    test_fraction: f64,
    /// Training timestamp stored in the bundle (RFC 3339). Falls back to
    /// SOURCE_DATE_EPOCH; omitted when neither is set.
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "AEFI_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long, env = "AEFI_BUNDLE")]
    bundle: Option<PathBuf>,
    #[arg(long, env = "AEFI_STORE", default_value = "records.jsonl")]
    store: PathBuf,
    #[arg(long, env = "AEFI_ASSETS")]
    assets: Option<PathBuf>,
    #[arg(long, env = "AEFI_SCHEMA")]
    schema: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, ParamValue), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value = if let Ok(i) = v.parse::<i64>() {
        ParamValue::Int(i)
    } else if let Ok(r) = v.parse::<f64>() {
        ParamValue::Real(r)
    } else {
        ParamValue::Text(v.to_string())
    };
    Ok((k.to_string(), value))
}

fn load_spec(path: &Path, seed: Option<u64>) -> anyhow::Result<BenchmarkSpec> {
    let mut spec = BenchmarkSpec::from_path(path)
        .with_context(|| format!("reading spec {}", path.display()))?;
    if let Some(s) = seed {
        spec.seeds = vec![s];
    }
    Ok(spec)
}

fn schema_or_default(path: &Option<PathBuf>) -> anyhow::Result<RecordSchema> {
    Ok(match path {
        Some(p) => {
            RecordSchema::from_path(p).with_context(|| format!("reading schema {}", p.display()))?
        }
        None => RecordSchema::default(),
    })
}

fn timestamp(flag: Option<String>) -> anyhow::Result<Option<String>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => {
            let secs: i64 = v
                .trim()
                .parse()
                .context("SOURCE_DATE_EPOCH is not an integer")?;
            let t = chrono::DateTime::from_timestamp(secs, 0)
                .context("SOURCE_DATE_EPOCH out of range")?;
            Ok(Some(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)))
        }
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Bench(Bench::Run { spec, out, format }) => {
            let spec = load_spec(&spec, seed)?;
            let (report, timings) = run_benchmark(&spec)?;
            verify_report(&report)?;
            let formats: Vec<ReportFormat> = format
                .into_iter()
                .map(|f| match f {
                    Format::Json => ReportFormat::Json,
                    Format::Csv => ReportFormat::Csv,
                    Format::Markdown => ReportFormat::Markdown,
                })
                .collect();
            for p in emit_report(&report, &formats, &out)? {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", emit_timings(&timings, &out)?.display());
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} cell(s) failed; see the report for details");
            }
        }
        Command::Bench(Bench::Overlap { spec, runs, out }) => {
            let mut spec = load_spec(&spec, None)?;
            if let Some(s) = seed {
                let o = spec.overlap.get_or_insert_with(Default::default);
                o.boost.seed = s;
                o.svc.seed = s;
            }
            let report = run_overlap(&spec, runs)?;
            for p in emit_overlap(&report, &out)? {
                println!("wrote {}", p.display());
            }
            print!("{}", render_overlap(&report));
        }
        Command::Bench(Bench::Tune { spec, out }) => {
            let spec = load_spec(&spec, seed)?;
            let report = tune_benchmark(&spec)?;
            for e in &report.entries {
                println!("{}", e.algorithm);
                for t in &e.leaderboard {
                    let params: Vec<String> =
                        t.params.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    println!("  {:.4}  {}", t.mean_auc, params.join(" "));
                }
            }
            if let Some(dir) = out {
                println!("wrote {}", emit_tune(&report, &dir)?.display());
            }
        }
        Command::Data(Data::Synth {
            kind,
            n,
            minority_fraction,
            dims,
            separation,
            schema,
            out,
        }) => {
            let seed = seed.unwrap_or(0);
            match kind {
                SynthKind::Gaussian => {
                    let d = synth_gaussian(n, minority_fraction, dims, separation, seed)?;
                    let mut w = csv::Writer::from_path(&out)
                        .with_context(|| format!("creating {}", out.display()))?;
                    let mut header: Vec<String> = (0..dims).map(|j| format!("x{j}")).collect();
                    header.push("label".into());
                    w.write_record(&header)?;
                    for (i, row) in d.rows().enumerate() {
                        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                        cells.push(d.label(i).to_string());
                        w.write_record(&cells)?;
                    }
                    w.flush()?;
                }
                SynthKind::Aefi => {
                    let schema = schema_or_default(&schema)?;
                    write_csv(
                        &out,
                        &synth_aefi(n, minority_fraction, &schema, seed)?,
                        &schema,
                    )?;
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Train(args) => {
            let schema = schema_or_default(&args.schema)?;
            let records = load_csv(&args.data, &schema)?;
            let mut params = Params::default();
            for (k, v) in args.params {
                params.set(&k, v);
            }
            let opts = TrainOptions {
                params,
                tune: args.tune,
                test_fraction: args.test_fraction,
                threshold: args.threshold,
                trained_at: timestamp(args.timestamp)?,
                ..TrainOptions::new(&args.algo, seed.unwrap_or(0))
            };
            let bundle = train_bundle(&records, &schema, &opts)?;
            save_bundle(&bundle, &args.out)?;
            println!(
                "wrote {} (holdout AUC {:.4})",
                args.out.display(),
                bundle.metadata.holdout_auc.unwrap_or(f64::NAN)
            );
        }
        Command::Serve(args) => {
            if let Some(p) = &args.assets {
                if !p.is_dir() {
                    bail!(aefi::Error::InvalidArgument(format!(
                        "asset directory {} not found",
                        p.display()
                    )));
                }
            }
            let config = ServeConfig {
                addr: args.addr,
                bundle: args.bundle,
                store: args.store,
                assets: args.assets,
                schema: args.schema,
            };
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            eprintln!("listening on http://{}", config.addr);
            rt.block_on(serve(config))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already carry their cause in the message
            let mut parts = Vec::new();
            let mut lib = None;
            for c in e.chain() {
                parts.push(c.to_string());
                if let Some(err) = c.downcast_ref::<aefi::Error>() {
                    lib = Some(err);
                    break;
                }
            }
            eprintln!("error: {}", parts.join(": "));
            let validation = lib.is_some_and(aefi::Error::is_validation);
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}
