//! `overheat` — layer-wise overheating detection from photodiode signals.
//!
//! Subcommands:
//!
//! * `generate` — write a synthetic benchmark dataset directory,
//! * `extract` — export a feature matrix as CSV,
//! * `run` — the full multi-iteration experiment with CSV/JSON reports,
//! * `report` — re-emit tables from a stored `report.json`,
//! * `train` / `predict` — fit a single classifier and apply a stored model.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use overheat::classifiers::{
    balanced_weights, train, ClassWeights, ClassifierKind, ModelDocument, TrainConfig,
};
use overheat::dataset::{generate_benchmark, load_dataset, save_dataset, GeneratorConfig};
use overheat::error::Category;
use overheat::features::{build_matrix, write_feature_csv, FeatureSetKind};
use overheat::harness::{
    emit_report, load_report, run_experiment, write_fold_metrics_csv, write_per_iteration_csv,
    write_plotdata_csv, write_summary_csv, DataSource, ExperimentConfig, ExperimentReport, Mode,
    ReportFormat,
};
use overheat::{seeds, Error};

#[derive(Parser)]
#[command(
    name = "overheat",
    version,
    about = "Layer-wise overheating detection for LPBF photodiode monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset directory
    Generate(GenerateArgs),
    /// Extract a feature matrix from a dataset and write it as CSV
    Extract(ExtractArgs),
    /// Run the seeded multi-iteration experiment and write reports
    Run(RunArgs),
    /// Re-emit tables from a previously written report.json
    Report(ReportArgs),
    /// Train a single classifier on a dataset and store the model as JSON
    Train(TrainArgs),
    /// Predict layer classes with a stored model
    Predict(PredictArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
    /// Generator seed
    #[arg(long)]
    seed: u64,
    /// Total number of layers
    #[arg(long, default_value_t = 379)]
    layers: usize,
    /// Mixture weight of the elevated-intensity component in anomalous layers
    #[arg(long = "tail-fraction")]
    tail_fraction: Option<f64>,
    /// Location shift (log scale) of that component
    #[arg(long)]
    shift: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset directory (manifest.json + signal files)
    #[arg(long)]
    data: PathBuf,
    /// Feature set: msmm, msq, or msd
    #[arg(long)]
    features: String,
    /// Output CSV file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory; mutually exclusive with --synthetic
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Use the built-in synthetic benchmark replica
    #[arg(long)]
    synthetic: bool,
    /// Comma-separated feature sets (msmm, msq, msd) or "all"
    #[arg(long, default_value = "all")]
    features: String,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long, default_value_t = 5)]
    kfolds: usize,
    #[arg(long = "test-frac", default_value_t = 0.3)]
    test_frac: f64,
    /// cost-sensitive, uniform, or undersample
    #[arg(long, default_value = "cost-sensitive")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the report files
    #[arg(long)]
    out: PathBuf,
    /// csv, json, or both
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding report.json
    #[arg(long = "in")]
    input: PathBuf,
    /// summary, per-iteration, or plotdata
    #[arg(long)]
    emit: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory
    #[arg(long)]
    data: PathBuf,
    /// Feature set: msmm, msq, or msd
    #[arg(long)]
    features: String,
    /// rf, dt, lr, or svc
    #[arg(long)]
    classifier: String,
    /// cost-sensitive or uniform
    #[arg(long, default_value = "cost-sensitive")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model JSON file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Stored model JSON file
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory to predict on
    #[arg(long)]
    data: PathBuf,
    /// Output CSV file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_feature_list(spec: &str) -> Result<Vec<FeatureSetKind>, Error> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(FeatureSetKind::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| FeatureSetKind::from_str(s.trim()))
        .collect()
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Error> {
    let mut cfg = GeneratorConfig {
        total_layers: args.layers,
        ..GeneratorConfig::default()
    };
    if let Some(f) = args.tail_fraction {
        cfg.anomaly_tail_fraction = f;
    }
    if let Some(s) = args.shift {
        cfg.anomaly_shift = s;
    }
    let records = generate_benchmark(&cfg, args.seed)?;
    save_dataset(&records, &args.out)?;
    eprintln!(
        "wrote {} layers to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_extract(args: &ExtractArgs) -> Result<(), Error> {
    let kind = FeatureSetKind::from_str(&args.features)?;
    let records = load_dataset(&args.data)?;
    let matrix = build_matrix(&records, kind)?;
    let mut buf = Vec::new();
    write_feature_csv(&matrix, &mut buf)?;
    fs::write(&args.out, buf)?;
    eprintln!(
        "wrote {} rows x {} features to {}",
        matrix.n_rows(),
        matrix.dim(),
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), Error> {
    let source = match (&args.data, args.synthetic) {
        (Some(dir), false) => DataSource::Directory(dir.clone()),
        (None, true) => DataSource::Synthetic(GeneratorConfig::default()),
        (None, false) => {
            return Err(Error::Config(
                "pass either --data DIR or --synthetic".into(),
            ))
        }
        (Some(_), true) => unreachable!("clap rejects the combination"),
    };
    let format = ReportFormat::from_str(&args.format)?;
    let cfg = ExperimentConfig {
        source,
        feature_sets: parse_feature_list(&args.features)?,
        iterations: args.iterations,
        k: args.kfolds,
        test_fraction: args.test_frac,
        mode: Mode::from_str(&args.mode)?,
        root_seed: args.seed,
        train: TrainConfig::default(),
    };
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    let written = emit_report(&report, &args.out, format)?;
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    println!(
        "{:<12} {:<10} {:>10} {:>10} {:>10} {:>10}",
        "feature_set", "classifier", "mean_f1", "std_f1", "mean_acc", "std_acc"
    );
    for row in &report.summary.rows {
        println!(
            "{:<12} {:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            row.feature_set.to_string(),
            row.member.to_string(),
            row.mean_f1,
            row.std_f1,
            row.mean_accuracy,
            row.std_accuracy
        );
    }
}

fn cmd_report(args: &ReportArgs) -> Result<(), Error> {
    let report = load_report(&args.input)?;
    let write = |name: &str, body: &dyn Fn(&mut Vec<u8>) -> Result<(), Error>| {
        let mut buf = Vec::new();
        body(&mut buf)?;
        let path = args.input.join(name);
        fs::write(&path, buf)?;
        eprintln!("wrote {}", path.display());
        Ok::<(), Error>(())
    };
    match args.emit.to_ascii_lowercase().as_str() {
        "summary" => {
            write("summary.csv", &|buf| write_summary_csv(&report, buf))?;
            print_summary(&report);
        }
        "per-iteration" | "per_iteration" => {
            write("per_iteration.csv", &|buf| {
                write_per_iteration_csv(&report, buf)
            })?;
            write("fold_metrics.csv", &|buf| {
                write_fold_metrics_csv(&report, buf)
            })?;
        }
        "plotdata" => {
            write("plotdata.csv", &|buf| write_plotdata_csv(&report, buf))?;
        }
        other => {
            return Err(Error::Config(format!(
                "unknown emit target {other:?} (summary, per-iteration, plotdata)"
            )))
        }
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Error> {
    let kind = ClassifierKind::from_str(&args.classifier)?;
    let feature_set = FeatureSetKind::from_str(&args.features)?;
    let records = load_dataset(&args.data)?;
    let matrix = build_matrix(&records, feature_set)?;
    let weights = match Mode::from_str(&args.mode)? {
        Mode::CostSensitive => balanced_weights(matrix.labels())?,
        Mode::UniformWeights => ClassWeights::uniform(),
        Mode::Undersampled => {
            return Err(Error::Config(
                "train supports cost-sensitive or uniform modes".into(),
            ))
        }
    };
    let train_config = TrainConfig::default();
    let model = train(
        kind,
        &matrix,
        &weights,
        &train_config,
        seeds::derive(args.seed, "cli-train", 0),
    )?;
    let doc = ModelDocument::new(kind, Some(feature_set), weights, train_config, model);
    fs::write(&args.out, doc.to_json()?)?;
    eprintln!(
        "trained {kind} on {} layers, wrote {}",
        matrix.n_rows(),
        args.out.display()
    );
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), Error> {
    let text = fs::read_to_string(&args.model)?;
    let doc = ModelDocument::from_json(&text)?;
    let feature_set = doc.feature_set.ok_or_else(|| {
        Error::Config("model document does not record its feature set".into())
    })?;
    let records = load_dataset(&args.data)?;
    let matrix = build_matrix(&records, feature_set)?;
    let predictions = doc.model.predict(&matrix)?;
    let mut out = String::from("layer_index,prediction\n");
    for (r, p) in records.iter().zip(&predictions) {
        out.push_str(&format!("{},{}\n", r.layer_index, p));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, out)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e.category() {
                Category::Config => ExitCode::from(2),
                Category::Data => ExitCode::from(3),
                Category::Numerical => ExitCode::from(4),
            }
        }
    }
}
