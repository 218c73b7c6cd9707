//! Repeatable experiment harness and report emission.
//!
//! An experiment runs the framework for a configured number of seeded
//! iterations on each selected feature set and aggregates per-iteration test
//! metrics into a summary table (mean and sample standard deviation of F1
//! and accuracy per feature set × classifier). Three weighting modes exist:
//! cost-sensitive (balanced class weights), uniform weights, and the
//! undersampling baseline, which per iteration drops unexposed-block layers
//! and resamples the nominal class down to the anomalous count.
//!
//! Iterations are embarrassingly parallel; every iteration derives its seeds
//! from `(root seed, iteration)`, so reports are byte-identical across
//! thread counts and across runs.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, TrainConfig};
use crate::dataset::{
    generate_benchmark, load_dataset, undersample_indices, GeneratorConfig, LayerRecord,
};
use crate::ensemble::{run_framework_on_matrix, CvScore, FrameworkConfig, IterationResult};
use crate::error::{Error, Result};
use crate::evaluation::Metrics;
use crate::features::{build_matrix, FeatureSetKind};
use crate::{par, seeds};

/// How classes are weighted (or rebalanced) during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Balanced class weights recomputed on each training portion.
    CostSensitive,
    /// Weight 1 for both classes, same code path.
    UniformWeights,
    /// Per-iteration balanced undersampling of the nominal class with
    /// unexposed-block layers excluded; training uses uniform weights.
    Undersampled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::CostSensitive => write!(f, "cost-sensitive"),
            Mode::UniformWeights => write!(f, "uniform"),
            Mode::Undersampled => write!(f, "undersample"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cost-sensitive" | "cost_sensitive" => Ok(Mode::CostSensitive),
            "uniform" | "uniform-weights" | "uniform_weights" => Ok(Mode::UniformWeights),
            "undersample" | "undersampled" => Ok(Mode::Undersampled),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Where the layer records come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Directory(PathBuf),
    Synthetic(GeneratorConfig),
}

/// Full experiment description; two runs with equal configs produce
/// byte-identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub feature_sets: Vec<FeatureSetKind>,
    pub iterations: usize,
    pub k: usize,
    pub test_fraction: f64,
    pub mode: Mode,
    pub root_seed: u64,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Defaults mirroring the benchmark protocol: 100 iterations, 5 folds,
    /// 30% test share, cost-sensitive, all three feature sets.
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            feature_sets: FeatureSetKind::ALL.to_vec(),
            iterations: 100,
            k: 5,
            test_fraction: 0.3,
            mode: Mode::CostSensitive,
            root_seed: 0,
            train: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("experiment with zero iterations".into()));
        }
        if self.feature_sets.is_empty() {
            return Err(Error::Config("no feature sets selected".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for fs in &self.feature_sets {
            if !seen.insert(fs) {
                return Err(Error::Config(format!("duplicate feature set {fs}")));
            }
        }
        Ok(())
    }

    fn framework_config(&self, feature_set: FeatureSetKind, seed: u64) -> FrameworkConfig {
        FrameworkConfig {
            pool: ClassifierKind::ALL.to_vec(),
            k: self.k,
            test_fraction: self.test_fraction,
            cost_sensitive: self.mode == Mode::CostSensitive,
            feature_set,
            seed,
            train: self.train,
        }
    }
}

/// A summary table row key: the ensemble or one pool classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Member {
    Mve,
    #[serde(untagged)]
    Classifier(ClassifierKind),
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Member::Mve => write!(f, "mve"),
            Member::Classifier(kind) => write!(f, "{kind}"),
        }
    }
}

fn members() -> Vec<Member> {
    let mut m = vec![Member::Mve];
    m.extend(ClassifierKind::ALL.map(Member::Classifier));
    m
}

/// Mean/std of F1 and accuracy for one (feature set, member) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub feature_set: FeatureSetKind,
    pub member: Member,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Per-(feature set × member) aggregation over iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub iterations: usize,
    /// False when a single iteration makes the sample std undefined; the
    /// std columns then hold 0.
    pub std_defined: bool,
    pub rows: Vec<SummaryRow>,
}

/// Mean and sample standard deviation (n−1); a single value reports std 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    // A constant sequence has std 0 by definition; computing it would leave
    // rounding residue when the mean is not representable.
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// One iteration as reported: seeds, ranking, and the test metrics of the
/// ensemble and every pool member, plus per-fold CV metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub seed: u64,
    pub split_seed: u64,
    pub ranking: Vec<CvScore>,
    pub top3: Vec<ClassifierKind>,
    pub mve: Metrics,
    pub members: Vec<MemberReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub classifier: ClassifierKind,
    pub test: Metrics,
    pub cv_mean_f1: f64,
    pub cv_mean_accuracy: f64,
    pub cv_folds: Vec<Metrics>,
}

impl IterationReport {
    fn from_result(iteration: usize, seed: u64, result: &IterationResult) -> Self {
        Self {
            iteration,
            seed,
            split_seed: result.split_seed,
            ranking: result.ranked.ranking.clone(),
            top3: result.ranked.top3().to_vec(),
            mve: result.mve_metrics,
            members: result
                .members
                .iter()
                .map(|m| MemberReport {
                    classifier: m.kind,
                    test: m.metrics,
                    cv_mean_f1: m.cv.mean_f1,
                    cv_mean_accuracy: m.cv.mean_accuracy,
                    cv_folds: m.cv.folds.clone(),
                })
                .collect(),
        }
    }

    pub fn metrics_of(&self, member: Member) -> Option<&Metrics> {
        match member {
            Member::Mve => Some(&self.mve),
            Member::Classifier(kind) => self
                .members
                .iter()
                .find(|m| m.classifier == kind)
                .map(|m| &m.test),
        }
    }
}

/// All iterations of one feature set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetRun {
    pub feature_set: FeatureSetKind,
    pub iterations: Vec<IterationReport>,
}

const REPORT_FORMAT_VERSION: u32 = 1;

/// The complete experiment output: config echo, summary, and every
/// per-iteration record. This is what `report.json` holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub summary: SummaryTable,
    pub runs: Vec<FeatureSetRun>,
}

/// Aggregate per-iteration metrics into the summary table. Rows follow the
/// run order, ensemble first, then the pool in canonical order; SVC rows are
/// always present in machine-readable output even when SVC never reached the
/// top three.
pub fn summarize(runs: &[FeatureSetRun]) -> Result<SummaryTable> {
    if runs.is_empty() || runs.iter().any(|r| r.iterations.is_empty()) {
        return Err(Error::Empty("summary of an empty run"));
    }
    let iterations = runs[0].iterations.len();
    let mut rows = Vec::new();
    for run in runs {
        if run.iterations.len() != iterations {
            return Err(Error::Length {
                left: iterations,
                right: run.iterations.len(),
            });
        }
        for member in members() {
            let mut f1 = Vec::with_capacity(iterations);
            let mut acc = Vec::with_capacity(iterations);
            for it in &run.iterations {
                let m = it.metrics_of(member).ok_or_else(|| {
                    Error::Config(format!("iteration misses member {member}"))
                })?;
                f1.push(m.f1);
                acc.push(m.accuracy);
            }
            let (mean_f1, std_f1) = mean_std(&f1);
            let (mean_accuracy, std_accuracy) = mean_std(&acc);
            rows.push(SummaryRow {
                feature_set: run.feature_set,
                member,
                mean_f1,
                std_f1,
                mean_accuracy,
                std_accuracy,
            });
        }
    }
    Ok(SummaryTable {
        iterations,
        std_defined: iterations > 1,
        rows,
    })
}

/// Load the records named by a data source.
pub fn load_records(source: &DataSource, root_seed: u64) -> Result<Vec<LayerRecord>> {
    match source {
        DataSource::Directory(path) => load_dataset(path),
        DataSource::Synthetic(cfg) => {
            generate_benchmark(cfg, seeds::derive(root_seed, "synthetic-dataset", 0))
        }
    }
}

/// Run the full experiment: `iterations` framework runs per feature set,
/// aggregated into a report. Deterministic given the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let records = load_records(&cfg.source, cfg.root_seed)?;
    let mut runs = Vec::with_capacity(cfg.feature_sets.len());
    for &feature_set in &cfg.feature_sets {
        let matrix = build_matrix(&records, feature_set)?;
        let results: Vec<Result<IterationReport>> =
            par::map_range(cfg.iterations, |i| {
                let wrap = |stage: &'static str, e: Error| Error::Iteration {
                    iteration: i,
                    feature_set: feature_set.to_string(),
                    stage,
                    source: Box::new(e),
                };
                let seed = seeds::derive(cfg.root_seed, "iteration", i as u64);
                let fw = cfg.framework_config(feature_set, seed);
                let result: IterationResult = match cfg.mode {
                    Mode::Undersampled => {
                        let sub_seed = seeds::derive(cfg.root_seed, "undersample", i as u64);
                        let keep = undersample_indices(&records, sub_seed)
                            .map_err(|e| wrap("undersample", e))?;
                        run_framework_on_matrix(&matrix.subset(&keep), &fw)
                            .map_err(|e| wrap("framework", e))?
                    }
                    _ => run_framework_on_matrix(&matrix, &fw)
                        .map_err(|e| wrap("framework", e))?,
                };
                Ok(IterationReport::from_result(i, seed, &result))
            });
        let iterations: Vec<IterationReport> = results.into_iter().collect::<Result<_>>()?;
        runs.push(FeatureSetRun {
            feature_set,
            iterations,
        });
    }
    let summary = summarize(&runs)?;
    Ok(ExperimentReport {
        version: REPORT_FORMAT_VERSION,
        config: cfg.clone(),
        summary,
        runs,
    })
}

/// Which files `emit_report` writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "both" => Ok(ReportFormat::Both),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn write_summary_csv<W: Write>(report: &ExperimentReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "feature_set,classifier,mean_f1,std_f1,mean_accuracy,std_accuracy"
    )?;
    for row in &report.summary.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.feature_set, row.member, row.mean_f1, row.std_f1, row.mean_accuracy,
            row.std_accuracy
        )?;
    }
    Ok(())
}

pub fn write_per_iteration_csv<W: Write>(report: &ExperimentReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "iteration,feature_set,classifier,precision,recall,f1,accuracy"
    )?;
    for run in &report.runs {
        for it in &run.iterations {
            for member in members() {
                let m = it.metrics_of(member).ok_or_else(|| {
                    Error::Config(format!("iteration misses member {member}"))
                })?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    it.iteration, run.feature_set, member, m.precision, m.recall, m.f1,
                    m.accuracy
                )?;
            }
        }
    }
    Ok(())
}

/// Long-format per-iteration F1 values for external charting.
pub fn write_plotdata_csv<W: Write>(report: &ExperimentReport, mut w: W) -> Result<()> {
    writeln!(w, "iteration,feature_set,classifier,f1")?;
    for run in &report.runs {
        for it in &run.iterations {
            for member in members() {
                let m = it.metrics_of(member).ok_or_else(|| {
                    Error::Config(format!("iteration misses member {member}"))
                })?;
                writeln!(
                    w,
                    "{},{},{},{}",
                    it.iteration, run.feature_set, member, m.f1
                )?;
            }
        }
    }
    Ok(())
}

/// Per-fold cross-validation metrics, one row per
/// (iteration, fold, classifier, feature set).
pub fn write_fold_metrics_csv<W: Write>(report: &ExperimentReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "iteration,fold,classifier,feature_set,precision,recall,f1,accuracy"
    )?;
    for run in &report.runs {
        for it in &run.iterations {
            for member in &it.members {
                for (fold, m) in member.cv_folds.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        it.iteration,
                        fold,
                        member.classifier,
                        run.feature_set,
                        m.precision,
                        m.recall,
                        m.f1,
                        m.accuracy
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf)?;
    Ok(path)
}

/// Write the report files into `dir` and return the written paths:
/// `report.json` for JSON, `summary.csv` + `plotdata.csv` for CSV.
pub fn emit_report(
    report: &ExperimentReport,
    dir: &Path,
    format: ReportFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        written.push(write_file(dir, "report.json", |buf| {
            serde_json::to_writer_pretty(&mut *buf, report)?;
            buf.push(b'\n');
            Ok(())
        })?);
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        written.push(write_file(dir, "summary.csv", |buf| {
            write_summary_csv(report, buf)
        })?);
        written.push(write_file(dir, "plotdata.csv", |buf| {
            write_plotdata_csv(report, buf)
        })?);
    }
    Ok(written)
}

/// Read back a `report.json` written by [`emit_report`].
pub fn load_report(dir: &Path) -> Result<ExperimentReport> {
    let path = dir.join("report.json");
    let raw = fs::read(&path)
        .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    let report: ExperimentReport = serde_json::from_slice(&raw)?;
    if report.version != REPORT_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported report version {}",
            report.version
        )));
    }
    Ok(report)
}
