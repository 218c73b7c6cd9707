//! End-to-end tests of the `overheat` binary: subcommand wiring, file
//! outputs, determinism of reports, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn overheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overheat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn generate_into(dir: &Path) {
    let out = overheat(&[
        "generate",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "3",
        "--layers",
        "150",
    ]);
    assert_success(&out);
}

#[test]
fn generate_writes_manifest_and_signals() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"layers\""));
    assert!(manifest.contains("unexposed_block"));
    let signals = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("layer_")
        })
        .count();
    assert_eq!(signals, 150);
}

#[test]
fn extract_emits_feature_csv() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let csv = dir.path().join("features.csv");
    let out = overheat(&[
        "extract",
        "--data",
        dir.path().to_str().unwrap(),
        "--features",
        "msq",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mean,std,p25,p50,p75,max,label"
    );
    assert_eq!(lines.count(), 150);
}

#[test]
fn run_and_report_roundtrip_deterministically() {
    let data = tempfile::tempdir().unwrap();
    generate_into(data.path());
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    for out_dir in [&out_a, &out_b] {
        let out = overheat(&[
            "run",
            "--data",
            data.path().to_str().unwrap(),
            "--features",
            "msmm,msd",
            "--iterations",
            "2",
            "--kfolds",
            "3",
            "--test-frac",
            "0.3",
            "--mode",
            "cost-sensitive",
            "--seed",
            "11",
            "--out",
            out_dir.path().to_str().unwrap(),
            "--format",
            "both",
        ]);
        assert_success(&out);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("feature_set"), "summary table printed");
        assert!(stdout.contains("mve"));
    }
    for name in ["report.json", "summary.csv", "plotdata.csv"] {
        let a = std::fs::read(out_a.path().join(name)).unwrap();
        let b = std::fs::read(out_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} not byte-identical across identical runs");
    }

    let out = overheat(&[
        "report",
        "--in",
        out_a.path().to_str().unwrap(),
        "--emit",
        "per-iteration",
    ]);
    assert_success(&out);
    let per_iter = std::fs::read_to_string(out_a.path().join("per_iteration.csv")).unwrap();
    assert!(per_iter.starts_with("iteration,feature_set,classifier,precision,recall,f1,accuracy"));
    // 2 iterations x 2 feature sets x (mve + 4 classifiers)
    assert_eq!(per_iter.lines().count(), 1 + 2 * 2 * 5);
    let folds = std::fs::read_to_string(out_a.path().join("fold_metrics.csv")).unwrap();
    assert!(folds.starts_with("iteration,fold,classifier,feature_set,"));
    // 2 iterations x 2 feature sets x 4 classifiers x 3 folds
    assert_eq!(folds.lines().count(), 1 + 2 * 2 * 4 * 3);

    let out = overheat(&[
        "report",
        "--in",
        out_a.path().to_str().unwrap(),
        "--emit",
        "plotdata",
    ]);
    assert_success(&out);
}

#[test]
fn train_and_predict_roundtrip() {
    let data = tempfile::tempdir().unwrap();
    generate_into(data.path());
    let model = data.path().join("model.json");
    let out = overheat(&[
        "train",
        "--data",
        data.path().to_str().unwrap(),
        "--features",
        "msd",
        "--classifier",
        "dt",
        "--seed",
        "5",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_success(&out);
    let doc = std::fs::read_to_string(&model).unwrap();
    assert!(doc.contains("\"classifier\": \"dt\""));
    assert!(doc.contains("\"feature_set\": \"msd\""));

    let preds = data.path().join("preds.csv");
    let out = overheat(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.path().to_str().unwrap(),
        "--out",
        preds.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(&preds).unwrap();
    assert!(text.starts_with("layer_index,prediction"));
    assert_eq!(text.lines().count(), 151);
    assert!(text.contains(",anomalous"));
    // a full-depth tree memorizes its training data
    let anomalous = text.lines().filter(|l| l.ends_with(",anomalous")).count();
    assert_eq!(anomalous, 27);
}

#[test]
fn undersample_mode_runs() {
    let data = tempfile::tempdir().unwrap();
    generate_into(data.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = overheat(&[
        "run",
        "--data",
        data.path().to_str().unwrap(),
        "--features",
        "msd",
        "--iterations",
        "2",
        "--kfolds",
        "3",
        "--mode",
        "undersample",
        "--seed",
        "4",
        "--out",
        out_dir.path().to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_success(&out);
    assert!(out_dir.path().join("summary.csv").exists());
    assert!(!out_dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_2() {
    // neither --data nor --synthetic
    let out = overheat(&["run", "--out", "/tmp/nowhere", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown feature set
    let data = tempfile::tempdir().unwrap();
    generate_into(data.path());
    let out = overheat(&[
        "extract",
        "--data",
        data.path().to_str().unwrap(),
        "--features",
        "bogus",
        "--out",
        "/tmp/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // clap usage errors also exit 2
    let out = overheat(&["run", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    // missing dataset directory
    let out = overheat(&[
        "extract",
        "--data",
        "/definitely/not/here",
        "--features",
        "msd",
        "--out",
        "/tmp/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // corrupted signal file
    let data = tempfile::tempdir().unwrap();
    generate_into(data.path());
    std::fs::write(data.path().join("layer_00004.txt"), "1.0\nNaN\n").unwrap();
    let out = overheat(&[
        "extract",
        "--data",
        data.path().to_str().unwrap(),
        "--features",
        "msmm",
        "--out",
        "/tmp/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("layer_00004.txt"));
    assert!(stderr.contains(":2:"), "line number in {stderr}");
}
