//! End-to-end tests of the `ius` binary: exit codes, file outputs, and
//! byte-level determinism across reruns.

use ius_core::data::{read_score_report, save_png};
use ius_core::harness::{toy_dataset_generate, ToyCorpusConfig};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn ius(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ius")).args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a small two-class PNG corpus and a split-free manifest whose paths
/// are relative to the manifest's directory.
fn fixture_manifest(dir: &Path, per_class: usize, seed: u64) -> std::path::PathBuf {
    let items = toy_dataset_generate(&ToyCorpusConfig {
        size: (16, 16),
        per_class,
        rng_seed: seed,
        ..ToyCorpusConfig::default()
    })
    .expect("corpus generates");
    let image_dir = dir.join("images");
    fs::create_dir_all(&image_dir).unwrap();
    let mut manifest = String::from("path,label\n");
    for item in &items {
        let name = format!("{}.png", item.id);
        save_png(&item.image, &image_dir.join(&name)).unwrap();
        manifest.push_str(&format!("images/{},{}\n", name, item.class));
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).unwrap();
    path
}

fn train_args<'a>(manifest: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train",
        "--manifest",
        manifest,
        "--out",
        out,
        "--input-size",
        "16",
        "--batch",
        "8",
        "--max-epochs",
        "2",
        "--seed",
        "11",
    ]
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(ius(&["--help"]).status.code(), Some(0));
    assert_eq!(ius(&["train", "--help"]).status.code(), Some(0));
    assert_eq!(ius(&["--version"]).status.code(), Some(0));

    let missing_required = ius(&["train"]);
    assert_eq!(missing_required.status.code(), Some(1));
    assert!(stderr_of(&missing_required).contains("--manifest"));

    assert_eq!(ius(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(ius(&["score", "--model", "m", "--baseline", "b", "--manifest", "x"]).status.code(), Some(1));
}

#[test]
fn missing_input_files_exit_two_and_name_the_path() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let absent = dir.path().join("absent.csv");
    let result = ius(&[
        "train",
        "--manifest",
        absent.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr_of(&result).contains("absent.csv"), "{}", stderr_of(&result));
}

#[test]
fn bad_flag_values_exit_two() {
    let dir = TempDir::new().unwrap();
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, "id,class,u,level,c_gr,c_by,c_ld,c_cf\n").unwrap();
    let result = ius(&[
        "curate",
        "--scores",
        scores.to_str().unwrap(),
        "--count",
        "2",
        "--dist",
        "a=0.5,b=0.7",
        "--out",
        dir.path().join("ids.txt").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr_of(&result).contains("sum"), "{}", stderr_of(&result));
}

#[test]
fn full_pipeline_produces_consistent_artifacts() {
    let dir = TempDir::new().unwrap();
    let manifest = fixture_manifest(dir.path(), 12, 5);
    let manifest = manifest.to_str().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap().to_string();

    let trained = ius(&train_args(manifest, &out_s));
    assert_eq!(trained.status.code(), Some(0), "{}", stderr_of(&trained));
    for file in ["model.json", "history.csv", "run_manifest.json"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n"));
    assert_eq!(history.lines().count(), 3, "header plus one line per epoch");

    let model = out.join("model.json");
    let model_s = model.to_str().unwrap();
    let baseline = dir.path().join("baseline.json");
    let baseline_s = baseline.to_str().unwrap();
    let based = ius(&[
        "baseline",
        "--model",
        model_s,
        "--manifest",
        manifest,
        "--scope",
        "per-class",
        "--out",
        baseline_s,
    ]);
    assert_eq!(based.status.code(), Some(0), "{}", stderr_of(&based));
    assert!(dir.path().join("baseline.json.run.json").exists());

    let report_path = dir.path().join("scores.csv");
    let report_s = report_path.to_str().unwrap();
    let scored = ius(&[
        "score",
        "--model",
        model_s,
        "--baseline",
        baseline_s,
        "--manifest",
        manifest,
        "--out",
        report_s,
    ]);
    assert_eq!(scored.status.code(), Some(0), "{}", stderr_of(&scored));
    let report = read_score_report(&report_path).unwrap();
    assert_eq!(report.rows.len(), 24, "one row per manifest image");
    assert!(report.thresholds.is_standard());
    assert!(report.rows.iter().all(|r| r.id.starts_with("images/")));

    let ids_path = dir.path().join("picked.txt");
    let curated = ius(&[
        "curate",
        "--scores",
        report_s,
        "--count",
        "4",
        "--dist",
        "abnormal=0.5,normal=0.5",
        "--mode",
        "random",
        "--seed",
        "3",
        "--out",
        ids_path.to_str().unwrap(),
    ]);
    assert_eq!(curated.status.code(), Some(0), "{}", stderr_of(&curated));
    let ids = fs::read_to_string(&ids_path).unwrap();
    assert_eq!(ids.lines().count(), 4);
    assert_eq!(ids.lines().filter(|l| l.contains("abnormal")).count(), 2);

    let sens_out = dir.path().join("sens");
    let sensitivity = ius(&[
        "sensitivity",
        "--model",
        model_s,
        "--manifest",
        manifest,
        "--pool",
        manifest,
        "--out",
        sens_out.to_str().unwrap(),
        "--fractions",
        "0.5,1.0",
    ]);
    assert_eq!(sensitivity.status.code(), Some(0), "{}", stderr_of(&sensitivity));
    for file in [
        "sensitivity_baselines.csv",
        "sensitivity_cosine.csv",
        "sensitivity_agreement.csv",
        "run_manifest.json",
    ] {
        assert!(sens_out.join(file).exists(), "missing {file}");
    }
    let agreement = fs::read_to_string(sens_out.join("sensitivity_agreement.csv")).unwrap();
    let full_row = agreement.lines().last().unwrap();
    assert!(full_row.starts_with("1,24,"), "{full_row}");
    assert!(full_row.ends_with(",1"), "the full reference agrees with itself: {full_row}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let manifest = fixture_manifest(dir.path(), 10, 9);
    let manifest = manifest.to_str().unwrap();
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));

    for out in [&out_a, &out_b] {
        let run = ius(&train_args(manifest, out.to_str().unwrap()));
        assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
    }
    let model_a = fs::read(out_a.join("model.json")).unwrap();
    let model_b = fs::read(out_b.join("model.json")).unwrap();
    assert_eq!(model_a, model_b, "same seed and inputs give the same model bytes");
    assert_eq!(
        fs::read(out_a.join("run_manifest.json")).unwrap(),
        fs::read(out_b.join("run_manifest.json")).unwrap()
    );

    let baseline = dir.path().join("base.json");
    let based = ius(&[
        "baseline",
        "--model",
        out_a.join("model.json").to_str().unwrap(),
        "--manifest",
        manifest,
        "--scope",
        "global",
        "--out",
        baseline.to_str().unwrap(),
    ]);
    assert_eq!(based.status.code(), Some(0), "{}", stderr_of(&based));

    let mut reports = Vec::new();
    for name in ["s1.csv", "s2.csv"] {
        let path = dir.path().join(name);
        let run = ius(&[
            "score",
            "--model",
            out_a.join("model.json").to_str().unwrap(),
            "--baseline",
            baseline.to_str().unwrap(),
            "--manifest",
            manifest,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
        reports.push(fs::read(&path).unwrap());
    }
    assert_eq!(reports[0], reports[1], "scoring is deterministic");
}

#[test]
fn threshold_override_marks_the_report_non_standard() {
    let dir = TempDir::new().unwrap();
    let manifest = fixture_manifest(dir.path(), 6, 2);
    let manifest = manifest.to_str().unwrap();
    let out = dir.path().join("run");
    let run = ius(&train_args(manifest, out.to_str().unwrap()));
    assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
    let model = out.join("model.json");
    let baseline = dir.path().join("base.json");
    let based = ius(&[
        "baseline",
        "--model",
        model.to_str().unwrap(),
        "--manifest",
        manifest,
        "--scope",
        "global",
        "--out",
        baseline.to_str().unwrap(),
    ]);
    assert_eq!(based.status.code(), Some(0), "{}", stderr_of(&based));

    let report_path = dir.path().join("scores.csv");
    let run = ius(&[
        "score",
        "--model",
        model.to_str().unwrap(),
        "--baseline",
        baseline.to_str().unwrap(),
        "--manifest",
        manifest,
        "--out",
        report_path.to_str().unwrap(),
        "--thresholds",
        "0.1,0.3,0.5,0.7",
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
    let text = fs::read_to_string(&report_path).unwrap();
    assert!(text.contains("# non-standard thresholds:"), "{text}");
    let report = read_score_report(&report_path).unwrap();
    assert!(!report.thresholds.is_standard());
    assert_eq!(report.thresholds.cuts(), [0.1, 0.3, 0.5, 0.7]);
}

#[test]
fn scoring_an_empty_manifest_writes_a_header_only_report() {
    let dir = TempDir::new().unwrap();
    let manifest = fixture_manifest(dir.path(), 6, 4);
    let manifest_s = manifest.to_str().unwrap();
    let out = dir.path().join("run");
    let run = ius(&train_args(manifest_s, out.to_str().unwrap()));
    assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
    let baseline = dir.path().join("base.json");
    let based = ius(&[
        "baseline",
        "--model",
        out.join("model.json").to_str().unwrap(),
        "--manifest",
        manifest_s,
        "--scope",
        "global",
        "--out",
        baseline.to_str().unwrap(),
    ]);
    assert_eq!(based.status.code(), Some(0), "{}", stderr_of(&based));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "path,label\n").unwrap();
    let report_path = dir.path().join("none.csv");
    let run = ius(&[
        "score",
        "--model",
        out.join("model.json").to_str().unwrap(),
        "--baseline",
        baseline.to_str().unwrap(),
        "--manifest",
        empty.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr_of(&run));
    let text = fs::read_to_string(&report_path).unwrap();
    assert_eq!(text.lines().count(), 1, "header only: {text}");
}

#[test]
fn study_commands_run_small() {
    let dir = TempDir::new().unwrap();
    for kind in ["toy", "degradation", "probe"] {
        let out = dir.path().join(kind);
        let run = ius(&[
            "study",
            kind,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "7",
            "--per-class",
            "8",
            "--max-epochs",
            "2",
            "--input-size",
            "16",
        ]);
        assert_eq!(run.status.code(), Some(0), "{kind}: {}", stderr_of(&run));
        assert!(out.join("run_manifest.json").exists(), "{kind} run manifest");
    }
    assert!(dir.path().join("toy/toy_summary.csv").exists());
    assert!(dir.path().join("degradation/degradation_stats.csv").exists());
    assert!(dir.path().join("probe/probe_stats.csv").exists());
}
