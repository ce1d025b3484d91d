//! Self-contained studies on the procedural two-class corpus. Each study
//! trains its own model, so runs are reproducible from a seed alone.

use super::{history_csv, write_text, CliError, StudyCommon};
use crate::data::{read_score_report, save_model, write_id_list, write_score_report, DataError};
use crate::harness::{
    corruption_ladder, curate_vh, default_ladder, degradation_study, downstream_probe,
    random_control, run_manifest_path, toy_dataset_generate, write_run_manifest,
    ClassDistribution, ToyCorpusConfig, ToyItem,
};
use crate::ius::{compute_baseline, score_set_with, Scope, ScoreItem, Thresholds};
use crate::neural::{epu_forward, train_epu, ArchConfig, EpochStats, EpuModel, TrainConfig};
use crate::pfm::{decompose, Image, PfmConfig, PfmSet};
use serde_json::json;
use std::fmt::Write as _;
use std::fs;

struct ToyRun {
    val: Vec<ToyItem>,
    test: Vec<ToyItem>,
    model: EpuModel<f32>,
    history: Vec<EpochStats>,
    n_train: usize,
}

fn corpus(common: &StudyCommon, per_class: usize, seed: u64) -> Result<Vec<ToyItem>, CliError> {
    let cfg = ToyCorpusConfig {
        size: (common.input_size, common.input_size),
        per_class,
        rng_seed: seed,
        ..ToyCorpusConfig::default()
    };
    Ok(toy_dataset_generate(&cfg)?)
}

fn pairs(items: &[ToyItem]) -> Result<Vec<(PfmSet, u8)>, CliError> {
    items.iter().map(|it| Ok((decompose(&it.image)?, it.label))).collect()
}

fn images_of(items: &[ToyItem]) -> Vec<Image> {
    items.iter().map(|it| it.image.clone()).collect()
}

/// Per-class baseline over the validation corpus. Labels exist for every
/// toy image, and scoring each image against its own class reference keeps
/// utility sensitive to the class-bearing map: a global average over a
/// balanced two-class set cancels any component whose sign tracks the class.
fn val_baseline(run: &ToyRun) -> Result<crate::ius::BaselineProfile, CliError> {
    let labels: Vec<String> = run.val.iter().map(|it| it.class.clone()).collect();
    Ok(compute_baseline(&run.model, &images_of(&run.val), Some(&labels), Scope::PerClass)?)
}

/// Generates train, validation, and test corpora from consecutive seeds and
/// trains a model on the first two. Validation and test shrink with the
/// training size but never vanish.
fn train_toy(common: &StudyCommon) -> Result<ToyRun, CliError> {
    let train = corpus(common, common.per_class, common.seed)?;
    let val = corpus(common, (common.per_class / 4).max(1), common.seed + 1)?;
    let test = corpus(common, (common.per_class / 8).max(1), common.seed + 2)?;
    let cfg =
        TrainConfig { max_epochs: common.max_epochs, seed: common.seed, ..TrainConfig::default() };
    let (model, history) = train_epu(
        PfmConfig::Color,
        (common.input_size, common.input_size),
        &ArchConfig::default(),
        &pairs(&train)?,
        &pairs(&val)?,
        &cfg,
    )?;
    Ok(ToyRun { val, test, model, history, n_train: train.len() })
}

fn accuracy(model: &EpuModel<f32>, items: &[ToyItem]) -> Result<f64, CliError> {
    let mut hits = 0usize;
    for it in items {
        let p = epu_forward(model, &decompose(&it.image)?)?.probability;
        if (p >= 0.5) == (it.label == 1) {
            hits += 1;
        }
    }
    Ok(hits as f64 / items.len() as f64)
}

fn ensure_dir(path: &std::path::Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| DataError::io(path, e))?;
    Ok(())
}

pub(super) fn run_toy(common: &StudyCommon) -> Result<(), CliError> {
    ensure_dir(&common.out)?;
    let run = train_toy(common)?;
    save_model(&run.model, &common.out.join("toy_model.json"))?;
    write_text(&common.out.join("toy_history.csv"), &history_csv(&run.history))?;

    let last = run
        .history
        .last()
        .ok_or_else(|| CliError::Config("training produced no epochs".into()))?;
    let best_val = run.history.iter().map(|e| e.val_accuracy).fold(0.0, f64::max);
    let test_accuracy = accuracy(&run.model, &run.test)?;
    let mut summary = String::from(
        "n_train,n_val,n_test,epochs_run,best_val_accuracy,final_val_accuracy,test_accuracy\n",
    );
    let _ = writeln!(
        summary,
        "{},{},{},{},{},{},{}",
        run.n_train,
        run.val.len(),
        run.test.len(),
        run.history.len(),
        best_val,
        last.val_accuracy,
        test_accuracy
    );
    write_text(&common.out.join("toy_summary.csv"), &summary)?;
    write_run_manifest(
        &run_manifest_path(&common.out, true),
        common.seed,
        study_config("toy", common),
        &[],
    )?;
    println!(
        "toy study: {} epochs, best val accuracy {:.4}, test accuracy {:.4} -> {}",
        run.history.len(),
        best_val,
        test_accuracy,
        common.out.display()
    );
    Ok(())
}

pub(super) fn run_degradation(common: &StudyCommon) -> Result<(), CliError> {
    ensure_dir(&common.out)?;
    let run = train_toy(common)?;
    let baseline = val_baseline(&run)?;
    let ladder = default_ladder();
    let test_classes: Vec<String> = run.test.iter().map(|it| it.class.clone()).collect();
    let report = degradation_study(
        &run.model,
        &baseline,
        &images_of(&run.test),
        Some(&test_classes),
        &ladder,
        common.seed,
    )?;

    let mut csv = String::from("level,blur_sigma,noise_sigma,mean_u,sd_u,n_vl,n_l,n_m,n_h,n_vh\n");
    for lv in &report.levels {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            lv.level,
            lv.blur_sigma,
            lv.noise_sigma,
            lv.mean_u,
            lv.sd_u,
            lv.histogram[0],
            lv.histogram[1],
            lv.histogram[2],
            lv.histogram[3],
            lv.histogram[4]
        );
    }
    write_text(&common.out.join("degradation.csv"), &csv)?;

    let level0 = report.levels[0].mean_u;
    let max_mean = report.levels.iter().map(|l| l.mean_u).fold(f64::NEG_INFINITY, f64::max);
    let spearman = report.spearman.map(|r| r.to_string()).unwrap_or_default();
    let mut stats = String::from("spearman,level0_mean_u,max_mean_u,level0_is_max\n");
    let _ = writeln!(stats, "{},{},{},{}", spearman, level0, max_mean, level0 >= max_mean);
    write_text(&common.out.join("degradation_stats.csv"), &stats)?;

    write_run_manifest(
        &run_manifest_path(&common.out, true),
        common.seed,
        study_config("degradation", common),
        &[],
    )?;
    println!(
        "degradation study: clean mean u {:.4}, ladder max {:.4}, rank correlation {} -> {}",
        level0,
        max_mean,
        if spearman.is_empty() { "n/a".to_string() } else { spearman },
        common.out.display()
    );
    Ok(())
}

pub(super) fn run_probe(common: &StudyCommon) -> Result<(), CliError> {
    ensure_dir(&common.out)?;
    let run = train_toy(common)?;
    let baseline = val_baseline(&run)?;

    // The candidate pool is a fresh corpus plus a corrupted copy of each of
    // its images, so utility levels separate clean from degraded candidates.
    let clean = corpus(common, common.per_class, common.seed + 3)?;
    let ladder = default_ladder();
    let rungs = corruption_ladder(&images_of(&clean), &ladder, common.seed + 4)?;
    let top = rungs.last().expect("ladder has levels");
    let mut pool = clean.clone();
    for (it, image) in clean.iter().zip(top.iter()) {
        pool.push(ToyItem {
            id: format!("{}_c{}", it.id, ladder.len() - 1),
            class: it.class.clone(),
            label: it.label,
            image: image.clone(),
        });
    }

    let thresholds = Thresholds::default();
    let items: Vec<ScoreItem> = pool
        .iter()
        .map(|it| ScoreItem { id: it.id.clone(), class: Some(it.class.clone()), image: it.image.clone() })
        .collect();
    let batch = score_set_with(&run.model, &baseline, &items, &thresholds)?;
    if !batch.failures.is_empty() {
        for (id, err) in &batch.failures {
            eprintln!("failed to score {id:?}: {err}");
        }
        let (_, first) = batch.failures.into_iter().next().expect("non-empty failures");
        return Err(first.into());
    }
    let scores_path = common.out.join("pool_scores.csv");
    write_score_report(&batch.rows, PfmConfig::Color, &thresholds, &scores_path)?;
    let report = read_score_report(&scores_path)?;

    let dist = ClassDistribution::parse("abnormal=0.5,normal=0.5")?;
    let target = common.per_class;
    let curated = curate_vh(&report.rows, target, Some(&dist))?;
    let control = random_control(&report.rows, target, Some(&dist), common.seed + 5)?;
    write_id_list(&curated, &common.out.join("curated_ids.txt"))?;
    write_id_list(&control, &common.out.join("control_ids.txt"))?;

    // The probe learning rate and step budget are sized so a 60-image arm
    // trains to convergence; an underfit arm reads as optimizer noise, not
    // as a statement about the selected data.
    let probe_cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 16,
        max_epochs: common.max_epochs.min(16).max(1),
        seed: common.seed,
        ..TrainConfig::default()
    };
    let repeats = 5;
    let outcomes = downstream_probe(
        &curated,
        &control,
        &pool,
        &run.test,
        &ArchConfig::default(),
        &probe_cfg,
        repeats,
    )?;

    let mut csv =
        String::from("repeat,curated_accuracy,control_accuracy,curated_auc,control_auc\n");
    for o in &outcomes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            o.repeat, o.curated_accuracy, o.control_accuracy, o.curated_auc, o.control_auc
        );
    }
    write_text(&common.out.join("probe.csv"), &csv)?;

    let wins = outcomes.iter().filter(|o| o.curated_accuracy >= o.control_accuracy).count();
    let mean = |f: fn(&crate::harness::ProbeOutcome) -> f64| {
        outcomes.iter().map(f).sum::<f64>() / outcomes.len() as f64
    };
    let mut stats =
        String::from("repeats,curated_wins,mean_curated_accuracy,mean_control_accuracy\n");
    let _ = writeln!(
        stats,
        "{},{},{},{}",
        outcomes.len(),
        wins,
        mean(|o| o.curated_accuracy),
        mean(|o| o.control_accuracy)
    );
    write_text(&common.out.join("probe_stats.csv"), &stats)?;

    write_run_manifest(
        &run_manifest_path(&common.out, true),
        common.seed,
        study_config("probe", common),
        &[],
    )?;
    println!(
        "probe study: curated won {}/{} repeats (mean accuracy {:.4} vs {:.4}) -> {}",
        wins,
        outcomes.len(),
        mean(|o| o.curated_accuracy),
        mean(|o| o.control_accuracy),
        common.out.display()
    );
    Ok(())
}

fn study_config(kind: &str, common: &StudyCommon) -> serde_json::Value {
    json!({
        "command": format!("study {kind}"),
        "per_class": common.per_class,
        "max_epochs": common.max_epochs,
        "input_size": common.input_size,
    })
}
