//! Command-line surface. Every command is a thin wrapper over the library:
//! the same seeds and inputs produce the same bytes as direct calls.

mod study;

use crate::data::{
    load_image, load_baseline, load_model, read_score_report, save_baseline, save_model,
    stratified_split, write_id_list, write_score_report, DataError, Manifest, ManifestRow, Split,
    SplitSpec,
};
use crate::harness::{
    baseline_sensitivity, curate_vh, random_control, run_manifest_path, write_run_manifest,
    ClassDistribution, HarnessError, DEFAULT_FRACTIONS,
};
use crate::ius::{
    compute_baseline, score_set_with, Scope, ScoreError, ScoreItem, Thresholds,
};
use crate::neural::{train_epu, ArchConfig, EpochStats, NeuralError, TrainConfig};
use crate::pfm::{decompose, Image, PfmConfig, PfmError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Pfm(#[from] PfmError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// Exit codes: 0 success, 1 usage, 2 data or configuration, 3 numeric
/// failure. Numeric means the math broke (non-finite values, degenerate
/// profiles), not that an input was wrong.
fn neural_code(e: &NeuralError) -> i32 {
    if matches!(e, NeuralError::NonFinite(_)) {
        3
    } else {
        2
    }
}

fn score_code(e: &ScoreError) -> i32 {
    match e {
        ScoreError::DegenerateProfile { .. }
        | ScoreError::ScoreOutOfRange(_)
        | ScoreError::ComponentOutOfRange(_) => 3,
        ScoreError::Neural(n) => neural_code(n),
        _ => 2,
    }
}

fn exit_code(e: &CliError) -> i32 {
    match e {
        CliError::Config(_) | CliError::Data(_) | CliError::Pfm(_) => 2,
        CliError::Neural(n) => neural_code(n),
        CliError::Score(s) => score_code(s),
        CliError::Harness(HarnessError::Score(s)) => score_code(s),
        CliError::Harness(HarnessError::Neural(n)) => neural_code(n),
        CliError::Harness(_) => 2,
    }
}

#[derive(Parser)]
#[command(
    name = "ius",
    version,
    about = "Train interpretable image classifiers, profile their decisions, and score images against a real-image baseline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a labeled image manifest
    Train(TrainArgs),
    /// Average contribution profiles of real images into a baseline file
    Baseline(BaselineArgs),
    /// Score images against a baseline into a report CSV
    Score(ScoreArgs),
    /// Select training ids from a score report
    Curate(CurateArgs),
    /// Measure baseline stability under reference-set subsampling
    Sensitivity(SensitivityArgs),
    /// Run a self-contained study on the procedural corpus
    Study(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Modality {
    Color,
    Gray,
}

impl Modality {
    fn pfm_config(self) -> PfmConfig {
        match self {
            Modality::Color => PfmConfig::Color,
            Modality::Gray => PfmConfig::Gray,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Global,
    PerClass,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurateMode {
    Vh,
    Random,
}

#[derive(Args)]
struct TrainArgs {
    /// CSV manifest: path,label[,split]
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for model.json, history.csv, run_manifest.json
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Modality::Color)]
    modality: Modality,
    /// Images are resized to this square size before decomposition
    #[arg(long, default_value_t = 64)]
    input_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 50)]
    max_epochs: usize,
    /// Early-stopping patience in epochs without a validation-loss improvement
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    model: PathBuf,
    /// Manifest of real images; with a split column only test rows are used
    #[arg(long)]
    manifest: PathBuf,
    /// Reference grouping; labels are always present, so the default keeps
    /// one profile per class
    #[arg(long, value_enum, default_value_t = ScopeArg::PerClass)]
    scope: ScopeArg,
    /// Output baseline file
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
    /// Manifest of images to score
    #[arg(long)]
    manifest: PathBuf,
    /// Output report CSV
    #[arg(long)]
    out: PathBuf,
    /// Level cut points "t1,t2,t3,t4"; overriding marks the report non-standard
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct CurateArgs {
    /// Score report CSV produced by `ius score`
    #[arg(long)]
    scores: PathBuf,
    /// Total number of ids to select
    #[arg(long)]
    count: usize,
    /// Class mix "classA=0.5,classB=0.5"; omitted means one global pool
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, value_enum, default_value_t = CurateMode::Vh)]
    mode: CurateMode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output id list, one id per line
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long)]
    model: PathBuf,
    /// Manifest of baseline reference images
    #[arg(long)]
    manifest: PathBuf,
    /// Manifest of images to re-score under each subsampled baseline
    #[arg(long)]
    pool: PathBuf,
    /// Output directory for the study CSVs
    #[arg(long)]
    out: PathBuf,
    /// Reference fractions to test; must include 1.0
    #[arg(long)]
    fractions: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct StudyArgs {
    #[command(subcommand)]
    kind: StudyKind,
}

#[derive(Subcommand)]
enum StudyKind {
    /// Train on the procedural corpus and report accuracies
    Toy(StudyCommon),
    /// Score a held-out set under a blur/noise ladder
    Degradation(StudyCommon),
    /// Compare curated against random training sets downstream
    Probe(StudyCommon),
}

#[derive(Args)]
struct StudyCommon {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Training images per class; validation and test scale with it
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    #[arg(long, default_value_t = 50)]
    max_epochs: usize,
    #[arg(long, default_value_t = 32)]
    input_size: usize,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a usage error.
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Baseline(args) => cmd_baseline(&args),
        Command::Score(args) => cmd_score(&args),
        Command::Curate(args) => cmd_curate(&args),
        Command::Sensitivity(args) => cmd_sensitivity(&args),
        Command::Study(args) => match args.kind {
            StudyKind::Toy(common) => study::run_toy(&common),
            StudyKind::Degradation(common) => study::run_degradation(&common),
            StudyKind::Probe(common) => study::run_probe(&common),
        },
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Manifest rows name files relative to the manifest's own directory.
fn resolve_row_path(manifest: &Path, row_path: &str) -> PathBuf {
    let p = Path::new(row_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

fn load_rows(
    manifest_path: &Path,
    rows: &[&ManifestRow],
    config: PfmConfig,
    size: (usize, usize),
) -> Result<Vec<Image>, CliError> {
    rows.iter()
        .map(|row| {
            Ok(load_image(
                &resolve_row_path(manifest_path, &row.path),
                config.color_space(),
                Some(size),
            )?)
        })
        .collect()
}

/// The baseline reference: the test split when the manifest has one, the
/// whole manifest otherwise.
fn reference_rows(manifest: &Manifest) -> Vec<&ManifestRow> {
    if manifest.has_splits() {
        manifest.rows.iter().filter(|r| r.split == Some(Split::Test)).collect()
    } else {
        manifest.rows.iter().collect()
    }
}

fn parse_thresholds(text: &str) -> Result<Thresholds, CliError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("bad thresholds {text:?}: {e}")))?;
    let cuts: [f64; 4] = values
        .try_into()
        .map_err(|v: Vec<f64>| CliError::Config(format!("expected 4 thresholds, got {}", v.len())))?;
    Ok(Thresholds::new(cuts)?)
}

fn parse_fractions(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("bad fractions {text:?}: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| DataError::io(path, e))?;
    Ok(())
}

fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    for e in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        );
    }
    out
}

fn split_pairs(
    manifest_path: &Path,
    rows: &[ManifestRow],
    classes: &[String],
    config: PfmConfig,
    size: (usize, usize),
) -> Result<Vec<(crate::pfm::PfmSet, u8)>, CliError> {
    rows.iter()
        .map(|row| {
            let image = load_image(
                &resolve_row_path(manifest_path, &row.path),
                config.color_space(),
                Some(size),
            )?;
            let pfms = decompose(&image)?;
            let label = classes.iter().position(|c| *c == row.label).expect("label from manifest");
            Ok((pfms, label as u8))
        })
        .collect()
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let manifest = Manifest::load(&args.manifest)?;
    let classes = manifest.classes();
    if classes.len() != 2 {
        return Err(CliError::Config(format!(
            "training needs exactly 2 classes, manifest has {} ({:?})",
            classes.len(),
            classes
        )));
    }
    let spec = SplitSpec { rng_seed: args.seed, ..SplitSpec::default() };
    let sets = stratified_split(&manifest, &spec)?;
    let config = args.modality.pfm_config();
    let size = (args.input_size, args.input_size);
    let train = split_pairs(&args.manifest, &sets.train, &classes, config, size)?;
    let val = split_pairs(&args.manifest, &sets.val, &classes, config, size)?;
    let cfg = TrainConfig {
        learning_rate: args.lr,
        momentum: args.momentum,
        batch_size: args.batch,
        max_epochs: args.max_epochs,
        patience: args.patience,
        seed: args.seed,
    };
    let arch = ArchConfig::default();
    let (model, history) = train_epu(config, size, &arch, &train, &val, &cfg)?;

    fs::create_dir_all(&args.out).map_err(|e| DataError::io(&args.out, e))?;
    let model_path = args.out.join("model.json");
    save_model(&model, &model_path)?;
    write_text(&args.out.join("history.csv"), &history_csv(&history))?;
    write_run_manifest(
        &run_manifest_path(&args.out, true),
        args.seed,
        json!({
            "command": "train",
            "classes": classes,
            "modality": format!("{config:?}"),
            "input_size": args.input_size,
            "learning_rate": args.lr,
            "momentum": args.momentum,
            "batch_size": args.batch,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
            "arch": {"conv_filters": arch.conv_filters, "dense_units": arch.dense_units},
        }),
        &[args.manifest.as_path()],
    )?;
    let best = history
        .iter()
        .min_by(|a, b| a.val_loss.partial_cmp(&b.val_loss).expect("finite losses"))
        .expect("training ran at least one epoch");
    println!(
        "trained {} epochs on {} images ({} validation); best epoch {} with val loss {:.6} and val accuracy {:.4}",
        history.len(),
        train.len(),
        val.len(),
        best.epoch,
        best.val_loss,
        best.val_accuracy
    );
    println!("model -> {}", model_path.display());
    Ok(())
}

fn cmd_baseline(args: &BaselineArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let manifest = Manifest::load(&args.manifest)?;
    let rows = reference_rows(&manifest);
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{} has no rows to build a baseline from",
            args.manifest.display()
        )));
    }
    let images = load_rows(&args.manifest, &rows, model.pfm_config, (model.input_h, model.input_w))?;
    let (scope, labels) = match args.scope {
        ScopeArg::Global => (Scope::Global, None),
        ScopeArg::PerClass => {
            (Scope::PerClass, Some(rows.iter().map(|r| r.label.clone()).collect::<Vec<_>>()))
        }
    };
    let baseline = compute_baseline(&model, &images, labels.as_deref(), scope)?;
    save_baseline(&baseline, &args.out)?;
    write_run_manifest(
        &run_manifest_path(&args.out, false),
        args.seed,
        json!({
            "command": "baseline",
            "scope": format!("{scope:?}"),
        }),
        &[args.model.as_path(), args.manifest.as_path()],
    )?;
    println!(
        "baseline over {} images ({} group(s)) -> {}",
        images.len(),
        baseline.profiles().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let baseline = load_baseline(&args.baseline)?;
    let manifest = Manifest::load(&args.manifest)?;
    let thresholds = match &args.thresholds {
        Some(text) => parse_thresholds(text)?,
        None => Thresholds::default(),
    };
    let items: Vec<ScoreItem> = manifest
        .rows
        .iter()
        .map(|row| {
            let image = load_image(
                &resolve_row_path(&args.manifest, &row.path),
                model.pfm_config.color_space(),
                Some((model.input_h, model.input_w)),
            )?;
            Ok(ScoreItem { id: row.path.clone(), class: Some(row.label.clone()), image })
        })
        .collect::<Result<_, CliError>>()?;
    let batch = score_set_with(&model, &baseline, &items, &thresholds)?;
    if !batch.failures.is_empty() {
        for (id, err) in &batch.failures {
            eprintln!("failed to score {id:?}: {err}");
        }
        let (_, first) = batch.failures.into_iter().next().expect("non-empty failures");
        return Err(first.into());
    }
    write_score_report(&batch.rows, model.pfm_config, &thresholds, &args.out)?;
    write_run_manifest(
        &run_manifest_path(&args.out, false),
        args.seed,
        json!({
            "command": "score",
            "thresholds": thresholds.cuts(),
            "standard_thresholds": thresholds.is_standard(),
        }),
        &[args.model.as_path(), args.baseline.as_path(), args.manifest.as_path()],
    )?;
    println!("scored {} images -> {}", batch.rows.len(), args.out.display());
    Ok(())
}

fn cmd_curate(args: &CurateArgs) -> Result<(), CliError> {
    let report = read_score_report(&args.scores)?;
    let dist = args
        .dist
        .as_deref()
        .map(ClassDistribution::parse)
        .transpose()?;
    let ids = match args.mode {
        CurateMode::Vh => curate_vh(&report.rows, args.count, dist.as_ref())?,
        CurateMode::Random => random_control(&report.rows, args.count, dist.as_ref(), args.seed)?,
    };
    write_id_list(&ids, &args.out)?;
    write_run_manifest(
        &run_manifest_path(&args.out, false),
        args.seed,
        json!({
            "command": "curate",
            "mode": match args.mode { CurateMode::Vh => "vh", CurateMode::Random => "random" },
            "count": args.count,
            "dist": args.dist,
        }),
        &[args.scores.as_path()],
    )?;
    println!("selected {} ids -> {}", ids.len(), args.out.display());
    Ok(())
}

fn cmd_sensitivity(args: &SensitivityArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let ref_manifest = Manifest::load(&args.manifest)?;
    let pool_manifest = Manifest::load(&args.pool)?;
    let size = (model.input_h, model.input_w);
    let reference =
        load_rows(&args.manifest, &reference_rows(&ref_manifest), model.pfm_config, size)?;
    let pool_rows: Vec<&ManifestRow> = pool_manifest.rows.iter().collect();
    let pool = load_rows(&args.pool, &pool_rows, model.pfm_config, size)?;
    let fractions = match &args.fractions {
        Some(text) => parse_fractions(text)?,
        None => DEFAULT_FRACTIONS.to_vec(),
    };
    let report = baseline_sensitivity(&model, &reference, &pool, &fractions, args.seed)?;

    fs::create_dir_all(&args.out).map_err(|e| DataError::io(&args.out, e))?;
    let names = model.pfm_config.map_names();

    let mut baselines = format!(
        "fraction,size,c_{},c_{},c_{},c_{}\n",
        names[0], names[1], names[2], names[3]
    );
    for (i, b) in report.baselines.iter().enumerate() {
        let r = b.reference(None)?;
        let _ = writeln!(
            baselines,
            "{},{},{},{},{},{}",
            report.fractions[i], report.subset_sizes[i], r[0], r[1], r[2], r[3]
        );
    }
    write_text(&args.out.join("sensitivity_baselines.csv"), &baselines)?;

    let mut cosine = String::from("fraction");
    for f in &report.fractions {
        let _ = write!(cosine, ",vs_{f}");
    }
    cosine.push('\n');
    for (i, row) in report.cosine_table.iter().enumerate() {
        let _ = write!(cosine, "{}", report.fractions[i]);
        for v in row {
            let _ = write!(cosine, ",{v}");
        }
        cosine.push('\n');
    }
    write_text(&args.out.join("sensitivity_cosine.csv"), &cosine)?;

    let mut agreement = String::from("fraction,size,vh_agreement\n");
    for i in 0..report.fractions.len() {
        let _ = writeln!(
            agreement,
            "{},{},{}",
            report.fractions[i], report.subset_sizes[i], report.agreement[i]
        );
    }
    write_text(&args.out.join("sensitivity_agreement.csv"), &agreement)?;

    write_run_manifest(
        &run_manifest_path(&args.out, true),
        args.seed,
        json!({
            "command": "sensitivity",
            "fractions": report.fractions,
        }),
        &[args.model.as_path(), args.manifest.as_path(), args.pool.as_path()],
    )?;
    let min_agreement =
        report.agreement.iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "tested {} fractions over {} reference and {} pool images; minimum top-level agreement {:.4}",
        report.fractions.len(),
        reference.len(),
        pool.len(),
        min_agreement
    );
    println!("reports -> {}", args.out.display());
    Ok(())
}
