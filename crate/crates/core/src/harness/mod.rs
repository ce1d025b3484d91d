//! Evaluation harness: synthetic corpora, curation and its random control,
//! baseline sensitivity, controlled degradation, the downstream training
//! probe, per-image interpretation, and run provenance.

pub mod corrupt;
pub mod curate;
pub mod degradation;
pub mod interpret;
pub mod probe;
pub mod runmeta;
pub mod sensitivity;
pub mod stats;
pub mod toy;

pub use corrupt::{corruption_ladder, default_ladder, gaussian_blur, CorruptionLevel};
pub use curate::{curate_vh, random_control, ClassDistribution};
pub use degradation::{degradation_study, DegradationReport, LevelOutcome};
pub use interpret::{interpretation_report, ComponentRecord};
pub use probe::{downstream_probe, ProbeOutcome};
pub use runmeta::{
    hash_file, read_run_manifest, run_manifest_path, write_run_manifest, RunManifest,
};
pub use sensitivity::{
    baseline_sensitivity, joint_threshold_probability, magnitude_stats, MagnitudeReport,
    SensitivityReport, DEFAULT_FRACTIONS,
};
pub use stats::{auc, mean_sd, quantile, spearman, summarize, Summary};
pub use toy::{toy_dataset_generate, ToyCorpusConfig, ToyItem, TOY_CLASSES};

use crate::data::DataError;
use crate::ius::ScoreError;
use crate::neural::NeuralError;
use crate::pfm::PfmError;
use thiserror::Error;

fn shortfall_list(shortfalls: &[(String, usize, usize)]) -> String {
    shortfalls
        .iter()
        .map(|(class, want, have)| format!("class {class:?} needs {want} but has {have}"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Curation could not fill its quota; every failing class is listed.
    #[error("not enough eligible images: {}", shortfall_list(.shortfalls))]
    Deficit { shortfalls: Vec<(String, usize, usize)> },

    #[error("invalid class distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid pool: {0}")]
    InvalidPool(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fraction {fraction} of a {pool}-image reference set selects nothing")]
    SubsetTooSmall { fraction: f64, pool: usize },

    #[error("{0} must not be empty")]
    EmptySet(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error(transparent)]
    Score(#[from] ScoreError),

    #[error(transparent)]
    Neural(#[from] NeuralError),

    #[error(transparent)]
    Pfm(#[from] PfmError),

    #[error(transparent)]
    Data(#[from] DataError),
}
