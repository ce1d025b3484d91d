//! Dataset manifests, PNG ingestion, reproducible splits, and persistence
//! of models, baselines, and score reports.

mod baseline_io;
mod image_io;
mod manifest;
mod model_io;
mod report;
mod split;

pub use baseline_io::{load_baseline, save_baseline};
pub use image_io::{load_image, resize_bilinear, save_png};
pub use manifest::{Manifest, ManifestRow, Split};
pub use model_io::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use report::{
    read_id_list, read_score_report, write_id_list, write_score_report, ReportRow, ScoreReport,
};
pub use split::{stratified_split, SplitSets, SplitSpec};

use crate::ius::ScoreError;
use crate::pfm::ColorSpace;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Malformed { path: String, line: usize, msg: String },
    #[error("{path}: duplicate path {dup:?}")]
    DuplicatePath { path: String, dup: String },
    #[error("manifest has no data rows")]
    EmptyManifest,
    #[error("{path}: {msg}")]
    UnsupportedImage { path: String, msg: String },
    #[error("{path}: image is {got:?} but the run expects {want:?} input")]
    ModalityMismatch { path: String, want: ColorSpace, got: ColorSpace },
    #[error("invalid split spec: {0}")]
    InvalidSplitSpec(String),
    #[error("{path}: unsupported format version {got} (this build reads {want})")]
    VersionMismatch { path: String, want: u32, got: u32 },
    #[error("{path}: checksum {got:#010x} does not match stored {want:#010x}")]
    ChecksumMismatch { path: String, want: u32, got: u32 },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error(transparent)]
    Score(#[from] ScoreError),
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        DataError::Format { path: path.display().to_string(), msg: msg.into() }
    }
}
