//! Baseline persistence: versioned JSON keyed by class (or the global key),
//! carrying the reference profiles and the sample counts behind them.

use super::DataError;
use crate::ius::{BaselineProfile, Scope};
use crate::pfm::PfmConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

const BASELINE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineFile {
    format_version: u32,
    pfm_config: PfmConfig,
    scope: Scope,
    /// Component order of every profile row, fixed by `pfm_config`. Stored
    /// so a reader can interpret the file without this crate.
    pfm_names: Vec<String>,
    profiles: BTreeMap<String, [f64; 4]>,
    counts: BTreeMap<String, u64>,
}

pub fn save_baseline(baseline: &BaselineProfile, path: &Path) -> Result<(), DataError> {
    let file = BaselineFile {
        format_version: BASELINE_FORMAT_VERSION,
        pfm_config: baseline.config(),
        scope: baseline.scope(),
        pfm_names: baseline.config().map_names().iter().map(|s| s.to_string()).collect(),
        profiles: baseline.profiles().clone(),
        counts: baseline.counts().clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| DataError::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| DataError::io(path, e))
}

/// Reads a baseline file. Every structural rule that holds for an in-memory
/// baseline is re-validated, so a hand-edited file cannot smuggle in an
/// inconsistent reference.
pub fn load_baseline(path: &Path) -> Result<BaselineProfile, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let file: BaselineFile =
        serde_json::from_str(&text).map_err(|e| DataError::format(path, e.to_string()))?;
    if file.format_version != BASELINE_FORMAT_VERSION {
        return Err(DataError::VersionMismatch {
            path: path.display().to_string(),
            want: BASELINE_FORMAT_VERSION,
            got: file.format_version,
        });
    }
    let want_names = file.pfm_config.map_names();
    if file.pfm_names != want_names {
        return Err(DataError::format(
            path,
            format!("pfm_names {:?} do not match {:?} for {:?}", file.pfm_names, want_names, file.pfm_config),
        ));
    }
    Ok(BaselineProfile::from_parts(file.pfm_config, file.scope, file.profiles, file.counts)?)
}
