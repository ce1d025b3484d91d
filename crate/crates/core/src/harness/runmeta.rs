//! Run provenance: every study or scoring run records its seed, its
//! configuration, and content hashes of the inputs, so a result can be
//! traced back to exactly what produced it.

use super::HarnessError;
use crate::data::DataError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// What a run saw: the seed, the full configuration echoed as JSON, and a
/// sha256 digest per input file keyed by its path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
}

/// Where the manifest for `output` lives: next to a file as
/// `<name>.run.json`, inside a directory as `run_manifest.json`.
pub fn run_manifest_path(output: &Path, output_is_dir: bool) -> PathBuf {
    if output_is_dir {
        output.join("run_manifest.json")
    } else {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".run.json");
        output.with_file_name(name)
    }
}

/// Content digest of one file, formatted `sha256:<hex>`.
pub fn hash_file(path: &Path) -> Result<String, HarnessError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

/// Writes the manifest for a run that read `inputs` and was configured by
/// `config`. The JSON is stable for fixed inputs, so identical runs produce
/// identical bytes.
pub fn write_run_manifest(
    manifest_path: &Path,
    seed: u64,
    config: serde_json::Value,
    inputs: &[&Path],
) -> Result<RunManifest, HarnessError> {
    let mut hashed = BTreeMap::new();
    for path in inputs {
        hashed.insert(path.display().to_string(), hash_file(path)?);
    }
    let manifest = RunManifest { seed, config, inputs: hashed };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| DataError::format(manifest_path, &e.to_string()))?;
    fs::write(manifest_path, text + "\n").map_err(|e| DataError::io(manifest_path, e))?;
    Ok(manifest)
}

pub fn read_run_manifest(path: &Path) -> Result<RunManifest, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    Ok(serde_json::from_str(&text).map_err(|e| DataError::format(path, &e.to_string()))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_matches_the_published_sha256_of_abc() {
        // sha256("abc") from the FIPS 180-2 example vectors.
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("abc.txt");
        fs::write(&input, "abc").unwrap();
        assert_eq!(
            hash_file(&input).unwrap(),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifests_round_trip_and_are_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("data.csv");
        fs::write(&input, "path,label\na.png,x\n").unwrap();
        let out = dir.path().join("scores.csv.run.json");
        let config = json!({"mode": "score", "thresholds": [0.2, 0.4, 0.6, 0.8]});
        let written =
            write_run_manifest(&out, 42, config.clone(), &[input.as_path()]).unwrap();
        let first = fs::read(&out).unwrap();
        assert_eq!(read_run_manifest(&out).unwrap(), written);
        assert_eq!(written.seed, 42);
        assert_eq!(written.config, config);
        assert_eq!(written.inputs.len(), 1);

        write_run_manifest(&out, 42, config, &[input.as_path()]).unwrap();
        assert_eq!(fs::read(&out).unwrap(), first, "same run, same bytes");
    }

    #[test]
    fn manifest_paths_follow_the_output_kind() {
        assert_eq!(
            run_manifest_path(Path::new("out/scores.csv"), false),
            Path::new("out/scores.csv.run.json")
        );
        assert_eq!(
            run_manifest_path(Path::new("out/study"), true),
            Path::new("out/study/run_manifest.json")
        );
    }

    #[test]
    fn missing_inputs_fail_with_their_path() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m.run.json");
        let ghost = dir.path().join("ghost.bin");
        let err = write_run_manifest(&out, 0, json!({}), &[ghost.as_path()]).unwrap_err();
        assert!(err.to_string().contains("ghost.bin"), "{err}");
    }
}
