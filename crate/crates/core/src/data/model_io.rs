//! Model persistence: versioned JSON carrying base64 tensor payloads and a
//! checksum over the raw parameter bytes.

use super::DataError;
use crate::neural::{ArchConfig, EpuModel};
use crate::pfm::PfmConfig;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    data: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    pfm_config: PfmConfig,
    input_size: [usize; 2],
    architecture: ArchConfig,
    bias: f64,
    tensors: Vec<TensorEntry>,
    /// CRC32 of every tensor's little-endian bytes, concatenated in tensor
    /// order. The scalar bias is covered by JSON itself.
    checksum: u32,
}

fn le_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn save_model(model: &EpuModel<f32>, path: &Path) -> Result<(), DataError> {
    let mut hasher = crc32fast::Hasher::new();
    let mut tensors = Vec::new();
    for (name, shape, values) in model.named_tensors() {
        let bytes = le_bytes(values);
        hasher.update(&bytes);
        tensors.push(TensorEntry { name, shape, dtype: "f32".into(), data: BASE64.encode(&bytes) });
    }
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        pfm_config: model.pfm_config,
        input_size: [model.input_h, model.input_w],
        architecture: model.arch.clone(),
        bias: model.bias as f64,
        tensors,
        checksum: hasher.finalize(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| DataError::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| DataError::io(path, e))
}

/// Reads a model file, verifying the version, the checksum, and every tensor
/// name and shape against the declared architecture before any parameter is
/// accepted. A failed load never yields a partially filled model.
pub fn load_model(path: &Path) -> Result<EpuModel<f32>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| DataError::format(path, e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(DataError::VersionMismatch {
            path: path.display().to_string(),
            want: MODEL_FORMAT_VERSION,
            got: file.format_version,
        });
    }
    if !file.bias.is_finite() {
        return Err(DataError::format(path, format!("non-finite bias {}", file.bias)));
    }

    let mut hasher = crc32fast::Hasher::new();
    let mut payloads: Vec<Vec<f32>> = Vec::with_capacity(file.tensors.len());
    for t in &file.tensors {
        if t.dtype != "f32" {
            return Err(DataError::format(
                path,
                format!("tensor {:?} has dtype {:?}, expected \"f32\"", t.name, t.dtype),
            ));
        }
        let bytes = BASE64
            .decode(&t.data)
            .map_err(|e| DataError::format(path, format!("tensor {:?}: {e}", t.name)))?;
        let want_len = t.shape.iter().product::<usize>() * 4;
        if bytes.len() != want_len {
            return Err(DataError::format(
                path,
                format!(
                    "tensor {:?} holds {} bytes, shape {:?} needs {want_len}",
                    t.name,
                    bytes.len(),
                    t.shape
                ),
            ));
        }
        hasher.update(&bytes);
        let values: Vec<f32> =
            bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(DataError::format(
                path,
                format!("tensor {:?} contains non-finite value {bad}", t.name),
            ));
        }
        payloads.push(values);
    }
    let got_checksum = hasher.finalize();
    if got_checksum != file.checksum {
        return Err(DataError::ChecksumMismatch {
            path: path.display().to_string(),
            want: file.checksum,
            got: got_checksum,
        });
    }

    // The rng only shapes throwaway values; every parameter is overwritten
    // from the file below.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = EpuModel::<f32>::init(
        file.pfm_config,
        (file.input_size[0], file.input_size[1]),
        &file.architecture,
        &mut rng,
    )
    .map_err(|e| DataError::format(path, e.to_string()))?;

    let expected = model.named_tensors();
    if expected.len() != file.tensors.len() {
        return Err(DataError::format(
            path,
            format!(
                "architecture defines {} tensors, file holds {}",
                expected.len(),
                file.tensors.len()
            ),
        ));
    }
    for ((want_name, want_shape, _), t) in expected.iter().zip(&file.tensors) {
        if *want_name != t.name || *want_shape != t.shape {
            return Err(DataError::format(
                path,
                format!(
                    "tensor {:?} with shape {:?} does not match expected {want_name:?} {want_shape:?}",
                    t.name, t.shape
                ),
            ));
        }
    }
    let mut payload_iter = payloads.into_iter();
    for net in &mut model.subnets {
        for slice in net.param_slices_mut() {
            let values = payload_iter.next().expect("tensor count was checked");
            slice.copy_from_slice(&values);
        }
    }
    debug_assert!(payload_iter.next().is_none());
    model.bias = file.bias as f32;
    Ok(model)
}
