//! Checkpoint files.
//!
//! Layout: the 8-byte magic, a little-endian `u32` format version, a
//! little-endian `u64` header length, a JSON header, then every parameter
//! as little-endian `f32` values in header order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::param_specs;
use super::lora::LoraAdapter;
use super::params::Param;
use super::{ModelConfig, ModelError, ModelParams, Vocabulary};
use crate::numcore::Tensor;

pub const MAGIC: &[u8; 8] = b"VCOTCKPT";
pub const FORMAT_VERSION: u32 = 1;
const PREAMBLE: usize = 8 + 4 + 8;

/// Parameters together with what is needed to use them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub vocab: Vocabulary,
    /// Free-form provenance such as the training variant.
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the data section.
    offset: u64,
    trainable: bool,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    vocab: Vocabulary,
    #[serde(default)]
    meta: BTreeMap<String, String>,
    #[serde(default)]
    lora: BTreeMap<String, LoraAdapter>,
    params: Vec<ManifestEntry>,
}

pub fn write_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut offset = 0u64;
    let entries = ckpt
        .params
        .params()
        .iter()
        .map(|p| {
            let e = ManifestEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                offset,
                trainable: p.trainable,
            };
            offset += 4 * p.value.len() as u64;
            e
        })
        .collect();
    let header = Header {
        format_version: FORMAT_VERSION,
        config: ckpt.params.config.clone(),
        vocab: ckpt.vocab.clone(),
        meta: ckpt.meta.clone(),
        lora: ckpt.params.lora.clone(),
        params: entries,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(PREAMBLE + json.len() + offset as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in ckpt.params.params() {
        for &v in p.value.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Shapes implied by the configuration and adapter table.
fn expected_shapes(config: &ModelConfig, lora: &BTreeMap<String, LoraAdapter>) -> HashMap<String, Vec<usize>> {
    let mut shapes: HashMap<String, Vec<usize>> = param_specs(config).into_iter().map(|s| (s.name, s.shape)).collect();
    for (target, a) in lora {
        if let Some(w) = shapes.get(target).cloned() {
            shapes.insert(LoraAdapter::a_name(target), vec![a.rank, w[1]]);
            shapes.insert(LoraAdapter::b_name(target), vec![w[0], a.rank]);
        }
    }
    shapes
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(ModelError::BadMagic);
    }
    if bytes.len() < PREAMBLE {
        return Err(ModelError::Truncated {
            expected: PREAMBLE as u64,
            actual: bytes.len() as u64,
        });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let data_start = PREAMBLE as u64 + header_len;
    if (bytes.len() as u64) < data_start {
        return Err(ModelError::Truncated {
            expected: data_start,
            actual: bytes.len() as u64,
        });
    }
    let header: Header = serde_json::from_slice(&bytes[PREAMBLE..data_start as usize])
        .map_err(|e| ModelError::Manifest(e.to_string()))?;
    if header.format_version != version {
        return Err(ModelError::Manifest(format!(
            "header declares version {} inside a version {version} file",
            header.format_version
        )));
    }
    header.config.validate()?;
    if header.vocab.len() != header.config.vocab_size {
        return Err(ModelError::Manifest(format!(
            "vocabulary has {} tokens, configuration {}",
            header.vocab.len(),
            header.config.vocab_size
        )));
    }
    for target in header.lora.keys() {
        if !param_specs(&header.config).iter().any(|s| &s.name == target) {
            return Err(ModelError::UnknownTarget(target.clone()));
        }
    }

    let mut expected = expected_shapes(&header.config, &header.lora);
    let mut offset = 0u64;
    for e in &header.params {
        let Some(shape) = expected.remove(&e.name) else {
            return Err(ModelError::Manifest(format!("unexpected or repeated parameter {}", e.name)));
        };
        if shape != e.shape {
            return Err(ModelError::ShapeMismatch {
                name: e.name.clone(),
                manifest: e.shape.clone(),
                expected: shape,
            });
        }
        if e.offset != offset {
            return Err(ModelError::Manifest(format!(
                "parameter {} at offset {} but previous data ends at {offset}",
                e.name, e.offset
            )));
        }
        offset += 4 * shape.iter().product::<usize>() as u64;
    }
    if let Some(missing) = expected.keys().min() {
        return Err(ModelError::Manifest(format!("missing parameter {missing}")));
    }
    let data = &bytes[data_start as usize..];
    if (data.len() as u64) < offset {
        return Err(ModelError::Truncated {
            expected: data_start + offset,
            actual: bytes.len() as u64,
        });
    }
    if data.len() as u64 > offset {
        return Err(ModelError::Manifest(format!(
            "{} trailing bytes after the last parameter",
            data.len() as u64 - offset
        )));
    }

    let params = header
        .params
        .into_iter()
        .map(|e| {
            let start = e.offset as usize;
            let n: usize = e.shape.iter().product();
            let values = data[start..start + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect();
            Ok(Param {
                name: e.name,
                value: Tensor::new(e.shape, values)?,
                trainable: e.trainable,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(Checkpoint {
        params: ModelParams::from_parts(header.config, params, header.lora),
        vocab: header.vocab,
        meta: header.meta,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), ModelError> {
    fs::write(path, write_checkpoint(ckpt))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    read_checkpoint(&fs::read(path)?)
}
