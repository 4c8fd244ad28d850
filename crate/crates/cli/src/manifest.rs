//! Run manifests: command line, seeds, config snapshot and SHA-256 hashes
//! of every input and output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub struct Manifest {
    command: &'static str,
    argv: Vec<String>,
    seeds: BTreeMap<String, u64>,
    config: Option<String>,
    inputs: BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// `<file>.manifest.json` next to a single-file output.
pub fn sibling(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

impl Manifest {
    pub fn new(command: &'static str, argv: Vec<String>) -> Self {
        Self {
            command,
            argv,
            seeds: BTreeMap::new(),
            config: None,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn config(&mut self, text: &str) {
        self.config = Some(text.to_string());
    }

    pub fn input(&mut self, path: &Path, hash: &str) {
        self.inputs.insert(path.display().to_string(), hash.to_string());
    }

    pub fn artifact(&mut self, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.artifacts.insert(path.display().to_string(), hash);
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": "vcot",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "argv": self.argv,
            "seeds": self.seeds,
            "config": self.config,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sibling_name() {
        assert_eq!(sibling(Path::new("out/c.corpus")), Path::new("out/c.corpus.manifest.json"));
    }
}
