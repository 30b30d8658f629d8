//! Output directories: every artifact is hashed, and `manifest.json` echoes
//! the resolved config with the hashes of all inputs and outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

/// Git-style object hash, `sha256("blob <len>\0" ++ bytes)`, as hex.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    let mut out = String::with_capacity(64);
    for b in h.finalize().iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    /// Hash of the canonical JSON of `config`.
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

/// Collects artifacts written into one output directory.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
    notes: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: impl Into<PathBuf>) -> CliResult<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(OutputDir {
            dir,
            outputs: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        self.outputs.insert(name.to_string(), blob_hash(contents.as_bytes()));
        Ok(())
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, subcommand: &str, config: BTreeMap<String, String>, inputs: BTreeMap<String, String>) -> CliResult<Manifest> {
        let canonical = serde_json::to_string(&config).expect("string map serializes");
        let manifest = Manifest {
            tool: "orbitflow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config_hash: blob_hash(canonical.as_bytes()),
            config,
            inputs,
            outputs: self.outputs,
            notes: self.notes,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let p = self.dir.join(MANIFEST);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(manifest)
    }
}
