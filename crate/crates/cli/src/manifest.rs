//! Run manifests: resolved configuration plus content hashes of every input
//! and output. Written on success and on failure.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Git-style object hash: SHA-256 of `"blob <len>\0"` followed by the bytes.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    /// `None` when the file could not be read.
    pub hash: Option<String>,
}

impl FileEntry {
    fn of(path: &Path) -> Self {
        Self {
            path: path.display().to_string(),
            hash: std::fs::read(path).ok().map(|b| blob_hash(&b)),
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
    status: &'static str,
    exit_code: u8,
    error: Option<String>,
}

/// Collects what a command read and wrote.
#[derive(Debug)]
pub struct Record {
    command: &'static str,
    path: Option<PathBuf>,
    explicit_path: bool,
    config: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Record {
    pub fn new(command: &'static str, manifest: Option<PathBuf>) -> Self {
        Self {
            command,
            explicit_path: manifest.is_some(),
            path: manifest,
            config: Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Stores the resolved configuration and the primary output, which
    /// names the manifest unless `--manifest` was given.
    pub fn begin<T: Serialize>(&mut self, resolved: &T, primary: &Path) -> Result<(), CliError> {
        self.config = serde_json::to_value(resolved)?;
        if !self.explicit_path {
            let mut name = primary.as_os_str().to_owned();
            name.push(".manifest.json");
            self.path = Some(PathBuf::from(name));
        }
        Ok(())
    }

    pub fn input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    pub fn output(&mut self, path: &Path) {
        if !self.outputs.iter().any(|p| p == path) {
            self.outputs.push(path.to_path_buf());
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("swarmtsc-{}.manifest.json", self.command)))
    }

    pub fn write(&self, exit_code: u8, error: Option<String>) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            tool: "swarmtsc",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: &self.config,
            inputs: self.inputs.iter().map(|p| FileEntry::of(p)).collect(),
            outputs: self.outputs.iter().map(|p| FileEntry::of(p)).collect(),
            status: if exit_code == 0 { "ok" } else { "error" },
            exit_code,
            error,
        };
        let path = self.manifest_path();
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
