use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::hex;
use super::store::Store;

pub const MANIFEST: &str = "manifest.json";

/// Row counts for one stage, optionally for one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub counts: BTreeMap<String, u64>,
}

impl StageRecord {
    pub fn new(stage: &str, source: Option<&str>) -> Self {
        StageRecord {
            stage: stage.into(),
            source: source.map(String::from),
            counts: BTreeMap::new(),
        }
    }

    pub fn count(mut self, key: &str, value: usize) -> Self {
        self.counts.insert(key.into(), value as u64);
        self
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.counts.get(key).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Incomplete,
}

/// Run record. Contains no timestamps, so identical inputs and seed give a
/// byte-identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seed: u64,
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
    /// File name to SHA-256 of every output in the store.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(seed: u64, config_sha256: String) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: Status::Incomplete,
            failed_stage: None,
            error: None,
            seed,
            config_sha256,
            stages: Vec::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn stage(&self, stage: &str, source: Option<&str>) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage && r.source.as_deref() == source)
    }

    /// Hash every file in the store and write the manifest.
    pub fn finish(&mut self, store: &Store) -> Result<()> {
        self.outputs = hash_outputs(store.dir())?;
        store.write_json(MANIFEST, self)?;
        Ok(())
    }

    pub fn load(store: &Store) -> Result<Manifest> {
        let p = store.path(MANIFEST);
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", p.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    io::copy(&mut f, &mut h).map_err(|e| Error::io(path, e))?;
    Ok(hex(&h.finalize()))
}

fn hash_outputs(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || !entry.path().is_file() {
            continue;
        }
        out.insert(name, sha256_file(&entry.path())?);
    }
    Ok(out)
}
