use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// SHA-256 of every artifact, grouped by the stage that wrote it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Stage name to a hash over its files and their hashes.
    pub stages: BTreeMap<String, String>,
    /// Stage name to relative path to file hash.
    pub files: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn file_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        if path.is_file() {
            Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
        } else {
            Ok(Self::default())
        }
    }

    fn restage(&mut self, stage: &str) {
        let mut h = Sha256::new();
        if let Some(files) = self.files.get(stage) {
            for (path, hash) in files {
                h.update(path.as_bytes());
                h.update([0]);
                h.update(hash.as_bytes());
                h.update([b'\n']);
            }
        }
        self.stages.insert(stage.to_string(), hex::encode(h.finalize()));
    }
}

/// Writes artifacts below an output directory and records them in the
/// manifest.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    manifest: Manifest,
}

impl Artifacts {
    /// Opens `root`, keeping entries of an existing manifest.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let manifest = Manifest::load(&root)?;
        Ok(Self { root, manifest })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Forgets earlier files of a stage that is about to be rewritten.
    pub fn begin(&mut self, stage: &str) {
        self.manifest.files.remove(stage);
        self.manifest.stages.remove(stage);
    }

    pub fn write_bytes(&mut self, stage: &str, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.manifest.files.entry(stage.to_string()).or_default().insert(rel.to_string(), file_hash(bytes));
        self.manifest.restage(stage);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, stage: &str, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(stage, rel, text.as_bytes())
    }

    /// Records a file written by other means.
    pub fn record(&mut self, stage: &str, rel: &str) -> Result<()> {
        let bytes = std::fs::read(self.root.join(rel))?;
        self.manifest.files.entry(stage.to_string()).or_default().insert(rel.to_string(), file_hash(&bytes));
        self.manifest.restage(stage);
        Ok(())
    }

    /// Writes `manifest.json`.
    pub fn finish(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// CSV rows rendered in memory.
pub(crate) fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))
}
