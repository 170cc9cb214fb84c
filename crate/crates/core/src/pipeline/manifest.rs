use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Stage;
use crate::error::{Error, Result};
use crate::io;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".medlens.lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    /// Artifact key → sha256 at stage start.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub duration_ms: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub stages: BTreeMap<Stage, StageRecord>,
    /// Stages requested by the latest invocation, in execution order.
    pub requested: Vec<Stage>,
    /// Whether every requested stage of the latest invocation completed.
    pub complete: bool,
}

impl RunManifest {
    pub fn empty(config: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            stages: BTreeMap::new(),
            requested: Vec::new(),
            complete: false,
        }
    }

    pub fn load(out_dir: &Path) -> Result<Option<Self>> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let m: Self = io::read_json(&path)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Precondition(format!(
                "{} has schema version {}, expected {MANIFEST_SCHEMA_VERSION}",
                path.display(),
                m.schema_version
            )));
        }
        Ok(Some(m))
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        io::write_json(&out_dir.join(MANIFEST_FILE), self)
    }

    /// Completed stage that recorded `key` as an output.
    pub fn producer(&self, key: &str) -> Option<(Stage, &StageRecord)> {
        self.stages
            .iter()
            .find(|(_, r)| r.status == StageStatus::Completed && r.outputs.contains_key(key))
            .map(|(s, r)| (*s, r))
    }

    /// Every output digest of completed stages, keyed by artifact.
    pub fn artifact_digests(&self) -> BTreeMap<String, String> {
        self.stages
            .values()
            .filter(|r| r.status == StageStatus::Completed)
            .flat_map(|r| r.outputs.clone())
            .collect()
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Artifact key: the path relative to the output directory when inside it.
pub fn artifact_key(out_dir: &Path, path: &Path) -> String {
    path.strip_prefix(out_dir)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Checks that `key` still hashes to what its producer recorded and that
/// the producer's own inputs are unchanged, recursively.
pub fn verify_artifact(
    manifest: &RunManifest,
    out_dir: &Path,
    key: &str,
    checked: &mut BTreeSet<String>,
) -> Result<()> {
    if !checked.insert(key.to_string()) {
        return Ok(());
    }
    let Some((_, rec)) = manifest.producer(key) else {
        return Ok(());
    };
    let check = |k: &str, expected: &str| -> Result<()> {
        let path = resolve(out_dir, k);
        if !path.exists() {
            return Err(Error::Precondition(format!("missing artifact {}", path.display())));
        }
        let found = sha256_file(&path)?;
        if found != expected {
            return Err(Error::StaleDigest {
                path,
                expected: expected.to_string(),
                found,
            });
        }
        Ok(())
    };
    check(key, &rec.outputs[key])?;
    for (k, d) in &rec.inputs {
        check(k, d)?;
        verify_artifact(manifest, out_dir, k, checked)?;
    }
    Ok(())
}

pub fn resolve(out_dir: &Path, key: &str) -> PathBuf {
    let p = Path::new(key);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

/// Exclusive ownership of an output directory; released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let path = out_dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Precondition(format!(
                "{} is locked by another run; delete {} if no run is active",
                out_dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
