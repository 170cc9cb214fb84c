//! Staged, resumable execution over a single output directory.
//!
//! Each stage reads flat files, writes flat files and records sha256
//! digests of both in `manifest.json`. Before a stage runs, every input
//! produced by an earlier stage is re-hashed and compared with the digest
//! its producer recorded, so a partial re-run never mixes outputs of
//! different upstream runs.

mod config;
mod explain;
mod manifest;
mod stages;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{LabelMode, RunConfig};
pub use explain::{explain, ExplainContext, ExplanationReport, PeerEvidence, PeerStatus, RegressionEvidence, SubspaceEvidence};
pub use manifest::{
    artifact_key, sha256_file, verify_artifact, RunLock, RunManifest, StageRecord, StageStatus, LOCK_FILE,
    MANIFEST_FILE, MANIFEST_SCHEMA_VERSION,
};

/// Version stamped into every JSON artifact written by the pipeline.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Generate,
    Ingest,
    DetectRegression,
    DetectSubspace,
    DetectPeer,
    Fuse,
    Explain,
    Evaluate,
    Characterize,
    Report,
}

impl Stage {
    /// Dependency order.
    pub const ALL: [Stage; 10] = [
        Stage::Generate,
        Stage::Ingest,
        Stage::DetectRegression,
        Stage::DetectSubspace,
        Stage::DetectPeer,
        Stage::Fuse,
        Stage::Explain,
        Stage::Evaluate,
        Stage::Characterize,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Ingest => "ingest",
            Stage::DetectRegression => "detect-regression",
            Stage::DetectSubspace => "detect-subspace",
            Stage::DetectPeer => "detect-peer",
            Stage::Fuse => "fuse",
            Stage::Explain => "explain",
            Stage::Evaluate => "evaluate",
            Stage::Characterize => "characterize",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Where every artifact lives.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub out: PathBuf,
    pub data: PathBuf,
}

impl Layout {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            out: cfg.out_dir.clone(),
            data: cfg.data_dir(),
        }
    }

    pub fn data(&self, f: &str) -> PathBuf {
        self.data.join(f)
    }

    pub fn stage(&self, dir: &str, f: &str) -> PathBuf {
        self.out.join(dir).join(f)
    }

    pub fn claims_target(&self) -> PathBuf {
        self.stage("ingest", "claims_target.csv")
    }
    pub fn profiles(&self) -> PathBuf {
        self.stage("ingest", "provider_profiles.csv")
    }
    pub fn histories(&self) -> PathBuf {
        self.stage("ingest", "patient_histories.csv")
    }
    pub fn conditions(&self) -> PathBuf {
        self.stage("ingest", "conditions.csv")
    }
    pub fn drg_costs(&self) -> PathBuf {
        self.stage("ingest", "drg_costs.csv")
    }
    pub fn coefficients(&self) -> PathBuf {
        self.stage("regression", "coefficients.csv")
    }
    pub fn rank_regression(&self) -> PathBuf {
        self.stage("regression", "rank_regression.csv")
    }
    pub fn scores(&self, detector: crate::Source) -> PathBuf {
        self.stage("subspace", &format!("scores_{}.csv", detector.as_str()))
    }
    pub fn rank_subspace(&self) -> PathBuf {
        self.stage("subspace", "rank_subspace.csv")
    }
    pub fn rank_peer(&self, basis: crate::peer::Basis) -> PathBuf {
        self.stage("peer", &format!("rank_peer_{}.csv", basis.as_str()))
    }
    pub fn rank_final(&self) -> PathBuf {
        self.stage("fusion", "rank_final.csv")
    }
    pub fn explain_index(&self) -> PathBuf {
        self.stage("explain", "index.json")
    }
    pub fn metrics(&self) -> PathBuf {
        self.stage("eval", "metrics.json")
    }
    pub fn characterization(&self) -> PathBuf {
        self.stage("characterize", "characterization.json")
    }
    pub fn report(&self) -> PathBuf {
        self.stage("report", "report.md")
    }

    /// Whether `path` is produced by a pipeline stage rather than supplied.
    fn is_internal(&self, path: &Path) -> bool {
        path.starts_with(&self.out) && !path.starts_with(&self.data)
    }
}

/// Files a stage reads.
pub fn stage_inputs(stage: Stage, cfg: &RunConfig) -> Vec<PathBuf> {
    use crate::peer::Basis;
    use crate::subspace::DETECTORS;
    let l = Layout::new(cfg);
    let detector_files = || DETECTORS.iter().map(|&d| l.scores(d)).collect::<Vec<_>>();
    let peer_files = || Basis::BOTH.iter().map(|&b| l.rank_peer(b)).collect::<Vec<_>>();
    let mut v = match stage {
        Stage::Generate => vec![],
        Stage::Ingest => ["claims.csv", "visits.csv", "beneficiaries.csv", "drg_mdc.csv"]
            .iter()
            .map(|f| l.data(f))
            .collect(),
        Stage::DetectRegression => vec![l.histories(), l.conditions()],
        Stage::DetectSubspace => vec![l.profiles(), l.data("icd_hierarchy.csv")],
        Stage::DetectPeer => vec![l.profiles(), l.drg_costs()],
        Stage::Fuse => {
            let mut v = vec![l.rank_regression(), l.rank_subspace()];
            v.extend(detector_files());
            v.extend(peer_files());
            v
        }
        Stage::Explain => {
            let mut v = vec![
                l.rank_final(),
                l.coefficients(),
                l.rank_regression(),
                l.rank_subspace(),
                l.profiles(),
                l.drg_costs(),
                l.claims_target(),
                l.data("icd_hierarchy.csv"),
            ];
            v.extend(detector_files());
            v.extend(peer_files());
            v
        }
        Stage::Evaluate => {
            let mut v = vec![l.rank_final(), l.rank_regression(), l.rank_subspace(), l.coefficients()];
            v.extend(detector_files());
            v.extend(peer_files());
            v.push(cfg.labels_path());
            if cfg.label_mode == LabelMode::Names {
                v.push(l.data("providers.csv"));
                v.extend(cfg.accepted_reviews.clone());
            }
            v
        }
        Stage::Characterize => vec![l.rank_final(), l.data("covariates.csv")],
        Stage::Report => vec![l.metrics(), l.characterization(), l.rank_final(), l.explain_index()],
    };
    let mut seen = BTreeSet::new();
    v.retain(|p| seen.insert(p.clone()));
    v
}

/// Fails with a precondition error naming every missing input, or a digest
/// error for any input that changed since its producer wrote it.
pub fn check_inputs(stage: Stage, cfg: &RunConfig, manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let l = Layout::new(cfg);
    let inputs = stage_inputs(stage, cfg);
    let missing: Vec<String> = inputs
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Precondition(format!(
            "stage {stage} is missing inputs: {} (run the upstream stages first)",
            missing.join(", ")
        )));
    }
    let mut checked = BTreeSet::new();
    for p in &inputs {
        let key = artifact_key(&l.out, p);
        if l.is_internal(p) && manifest.producer(&key).is_none() {
            return Err(Error::Precondition(format!(
                "{} has no recorded digest in {}; re-run the stage that produces it",
                p.display(),
                l.out.join(MANIFEST_FILE).display()
            )));
        }
        verify_artifact(manifest, &l.out, &key, &mut checked)?;
    }
    Ok(inputs)
}

fn digests(out: &Path, paths: &[PathBuf]) -> Result<std::collections::BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((artifact_key(out, p), sha256_file(p)?)))
        .collect()
}

/// Runs `stages` in dependency order and writes the manifest last, also
/// when a stage fails (the failed stage is recorded and the error
/// returned).
pub fn run_pipeline(cfg: &RunConfig, stages: &[Stage]) -> Result<RunManifest> {
    cfg.validate()?;
    let _lock = RunLock::acquire(&cfg.out_dir)?;
    let mut manifest = RunManifest::load(&cfg.out_dir)?.unwrap_or_else(|| RunManifest::empty(cfg.snapshot()));
    manifest.config = cfg.snapshot();
    let order: BTreeSet<Stage> = stages.iter().copied().collect();
    manifest.requested = order.iter().copied().collect();
    manifest.complete = false;

    let mut failure = None;
    for &stage in &order {
        let start = Instant::now();
        let result = check_inputs(stage, cfg, &manifest).and_then(|inputs| {
            let in_digests = digests(&cfg.out_dir, &inputs)?;
            let outputs = stages::run_stage(stage, cfg)?;
            Ok((in_digests, digests(&cfg.out_dir, &outputs)?))
        });
        let duration_ms = start.elapsed().as_millis() as u64;
        match result {
            Ok((inputs, outputs)) => {
                manifest.stages.insert(
                    stage,
                    StageRecord {
                        status: StageStatus::Completed,
                        inputs,
                        outputs,
                        duration_ms,
                        error: None,
                    },
                );
            }
            Err(e) => {
                manifest.stages.insert(
                    stage,
                    StageRecord {
                        status: StageStatus::Failed,
                        inputs: Default::default(),
                        outputs: Default::default(),
                        duration_ms,
                        error: Some(e.to_string()),
                    },
                );
                failure = Some(e);
                break;
            }
        }
    }
    manifest.complete = failure.is_none();
    manifest.save(&cfg.out_dir)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        assert!(matches!("nope".parse::<Stage>(), Err(Error::Config(_))));
        let js = serde_json::to_string(&Stage::DetectPeer).unwrap();
        assert_eq!(js, "\"detect-peer\"");
    }
}
