use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stages::{feature_matrix, read_order, DetectorRanks};
use super::{check_inputs, Layout, RunConfig, RunManifest, Stage, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::io;
use crate::model::ProfileSet;
use crate::peer::{self, Basis, ContrastiveExplanation, PeerAnalysis};
use crate::rank::{RankList, Source};
use crate::regression::{self, Feature};
use crate::subspace::{self, DetectorScores, IcdDollarMap, IcdFeatureMatrix, ShapExplanation, DETECTORS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEvidence {
    /// Provider fixed effect, in dollars per visit.
    pub coefficient_usd: Option<f64>,
    pub rank: Option<usize>,
    pub n_ranked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceEvidence {
    pub fused_rank: Option<usize>,
    pub detector_ranks: BTreeMap<String, usize>,
    /// Surrogate explanation of the detector that ranks the provider best.
    pub shap: ShapExplanation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeerStatus {
    #[serde(rename = "ranked")]
    Ranked,
    #[serde(rename = "insufficient peers")]
    InsufficientPeers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerEvidence {
    pub basis: Basis,
    pub status: PeerStatus,
    pub rank: Option<usize>,
    pub n_peers: usize,
    pub explanation: Option<ContrastiveExplanation>,
}

/// Evidence from all three views for one provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub schema_version: u32,
    pub provider_id: String,
    pub final_rank: Option<usize>,
    pub n_ranked: usize,
    pub regression: RegressionEvidence,
    pub subspace: SubspaceEvidence,
    pub peer: Vec<PeerEvidence>,
}

/// Persisted artifacts needed to explain any provider.
pub struct ExplainContext {
    pub final_ranking: RankList,
    profiles: ProfileSet,
    coefficients: BTreeMap<String, f64>,
    ranks: DetectorRanks,
    scores: Vec<DetectorScores>,
    features: IcdFeatureMatrix,
    dollars: IcdDollarMap,
    peers: Vec<PeerAnalysis>,
    shap_top_k: usize,
    shap_ridge: f64,
    peer_top_k: usize,
}

impl ExplainContext {
    /// Loads from `cfg.out_dir`, checking presence and digests of every
    /// input the explain stage reads.
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let manifest = RunManifest::load(&cfg.out_dir)?.unwrap_or_else(|| RunManifest::empty(BTreeMap::new()));
        check_inputs(Stage::Explain, cfg, &manifest)?;
        Self::from_artifacts(cfg)
    }

    /// Loads without digest checks; the pipeline verifies before calling.
    pub(super) fn from_artifacts(cfg: &RunConfig) -> Result<Self> {
        let l = Layout::new(cfg);
        let profiles = io::read_profiles(&l.profiles())?;
        let costs = io::read_drg_costs(&l.drg_costs())?;
        let claims = io::read_claims(&l.claims_target())?.claims;
        let coefficients = regression::read_coefficients(&l.coefficients())?
            .into_iter()
            .filter_map(|(f, v)| match f {
                Feature::Provider(p) => Some((p, v)),
                _ => None,
            })
            .collect();
        let scores = DETECTORS
            .iter()
            .map(|&d| subspace::read_scores(&l.scores(d), d))
            .collect::<Result<Vec<_>>>()?;
        let peers = Basis::BOTH
            .iter()
            .map(|&b| peer::run_peer(&profiles, &costs, b, cfg.peer))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            final_ranking: read_order(&l.rank_final(), Source::Final)?,
            features: feature_matrix(cfg, &l)?,
            ranks: DetectorRanks::load(&l)?,
            dollars: IcdDollarMap::build(&claims, &costs),
            profiles,
            coefficients,
            scores,
            peers,
            shap_top_k: cfg.shap_top_k,
            shap_ridge: cfg.subspace.shap_ridge,
            peer_top_k: cfg.peer.top_k,
        })
    }

    pub fn explain(&self, provider_id: &str) -> Result<ExplanationReport> {
        if self.profiles.get(provider_id).is_none() {
            return Err(Error::UnknownProvider(provider_id.to_string()));
        }
        let detector_ranks: BTreeMap<String, usize> = self
            .ranks
            .components
            .iter()
            .filter_map(|r| r.position(provider_id).map(|p| (r.source.as_str().to_string(), p)))
            .collect();
        // best rank, ties in detector order
        let best = self
            .scores
            .iter()
            .min_by_key(|s| detector_ranks.get(s.detector.as_str()).copied().unwrap_or(usize::MAX))
            .ok_or_else(|| Error::Consistency("no detector scores".into()))?;
        let shap = subspace::shap_explain(
            &self.features,
            best,
            provider_id,
            self.shap_top_k,
            &self.dollars,
            self.shap_ridge,
        )?;

        let peer = self
            .peers
            .iter()
            .map(|a| {
                let group = a.group(provider_id);
                let n_peers = group.map_or(0, |g| g.peers.len());
                match a.report(provider_id) {
                    Some(rep) => PeerEvidence {
                        basis: a.basis,
                        status: PeerStatus::Ranked,
                        rank: self.ranks.peer_list(a.basis).position(provider_id),
                        n_peers,
                        explanation: Some(peer::contrastive_explain(rep, group, self.peer_top_k)),
                    },
                    None => PeerEvidence {
                        basis: a.basis,
                        status: PeerStatus::InsufficientPeers,
                        rank: None,
                        n_peers,
                        explanation: None,
                    },
                }
            })
            .collect();

        Ok(ExplanationReport {
            schema_version: SCHEMA_VERSION,
            provider_id: provider_id.to_string(),
            final_rank: self.final_ranking.position(provider_id),
            n_ranked: self.final_ranking.len(),
            regression: RegressionEvidence {
                coefficient_usd: self.coefficients.get(provider_id).copied(),
                rank: self.ranks.regression.position(provider_id),
                n_ranked: self.ranks.regression.len(),
            },
            subspace: SubspaceEvidence {
                fused_rank: self.ranks.subspace.position(provider_id),
                detector_ranks,
                shap,
            },
            peer,
        })
    }
}

/// Explains one provider from the artifacts of a finished run.
pub fn explain(provider_id: &str, cfg: &RunConfig) -> Result<ExplanationReport> {
    ExplainContext::load(cfg)?.explain(provider_id)
}
