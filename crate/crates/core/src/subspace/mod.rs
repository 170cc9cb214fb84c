//! Coding-pattern detector over the provider × ICD matrix.
//!
//! Raw per-provider code counts are smoothed with a within-chapter
//! description-similarity matrix so that providers using substitutable codes
//! look alike, then five unsupervised detectors score the rows. Their
//! rankings are fused by instant-runoff voting; a linear surrogate explains
//! individual scores code by code.

mod dollar;
mod iforest;
mod jaccard;
mod loda;
mod rrcf;
mod rshash;
mod shap;
mod sod;

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{irv_aggregate, FusionTrace, IrvOptions};
use crate::io;
use crate::rank::{RankList, Source};
use crate::seed;

pub use dollar::{icd_dollar_context, DollarContext, IcdDollarMap};
pub use iforest::{anomaly_score, c_factor, iforest_scores};
pub use jaccard::{
    apply_substitutability, build_substitutability, jaccard, tokens, IcdFeatureMatrix,
    SubstitutabilityMatrix,
};
pub use loda::{bin_count, loda_scores, projection_scores};
pub use rrcf::rrcf_scores;
pub use rshash::rshash_scores;
pub use shap::{explain_row, LinearSurrogate, ShapExplanation, ShapTerm, LOW_FIDELITY_R2, STD_FLOOR};
pub use sod::{sod_scores, SodParams};

pub const DETECTORS: [Source; 5] = [Source::Sod, Source::Iforest, Source::Rrcf, Source::Loda, Source::Rshash];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceParams {
    pub seed: u64,
    pub sod: SodParams,
    pub n_trees: usize,
    pub subsample: usize,
    pub n_projections: usize,
    pub n_hashes: usize,
    /// Capped at the number of providers.
    pub sample_size: usize,
    /// L1-normalize rows of `X_sim` before detection.
    pub normalize: bool,
    pub shap_ridge: f64,
}

impl Default for SubspaceParams {
    fn default() -> Self {
        Self {
            seed: 11,
            sod: SodParams::default(),
            n_trees: 200,
            subsample: 256,
            n_projections: 100,
            n_hashes: 200,
            sample_size: 1000,
            normalize: true,
            shap_ridge: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorScores {
    pub detector: Source,
    pub provider_ids: Vec<String>,
    /// Higher is more anomalous.
    pub scores: Vec<f64>,
    pub seed: u64,
    pub hyperparameters: BTreeMap<String, f64>,
}

impl DetectorScores {
    pub fn ranking(&self) -> Result<RankList> {
        RankList::from_scores(
            self.detector,
            self.provider_ids.iter().cloned().zip(self.scores.iter().copied()).collect(),
        )
    }

    pub fn score_of(&self, provider_id: &str) -> Option<f64> {
        self.provider_ids
            .iter()
            .position(|p| p == provider_id)
            .map(|i| self.scores[i])
    }
}

/// Seed for one detector, derived from the run seed and the detector name.
pub fn detector_seed(seed_value: u64, detector: Source) -> u64 {
    seed::derive(seed_value, seed::tag(detector.as_str()))
}

pub fn run_detector(x: &Array2<f64>, ids: &[String], detector: Source, p: &SubspaceParams) -> Result<DetectorScores> {
    let s = detector_seed(p.seed, detector);
    let n = x.nrows();
    let (scores, hp): (Vec<f64>, Vec<(&str, f64)>) = match detector {
        Source::Sod => (
            sod_scores(x, p.sod)?,
            vec![
                ("k_shared_nn", p.sod.k_shared_nn as f64),
                ("ref_set_size", p.sod.ref_set_size as f64),
                ("variance_threshold", p.sod.variance_threshold),
            ],
        ),
        Source::Iforest => (
            iforest_scores(x, p.n_trees, p.subsample, s)?,
            vec![("n_trees", p.n_trees as f64), ("subsample", p.subsample as f64)],
        ),
        Source::Rrcf => (
            rrcf_scores(x, p.n_trees, p.subsample, s)?,
            vec![("n_trees", p.n_trees as f64), ("subsample", p.subsample as f64)],
        ),
        Source::Loda => (loda_scores(x, p.n_projections, s)?, vec![("n_projections", p.n_projections as f64)]),
        Source::Rshash => {
            let m = p.sample_size.min(n);
            (
                rshash_scores(x, p.n_hashes, m, s)?,
                vec![("n_hashes", p.n_hashes as f64), ("sample_size", m as f64)],
            )
        }
        other => return Err(Error::Input(format!("{} is not a subspace detector", other.as_str()))),
    };
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::Consistency(format!("{} produced a non-finite score for {}", detector.as_str(), ids[i])));
    }
    Ok(DetectorScores {
        detector,
        provider_ids: ids.to_vec(),
        scores,
        seed: if detector == Source::Sod { 0 } else { s },
        hyperparameters: hp.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    })
}

/// All five detectors, in [`DETECTORS`] order.
pub fn run_all(features: &IcdFeatureMatrix, p: &SubspaceParams) -> Result<Vec<DetectorScores>> {
    DETECTORS
        .par_iter()
        .map(|&d| run_detector(&features.x_sim, &features.provider_ids, d, p))
        .collect()
}

/// Per-detector rankings fused by instant-runoff voting.
pub fn fuse_subspace_rankings(scores: &[DetectorScores]) -> Result<(RankList, Vec<RankList>, FusionTrace)> {
    if scores.len() != DETECTORS.len() {
        return Err(Error::Input(format!("expected 5 detector score sets, got {}", scores.len())));
    }
    let mut ids: Vec<&String> = scores[0].provider_ids.iter().collect();
    ids.sort();
    for s in &scores[1..] {
        let mut other: Vec<&String> = s.provider_ids.iter().collect();
        other.sort();
        if other != ids {
            return Err(Error::Input(format!(
                "{} covers a different provider set than {}",
                s.detector.as_str(),
                scores[0].detector.as_str()
            )));
        }
    }
    let lists = scores.iter().map(DetectorScores::ranking).collect::<Result<Vec<_>>>()?;
    let (fused, trace) = irv_aggregate(&lists, IrvOptions::default())?;
    Ok((fused.with_source(Source::Subspace), lists, trace))
}

/// Explains one provider's score from `scores` with a surrogate fitted on
/// all providers.
pub fn shap_explain(
    features: &IcdFeatureMatrix,
    scores: &DetectorScores,
    provider_id: &str,
    top_k: usize,
    dollars: &IcdDollarMap,
    ridge: f64,
) -> Result<ShapExplanation> {
    let row = features
        .provider_ids
        .iter()
        .position(|p| p == provider_id)
        .ok_or_else(|| Error::UnknownProvider(provider_id.to_string()))?;
    let score = scores
        .score_of(provider_id)
        .ok_or_else(|| Error::UnknownProvider(provider_id.to_string()))?;
    let y: Vec<f64> = features
        .provider_ids
        .iter()
        .map(|p| scores.score_of(p).ok_or_else(|| Error::UnknownProvider(p.clone())))
        .collect::<Result<_>>()?;
    let surrogate = LinearSurrogate::fit(&features.x_sim, &y, ridge)?;
    Ok(explain_row(
        &surrogate,
        &features.codes,
        &features.x_sim.row(row).to_vec(),
        provider_id,
        scores.detector.as_str(),
        score,
        top_k,
        dollars,
    ))
}

pub fn write_scores(path: &Path, s: &DetectorScores) -> Result<()> {
    io::write_rows(
        path,
        &["provider_id", "score"],
        s.provider_ids
            .iter()
            .zip(&s.scores)
            .map(|(p, &v)| vec![p.clone(), io::fmt_f64(v)]),
    )
}

pub fn read_scores(path: &Path, detector: Source) -> Result<DetectorScores> {
    let (_, rows) = io::read_records(path)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut scores = Vec::with_capacity(rows.len());
    for r in &rows {
        ids.push(r.get(0).unwrap_or_default().to_string());
        let v = r.get(1).unwrap_or_default();
        scores.push(
            v.parse()
                .map_err(|_| Error::Input(format!("{}: bad score `{v}`", path.display())))?,
        );
    }
    Ok(DetectorScores {
        detector,
        provider_ids: ids,
        scores,
        seed: 0,
        hyperparameters: BTreeMap::new(),
    })
}
