//! Peer-group excess-spending detector.
//!
//! Providers are compared only with peers that treat a similar case mix,
//! measured by Hellinger similarity of their MDC or chronic-condition
//! profiles. A provider's excess is the dollar-weighted gap between its DRG
//! distribution and the similarity- and volume-weighted peer distribution.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{DrgCostTable, ProfileSet, ProviderProfile};
use crate::rank::{RankEntry, RankList, Source};

pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Mdc,
    Chronic,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Mdc, Basis::Chronic];

    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Mdc => "mdc",
            Basis::Chronic => "chronic",
        }
    }

    pub fn source(self) -> Source {
        match self {
            Basis::Mdc => Source::PeerMdc,
            Basis::Chronic => Source::PeerChronic,
        }
    }

    pub fn profile(self, p: &ProviderProfile) -> &[f64] {
        match self {
            Basis::Mdc => &p.mdc_dist,
            Basis::Chronic => &p.chronic_dist,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeerParams {
    pub tau: f64,
    pub min_peers: usize,
    pub top_k: usize,
}

impl Default for PeerParams {
    fn default() -> Self {
        Self {
            tau: 0.8,
            min_peers: 5,
            top_k: 50,
        }
    }
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Input(format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Input(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// `(1/√2)‖√p − √q‖₂`.
pub fn hellinger_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Input(format!("distribution lengths differ: {} vs {}", p.len(), q.len())));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(hellinger_unchecked(p, q))
}

fn hellinger_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    (s / 2.0).sqrt().min(1.0)
}

/// Pairwise `1 − d` over all providers, rows in profile order.
pub fn similarity_matrix(profiles: &ProfileSet, basis: Basis) -> Result<Vec<Vec<f64>>> {
    for p in &profiles.profiles {
        check_distribution(basis.profile(p), &format!("{} profile of {}", basis.as_str(), p.provider_id))?;
    }
    let ps = &profiles.profiles;
    Ok(ps
        .par_iter()
        .map(|a| {
            ps.iter()
                .map(|b| 1.0 - hellinger_unchecked(basis.profile(a), basis.profile(b)))
                .collect()
        })
        .collect())
}

/// Counts of off-diagonal pairwise similarities in `bins` equal bins of [0, 1].
pub fn similarity_histogram(sim: &[Vec<f64>], bins: usize) -> Vec<(f64, f64, usize)> {
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    for (i, row) in sim.iter().enumerate() {
        for &s in &row[i + 1..] {
            counts[((s * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (b as f64 / bins as f64, (b + 1) as f64 / bins as f64, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerGroup {
    pub provider_id: String,
    pub basis: Basis,
    /// `(peer, similarity)`, most similar first, ties by id.
    pub peers: Vec<(String, f64)>,
    pub tau: f64,
    /// False when the provider has fewer than `min_peers` peers.
    pub ranked: bool,
}

pub fn build_peer_groups(profiles: &ProfileSet, basis: Basis, params: PeerParams) -> Result<Vec<PeerGroup>> {
    let sim = similarity_matrix(profiles, basis)?;
    Ok(groups_from_similarity(profiles, basis, &sim, params))
}

pub fn groups_from_similarity(profiles: &ProfileSet, basis: Basis, sim: &[Vec<f64>], params: PeerParams) -> Vec<PeerGroup> {
    let ps = &profiles.profiles;
    ps.iter()
        .enumerate()
        .map(|(j, p)| {
            let mut peers: Vec<(String, f64)> = (0..ps.len())
                .filter(|&k| k != j && sim[j][k] >= params.tau)
                .map(|k| (ps[k].provider_id.clone(), sim[j][k]))
                .collect();
            peers.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            PeerGroup {
                provider_id: p.provider_id.clone(),
                basis,
                ranked: peers.len() >= params.min_peers,
                peers,
                tau: params.tau,
            }
        })
        .collect()
}

/// `q = Σ n_k (1 − d_jk) p_k / Z` over the group's peers, on `drg_index`.
pub fn peer_summary(group: &PeerGroup, profiles: &ProfileSet, drg_index: &[String]) -> Result<Vec<f64>> {
    if group.peers.is_empty() {
        return Err(Error::Precondition(format!("{} has no peers", group.provider_id)));
    }
    let pos: BTreeMap<&str, usize> = drg_index.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    let mut q = vec![0.0; drg_index.len()];
    let mut z = 0.0;
    for (k, s) in &group.peers {
        let prof = profiles.get(k).ok_or_else(|| Error::UnknownProvider(k.clone()))?;
        let w = prof.n_claims as f64 * s;
        z += w;
        for (drg, f) in &prof.drg_dist {
            let i = *pos
                .get(drg.as_str())
                .ok_or_else(|| Error::Input(format!("DRG {drg} missing from the DRG index")))?;
            q[i] += w * f;
        }
    }
    if !(z > 0.0) {
        return Err(Error::Consistency(format!("zero peer weight for {}", group.provider_id)));
    }
    q.iter_mut().for_each(|v| *v /= z);
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrgDiscrepancy {
    pub drg: String,
    pub p_freq: f64,
    pub q_freq: f64,
    pub cost: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    pub provider_id: String,
    pub basis: Basis,
    pub excess_per_claim: f64,
    /// Largest `|contribution|` first, ties by DRG.
    pub drg_discrepancies: Vec<DrgDiscrepancy>,
}

/// `Σ_c cost(c)(p_c − q_c)`, summed in discrepancy order so the total equals
/// the sum of the listed contributions exactly.
pub fn excess_spending(
    provider_id: &str,
    basis: Basis,
    p: &[f64],
    q: &[f64],
    drg_index: &[String],
    costs: &DrgCostTable,
) -> Result<ExcessReport> {
    if p.len() != drg_index.len() || q.len() != drg_index.len() {
        return Err(Error::Input("p and q must be aligned to the DRG index".into()));
    }
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    for (i, drg) in drg_index.iter().enumerate() {
        if p[i] == q[i] {
            continue;
        }
        match costs.cost(drg) {
            Some(cost) => rows.push(DrgDiscrepancy {
                drg: drg.clone(),
                p_freq: p[i],
                q_freq: q[i],
                cost,
                contribution: cost * (p[i] - q[i]),
            }),
            None => missing.push(drg.as_str()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!("no average cost for DRG(s) {}", missing.join(", "))));
    }
    rows.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()).then(a.drg.cmp(&b.drg)));
    Ok(ExcessReport {
        provider_id: provider_id.to_string(),
        basis,
        excess_per_claim: rows.iter().map(|r| r.contribution).sum(),
        drg_discrepancies: rows,
    })
}

/// Ranking over providers with enough peers, plus the ones without.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerRanking {
    pub list: RankList,
    /// In id order.
    pub unranked: Vec<String>,
}

pub fn rank_by_excess(basis: Basis, reports: &[ExcessReport], groups: &[PeerGroup]) -> Result<PeerRanking> {
    let ranked = reports
        .iter()
        .filter(|r| r.basis == basis)
        .map(|r| (r.provider_id.clone(), r.excess_per_claim))
        .collect();
    let list = RankList::from_scores(basis.source(), ranked)?;
    let mut unranked: Vec<String> = groups
        .iter()
        .filter(|g| g.basis == basis && !g.ranked)
        .map(|g| g.provider_id.clone())
        .collect();
    unranked.sort();
    Ok(PeerRanking { list, unranked })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveExplanation {
    pub provider_id: String,
    pub basis: Basis,
    pub nearest_peer: Option<(String, f64)>,
    pub n_peers: usize,
    pub excess_per_claim: f64,
    pub top: Vec<DrgDiscrepancy>,
    /// Sum of contributions beyond the top `k`.
    pub remainder: f64,
}

pub fn contrastive_explain(report: &ExcessReport, group: Option<&PeerGroup>, top_k: usize) -> ContrastiveExplanation {
    let k = top_k.min(report.drg_discrepancies.len());
    ContrastiveExplanation {
        provider_id: report.provider_id.clone(),
        basis: report.basis,
        nearest_peer: group.and_then(|g| g.peers.first().cloned()),
        n_peers: group.map_or(0, |g| g.peers.len()),
        excess_per_claim: report.excess_per_claim,
        top: report.drg_discrepancies[..k].to_vec(),
        remainder: report.drg_discrepancies[k..].iter().map(|r| r.contribution).sum(),
    }
}

/// Everything the detector produces for one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerAnalysis {
    pub basis: Basis,
    pub groups: Vec<PeerGroup>,
    pub reports: Vec<ExcessReport>,
    pub ranking: PeerRanking,
    pub histogram: Vec<(f64, f64, usize)>,
}

impl PeerAnalysis {
    pub fn report(&self, provider_id: &str) -> Option<&ExcessReport> {
        self.reports.iter().find(|r| r.provider_id == provider_id)
    }

    pub fn group(&self, provider_id: &str) -> Option<&PeerGroup> {
        self.groups.iter().find(|g| g.provider_id == provider_id)
    }
}

pub fn run_peer(profiles: &ProfileSet, costs: &DrgCostTable, basis: Basis, params: PeerParams) -> Result<PeerAnalysis> {
    let sim = similarity_matrix(profiles, basis)?;
    let groups = groups_from_similarity(profiles, basis, &sim, params);
    let drg_index = profiles.drg_index();
    let pos: BTreeMap<&str, usize> = drg_index.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    let reports = groups
        .par_iter()
        .filter(|g| g.ranked)
        .map(|g| {
            let prof = profiles.get(&g.provider_id).expect("group built from profiles");
            let mut p = vec![0.0; drg_index.len()];
            for (d, f) in &prof.drg_dist {
                p[pos[d.as_str()]] = *f;
            }
            let q = peer_summary(g, profiles, &drg_index)?;
            excess_spending(&g.provider_id, basis, &p, &q, &drg_index, costs)
        })
        .collect::<Result<Vec<_>>>()?;
    let ranking = rank_by_excess(basis, &reports, &groups)?;
    Ok(PeerAnalysis {
        basis,
        groups,
        reports,
        ranking,
        histogram: similarity_histogram(&sim, 20),
    })
}

pub const STATUS_RANKED: &str = "ranked";
pub const STATUS_INSUFFICIENT: &str = "insufficient_peers";

/// `rank, provider_id, excess_usd, status`; unranked providers follow the
/// ranked ones with an empty excess.
pub fn write_peer_rank(path: &Path, r: &PeerRanking) -> Result<()> {
    let ranked = r.list.entries().iter().map(|e| (e.provider_id.clone(), e.score, STATUS_RANKED));
    let unranked = r.unranked.iter().map(|p| (p.clone(), None, STATUS_INSUFFICIENT));
    io::write_rows(
        path,
        &["rank", "provider_id", "excess_usd", "status"],
        ranked.chain(unranked).enumerate().map(|(i, (p, s, st))| {
            vec![(i + 1).to_string(), p, s.map(io::fmt_f64).unwrap_or_default(), st.to_string()]
        }),
    )
}

pub fn read_peer_rank(path: &Path, basis: Basis) -> Result<PeerRanking> {
    let (_, rows) = io::read_records(path)?;
    let mut entries = Vec::new();
    let mut unranked = Vec::new();
    for r in &rows {
        let p = r.get(1).unwrap_or_default().to_string();
        match r.get(3).unwrap_or_default() {
            STATUS_RANKED => {
                let v = r.get(2).unwrap_or_default();
                let score = v
                    .parse()
                    .map_err(|_| Error::Input(format!("{}: bad excess `{v}`", path.display())))?;
                entries.push(RankEntry {
                    provider_id: p,
                    score: Some(score),
                });
            }
            STATUS_INSUFFICIENT => unranked.push(p),
            other => return Err(Error::Input(format!("{}: unknown status `{other}`", path.display()))),
        }
    }
    Ok(PeerRanking {
        list: RankList::new(basis.source(), entries)?,
        unranked,
    })
}
