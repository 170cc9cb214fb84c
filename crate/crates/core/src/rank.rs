//! Ordered provider lists produced by every detector.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detector that produced a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Regression,
    Sod,
    Iforest,
    Rrcf,
    Loda,
    Rshash,
    Subspace,
    PeerMdc,
    PeerChronic,
    Final,
}

impl Source {
    pub const ALL: [Source; 10] = [
        Source::Regression,
        Source::Sod,
        Source::Iforest,
        Source::Rrcf,
        Source::Loda,
        Source::Rshash,
        Source::Subspace,
        Source::PeerMdc,
        Source::PeerChronic,
        Source::Final,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Regression => "regression",
            Source::Sod => "sod",
            Source::Iforest => "iforest",
            Source::Rrcf => "rrcf",
            Source::Loda => "loda",
            Source::Rshash => "rshash",
            Source::Subspace => "subspace",
            Source::PeerMdc => "peer_mdc",
            Source::PeerChronic => "peer_chronic",
            Source::Final => "final",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown ranking source `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub provider_id: String,
    pub score: Option<f64>,
}

/// Providers in decreasing order of suspiciousness. Entries are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankList {
    pub source: Source,
    entries: Vec<RankEntry>,
}

impl RankList {
    pub fn new(source: Source, entries: Vec<RankEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.provider_id.as_str()) {
                return Err(Error::Input(format!(
                    "provider {} appears twice in {source} ranking",
                    e.provider_id
                )));
            }
        }
        Ok(Self { source, entries })
    }

    pub fn from_ids<I, S>(source: Source, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            source,
            ids.into_iter()
                .map(|id| RankEntry {
                    provider_id: id.into(),
                    score: None,
                })
                .collect(),
        )
    }

    /// Sorts `(id, score)` pairs by score descending, ties by id ascending.
    /// Non-finite scores are an input error.
    pub fn from_scores(source: Source, mut scored: Vec<(String, f64)>) -> Result<Self> {
        if let Some((id, s)) = scored.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::Input(format!("non-finite {source} score {s} for {id}")));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::new(
            source,
            scored
                .into_iter()
                .map(|(provider_id, s)| RankEntry {
                    provider_id,
                    score: Some(s),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.provider_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> HashSet<&str> {
        self.ids().collect()
    }

    /// 1-based position of `id`, if present.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.provider_id == id)
            .map(|p| p + 1)
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }
}
