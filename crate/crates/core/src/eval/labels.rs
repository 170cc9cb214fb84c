use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;
use crate::synth::ProviderInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Planted,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub positives: BTreeSet<String>,
    pub provenance: Provenance,
}

impl LabelSet {
    pub fn new<I: IntoIterator<Item = String>>(ids: I, provenance: Provenance) -> Self {
        Self {
            positives: ids.into_iter().collect(),
            provenance,
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positives.contains(id)
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewKind {
    /// Single token-subset match awaiting confirmation.
    Candidate,
    /// Several providers match; never accepted automatically.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub label: String,
    pub provider_id: String,
    pub provider_name: String,
    pub kind: ReviewKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatch {
    pub labels: LabelSet,
    /// `(label, provider)` accepted by exact match.
    pub exact: Vec<(String, String)>,
    pub review: Vec<ReviewItem>,
    pub unmatched: Vec<String>,
}

fn name_tokens(s: &str) -> BTreeSet<String> {
    s.split(|c: char| c.is_whitespace() || c == ',' || c == '.')
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(str::to_lowercase)
        .collect()
}

fn normalized(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Offline name matching of external label names against provider names.
///
/// Exact case-insensitive matches are accepted; otherwise every provider
/// whose name contains all label tokens except "hospital" is listed for
/// review. `accepted` holds `(label, provider_id)` pairs confirmed in a
/// previous review and is merged for single candidates only.
pub fn match_labels(names: &[String], providers: &[ProviderInfo], accepted: &[(String, String)]) -> LabelMatch {
    let mut by_name: BTreeMap<String, Vec<&ProviderInfo>> = BTreeMap::new();
    for p in providers {
        by_name.entry(normalized(&p.name)).or_default().push(p);
    }
    let provider_tokens: Vec<BTreeSet<String>> = providers.iter().map(|p| name_tokens(&p.name)).collect();
    let accepted: BTreeSet<(&str, &str)> = accepted.iter().map(|(l, p)| (l.as_str(), p.as_str())).collect();
    let mut positives = BTreeSet::new();
    let mut exact = Vec::new();
    let mut review = Vec::new();
    let mut unmatched = Vec::new();
    for label in names {
        let item = |p: &ProviderInfo, kind| ReviewItem {
            label: label.clone(),
            provider_id: p.provider_id.clone(),
            provider_name: p.name.clone(),
            kind,
        };
        let hits = by_name.get(&normalized(label)).map(Vec::as_slice).unwrap_or(&[]);
        match hits {
            [p] => {
                positives.insert(p.provider_id.clone());
                exact.push((label.clone(), p.provider_id.clone()));
                continue;
            }
            [] => {}
            many => {
                review.extend(many.iter().map(|p| item(p, ReviewKind::Ambiguous)));
                continue;
            }
        }
        let mut want = name_tokens(label);
        want.remove("hospital");
        let cands: Vec<&ProviderInfo> = if want.is_empty() {
            vec![]
        } else {
            providers
                .iter()
                .zip(&provider_tokens)
                .filter(|(_, t)| want.is_subset(t))
                .map(|(p, _)| p)
                .collect()
        };
        match cands.as_slice() {
            [] => unmatched.push(label.clone()),
            [p] => {
                if accepted.contains(&(label.as_str(), p.provider_id.as_str())) {
                    positives.insert(p.provider_id.clone());
                }
                review.push(item(p, ReviewKind::Candidate));
            }
            many => review.extend(many.iter().map(|p| item(p, ReviewKind::Ambiguous))),
        }
    }
    LabelMatch {
        labels: LabelSet::new(positives, Provenance::External),
        exact,
        review,
        unmatched,
    }
}

pub fn write_review(path: &Path, items: &[ReviewItem]) -> Result<()> {
    io::write_rows(
        path,
        &["label", "provider_id", "provider_name", "kind"],
        items.iter().map(|r| {
            vec![
                r.label.clone(),
                r.provider_id.clone(),
                r.provider_name.clone(),
                match r.kind {
                    ReviewKind::Candidate => "candidate".into(),
                    ReviewKind::Ambiguous => "ambiguous".into(),
                },
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov(id: &str, name: &str) -> ProviderInfo {
        ProviderInfo {
            provider_id: id.into(),
            name: name.into(),
            state: "S01".into(),
        }
    }

    #[test]
    fn exact_review_and_no_match() {
        let ps = vec![prov("1", "St Mary Hospital"), prov("2", "St Mary Medical Center"), prov("3", "Mercy Clinic")];
        let m = match_labels(&["st mary hospital".into(), "Grace Hospital".into()], &ps, &[]);
        assert_eq!(m.labels.positives, BTreeSet::from(["1".to_string()]));
        assert!(m.review.is_empty());
        assert_eq!(m.unmatched, ["Grace Hospital"]);

        let ps = vec![prov("2", "St Mary Medical Center"), prov("3", "Mercy Clinic")];
        let m = match_labels(&["St Mary Hospital".into()], &ps, &[]);
        assert!(m.labels.is_empty());
        assert_eq!(m.review[0].provider_id, "2");
        assert_eq!(m.review[0].kind, ReviewKind::Candidate);
        let m = match_labels(&["St Mary Hospital".into()], &ps, &[("St Mary Hospital".into(), "2".into())]);
        assert!(m.labels.contains("2"));
    }

    #[test]
    fn ambiguous_never_accepted() {
        let ps = vec![prov("1", "Mercy General"), prov("2", "Mercy Regional")];
        let m = match_labels(&["Mercy Hospital".into()], &ps, &[("Mercy Hospital".into(), "1".into())]);
        assert!(m.labels.is_empty());
        assert_eq!(m.review.len(), 2);
        assert!(m.review.iter().all(|r| r.kind == ReviewKind::Ambiguous));
    }
}
