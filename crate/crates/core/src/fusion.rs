//! Instant-runoff rank fusion.
//!
//! Each output position is decided by an election among the candidates not
//! yet placed. Every list votes for its highest remaining candidate; a strict
//! majority of the votes cast wins, otherwise the weakest candidate is
//! eliminated for this position only and the affected lists fall through to
//! their next choice.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::rank::{RankList, Source};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrvOptions {
    /// Keep candidates eliminated at one position out of later positions
    /// until only eliminated candidates remain.
    pub global_elimination: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTally {
    /// Votes per candidate still in contention, by id; zero-vote candidates
    /// included.
    pub tallies: BTreeMap<String, usize>,
    pub cast: usize,
    pub winner: Option<String>,
    pub eliminated: Vec<String>,
    pub tie_break: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionTrace {
    pub position: usize,
    pub winner: String,
    /// Candidates barred at the start of this position by global elimination.
    pub carried_eliminations: Vec<String>,
    pub rounds: Vec<RoundTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionTrace {
    pub schema_version: u32,
    pub sources: Vec<Source>,
    pub options: IrvOptions,
    pub positions: Vec<PositionTrace>,
}

struct Election<'a> {
    lists: Vec<Vec<&'a str>>,
    mean_rank: HashMap<&'a str, f64>,
}

impl<'a> Election<'a> {
    fn new(lists: &'a [RankList]) -> Result<Self> {
        if lists.is_empty() {
            return Err(Error::Input("no rank lists to fuse".into()));
        }
        let lists: Vec<Vec<&str>> = lists.iter().map(|l| l.ids().collect()).collect();
        let mut sums: HashMap<&str, (f64, usize)> = HashMap::new();
        for l in &lists {
            for (i, id) in l.iter().enumerate() {
                let e = sums.entry(id).or_default();
                e.0 += (i + 1) as f64;
                e.1 += 1;
            }
        }
        if sums.is_empty() {
            return Err(Error::Input("rank lists are all empty".into()));
        }
        let mean_rank = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
        Ok(Self { lists, mean_rank })
    }

    fn candidates(&self) -> BTreeSet<&'a str> {
        self.mean_rank.keys().copied().collect()
    }

    /// Tally for candidates in `open`; lists with no open candidate abstain.
    fn tally(&self, open: &BTreeSet<&'a str>) -> (BTreeMap<&'a str, usize>, usize) {
        let mut t: BTreeMap<&str, usize> = open.iter().map(|&c| (c, 0)).collect();
        let mut cast = 0;
        for l in &self.lists {
            if let Some(&c) = l.iter().find(|c| open.contains(*c)) {
                *t.get_mut(c).unwrap() += 1;
                cast += 1;
            }
        }
        (t, cast)
    }

    /// Ordering used to pick the weakest: fewer votes, worse mean rank,
    /// larger id.
    fn weaker(&self, a: (&str, usize), b: (&str, usize)) -> std::cmp::Ordering {
        a.1.cmp(&b.1)
            .then(self.mean_rank[b.0].total_cmp(&self.mean_rank[a.0]))
            .then(b.0.cmp(a.0))
    }

    /// One election among `open`, recording every round.
    fn elect(&self, mut open: BTreeSet<&'a str>) -> (&'a str, Vec<RoundTally>, BTreeSet<&'a str>) {
        let mut rounds = Vec::new();
        let mut eliminated = BTreeSet::new();
        loop {
            let (t, cast) = self.tally(&open);
            let tallies = t.iter().map(|(k, &v)| (k.to_string(), v)).collect();
            if let Some((&w, _)) = t.iter().find(|(_, &v)| 2 * v > cast) {
                rounds.push(RoundTally {
                    tallies,
                    cast,
                    winner: Some(w.to_string()),
                    eliminated: vec![],
                    tie_break: None,
                });
                return (w, rounds, eliminated);
            }
            // Zero-vote candidates cannot affect any tally, so removing them
            // together equals removing them one at a time.
            let zeros: Vec<&str> = t.iter().filter(|(_, &v)| v == 0).map(|(&k, _)| k).collect();
            let (out, tie_break) = if !zeros.is_empty() {
                (zeros, None)
            } else {
                let mut by: Vec<(&str, usize)> = t.iter().map(|(&k, &v)| (k, v)).collect();
                by.sort_by(|a, b| self.weaker(*a, *b));
                let loser = by[0];
                let tie = by
                    .get(1)
                    .filter(|n| n.1 == loser.1)
                    .map(|n| {
                        let (ml, mn) = (self.mean_rank[loser.0], self.mean_rank[n.0]);
                        if ml != mn {
                            format!("{} eliminated over {} by mean rank {ml:.4} vs {mn:.4}", loser.0, n.0)
                        } else {
                            format!("{} eliminated over {} by id", loser.0, n.0)
                        }
                    });
                (vec![loser.0], tie)
            };
            for c in &out {
                open.remove(c);
                eliminated.insert(*c);
            }
            rounds.push(RoundTally {
                tallies,
                cast,
                winner: None,
                eliminated: out.iter().map(|s| s.to_string()).collect(),
                tie_break,
            });
        }
    }
}

/// Fuses `lists` into one ranking over the union of their supports.
pub fn irv_aggregate(lists: &[RankList], opts: IrvOptions) -> Result<(RankList, FusionTrace)> {
    let e = Election::new(lists)?;
    let mut remaining = e.candidates();
    let mut barred: BTreeSet<&str> = BTreeSet::new();
    let mut out = Vec::with_capacity(remaining.len());
    let mut positions = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        if opts.global_elimination && remaining.iter().all(|c| barred.contains(c)) {
            barred.clear();
        }
        let open: BTreeSet<&str> = remaining.difference(&barred).copied().collect();
        let carried = remaining.intersection(&barred).map(|s| s.to_string()).collect();
        let (w, rounds, elim) = e.elect(open);
        if opts.global_elimination {
            barred.extend(elim);
        }
        remaining.remove(w);
        out.push(w.to_string());
        positions.push(PositionTrace {
            position: out.len(),
            winner: w.to_string(),
            carried_eliminations: carried,
            rounds,
        });
    }
    let trace = FusionTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        sources: lists.iter().map(|l| l.source).collect(),
        options: opts,
        positions,
    };
    Ok((RankList::from_ids(Source::Final, out)?, trace))
}

impl FusionTrace {
    /// Recomputes every recorded tally from `lists` and the recorded
    /// eliminations, returning the ranking the trace implies.
    pub fn replay(&self, lists: &[RankList]) -> Result<RankList> {
        let e = Election::new(lists)?;
        let mut remaining = e.candidates();
        let mismatch = |pos: usize, what: &str| {
            Err(Error::Consistency(format!("fusion trace position {pos}: {what}")))
        };
        let mut out = Vec::new();
        for p in &self.positions {
            let mut open: BTreeSet<&str> = remaining.clone();
            for c in &p.carried_eliminations {
                open.remove(c.as_str());
            }
            for (k, r) in p.rounds.iter().enumerate() {
                let (t, cast) = e.tally(&open);
                let t: BTreeMap<String, usize> = t.iter().map(|(k, &v)| (k.to_string(), v)).collect();
                if t != r.tallies || cast != r.cast {
                    return mismatch(p.position, &format!("round {} tally differs", k + 1));
                }
                match &r.winner {
                    Some(w) => {
                        if 2 * t.get(w).copied().unwrap_or(0) <= cast || k + 1 != p.rounds.len() || *w != p.winner {
                            return mismatch(p.position, "winner lacks a majority");
                        }
                    }
                    None => {
                        if r.eliminated.is_empty() || t.values().any(|&v| 2 * v > cast) {
                            return mismatch(p.position, "elimination despite a majority");
                        }
                        let min = *t.values().min().unwrap();
                        for c in &r.eliminated {
                            if t.get(c) != Some(&min) && t.get(c) != Some(&0) {
                                return mismatch(p.position, &format!("{c} was not among the weakest"));
                            }
                            open.remove(c.as_str());
                        }
                    }
                }
            }
            if !remaining.remove(p.winner.as_str()) {
                return mismatch(p.position, "winner already placed");
            }
            out.push(p.winner.clone());
        }
        if !remaining.is_empty() {
            return Err(Error::Consistency("fusion trace does not place every candidate".into()));
        }
        RankList::from_ids(Source::Final, out)
    }
}

/// Detector outputs entering the final fusion.
#[derive(Debug, Clone)]
pub struct FusionInputs {
    pub regression: RankList,
    /// Fused subspace ranking; reported as context, not voted.
    pub subspace: RankList,
    pub peer_mdc: RankList,
    pub peer_chronic: RankList,
    pub subspace_components: Vec<RankList>,
}

impl FusionInputs {
    /// The eight voting lists: regression, five subspace detectors, two
    /// peer bases.
    pub fn voting_lists(&self) -> Result<Vec<RankList>> {
        let mut lists = vec![self.regression.clone()];
        lists.extend(self.subspace_components.iter().cloned());
        lists.push(self.peer_mdc.clone());
        lists.push(self.peer_chronic.clone());
        let mut seen = BTreeSet::new();
        for l in &lists {
            if !seen.insert(l.source) {
                return Err(Error::Input(format!("duplicate rank source {}", l.source.as_str())));
            }
        }
        if lists.len() != 8 {
            return Err(Error::Input(format!("expected 8 voting lists, got {}", lists.len())));
        }
        Ok(lists)
    }
}

pub fn fuse_all(inputs: &FusionInputs, opts: IrvOptions) -> Result<(RankList, FusionTrace)> {
    irv_aggregate(&inputs.voting_lists()?, opts)
}

/// `rank, provider_id`, then the provider's rank in each context list
/// (empty when absent).
pub fn write_final(path: &Path, fused: &RankList, context: &[&RankList]) -> Result<()> {
    let mut header = vec!["rank".to_string(), "provider_id".to_string()];
    header.extend(context.iter().map(|l| format!("rank_{}", l.source.as_str())));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_rows(
        path,
        &header,
        fused.ids().enumerate().map(|(i, id)| {
            let mut row = vec![(i + 1).to_string(), id.to_string()];
            row.extend(context.iter().map(|l| l.position(id).map(|p| p.to_string()).unwrap_or_default()));
            row
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lists(orders: &[&str]) -> Vec<RankList> {
        orders.iter()
            .enumerate()
            .map(|(i, s)| RankList::from_ids(Source::ALL[i % Source::ALL.len()], s.chars().map(String::from)).unwrap())
            .collect()
    }

    fn order(r: &RankList) -> String {
        r.ids().collect()
    }

    #[test]
    fn three_list_trace() {
        let ls = lists(&["ABC", "ACB", "BAC"]);
        let (r, t) = irv_aggregate(&ls, IrvOptions::default()).unwrap();
        assert_eq!(order(&r), "ABC");
        assert_eq!(t.positions[0].rounds[0].tallies["A"], 2);
        assert_eq!(t.positions[1].rounds[0].tallies["B"], 2);
        assert_eq!(t.replay(&ls).unwrap(), r);
    }

    #[test]
    fn elimination_transfers_votes() {
        let ls = lists(&["AB", "AB", "BA", "BA", "CAB"]);
        let (r, t) = irv_aggregate(&ls, IrvOptions::default()).unwrap();
        assert_eq!(r.ids().next(), Some("A"));
        let p = &t.positions[0];
        assert_eq!(p.rounds[0].eliminated, ["C"]);
        assert_eq!(p.rounds[1].tallies["A"], 3);
        assert_eq!(p.rounds[1].winner.as_deref(), Some("A"));
    }

    #[test]
    fn identical_lists_pass_through() {
        let ls = lists(&["DCBA", "DCBA", "DCBA"]);
        assert_eq!(order(&irv_aggregate(&ls, IrvOptions::default()).unwrap().0), "DCBA");
    }

    #[test]
    fn partial_lists_abstain() {
        let ls = lists(&["AB", "C", "CB"]);
        let (r, t) = irv_aggregate(&ls, IrvOptions::default()).unwrap();
        assert_eq!(order(&r), "CAB");
        // after C is placed the second list is exhausted
        assert_eq!(t.positions[1].rounds[0].cast, 2);
    }

    #[test]
    fn tampered_trace_rejected() {
        let ls = lists(&["ABC", "BCA", "CAB", "ABC"]);
        let (_, mut t) = irv_aggregate(&ls, IrvOptions::default()).unwrap();
        t.positions[0].winner = "B".into();
        assert!(t.replay(&ls).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(irv_aggregate(&[], IrvOptions::default()).is_err());
    }

    #[test]
    fn global_elimination_places_everyone() {
        let ls = lists(&["ABCD", "BCDA", "CDAB", "ABDC", "DBCA"]);
        let (r, t) = irv_aggregate(&ls, IrvOptions { global_elimination: true }).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(t.replay(&ls).unwrap(), r);
    }
}
