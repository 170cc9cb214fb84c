use serde::{Deserialize, Serialize};

use super::labels::LabelSet;
use crate::error::{Error, Result};
use crate::rank::RankList;

/// Fixed prefix sizes reported alongside the fraction grid.
pub const LIFT_AT: [usize; 3] = [10, 50, 100];
pub const LIFT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// `(recall, precision)` after each prefix.
    pub points: Vec<(f64, f64)>,
    pub average_precision: f64,
    pub n_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftCurve {
    /// `(fraction, lift)` on the fraction grid.
    pub points: Vec<(f64, f64)>,
    /// `(k, lift@k)` for the fixed prefixes that fit in the ranking.
    pub at_k: Vec<(usize, f64)>,
    pub base_rate: f64,
}

fn hits(ranking: &RankList, labels: &LabelSet) -> Result<(Vec<bool>, usize)> {
    let rel: Vec<bool> = ranking.ids().map(|id| labels.contains(id)).collect();
    let n_pos = rel.iter().filter(|&&r| r).count();
    if n_pos == 0 {
        return Err(Error::Precondition("no labeled positive appears in the ranking".into()));
    }
    Ok((rel, n_pos))
}

/// Precision and recall at every prefix, and
/// `AP = Σ_k precision@k · rel_k / n_positives`.
pub fn pr_curve(ranking: &RankList, labels: &LabelSet) -> Result<PrCurve> {
    let (rel, n_pos) = hits(ranking, labels)?;
    let mut tp = 0usize;
    let mut ap = 0.0;
    let mut points = Vec::with_capacity(rel.len());
    for (i, &r) in rel.iter().enumerate() {
        if r {
            tp += 1;
            ap += tp as f64 / (i + 1) as f64;
        }
        points.push((tp as f64 / n_pos as f64, tp as f64 / (i + 1) as f64));
    }
    Ok(PrCurve {
        points,
        average_precision: ap / n_pos as f64,
        n_positives: n_pos,
    })
}

/// `lift@k = (hits_k / k) / (n_pos / n)`, evaluated as an integer ratio.
pub fn lift_at(rel: &[bool], k: usize) -> f64 {
    let n = rel.len();
    let n_pos = rel.iter().filter(|&&r| r).count();
    let h = rel[..k].iter().filter(|&&r| r).count();
    (h * n) as f64 / (k * n_pos) as f64
}

pub fn lift_curve(ranking: &RankList, labels: &LabelSet) -> Result<LiftCurve> {
    let (rel, n_pos) = hits(ranking, labels)?;
    let n = rel.len();
    let points = (1..=LIFT_GRID)
        .map(|i| {
            let f = i as f64 / LIFT_GRID as f64;
            let k = ((f * n as f64).ceil() as usize).clamp(1, n);
            (f, lift_at(&rel, k))
        })
        .collect();
    let at_k = LIFT_AT.iter().filter(|&&k| k <= n).map(|&k| (k, lift_at(&rel, k))).collect();
    Ok(LiftCurve {
        points,
        at_k,
        base_rate: n_pos as f64 / n as f64,
    })
}

/// Lift in the top `fraction` of the ranking.
pub fn lift_at_fraction(ranking: &RankList, labels: &LabelSet, fraction: f64) -> Result<f64> {
    let (rel, _) = hits(ranking, labels)?;
    let n = rel.len();
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    Ok(lift_at(&rel, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Provenance;
    use crate::rank::Source;

    fn setup(order: &[&str], pos: &[&str]) -> (RankList, LabelSet) {
        (
            RankList::from_ids(Source::Final, order.iter().copied()).unwrap(),
            LabelSet::new(pos.iter().map(|s| s.to_string()), Provenance::Planted),
        )
    }

    #[test]
    fn hand_average_precision() {
        let (r, l) = setup(&["a", "b", "c"], &["a", "c"]);
        let pr = pr_curve(&r, &l).unwrap();
        assert!((pr.average_precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(pr.points.last().unwrap().0, 1.0);
        let (r, l) = setup(&["a", "c", "b"], &["a", "c"]);
        assert_eq!(pr_curve(&r, &l).unwrap().average_precision, 1.0);
    }

    #[test]
    fn perfect_lift_is_inverse_base_rate() {
        let ids: Vec<String> = (0..20).map(|i| format!("p{i:02}")).collect();
        let r = RankList::from_ids(Source::Final, ids.iter().cloned()).unwrap();
        let l = LabelSet::new(ids[..2].iter().cloned(), Provenance::Planted);
        let c = lift_curve(&r, &l).unwrap();
        assert_eq!(c.points[0].1, 10.0);
        assert_eq!(c.at_k, vec![(10, 2.0)]);
        assert_eq!(c.points.last().unwrap().1, 1.0);
    }

    #[test]
    fn zero_positives_rejected() {
        let (r, l) = setup(&["a", "b"], &["z"]);
        assert!(pr_curve(&r, &l).is_err());
        assert!(lift_curve(&r, &l).is_err());
    }
}
