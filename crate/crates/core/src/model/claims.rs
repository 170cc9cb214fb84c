use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::InpatientClaim;
use crate::error::{Error, Result};

/// Providers must serve at least this many distinct beneficiaries.
pub const MIN_BENEFICIARIES: usize = 11;

/// Total payment minus the three adjustment components. Stores the result on
/// the claim.
pub fn compute_base_payment(claim: &mut InpatientClaim) -> Result<f64> {
    let base = claim.total_payment - claim.adjustments().iter().sum::<f64>();
    if !(base >= 0.0) {
        return Err(Error::Consistency(format!(
            "claim {} has negative base payment {base}; it should have been filtered",
            claim.claim_id
        )));
    }
    claim.base_payment = Some(base);
    Ok(base)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<InpatientClaim>,
    pub dropped: usize,
}

/// Drops claims where any adjustment component exceeds the total payment or
/// where the adjustments together exceed it. Equality is kept. Order is
/// preserved.
pub fn filter_claims<I>(claims: I) -> FilterOutcome
where
    I: IntoIterator<Item = InpatientClaim>,
{
    let mut out = FilterOutcome::default();
    for c in claims {
        let adj = c.adjustments();
        let component_ok = adj.iter().all(|&a| a <= c.total_payment);
        let sum_ok = adj.iter().sum::<f64>() <= c.total_payment;
        if component_ok && sum_ok {
            out.kept.push(c);
        } else {
            out.dropped += 1;
        }
    }
    out
}

/// Removes every claim of providers with fewer than `min_beneficiaries`
/// distinct beneficiaries.
pub fn filter_small_providers(
    claims: Vec<InpatientClaim>,
    min_beneficiaries: usize,
) -> Vec<InpatientClaim> {
    let mut benes: HashMap<&str, HashSet<&str>> = HashMap::new();
    for c in &claims {
        benes
            .entry(c.provider_id.as_str())
            .or_default()
            .insert(c.beneficiary_id.as_str());
    }
    let keep: HashSet<String> = benes
        .into_iter()
        .filter(|(_, b)| b.len() >= min_beneficiaries)
        .map(|(p, _)| p.to_string())
        .collect();
    claims
        .into_iter()
        .filter(|c| keep.contains(&c.provider_id))
        .collect()
}

/// Average base payment per DRG.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DrgCostTable(pub BTreeMap<String, f64>);

impl DrgCostTable {
    pub fn cost(&self, drg: &str) -> Option<f64> {
        self.0.get(drg).copied()
    }
}

pub fn compute_drg_costs(claims: &[InpatientClaim]) -> DrgCostTable {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for c in claims {
        let e = acc.entry(c.drg.clone()).or_insert((0.0, 0));
        e.0 += c.base();
        e.1 += 1;
    }
    DrgCostTable(
        acc.into_iter()
            .map(|(drg, (sum, n))| (drg, sum / n as f64))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn claim(id: &str, total: f64, adj: (f64, f64, f64)) -> InpatientClaim {
        InpatientClaim {
            claim_id: id.into(),
            beneficiary_id: "B1".into(),
            provider_id: "P1".into(),
            year: 2017,
            drg: "D1".into(),
            icd_codes: vec![],
            total_payment: total,
            disproportionate_amount: adj.0,
            education_amount: adj.1,
            outlier_amount: adj.2,
            base_payment: None,
        }
    }

    #[test]
    fn base_payment_arithmetic() {
        let mut c = claim("c", 1000.0, (200.0, 50.0, 50.0));
        assert_eq!(compute_base_payment(&mut c).unwrap(), 700.0);
        assert_eq!(c.base_payment, Some(700.0));
        let mut c = claim("c", 500.0, (0.0, 0.0, 0.0));
        assert_eq!(compute_base_payment(&mut c).unwrap(), 500.0);
    }

    #[test]
    fn negative_base_is_consistency_error() {
        let mut c = claim("c", 500.0, (600.0, 0.0, 0.0));
        assert!(matches!(
            compute_base_payment(&mut c),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn filter_boundaries() {
        let out = filter_claims(vec![
            claim("a", 500.0, (600.0, 0.0, 0.0)),
            claim("b", 500.0, (500.0, 0.0, 0.0)),
        ]);
        assert_eq!(out.dropped, 1);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].claim_id, "b");

        let out = filter_claims(vec![
            claim("1", 10.0, (1.0, 0.0, 0.0)),
            claim("2", 10.0, (0.0, 11.0, 0.0)),
            claim("3", 10.0, (0.0, 0.0, 2.0)),
            claim("4", 10.0, (0.0, 0.0, 0.0)),
        ]);
        assert_eq!(out.dropped, 1);
        assert_eq!(
            out.kept.iter().map(|c| c.claim_id.as_str()).collect::<Vec<_>>(),
            ["1", "3", "4"]
        );
    }

    #[test]
    fn filter_is_idempotent() {
        let once = filter_claims(vec![
            claim("1", 10.0, (1.0, 0.0, 0.0)),
            claim("2", 10.0, (0.0, 11.0, 0.0)),
        ]);
        let twice = filter_claims(once.kept.clone());
        assert_eq!(twice.kept, once.kept);
        assert_eq!(twice.dropped, 0);
    }

    fn provider_claims(provider: &str, n_benes: usize) -> Vec<InpatientClaim> {
        (0..n_benes)
            .map(|i| {
                let mut c = claim(&format!("{provider}-{i}"), 100.0, (0.0, 0.0, 0.0));
                c.provider_id = provider.into();
                c.beneficiary_id = format!("B{i}");
                c
            })
            .collect()
    }

    #[test]
    fn small_provider_boundary() {
        let mut claims = provider_claims("P10", 10);
        claims.extend(provider_claims("P11", 11));
        // repeat visits do not count as extra beneficiaries
        claims.extend(provider_claims("P10", 3));
        let kept = filter_small_providers(claims, MIN_BENEFICIARIES);
        assert_eq!(kept.len(), 11);
        assert!(kept.iter().all(|c| c.provider_id == "P11"));
        assert!(filter_small_providers(vec![], MIN_BENEFICIARIES).is_empty());
    }

    #[test]
    fn drg_costs_are_means() {
        let mut a = claim("a", 100.0, (0.0, 0.0, 0.0));
        let mut b = claim("b", 300.0, (0.0, 0.0, 0.0));
        let mut c = claim("c", 50.0, (0.0, 0.0, 0.0));
        c.drg = "D2".into();
        for x in [&mut a, &mut b, &mut c] {
            compute_base_payment(x).unwrap();
        }
        let t = compute_drg_costs(&[a, b, c]);
        assert_eq!(t.cost("D1"), Some(200.0));
        assert_eq!(t.cost("D2"), Some(50.0));
        assert_eq!(t.0.len(), 2);
    }
}
