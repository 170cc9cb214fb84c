use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{DrgCostTable, InpatientClaim};

/// What an ICD code typically costs: its most frequent DRG and that DRG's
/// average base price, with the price's percentile among all codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DollarContext {
    pub drg: String,
    pub avg_price: f64,
    /// Share (0–100) of mapped code prices at or below `avg_price`.
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcdDollarMap {
    mapped: BTreeMap<String, (String, f64)>,
    sorted_prices: Vec<f64>,
}

impl IcdDollarMap {
    /// Mode DRG per code over claims containing it; ties go to the cheaper
    /// DRG, then the smaller code.
    pub fn build(claims: &[InpatientClaim], costs: &DrgCostTable) -> Self {
        let mut counts: HashMap<&str, BTreeMap<&str, usize>> = HashMap::new();
        for c in claims {
            for code in c.unique_codes() {
                *counts.entry(code).or_default().entry(&c.drg).or_default() += 1;
            }
        }
        let price = |d: &str| costs.cost(d).unwrap_or(f64::INFINITY);
        let mapped: BTreeMap<String, (String, f64)> = counts
            .into_iter()
            .map(|(code, drgs)| {
                let (drg, _) = drgs
                    .iter()
                    .max_by(|a, b| {
                        a.1.cmp(b.1)
                            .then(price(b.0).total_cmp(&price(a.0)))
                            .then(b.0.cmp(a.0))
                    })
                    .expect("code seen at least once");
                (code.to_string(), (drg.to_string(), price(drg)))
            })
            .collect();
        let mut sorted_prices: Vec<f64> = mapped.values().map(|(_, p)| *p).collect();
        sorted_prices.sort_by(f64::total_cmp);
        Self { mapped, sorted_prices }
    }

    pub fn percentile(&self, price: f64) -> f64 {
        let at_or_below = self.sorted_prices.partition_point(|&p| p <= price);
        100.0 * at_or_below as f64 / self.sorted_prices.len().max(1) as f64
    }

    /// `None` marks a code that appears in no claim.
    pub fn context(&self, code: &str) -> Option<DollarContext> {
        self.mapped.get(code).map(|(drg, p)| DollarContext {
            drg: drg.clone(),
            avg_price: *p,
            percentile: self.percentile(*p),
        })
    }

    pub fn mapped_prices(&self) -> &[f64] {
        &self.sorted_prices
    }
}

pub fn icd_dollar_context(claims: &[InpatientClaim], costs: &DrgCostTable, code: &str) -> Option<DollarContext> {
    IcdDollarMap::build(claims, costs).context(code)
}
