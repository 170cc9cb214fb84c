use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::RankList;
use crate::synth::ProviderCovariates;

pub const UNKNOWN: &str = "unknown";
const NUMERIC_BINS: usize = 10;

/// One bucket of a covariate histogram, top quantile vs all providers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    pub covariate: String,
    pub bucket: String,
    pub outlier_share: f64,
    pub population_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub covariate: String,
    pub outlier_mean: Option<f64>,
    pub population_mean: Option<f64>,
    pub outlier_median: Option<f64>,
    pub population_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub quantile: f64,
    pub n_outliers: usize,
    pub n_providers: usize,
    pub rows: Vec<CovariateRow>,
    pub numeric: Vec<NumericSummary>,
}

impl Characterization {
    pub fn share(&self, covariate: &str, bucket: &str) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .find(|r| r.covariate == covariate && r.bucket == bucket)
            .map(|r| (r.outlier_share, r.population_share))
    }
}

fn shares(values: &[String]) -> BTreeMap<String, f64> {
    let mut m: BTreeMap<String, f64> = BTreeMap::new();
    for v in values {
        *m.entry(v.clone()).or_default() += 1.0;
    }
    let n = values.len().max(1) as f64;
    m.values_mut().for_each(|c| *c /= n);
    m
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Compares the top `quantile` of `ranking` with all ranked providers.
pub fn characterize_outliers(
    ranking: &RankList,
    covariates: &[ProviderCovariates],
    quantile: f64,
) -> Result<Characterization> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::Config(format!("quantile {quantile} outside (0, 1]")));
    }
    if ranking.is_empty() {
        return Err(Error::Precondition("empty ranking".into()));
    }
    let by_id: HashMap<&str, &ProviderCovariates> =
        covariates.iter().map(|c| (c.provider_id.as_str(), c)).collect();
    let ids: Vec<&str> = ranking.ids().collect();
    let n = ids.len();
    let k = ((quantile * n as f64).ceil() as usize).clamp(1, n);
    let cov = |id: &str| by_id.get(id).copied();

    type Cat = fn(&ProviderCovariates) -> Option<String>;
    let categorical: [(&str, Cat); 4] = [
        ("rating", |c| c.rating.map(|r| r.to_string())),
        ("ownership", |c| c.ownership.clone()),
        ("location", |c| c.urban.map(|u| if u { "urban".into() } else { "rural".into() })),
        ("state", |c| c.state.clone()),
    ];
    let mut rows = Vec::new();
    for (name, f) in categorical {
        let vals: Vec<String> = ids
            .iter()
            .map(|id| cov(id).and_then(f).unwrap_or_else(|| UNKNOWN.to_string()))
            .collect();
        let top = shares(&vals[..k]);
        let all = shares(&vals);
        for (bucket, &pop) in &all {
            rows.push(CovariateRow {
                covariate: name.to_string(),
                bucket: bucket.clone(),
                outlier_share: top.get(bucket).copied().unwrap_or(0.0),
                population_share: pop,
            });
        }
    }

    type Num = fn(&ProviderCovariates) -> Option<f64>;
    let numeric_fields: [(&str, Num); 2] = [
        ("avg_length_of_stay", |c| c.avg_length_of_stay),
        ("n_unique_patients", |c| c.n_unique_patients.map(|v| v as f64)),
    ];
    let mut numeric = Vec::new();
    for (name, f) in numeric_fields {
        let vals: Vec<Option<f64>> = ids.iter().map(|id| cov(id).and_then(f)).collect();
        let known: Vec<f64> = vals.iter().flatten().copied().collect();
        let top_known: Vec<f64> = vals[..k].iter().flatten().copied().collect();
        let (lo, hi) = known
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let width = if hi > lo { (hi - lo) / NUMERIC_BINS as f64 } else { 1.0 };
        let bucket = |v: Option<f64>| match v {
            None => UNKNOWN.to_string(),
            Some(v) => {
                let b = (((v - lo) / width) as usize).min(NUMERIC_BINS - 1);
                format!("[{:.2},{:.2})", lo + b as f64 * width, lo + (b + 1) as f64 * width)
            }
        };
        let labels: Vec<String> = vals.iter().map(|&v| bucket(v)).collect();
        let top = shares(&labels[..k]);
        let all = shares(&labels);
        // numeric order, unknown last
        let mut keys: Vec<(Option<usize>, &String)> = all
            .keys()
            .map(|b| {
                let idx = labels.iter().zip(&vals).find(|(l, _)| *l == b).and_then(|(_, v)| {
                    v.map(|v| (((v - lo) / width) as usize).min(NUMERIC_BINS - 1))
                });
                (idx, b)
            })
            .collect();
        keys.sort_by_key(|(i, _)| i.unwrap_or(usize::MAX));
        for (_, b) in keys {
            rows.push(CovariateRow {
                covariate: name.to_string(),
                bucket: b.clone(),
                outlier_share: top.get(b).copied().unwrap_or(0.0),
                population_share: all[b],
            });
        }
        numeric.push(NumericSummary {
            covariate: name.to_string(),
            outlier_mean: mean(&top_known),
            population_mean: mean(&known),
            outlier_median: median(&mut top_known.clone()),
            population_median: median(&mut known.clone()),
        });
    }
    Ok(Characterization {
        quantile,
        n_outliers: k,
        n_providers: n,
        rows,
        numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::Source;

    fn cov(id: &str, own: Option<&str>, los: Option<f64>) -> ProviderCovariates {
        ProviderCovariates {
            provider_id: id.into(),
            rating: Some(3),
            ownership: own.map(Into::into),
            urban: Some(true),
            state: Some("S01".into()),
            avg_length_of_stay: los,
            n_unique_patients: Some(20),
        }
    }

    #[test]
    fn full_quantile_matches_population_and_masses_sum_to_one() {
        let ids = ["a", "b", "c", "d"];
        let r = RankList::from_ids(Source::Final, ids).unwrap();
        let cs = vec![
            cov("a", Some("private"), Some(4.0)),
            cov("b", None, Some(5.0)),
            cov("c", Some("public"), None),
            cov("d", Some("private"), Some(6.5)),
        ];
        let ch = characterize_outliers(&r, &cs, 1.0).unwrap();
        for row in &ch.rows {
            assert_eq!(row.outlier_share, row.population_share);
        }
        let mut totals: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for row in &ch.rows {
            let t = totals.entry(&row.covariate).or_default();
            t.0 += row.outlier_share;
            t.1 += row.population_share;
        }
        for (_, (a, b)) in totals {
            assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
        }
        assert_eq!(ch.share("ownership", UNKNOWN), Some((0.25, 0.25)));

        let ch = characterize_outliers(&r, &cs, 0.25).unwrap();
        assert_eq!(ch.n_outliers, 1);
        assert_eq!(ch.share("ownership", "private"), Some((1.0, 0.5)));
    }
}
