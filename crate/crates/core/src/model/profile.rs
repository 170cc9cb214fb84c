use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BeneficiaryTable, DrgMdcMap, InpatientClaim};
use crate::error::{Error, Result};

/// Extra chronic-profile coordinate for treated patients with no flagged
/// condition, so the profile is a distribution for every provider.
pub const NO_CHRONIC_CONDITION: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub provider_id: String,
    pub n_claims: usize,
    pub n_beneficiaries: usize,
    /// Raw code counts, each code counted once per claim.
    pub icd_counts: BTreeMap<String, u32>,
    /// Dense over [`ProfileSet::mdc_codes`].
    pub mdc_dist: Vec<f64>,
    /// Dense over [`ProfileSet::chronic_names`].
    pub chronic_dist: Vec<f64>,
    pub drg_dist: BTreeMap<String, f64>,
}

/// All provider profiles plus the coordinate labels of the dense vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub mdc_codes: Vec<String>,
    pub chronic_names: Vec<String>,
    /// Sorted by provider id.
    pub profiles: Vec<ProviderProfile>,
}

impl ProfileSet {
    pub fn get(&self, provider_id: &str) -> Option<&ProviderProfile> {
        self.profiles
            .binary_search_by(|p| p.provider_id.as_str().cmp(provider_id))
            .ok()
            .map(|i| &self.profiles[i])
    }

    /// Sorted union of all DRG codes used by any provider.
    pub fn drg_index(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.profiles.iter().flat_map(|p| p.drg_dist.keys()).collect();
        set.into_iter().cloned().collect()
    }

    /// Sorted union of all ICD codes used by any provider.
    pub fn icd_index(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .profiles
            .iter()
            .flat_map(|p| p.icd_counts.keys())
            .collect();
        set.into_iter().cloned().collect()
    }
}

fn normalize(counts: &mut [f64]) {
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        counts.iter_mut().for_each(|c| *c /= total);
    }
}

/// Builds one profile per provider from filtered target-year claims.
pub fn build_provider_profiles(
    target_claims: &[InpatientClaim],
    drg_to_mdc: &DrgMdcMap,
    beneficiaries: &BeneficiaryTable,
) -> Result<ProfileSet> {
    let unmapped: BTreeSet<&str> = target_claims
        .iter()
        .filter(|c| drg_to_mdc.mdc(&c.drg).is_none())
        .map(|c| c.drg.as_str())
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::Config(format!(
            "DRG codes without MDC mapping: {}",
            unmapped.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }

    let mdc_codes = drg_to_mdc.mdc_codes();
    let mdc_pos: BTreeMap<&str, usize> = mdc_codes
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_str(), i))
        .collect();
    let mut chronic_names = beneficiaries.conditions.clone();
    chronic_names.push(NO_CHRONIC_CONDITION.to_string());

    let mut by_provider: BTreeMap<&str, Vec<&InpatientClaim>> = BTreeMap::new();
    for c in target_claims {
        by_provider.entry(&c.provider_id).or_default().push(c);
    }
    let groups: Vec<(&str, Vec<&InpatientClaim>)> = by_provider.into_iter().collect();

    let profiles = groups
        .par_iter()
        .map(|(provider, claims)| {
            let mut icd_counts: BTreeMap<String, u32> = BTreeMap::new();
            let mut mdc = vec![0.0; mdc_codes.len()];
            let mut drg: BTreeMap<String, f64> = BTreeMap::new();
            let mut benes: BTreeSet<&str> = BTreeSet::new();
            for c in claims {
                for code in c.unique_codes() {
                    *icd_counts.entry(code.to_string()).or_default() += 1;
                }
                let m = drg_to_mdc.mdc(&c.drg).expect("checked above");
                mdc[mdc_pos[m]] += 1.0;
                *drg.entry(c.drg.clone()).or_default() += 1.0;
                benes.insert(&c.beneficiary_id);
            }
            let n = claims.len() as f64;
            drg.values_mut().for_each(|v| *v /= n);
            normalize(&mut mdc);

            let mut chronic = vec![0.0; chronic_names.len()];
            for b in &benes {
                let Some(info) = beneficiaries.get(b) else {
                    continue;
                };
                let mut any = false;
                for (slot, &flag) in chronic.iter_mut().zip(&info.chronic) {
                    if flag {
                        *slot += 1.0;
                        any = true;
                    }
                }
                if !any {
                    *chronic.last_mut().unwrap() += 1.0;
                }
            }
            if chronic.iter().all(|&c| c == 0.0) {
                *chronic.last_mut().unwrap() = 1.0;
            }
            normalize(&mut chronic);

            ProviderProfile {
                provider_id: provider.to_string(),
                n_claims: claims.len(),
                n_beneficiaries: benes.len(),
                icd_counts,
                mdc_dist: mdc,
                chronic_dist: chronic,
                drg_dist: drg,
            }
        })
        .collect();

    Ok(ProfileSet {
        mdc_codes,
        chronic_names,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Beneficiary;

    fn c(id: &str, provider: &str, bene: &str, drg: &str, codes: &[&str]) -> InpatientClaim {
        InpatientClaim {
            claim_id: id.into(),
            beneficiary_id: bene.into(),
            provider_id: provider.into(),
            year: 2017,
            drg: drg.into(),
            icd_codes: codes.iter().map(|s| s.to_string()).collect(),
            total_payment: 1.0,
            disproportionate_amount: 0.0,
            education_amount: 0.0,
            outlier_amount: 0.0,
            base_payment: Some(1.0),
        }
    }

    fn mapping() -> DrgMdcMap {
        DrgMdcMap(
            [("a", "M"), ("b", "M"), ("z", "N")]
                .into_iter()
                .map(|(d, m)| (d.to_string(), m.to_string()))
                .collect(),
        )
    }

    fn benes() -> BeneficiaryTable {
        let row = |id: &str, flags: Vec<bool>| {
            (
                id.to_string(),
                Beneficiary {
                    beneficiary_id: id.into(),
                    birth_year: 1930,
                    zip3: "100".into(),
                    chronic: flags,
                },
            )
        };
        BeneficiaryTable {
            conditions: vec!["chf".into(), "diabetes".into()],
            rows: [
                row("B1", vec![true, true]),
                row("B2", vec![false, true]),
                row("B3", vec![false, false]),
            ]
            .into_iter()
            .collect(),
        }
    }

    #[test]
    fn hand_normalization() {
        let claims = [
            c("1", "P", "B1", "a", &["x", "x", "y"]),
            c("2", "P", "B2", "a", &["x"]),
            c("3", "P", "B3", "b", &["y"]),
        ];
        let set = build_provider_profiles(&claims, &mapping(), &benes()).unwrap();
        let p = &set.profiles[0];
        assert_eq!(set.mdc_codes, ["M", "N"]);
        assert_eq!(p.mdc_dist, vec![1.0, 0.0]);
        assert!((p.drg_dist["a"] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.drg_dist["b"] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.icd_counts["x"], 2);
        assert_eq!(p.icd_counts["y"], 2);
        assert_eq!(p.n_beneficiaries, 3);
        // chf 1, diabetes 2, none 1
        assert_eq!(set.chronic_names, ["chf", "diabetes", "none"]);
        assert_eq!(p.chronic_dist, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn single_claim_point_masses() {
        let set =
            build_provider_profiles(&[c("1", "P", "B3", "z", &["q"])], &mapping(), &benes()).unwrap();
        let p = &set.profiles[0];
        assert_eq!(p.mdc_dist, vec![0.0, 1.0]);
        assert_eq!(p.drg_dist["z"], 1.0);
        assert_eq!(p.chronic_dist, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn permutation_invariant() {
        let claims = vec![
            c("1", "P", "B1", "a", &["x"]),
            c("2", "Q", "B2", "b", &["y"]),
            c("3", "P", "B3", "z", &["y"]),
            c("4", "Q", "B1", "a", &["x", "y"]),
        ];
        let a = build_provider_profiles(&claims, &mapping(), &benes()).unwrap();
        let mut rev = claims.clone();
        rev.reverse();
        let b = build_provider_profiles(&rev, &mapping(), &benes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.profiles.iter().map(|p| p.n_claims).sum::<usize>(), 4);
    }

    #[test]
    fn unmapped_drg_is_config_error() {
        let err = build_provider_profiles(&[c("1", "P", "B1", "nope", &[])], &mapping(), &benes())
            .unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("nope")));
    }
}
