use std::collections::{BTreeMap, BTreeSet};

use super::{BeneficiaryTable, HistoryVisit, InpatientClaim, PatientHistory};
use crate::error::{Error, Result};

/// Length of the medical-history window preceding the target year.
pub const HISTORY_YEARS: i32 = 5;

/// Minimum age, in the target year, for a beneficiary to enter the
/// regression population (a full history window is observable from 65).
pub const MIN_AGE: i32 = 70;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryBuild {
    pub histories: Vec<PatientHistory>,
    pub excluded_under_age: usize,
    /// Beneficiaries seen in target claims but absent from the table.
    pub missing_beneficiaries: usize,
}

/// One history record per target-year beneficiary aged 70 or older.
///
/// Visits outside `[target_year - 5, target_year - 1]` are ignored. Codes are
/// deduplicated within a visit and then counted across visits. Output is
/// ordered by beneficiary id.
pub fn build_patient_histories(
    target_claims: &[InpatientClaim],
    history_visits: &[HistoryVisit],
    beneficiaries: &BeneficiaryTable,
    target_year: i32,
) -> Result<HistoryBuild> {
    let mut spend: BTreeMap<&str, f64> = BTreeMap::new();
    let mut visits: BTreeMap<&str, BTreeMap<String, u32>> = BTreeMap::new();
    for c in target_claims {
        if c.year != target_year {
            return Err(Error::Input(format!(
                "claim {} is from {} but target year is {target_year}",
                c.claim_id, c.year
            )));
        }
        *spend.entry(&c.beneficiary_id).or_default() += c.base();
        *visits
            .entry(&c.beneficiary_id)
            .or_default()
            .entry(c.provider_id.clone())
            .or_default() += 1;
    }

    let window = (target_year - HISTORY_YEARS)..target_year;
    let mut counts: BTreeMap<&str, BTreeMap<(super::VisitType, String), u32>> = BTreeMap::new();
    for v in history_visits {
        if !window.contains(&v.year) || !spend.contains_key(v.beneficiary_id.as_str()) {
            continue;
        }
        let per = counts.entry(&v.beneficiary_id).or_default();
        let unique: BTreeSet<&str> = v.icd_codes.iter().map(String::as_str).collect();
        for code in unique {
            *per.entry((v.visit_type, code.to_string())).or_default() += 1;
        }
    }

    let mut out = HistoryBuild::default();
    for (bene, total) in spend {
        let Some(info) = beneficiaries.get(bene) else {
            out.missing_beneficiaries += 1;
            continue;
        };
        let age = target_year - info.birth_year;
        if age < MIN_AGE {
            out.excluded_under_age += 1;
            continue;
        }
        let provider_visits = visits.remove(bene).unwrap_or_default();
        // every included patient has at least one target-year provider
        debug_assert!(!provider_visits.is_empty());
        out.histories.push(PatientHistory {
            beneficiary_id: bene.to_string(),
            age_at_target_year: age,
            history_counts: counts.remove(bene).unwrap_or_default(),
            chronic_flags: info.chronic.clone(),
            zip3: info.zip3.clone(),
            target_spend: total,
            provider_visits,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Beneficiary, VisitType};

    fn table(rows: &[(&str, i32)]) -> BeneficiaryTable {
        BeneficiaryTable {
            conditions: vec!["diabetes".into()],
            rows: rows
                .iter()
                .map(|&(id, by)| {
                    (
                        id.to_string(),
                        Beneficiary {
                            beneficiary_id: id.into(),
                            birth_year: by,
                            zip3: "123".into(),
                            chronic: vec![true],
                        },
                    )
                })
                .collect(),
        }
    }

    fn target(id: &str, bene: &str, provider: &str, base: f64) -> InpatientClaim {
        InpatientClaim {
            claim_id: id.into(),
            beneficiary_id: bene.into(),
            provider_id: provider.into(),
            year: 2017,
            drg: "D".into(),
            icd_codes: vec!["X".into()],
            total_payment: base,
            disproportionate_amount: 0.0,
            education_amount: 0.0,
            outlier_amount: 0.0,
            base_payment: Some(base),
        }
    }

    fn visit(bene: &str, year: i32, vt: VisitType, codes: &[&str]) -> HistoryVisit {
        HistoryVisit {
            beneficiary_id: bene.into(),
            year,
            visit_type: vt,
            icd_codes: codes.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn under_seventy_excluded() {
        let b = build_patient_histories(
            &[target("c1", "young", "P", 10.0), target("c2", "old", "P", 10.0)],
            &[],
            &table(&[("young", 1948), ("old", 1947)]),
            2017,
        )
        .unwrap();
        assert_eq!(b.excluded_under_age, 1);
        assert_eq!(b.histories.len(), 1);
        assert_eq!(b.histories[0].beneficiary_id, "old");
        assert_eq!(b.histories[0].age_at_target_year, 70);
    }

    #[test]
    fn target_spend_sums_and_visits_count() {
        let b = build_patient_histories(
            &[
                target("c1", "B", "P1", 400.0),
                target("c2", "B", "P1", 600.0),
                target("c3", "B", "P2", 1.0),
            ],
            &[],
            &table(&[("B", 1930)]),
            2017,
        )
        .unwrap();
        let h = &b.histories[0];
        assert_eq!(h.target_spend, 1001.0);
        assert_eq!(h.provider_visits["P1"], 2);
        assert_eq!(h.provider_visits["P2"], 1);
        assert!(h.history_counts.is_empty(), "zero history is retained");
    }

    #[test]
    fn history_counts_aggregate_across_years() {
        let visits = [
            visit("B", 2013, VisitType::Physician, &["I10", "I10", "E11"]),
            visit("B", 2015, VisitType::Physician, &["I10"]),
            visit("B", 2014, VisitType::Outpatient, &["I10"]),
            // outside the window
            visit("B", 2011, VisitType::Physician, &["I10"]),
            visit("B", 2017, VisitType::Physician, &["I10"]),
        ];
        let b = build_patient_histories(
            &[target("c1", "B", "P", 1.0)],
            &visits,
            &table(&[("B", 1930)]),
            2017,
        )
        .unwrap();
        let h = &b.histories[0].history_counts;
        assert_eq!(h[&(VisitType::Physician, "I10".to_string())], 2);
        assert_eq!(h[&(VisitType::Physician, "E11".to_string())], 1);
        assert_eq!(h[&(VisitType::Outpatient, "I10".to_string())], 1);
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn missing_beneficiary_counted() {
        let b = build_patient_histories(
            &[target("c1", "ghost", "P", 1.0)],
            &[],
            &table(&[]),
            2017,
        )
        .unwrap();
        assert_eq!(b.missing_beneficiaries, 1);
        assert!(b.histories.is_empty());
    }
}
