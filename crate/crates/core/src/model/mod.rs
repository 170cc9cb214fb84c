//! Domain types shared by all detectors, plus claim filtering, patient
//! history assembly and provider profile construction.

mod claims;
mod history;
mod icd;
mod profile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use claims::{
    compute_base_payment, compute_drg_costs, filter_claims, filter_small_providers, DrgCostTable,
    FilterOutcome, MIN_BENEFICIARIES,
};
pub use history::{build_patient_histories, HistoryBuild, HISTORY_YEARS};
pub use icd::{IcdHierarchy, IcdLevel, IcdNode};
pub use profile::{build_provider_profiles, ProfileSet, ProviderProfile, NO_CHRONIC_CONDITION};

/// One inpatient hospitalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InpatientClaim {
    pub claim_id: String,
    pub beneficiary_id: String,
    pub provider_id: String,
    pub year: i32,
    pub drg: String,
    /// Diagnosis and procedure codes in claim order.
    pub icd_codes: Vec<String>,
    pub total_payment: f64,
    pub disproportionate_amount: f64,
    pub education_amount: f64,
    pub outlier_amount: f64,
    /// Set by [`compute_base_payment`].
    pub base_payment: Option<f64>,
}

impl InpatientClaim {
    pub fn adjustments(&self) -> [f64; 3] {
        [
            self.disproportionate_amount,
            self.education_amount,
            self.outlier_amount,
        ]
    }

    /// Base payment, computing it if ingestion has not stored it yet.
    pub fn base(&self) -> f64 {
        self.base_payment
            .unwrap_or_else(|| self.total_payment - self.adjustments().iter().sum::<f64>())
    }

    /// Codes with duplicates removed, first occurrence order.
    pub fn unique_codes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::with_capacity(self.icd_codes.len());
        for c in &self.icd_codes {
            if !out.contains(&c.as_str()) {
                out.push(c);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitType {
    Physician,
    Outpatient,
    Inpatient,
}

impl VisitType {
    pub fn as_str(self) -> &'static str {
        match self {
            VisitType::Physician => "physician",
            VisitType::Outpatient => "outpatient",
            VisitType::Inpatient => "inpatient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "physician" => Some(VisitType::Physician),
            "outpatient" => Some(VisitType::Outpatient),
            "inpatient" => Some(VisitType::Inpatient),
            _ => None,
        }
    }
}

/// A prior-year encounter used only to build medical history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryVisit {
    pub beneficiary_id: String,
    pub year: i32,
    pub visit_type: VisitType,
    pub icd_codes: Vec<String>,
}

impl HistoryVisit {
    pub fn from_claim(claim: &InpatientClaim) -> Self {
        Self {
            beneficiary_id: claim.beneficiary_id.clone(),
            year: claim.year,
            visit_type: VisitType::Inpatient,
            icd_codes: claim.icd_codes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beneficiary {
    pub beneficiary_id: String,
    pub birth_year: i32,
    pub zip3: String,
    /// Chronic-condition flags as reported the year before the target year,
    /// indexed like [`BeneficiaryTable::conditions`].
    pub chronic: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeneficiaryTable {
    pub conditions: Vec<String>,
    pub rows: BTreeMap<String, Beneficiary>,
}

impl BeneficiaryTable {
    pub fn get(&self, id: &str) -> Option<&Beneficiary> {
        self.rows.get(id)
    }
}

/// Per-beneficiary regression inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientHistory {
    pub beneficiary_id: String,
    pub age_at_target_year: i32,
    /// `(visit type, code)` → number of prior visits carrying the code.
    pub history_counts: BTreeMap<(VisitType, String), u32>,
    pub chronic_flags: Vec<bool>,
    pub zip3: String,
    /// Sum of base payments over target-year claims.
    pub target_spend: f64,
    /// Provider → number of target-year hospitalizations there.
    pub provider_visits: BTreeMap<String, u32>,
}

/// DRG → MDC lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DrgMdcMap(pub BTreeMap<String, String>);

impl DrgMdcMap {
    pub fn mdc(&self, drg: &str) -> Option<&str> {
        self.0.get(drg).map(String::as_str)
    }

    /// Sorted distinct MDC codes.
    pub fn mdc_codes(&self) -> Vec<String> {
        let mut v: Vec<String> = self.0.values().cloned().collect();
        v.sort();
        v.dedup();
        v
    }
}
