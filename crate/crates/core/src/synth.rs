//! Deterministic synthetic claims corpus with planted fraud.
//!
//! The generator mirrors the structure the detectors rely on: providers have
//! a latent service mix over MDCs, patients carry a latent illness severity
//! that drives both their history and the severity variant of their target
//! DRG, and DRGs come in low/high severity sibling pairs. Planted providers
//! deviate in one of three ways (see [`Archetype`]).
//!
//! Every entity draws from its own seeded stream and consumes the same random
//! numbers whether or not it is planted, so a planted provider with severity
//! zero is indistinguishable from an honest one.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{
    Beneficiary, BeneficiaryTable, DrgMdcMap, HistoryVisit, IcdLevel, IcdNode, InpatientClaim,
    VisitType,
};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    /// Shifts claims to the more expensive sibling DRG.
    Upcoder,
    /// Adds rarely used ICD codes that group to expensive DRGs.
    RareCoder,
    /// Inflates base payments for the same patients and DRGs.
    ExcessCost,
    /// Label from an external source, archetype unknown.
    External,
}

impl Archetype {
    pub const PLANTABLE: [Archetype; 3] =
        [Archetype::Upcoder, Archetype::RareCoder, Archetype::ExcessCost];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Upcoder => "upcoder",
            Archetype::RareCoder => "rare-coder",
            Archetype::ExcessCost => "excess-cost",
            Archetype::External => "external",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "upcoder" => Ok(Archetype::Upcoder),
            "rare-coder" => Ok(Archetype::RareCoder),
            "excess-cost" => Ok(Archetype::ExcessCost),
            "external" | "" => Ok(Archetype::External),
            other => Err(Error::Input(format!("unknown archetype `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedLabel {
    pub provider_id: String,
    pub archetype: Archetype,
    pub severity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderInfo {
    pub provider_id: String,
    pub name: String,
    pub state: String,
}

/// Public hospital characteristics, never used for detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderCovariates {
    pub provider_id: String,
    pub rating: Option<u8>,
    pub ownership: Option<String>,
    pub urban: Option<bool>,
    pub state: Option<String>,
    pub avg_length_of_stay: Option<f64>,
    pub n_unique_patients: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub n_providers: usize,
    pub n_beneficiaries: usize,
    /// Number of full (leaf) ICD codes.
    pub n_icd_codes: usize,
    pub n_drg_codes: usize,
    pub n_mdc: usize,
    pub n_chronic: usize,
    pub n_states: usize,
    pub history_start: i32,
    pub target_year: i32,
    pub fraud_rate: f64,
    pub archetypes: Vec<Archetype>,
    /// Additional planted providers that receive no label.
    pub unlabeled_fraud_rate: f64,
    /// Fraction of low-severity claims an upcoder moves to the sibling DRG.
    pub upcode_severity: f64,
    /// Fraction of a rare-coder's claims that receive an injected rare code.
    pub rare_code_severity: f64,
    /// Relative base-payment inflation of excess-cost providers.
    pub excess_cost_severity: f64,
    /// Log-scale standard deviation of per-claim payment noise.
    pub payment_dispersion: f64,
    /// Mean physician visits per patient-year at unit illness severity.
    pub visit_intensity: f64,
    /// Assign ownership "private" to every planted provider.
    pub fraud_private: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_providers: 200,
            n_beneficiaries: 5000,
            n_icd_codes: 240,
            n_drg_codes: 48,
            n_mdc: 8,
            n_chronic: 6,
            n_states: 6,
            history_start: 2012,
            target_year: 2017,
            fraud_rate: 0.05,
            archetypes: Archetype::PLANTABLE.to_vec(),
            unlabeled_fraud_rate: 0.0,
            upcode_severity: 0.7,
            rare_code_severity: 0.35,
            excess_cost_severity: 0.45,
            payment_dispersion: 0.12,
            visit_intensity: 2.0,
            fraud_private: false,
        }
    }
}

impl GenConfig {
    pub fn n_planted(&self) -> usize {
        (self.fraud_rate * self.n_providers as f64).round() as usize
    }

    pub fn n_unlabeled(&self) -> usize {
        (self.unlabeled_fraud_rate * self.n_providers as f64).round() as usize
    }

    pub fn severity(&self, a: Archetype) -> f64 {
        match a {
            Archetype::Upcoder => self.upcode_severity,
            Archetype::RareCoder => self.rare_code_severity,
            Archetype::ExcessCost => self.excess_cost_severity,
            Archetype::External => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [
            ("n_providers", self.n_providers),
            ("n_beneficiaries", self.n_beneficiaries),
            ("n_icd_codes", self.n_icd_codes),
            ("n_drg_codes", self.n_drg_codes),
            ("n_mdc", self.n_mdc),
            ("n_chronic", self.n_chronic),
            ("n_states", self.n_states),
        ] {
            if v < 1 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.fraud_rate) {
            return bad(format!("fraud_rate {} outside [0, 1]", self.fraud_rate));
        }
        if !(0.0..=1.0).contains(&self.unlabeled_fraud_rate) {
            return bad(format!(
                "unlabeled_fraud_rate {} outside [0, 1]",
                self.unlabeled_fraud_rate
            ));
        }
        if self.target_year <= self.history_start {
            return bad("target year must follow history_start".into());
        }
        if self.n_drg_codes < 2 * self.n_mdc {
            return bad("n_drg_codes must allow one low/high DRG pair per MDC".into());
        }
        if self.n_icd_codes < 3 * self.n_mdc {
            return bad("n_icd_codes must allow at least three codes per MDC".into());
        }
        for (name, v) in [
            ("upcode_severity", self.upcode_severity),
            ("rare_code_severity", self.rare_code_severity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.excess_cost_severity < 0.0 || self.payment_dispersion < 0.0 || self.visit_intensity < 0.0 {
            return bad("severities, dispersion and intensity must be non-negative".into());
        }
        if self.fraud_rate > 0.0 || self.unlabeled_fraud_rate > 0.0 {
            if self.archetypes.is_empty()
                || self.archetypes.iter().any(|a| *a == Archetype::External)
            {
                return bad("planting fraud requires at least one plantable archetype".into());
            }
            if self.fraud_rate > 0.0 && self.n_planted() < 1 {
                return bad(format!(
                    "fraud_rate {} plants no provider among {}",
                    self.fraud_rate, self.n_providers
                ));
            }
        }
        if self.n_planted() + self.n_unlabeled() > self.n_providers {
            return bad("more planted providers than providers".into());
        }
        Ok(())
    }
}

/// Everything the generator emits.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub config: GenConfig,
    /// Inpatient claims for the target year and the history window.
    pub claims: Vec<InpatientClaim>,
    /// Physician and outpatient history visits.
    pub visits: Vec<HistoryVisit>,
    pub beneficiaries: BeneficiaryTable,
    pub icd_nodes: Vec<IcdNode>,
    pub drg_mdc: DrgMdcMap,
    /// Configured list price per DRG.
    pub drg_prices: BTreeMap<String, f64>,
    /// `(low, high)` sibling DRG pairs.
    pub drg_siblings: Vec<(String, String)>,
    pub providers: Vec<ProviderInfo>,
    pub covariates: Vec<ProviderCovariates>,
    pub labels: Vec<PlantedLabel>,
    /// Planted providers without labels.
    pub unlabeled: Vec<PlantedLabel>,
}

impl Corpus {
    pub const FILES: [&'static str; 8] = [
        "claims.csv",
        "visits.csv",
        "beneficiaries.csv",
        "icd_hierarchy.csv",
        "drg_mdc.csv",
        "providers.csv",
        "covariates.csv",
        "labels.csv",
    ];

    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_claims(&dir.join("claims.csv"), &self.claims)?;
        io::write_visits(&dir.join("visits.csv"), &self.visits)?;
        io::write_beneficiaries(&dir.join("beneficiaries.csv"), &self.beneficiaries)?;
        io::write_icd_hierarchy(&dir.join("icd_hierarchy.csv"), &self.icd_nodes)?;
        io::write_drg_mdc(&dir.join("drg_mdc.csv"), &self.drg_mdc)?;
        io::write_providers(&dir.join("providers.csv"), &self.providers)?;
        io::write_covariates(&dir.join("covariates.csv"), &self.covariates)?;
        io::write_labels(&dir.join("labels.csv"), &self.labels)
    }

    /// All planted providers, labeled or not.
    pub fn planted(&self) -> impl Iterator<Item = &PlantedLabel> {
        self.labels.iter().chain(&self.unlabeled)
    }
}

const SYSTEMS: [&str; 12] = [
    "circulatory",
    "respiratory",
    "digestive",
    "nervous",
    "musculoskeletal",
    "renal",
    "endocrine",
    "hepatobiliary",
    "integumentary",
    "reproductive",
    "hematologic",
    "sensory",
];
const BLOCK_WORDS: [&str; 8] = [
    "chronic", "acute", "infectious", "degenerative", "congenital", "traumatic", "neoplastic",
    "inflammatory",
];
const MODIFIERS: [&str; 10] = [
    "mild", "moderate", "severe", "recurrent", "persistent", "unspecified", "localized",
    "generalized", "bilateral", "episodic",
];
const QUALIFIERS: [&str; 6] = [
    "uncomplicated", "with-exacerbation", "without-obstruction", "with-hemorrhage", "late-effect",
    "initial-encounter",
];
const RARE_WORDS: [&str; 6] = ["atypical", "idiopathic", "refractory", "fulminant", "malignant", "systemic"];
const CHRONIC: [&str; 10] = [
    "alzheimers", "diabetes", "chf", "copd", "ckd", "ischemic_heart", "depression", "cancer",
    "stroke", "arthritis",
];
const NAME_FIRST: [&str; 16] = [
    "St Mary", "Mercy", "Good Samaritan", "Riverside", "Lakeview", "Sacred Heart", "Memorial",
    "Valley", "Summit", "Baptist", "Methodist", "Providence", "St Luke", "St Joseph", "Grace",
    "Hillcrest",
];
const NAME_PLACE: [&str; 12] = [
    "Springfield", "Fairview", "Franklin", "Greenville", "Clinton", "Madison", "Georgetown",
    "Salem", "Bristol", "Dover", "Oakland", "Milton",
];
const NAME_SUFFIX: [&str; 4] = ["Hospital", "Medical Center", "Regional Hospital", "Community Hospital"];
const N_REGULAR_BLOCKS: usize = 4;
const ZIPS_PER_STATE: usize = 4;

fn chapter_letter(i: usize) -> String {
    let a = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        a.to_string()
    } else {
        format!("{a}{}", i / 26)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

struct Family {
    low: usize,
    high: usize,
}

struct Vocab {
    icd_nodes: Vec<IcdNode>,
    /// Regular leaf codes per chapter with their owning family (index into
    /// `families[chapter]`).
    regular: Vec<Vec<(String, usize)>>,
    rare: Vec<Vec<String>>,
    /// DRG families per MDC.
    families: Vec<Vec<Family>>,
    drg_codes: Vec<String>,
    drg_prices: Vec<f64>,
    /// Most expensive DRG per MDC, target of rare codes.
    rare_target: Vec<usize>,
    mdc_codes: Vec<String>,
}

fn build_vocab(cfg: &GenConfig) -> Vocab {
    let mut rng = seed::rng(cfg.seed, seed::tag("vocab"));
    let n_mdc = cfg.n_mdc;
    let mdc_codes: Vec<String> = (0..n_mdc).map(|m| format!("M{:02}", m + 1)).collect();

    // DRG families, at least one per MDC.
    let n_fam = cfg.n_drg_codes / 2;
    let mut families: Vec<Vec<Family>> = (0..n_mdc).map(|_| Vec::new()).collect();
    let mut drg_codes = Vec::new();
    let mut drg_prices = Vec::new();
    let base_price = LogNormal::new(7000f64.ln(), 0.3).unwrap();
    for f in 0..n_fam {
        let m = f % n_mdc;
        let low = base_price.sample(&mut rng);
        let high = low * rng.random_range(1.5..2.0);
        let li = drg_codes.len();
        drg_codes.push(format!("D{:03}", li + 1));
        drg_prices.push(cents(low));
        drg_codes.push(format!("D{:03}", li + 2));
        drg_prices.push(cents(high));
        families[m].push(Family { low: li, high: li + 1 });
    }
    let rare_target: Vec<usize> = families
        .iter()
        .map(|fams| {
            fams.iter()
                .map(|f| f.high)
                .max_by(|&a, &b| drg_prices[a].total_cmp(&drg_prices[b]))
                .unwrap()
        })
        .collect();

    // ICD hierarchy: chapter / block / full-code. Complication codes live
    // in a chapter of their own, one block per body system.
    let mut icd_nodes = Vec::new();
    let mut complication_nodes = Vec::new();
    let comp_letter = chapter_letter(n_mdc);
    let comp_chapter = format!("{comp_letter}00-{comp_letter}99");
    let mut regular = vec![Vec::new(); n_mdc];
    let mut rare = vec![Vec::new(); n_mdc];
    for c in 0..n_mdc {
        let letter = chapter_letter(c);
        let system = if c < SYSTEMS.len() {
            SYSTEMS[c].to_string()
        } else {
            format!("{}-{}", SYSTEMS[c % SYSTEMS.len()], c / SYSTEMS.len())
        };
        let chapter = format!("{letter}00-{letter}99");
        icd_nodes.push(IcdNode {
            code: chapter.clone(),
            parent: None,
            level: IcdLevel::Chapter,
            description: format!("Diseases of the {system} system"),
        });
        let n_codes = cfg.n_icd_codes / n_mdc + usize::from(c < cfg.n_icd_codes % n_mdc);
        let n_rare = (n_codes / 8).max(1);
        let n_regular = n_codes - n_rare;
        let blocks = N_REGULAR_BLOCKS.min(n_regular);
        for b in 0..blocks {
            let block = format!("{letter}{:02}", b + 1);
            let word = BLOCK_WORDS[(b + c) % BLOCK_WORDS.len()];
            icd_nodes.push(IcdNode {
                code: block.clone(),
                parent: Some(chapter.clone()),
                level: IcdLevel::Block,
                description: format!("{} {system} conditions", capitalize(word)),
            });
            let count = n_regular / blocks + usize::from(b < n_regular % blocks);
            for k in 0..count {
                let code = format!("{block}.{k}");
                icd_nodes.push(IcdNode {
                    code: code.clone(),
                    parent: Some(block.clone()),
                    level: IcdLevel::FullCode,
                    description: format!(
                        "{} {} {word}",
                        MODIFIERS[k % MODIFIERS.len()],
                        QUALIFIERS[(k / MODIFIERS.len() + b) % QUALIFIERS.len()]
                    ),
                });
                let fam = (b + k * blocks) % families[c].len();
                regular[c].push((code, fam));
            }
        }

        let block = format!("{comp_letter}{:02}", c + 1);
        let word = RARE_WORDS[c % RARE_WORDS.len()];
        complication_nodes.push(IcdNode {
            code: block.clone(),
            parent: Some(comp_chapter.clone()),
            level: IcdLevel::Block,
            description: format!("Unusual {word} {system} complications"),
        });
        for k in 0..n_rare {
            let code = format!("{block}.{k}");
            complication_nodes.push(IcdNode {
                code: code.clone(),
                parent: Some(block.clone()),
                level: IcdLevel::FullCode,
                description: format!(
                    "{} {} variant {}",
                    RARE_WORDS[(k + 1) % RARE_WORDS.len()],
                    QUALIFIERS[k % QUALIFIERS.len()],
                    k
                ),
            });
            rare[c].push(code);
        }
    }
    icd_nodes.push(IcdNode {
        code: comp_chapter,
        parent: None,
        level: IcdLevel::Chapter,
        description: "Complications of care".to_string(),
    });
    icd_nodes.extend(complication_nodes);

    Vocab {
        icd_nodes,
        regular,
        rare,
        families,
        drg_codes,
        drg_prices,
        rare_target,
        mdc_codes,
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

struct Provider {
    id: String,
    state: usize,
    zip_factor: f64,
    mdc_cdf: Vec<f64>,
    popularity: f64,
    disp_share: f64,
    educ_share: f64,
    /// Rotation that picks a provider-specific subset of rare codes.
    rare_offset: usize,
    kind: usize,
    fraud: Option<(Archetype, f64)>,
}

fn cdf(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn build_providers(cfg: &GenConfig) -> (Vec<Provider>, Vec<ProviderInfo>) {
    let mut rng = seed::rng(cfg.seed, seed::tag("providers"));
    let n_kinds = (cfg.n_mdc / 2).max(1);
    let mut names: Vec<String> = NAME_FIRST
        .iter()
        .flat_map(|f| {
            NAME_PLACE
                .iter()
                .flat_map(move |p| NAME_SUFFIX.iter().map(move |s| format!("{f} {p} {s}")))
        })
        .collect();
    names.shuffle(&mut rng);
    let mut providers = Vec::with_capacity(cfg.n_providers);
    let mut info = Vec::with_capacity(cfg.n_providers);
    for i in 0..cfg.n_providers {
        let kind = rng.random_range(0..n_kinds);
        let weights: Vec<f64> = (0..cfg.n_mdc)
            .map(|m| {
                let dominant = m / 2 == kind || (cfg.n_mdc == 1);
                let base = if dominant { 1.0 } else { 0.06 };
                base * rng.random_range(0.85..1.15)
            })
            .collect();
        let state = i % cfg.n_states;
        let teaching = rng.random_bool(0.3);
        let p = Provider {
            id: format!("P{:04}", i + 1),
            state,
            zip_factor: 1.0,
            mdc_cdf: cdf(&weights),
            popularity: rng.random_range(0.7..1.3),
            disp_share: if rng.random_bool(0.6) { rng.random_range(0.01..0.15) } else { 0.0 },
            educ_share: if teaching { rng.random_range(0.05..0.2) } else { 0.0 },
            rare_offset: rng.random_range(0..1000),
            kind,
            fraud: None,
        };
        let name = if i < names.len() {
            names[i].clone()
        } else {
            format!("{} {}", names[i % names.len()], i / names.len() + 1)
        };
        info.push(ProviderInfo {
            provider_id: p.id.clone(),
            name,
            state: format!("S{:02}", state + 1),
        });
        providers.push(p);
    }
    (providers, info)
}

fn zip3_of(state: usize, j: usize) -> String {
    format!("{:03}", 100 + state * ZIPS_PER_STATE + j)
}

/// Generates a complete corpus for `config`.
pub fn generate_corpus(config: &GenConfig) -> Result<Corpus> {
    config.validate()?;
    let cfg = config;
    let vocab = build_vocab(cfg);
    let (mut providers, provider_info) = build_providers(cfg);

    // Zip3 price factors (geographic variation absorbed by zip3 indicators).
    let mut zrng = seed::rng(cfg.seed, seed::tag("zip"));
    let zip_factor: Vec<Vec<f64>> = (0..cfg.n_states)
        .map(|_| (0..ZIPS_PER_STATE).map(|_| zrng.random_range(0.9..1.1)).collect())
        .collect();
    for p in providers.iter_mut() {
        let j = zrng.random_range(0..ZIPS_PER_STATE);
        p.zip_factor = zip_factor[p.state][j];
    }

    // Fraud assignment on its own stream.
    let mut frng = seed::rng(cfg.seed, seed::tag("fraud"));
    let mut order: Vec<usize> = (0..cfg.n_providers).collect();
    order.shuffle(&mut frng);
    let n_planted = cfg.n_planted();
    let n_unlabeled = cfg.n_unlabeled();
    let mut labels = Vec::new();
    let mut unlabeled = Vec::new();
    for (k, &pi) in order.iter().take(n_planted + n_unlabeled).enumerate() {
        let archetype = cfg.archetypes[k % cfg.archetypes.len()];
        let severity = cfg.severity(archetype);
        providers[pi].fraud = Some((archetype, severity));
        let label = PlantedLabel {
            provider_id: providers[pi].id.clone(),
            archetype,
            severity,
        };
        if k < n_planted {
            labels.push(label);
        } else {
            unlabeled.push(label);
        }
    }
    labels.sort_by(|a, b| a.provider_id.cmp(&b.provider_id));
    unlabeled.sort_by(|a, b| a.provider_id.cmp(&b.provider_id));

    let by_state: Vec<Vec<usize>> = (0..cfg.n_states)
        .map(|s| (0..providers.len()).filter(|&i| providers[i].state == s).collect())
        .collect();
    let state_cdf: Vec<Vec<f64>> = by_state
        .iter()
        .map(|ps| cdf(&ps.iter().map(|&i| providers[i].popularity).collect::<Vec<_>>()))
        .collect();
    let populated: Vec<usize> = (0..cfg.n_states).filter(|&s| !by_state[s].is_empty()).collect();

    let conditions: Vec<String> = (0..cfg.n_chronic)
        .map(|c| {
            if c < CHRONIC.len() {
                CHRONIC[c].to_string()
            } else {
                format!("condition_{}", c + 1)
            }
        })
        .collect();
    let mut crng = seed::rng(cfg.seed, seed::tag("chronic"));
    let chronic_bias: Vec<f64> = (0..cfg.n_chronic).map(|_| crng.random_range(-1.2..0.4)).collect();

    let severity_dist = Gamma::new(2.0, 0.5).unwrap();
    let noise = LogNormal::new(0.0, cfg.payment_dispersion.max(1e-12)).unwrap();
    let mut bene_rows = BTreeMap::new();
    let mut claims = Vec::new();
    let mut visits = Vec::new();
    let mut los_acc: Vec<(f64, usize)> = vec![(0.0, 0); providers.len()];
    let mut patients: Vec<std::collections::BTreeSet<usize>> =
        vec![Default::default(); providers.len()];

    for b in 0..cfg.n_beneficiaries {
        let mut rng: ChaCha8Rng = seed::rng(cfg.seed, seed::tag("bene").wrapping_add(b as u64));
        let id = format!("B{:06}", b + 1);
        let state = populated[rng.random_range(0..populated.len())];
        let zip3 = zip3_of(state, rng.random_range(0..ZIPS_PER_STATE));
        let age = rng.random_range(66..=95);
        let severity: f64 = severity_dist.sample(&mut rng);
        let chronic: Vec<bool> = chronic_bias
            .iter()
            .map(|&bias| rng.random_bool(sigmoid(bias + 1.2 * (severity - 1.0))))
            .collect();
        let favored: [usize; 2] = [rng.random_range(0..cfg.n_mdc), rng.random_range(0..cfg.n_mdc)];
        bene_rows.insert(
            id.clone(),
            Beneficiary {
                beneficiary_id: id.clone(),
                birth_year: cfg.target_year - age,
                zip3,
                chronic,
            },
        );

        let history_code = |rng: &mut ChaCha8Rng| -> String {
            let ch = if rng.random_bool(0.8) {
                favored[rng.random_range(0..2)]
            } else {
                rng.random_range(0..cfg.n_mdc)
            };
            let codes = &vocab.regular[ch];
            codes[rng.random_range(0..codes.len())].0.clone()
        };

        // History window.
        for year in cfg.history_start.max(cfg.target_year - 5)..cfg.target_year {
            for (vt, rate) in [
                (VisitType::Physician, cfg.visit_intensity),
                (VisitType::Outpatient, 0.5 * cfg.visit_intensity),
            ] {
                let lambda = rate * (0.3 + 0.7 * severity);
                let n = if lambda > 0.0 {
                    Poisson::new(lambda).unwrap().sample(&mut rng) as usize
                } else {
                    0
                };
                for _ in 0..n {
                    let k = rng.random_range(1..=3);
                    let icd_codes = (0..k).map(|_| history_code(&mut rng)).collect();
                    visits.push(HistoryVisit {
                        beneficiary_id: id.clone(),
                        year,
                        visit_type: vt,
                        icd_codes,
                    });
                }
            }
        }

        let home_state = &by_state[state];
        let home = home_state[draw(&state_cdf[state], rng.random())];
        let n_hist_inpatient = Poisson::new(0.1 + 0.15 * severity).unwrap().sample(&mut rng) as usize;
        let n_target = 1 + Poisson::new(0.2 + 0.3 * severity).unwrap().sample(&mut rng) as usize;

        let make_claim = |rng: &mut ChaCha8Rng, year: i32, provider: usize, planted: bool| {
            let p = &providers[provider];
            let mdc = draw(&p.mdc_cdf, rng.random());
            let fams = &vocab.families[mdc];
            let regular = &vocab.regular[mdc];
            // primary code determines the family
            let (primary, fam) = regular[rng.random_range(0..regular.len())].clone();
            let high = rng.random_bool(sigmoid(1.8 * (severity - 1.3)));
            let mut drg = if high { fams[fam].high } else { fams[fam].low };
            let mut codes = vec![primary];
            let n_secondary = rng.random_range(1..=3);
            for _ in 0..n_secondary {
                codes.push(history_code(rng));
            }
            let u_upcode: f64 = rng.random();
            let u_rare: f64 = rng.random();
            let u_pick: usize = rng.random_range(0..2);
            let u_honest_rare: f64 = rng.random();
            let u_noise = noise.sample(rng);
            let u_outlier: f64 = rng.random();
            let outlier_share = rng.random_range(0.2..1.0);
            let los_noise: f64 = rng.random_range(-1.0..1.0);

            let rare = &vocab.rare[mdc];
            let mut inflation = 1.0;
            match p.fraud.filter(|_| planted) {
                Some((Archetype::Upcoder, sev)) => {
                    // the sibling upgrade is backed by a complication code
                    if !high && u_upcode < sev {
                        drg = fams[fam].high;
                        codes.push(rare[(p.rare_offset + u_pick) % rare.len()].clone());
                    }
                }
                Some((Archetype::RareCoder, sev)) => {
                    if u_rare < sev {
                        codes.push(rare[(p.rare_offset + u_pick) % rare.len()].clone());
                        drg = vocab.rare_target[mdc];
                    }
                }
                Some((Archetype::ExcessCost, sev)) => inflation += sev,
                _ => {}
            }
            if u_honest_rare < 0.004 {
                codes.push(rare[(provider + u_pick) % rare.len()].clone());
            }

            let base = cents(vocab.drg_prices[drg] * p.zip_factor * u_noise * inflation);
            let disp = cents(base * p.disp_share);
            let educ = cents(base * p.educ_share);
            let outlier = if u_outlier < 0.03 { cents(base * outlier_share) } else { 0.0 };
            let claim = InpatientClaim {
                claim_id: String::new(),
                beneficiary_id: id.clone(),
                provider_id: p.id.clone(),
                year,
                drg: vocab.drg_codes[drg].clone(),
                icd_codes: codes,
                total_payment: cents(base + disp + educ + outlier),
                disproportionate_amount: disp,
                education_amount: educ,
                outlier_amount: outlier,
                base_payment: None,
            };
            let los = 3.5 + 0.8 * severity + 0.3 * p.kind as f64 + los_noise;
            (claim, los)
        };

        for _ in 0..n_hist_inpatient {
            let year = rng.random_range(cfg.history_start.max(cfg.target_year - 5)..cfg.target_year);
            let pi = home_state[rng.random_range(0..home_state.len())];
            let (claim, _) = make_claim(&mut rng, year, pi, false);
            claims.push(claim);
            // inpatient history also lands in the visit view via the claims file
        }
        for _ in 0..n_target {
            let pick_home = rng.random_bool(0.8);
            let other = home_state[rng.random_range(0..home_state.len())];
            let pi = if pick_home { home } else { other };
            let (claim, los) = make_claim(&mut rng, cfg.target_year, pi, true);
            los_acc[pi].0 += los;
            los_acc[pi].1 += 1;
            patients[pi].insert(b);
            claims.push(claim);
        }
    }
    for (i, c) in claims.iter_mut().enumerate() {
        c.claim_id = format!("C{:07}", i + 1);
    }

    let mut orng = seed::rng(cfg.seed, seed::tag("covariates"));
    let covariates = providers
        .iter()
        .zip(&provider_info)
        .enumerate()
        .map(|(i, (p, info))| {
            let rating = orng.random_range(1..=5u8);
            let u: f64 = orng.random();
            let urban = orng.random_bool(0.7);
            let mut ownership = if u < 0.4 {
                "private"
            } else if u < 0.85 {
                "nonprofit"
            } else {
                "public"
            };
            if cfg.fraud_private && p.fraud.is_some() {
                ownership = "private";
            }
            let (los_sum, n) = los_acc[i];
            ProviderCovariates {
                provider_id: p.id.clone(),
                rating: Some(rating),
                ownership: Some(ownership.to_string()),
                urban: Some(urban),
                state: Some(info.state.clone()),
                avg_length_of_stay: (n > 0).then(|| (los_sum / n as f64 * 100.0).round() / 100.0),
                n_unique_patients: Some(patients[i].len()),
            }
        })
        .collect();

    let drg_mdc = DrgMdcMap(
        vocab
            .families
            .iter()
            .enumerate()
            .flat_map(|(m, fams)| {
                let mdc = vocab.mdc_codes[m].clone();
                let codes = &vocab.drg_codes;
                fams.iter().flat_map(move |f| {
                    [
                        (codes[f.low].clone(), mdc.clone()),
                        (codes[f.high].clone(), mdc.clone()),
                    ]
                })
            })
            .collect(),
    );
    let drg_prices = vocab
        .drg_codes
        .iter()
        .cloned()
        .zip(vocab.drg_prices.iter().copied())
        .collect();
    let drg_siblings = vocab
        .families
        .iter()
        .flatten()
        .map(|f| (vocab.drg_codes[f.low].clone(), vocab.drg_codes[f.high].clone()))
        .collect();

    Ok(Corpus {
        config: cfg.clone(),
        claims,
        visits,
        beneficiaries: BeneficiaryTable {
            conditions,
            rows: bene_rows,
        },
        icd_nodes: vocab.icd_nodes,
        drg_mdc,
        drg_prices,
        drg_siblings,
        providers: provider_info,
        covariates,
        labels,
        unlabeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{filter_claims, IcdHierarchy};

    fn small() -> GenConfig {
        GenConfig {
            n_providers: 40,
            n_beneficiaries: 800,
            fraud_rate: 0.1,
            ..GenConfig::default()
        }
    }

    #[test]
    fn seeded_determinism() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&GenConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.claims, c.claims);
    }

    #[test]
    fn zero_fraud_rate_has_no_labels() {
        let c = generate_corpus(&GenConfig {
            fraud_rate: 0.0,
            ..small()
        })
        .unwrap();
        assert!(c.labels.is_empty());
    }

    #[test]
    fn infeasible_fraud_rate_rejected() {
        let err = generate_corpus(&GenConfig {
            fraud_rate: 0.01,
            n_providers: 20,
            ..small()
        })
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(GenConfig {
            target_year: 2012,
            ..small()
        }
        .validate()
        .is_err());
        assert!(GenConfig {
            fraud_rate: 1.5,
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn corpus_passes_ingestion_filters() {
        let c = generate_corpus(&small()).unwrap();
        let n = c.claims.len();
        let out = filter_claims(c.claims.clone());
        assert_eq!(out.dropped, 0);
        assert_eq!(out.kept.len(), n);
        IcdHierarchy::new(c.icd_nodes.clone()).unwrap();
        for claim in &c.claims {
            assert!(c.drg_mdc.mdc(&claim.drg).is_some());
        }
    }

    #[test]
    fn sibling_drgs_strictly_more_expensive() {
        let c = generate_corpus(&small()).unwrap();
        for (low, high) in &c.drg_siblings {
            assert!(c.drg_prices[high] > c.drg_prices[low], "{low} vs {high}");
        }
    }

    #[test]
    fn labels_are_generated_providers() {
        let c = generate_corpus(&small()).unwrap();
        assert_eq!(c.labels.len(), 4);
        for l in &c.labels {
            assert!(c.providers.iter().any(|p| p.provider_id == l.provider_id));
        }
    }
}
