use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::IrvOptions;
use crate::model::MIN_BENEFICIARIES;
use crate::peer::PeerParams;
use crate::regression::FitOptions;
use crate::subspace::SubspaceParams;
use crate::synth::{Archetype, GenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// `labels.csv` with provider ids.
    Planted,
    /// A file of hospital names matched against `providers.csv`.
    Names,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Input corpus; defaults to `<out_dir>/data`.
    pub data_dir: Option<PathBuf>,
    pub gen: GenConfig,
    /// Target year for ingestion; defaults to the generator's.
    pub target_year: Option<i32>,
    pub min_beneficiaries: usize,
    pub regression: FitOptions,
    pub subspace: SubspaceParams,
    pub shap_top_k: usize,
    pub peer: PeerParams,
    pub fusion: IrvOptions,
    pub label_mode: LabelMode,
    pub labels_path: Option<PathBuf>,
    pub accepted_reviews: Option<PathBuf>,
    pub quantile: f64,
    /// Number of top fused providers explained by the explain stage.
    pub explain_top: usize,
}

impl RunConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            data_dir: None,
            gen: GenConfig::default(),
            target_year: None,
            min_beneficiaries: MIN_BENEFICIARIES,
            regression: FitOptions::default(),
            subspace: SubspaceParams::default(),
            shap_top_k: 10,
            peer: PeerParams::default(),
            fusion: IrvOptions::default(),
            label_mode: LabelMode::Planted,
            labels_path: None,
            accepted_reviews: None,
            quantile: 0.05,
            explain_top: 5,
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("data"))
    }

    pub fn target_year(&self) -> i32 {
        self.target_year.unwrap_or(self.gen.target_year)
    }

    pub fn labels_path(&self) -> PathBuf {
        self.labels_path.clone().unwrap_or_else(|| self.data_dir().join("labels.csv"))
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path, out_dir: Option<PathBuf>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::new(out_dir.unwrap_or_else(|| PathBuf::from("out")));
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key = value", path.display(), n + 1))
            })?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for {key}")))
        }
        fn auto<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
            if v == "auto" {
                Ok(None)
            } else {
                p(key, v).map(Some)
            }
        }
        let g = &mut self.gen;
        let s = &mut self.subspace;
        match key {
            "out_dir" => self.out_dir = PathBuf::from(value),
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "target_year" => self.target_year = auto(key, value)?,
            "min_beneficiaries" => self.min_beneficiaries = p(key, value)?,
            "gen.seed" => g.seed = p(key, value)?,
            "gen.n_providers" => g.n_providers = p(key, value)?,
            "gen.n_beneficiaries" => g.n_beneficiaries = p(key, value)?,
            "gen.n_icd_codes" => g.n_icd_codes = p(key, value)?,
            "gen.n_drg_codes" => g.n_drg_codes = p(key, value)?,
            "gen.n_mdc" => g.n_mdc = p(key, value)?,
            "gen.n_chronic" => g.n_chronic = p(key, value)?,
            "gen.n_states" => g.n_states = p(key, value)?,
            "gen.history_start" => g.history_start = p(key, value)?,
            "gen.target_year" => g.target_year = p(key, value)?,
            "gen.fraud_rate" => g.fraud_rate = p(key, value)?,
            "gen.unlabeled_fraud_rate" => g.unlabeled_fraud_rate = p(key, value)?,
            "gen.archetypes" => {
                g.archetypes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(Archetype::from_str)
                    .collect::<Result<_>>()
                    .map_err(|e| Error::Config(e.to_string()))?
            }
            "gen.upcode_severity" => g.upcode_severity = p(key, value)?,
            "gen.rare_code_severity" => g.rare_code_severity = p(key, value)?,
            "gen.excess_cost_severity" => g.excess_cost_severity = p(key, value)?,
            "gen.payment_dispersion" => g.payment_dispersion = p(key, value)?,
            "gen.visit_intensity" => g.visit_intensity = p(key, value)?,
            "gen.fraud_private" => g.fraud_private = p(key, value)?,
            "regression.ridge_lambda" => self.regression.ridge_lambda = auto(key, value)?,
            "regression.tol" => self.regression.tol = p(key, value)?,
            "regression.max_iter" => self.regression.max_iter = auto(key, value)?,
            "subspace.seed" => s.seed = p(key, value)?,
            "subspace.k_shared_nn" => s.sod.k_shared_nn = p(key, value)?,
            "subspace.ref_set_size" => s.sod.ref_set_size = p(key, value)?,
            "subspace.variance_threshold" => s.sod.variance_threshold = p(key, value)?,
            "subspace.n_trees" => s.n_trees = p(key, value)?,
            "subspace.subsample" => s.subsample = p(key, value)?,
            "subspace.n_projections" => s.n_projections = p(key, value)?,
            "subspace.n_hashes" => s.n_hashes = p(key, value)?,
            "subspace.sample_size" => s.sample_size = p(key, value)?,
            "subspace.normalize" => s.normalize = p(key, value)?,
            "subspace.shap_ridge" => s.shap_ridge = p(key, value)?,
            "subspace.shap_top_k" => self.shap_top_k = p(key, value)?,
            "peer.tau" => self.peer.tau = p(key, value)?,
            "peer.min_peers" => self.peer.min_peers = p(key, value)?,
            "peer.top_k" => self.peer.top_k = p(key, value)?,
            "fusion.global_elimination" => self.fusion.global_elimination = p(key, value)?,
            "eval.label_mode" => {
                self.label_mode = match value {
                    "planted" => LabelMode::Planted,
                    "names" => LabelMode::Names,
                    _ => return Err(Error::Config(format!("invalid value `{value}` for {key}"))),
                }
            }
            "eval.labels" => self.labels_path = Some(PathBuf::from(value)),
            "eval.accepted_reviews" => self.accepted_reviews = Some(PathBuf::from(value)),
            "eval.quantile" => self.quantile = p(key, value)?,
            "explain.top" => self.explain_top = p(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.peer.tau > 0.0 && self.peer.tau <= 1.0) {
            return bad("peer.tau must be in (0, 1]");
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return bad("eval.quantile must be in (0, 1]");
        }
        if !(self.regression.tol > 0.0) {
            return bad("regression.tol must be positive");
        }
        if !(self.subspace.shap_ridge > 0.0) {
            return bad("subspace.shap_ridge must be positive");
        }
        Ok(())
    }

    /// Every setting as `key → value`, recorded in the run manifest.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let g = &self.gen;
        let s = &self.subspace;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let archetypes: Vec<&str> = g.archetypes.iter().map(|a| a.as_str()).collect();
        [
            ("data_dir", self.data_dir().display().to_string()),
            ("target_year", self.target_year().to_string()),
            ("min_beneficiaries", self.min_beneficiaries.to_string()),
            ("gen.seed", g.seed.to_string()),
            ("gen.n_providers", g.n_providers.to_string()),
            ("gen.n_beneficiaries", g.n_beneficiaries.to_string()),
            ("gen.n_icd_codes", g.n_icd_codes.to_string()),
            ("gen.n_drg_codes", g.n_drg_codes.to_string()),
            ("gen.n_mdc", g.n_mdc.to_string()),
            ("gen.n_chronic", g.n_chronic.to_string()),
            ("gen.n_states", g.n_states.to_string()),
            ("gen.history_start", g.history_start.to_string()),
            ("gen.target_year", g.target_year.to_string()),
            ("gen.fraud_rate", g.fraud_rate.to_string()),
            ("gen.unlabeled_fraud_rate", g.unlabeled_fraud_rate.to_string()),
            ("gen.archetypes", archetypes.join(",")),
            ("gen.upcode_severity", g.upcode_severity.to_string()),
            ("gen.rare_code_severity", g.rare_code_severity.to_string()),
            ("gen.excess_cost_severity", g.excess_cost_severity.to_string()),
            ("gen.payment_dispersion", g.payment_dispersion.to_string()),
            ("gen.visit_intensity", g.visit_intensity.to_string()),
            ("gen.fraud_private", g.fraud_private.to_string()),
            ("regression.ridge_lambda", opt(self.regression.ridge_lambda.map(|v| v.to_string()))),
            ("regression.tol", self.regression.tol.to_string()),
            ("regression.max_iter", opt(self.regression.max_iter.map(|v| v.to_string()))),
            ("subspace.seed", s.seed.to_string()),
            ("subspace.k_shared_nn", s.sod.k_shared_nn.to_string()),
            ("subspace.ref_set_size", s.sod.ref_set_size.to_string()),
            ("subspace.variance_threshold", s.sod.variance_threshold.to_string()),
            ("subspace.n_trees", s.n_trees.to_string()),
            ("subspace.subsample", s.subsample.to_string()),
            ("subspace.n_projections", s.n_projections.to_string()),
            ("subspace.n_hashes", s.n_hashes.to_string()),
            ("subspace.sample_size", s.sample_size.to_string()),
            ("subspace.normalize", s.normalize.to_string()),
            ("subspace.shap_ridge", s.shap_ridge.to_string()),
            ("subspace.shap_top_k", self.shap_top_k.to_string()),
            ("peer.tau", self.peer.tau.to_string()),
            ("peer.min_peers", self.peer.min_peers.to_string()),
            ("peer.top_k", self.peer.top_k.to_string()),
            ("fusion.global_elimination", self.fusion.global_elimination.to_string()),
            (
                "eval.label_mode",
                match self.label_mode {
                    LabelMode::Planted => "planted".into(),
                    LabelMode::Names => "names".into(),
                },
            ),
            ("eval.labels", self.labels_path().display().to_string()),
            ("eval.quantile", self.quantile.to_string()),
            ("explain.top", self.explain_top.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
