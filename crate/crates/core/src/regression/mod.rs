//! Fixed-effects expenditure regression.
//!
//! Each beneficiary's target-year spend is regressed on an intercept, their
//! medical history, chronic flags, zip3 indicators and one count column per
//! provider (number of target-year stays there). The provider coefficient is
//! the excess spend per hospitalization attributable to the provider.

mod design;
mod lsqr;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::rank::{RankList, Source};

pub use design::{build_design, DesignMatrix};
pub use lsqr::{lsqr, LsqrOutcome, Operator};

/// Column descriptor of the design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Intercept,
    History { visit: String, code: String },
    Chronic(String),
    Zip3(String),
    Provider(String),
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Intercept => f.write_str("intercept"),
            Feature::History { visit, code } => write!(f, "history:{visit}:{code}"),
            Feature::Chronic(c) => write!(f, "chronic:{c}"),
            Feature::Zip3(z) => write!(f, "zip3:{z}"),
            Feature::Provider(p) => write!(f, "provider:{p}"),
        }
    }
}

impl Feature {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("unrecognized feature descriptor `{s}`"));
        if s == "intercept" {
            return Ok(Feature::Intercept);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        Ok(match kind {
            "history" => {
                let (visit, code) = rest.split_once(':').ok_or_else(bad)?;
                Feature::History {
                    visit: visit.to_string(),
                    code: code.to_string(),
                }
            }
            "chronic" => Feature::Chronic(rest.to_string()),
            "zip3" => Feature::Zip3(rest.to_string()),
            "provider" => Feature::Provider(rest.to_string()),
            _ => return Err(bad()),
        })
    }

    pub fn provider(&self) -> Option<&str> {
        match self {
            Feature::Provider(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Ridge penalty on non-intercept coefficients. `None` selects
    /// `1e-6 · mean diag(XᵀX)`.
    pub ridge_lambda: Option<f64>,
    pub tol: f64,
    /// `None` selects `10 · n_columns`.
    pub max_iter: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            ridge_lambda: None,
            tol: 1e-8,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub max_iter: usize,
    pub tolerance: f64,
    /// `min(‖r‖/‖b‖, ‖Āᵀr‖/(‖Ā‖_F‖r‖))` on the scaled, ridge-augmented system.
    pub relative_residual: f64,
    pub converged: bool,
    pub dropped_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub columns: Vec<Feature>,
    pub coefficients: Vec<f64>,
    /// `Y − Xβ` per design row.
    pub residuals: Vec<f64>,
    pub ridge_lambda: f64,
    pub diagnostics: SolverDiagnostics,
}

impl RegressionFit {
    pub fn coefficient(&self, feature: &Feature) -> Option<f64> {
        self.columns
            .iter()
            .position(|c| c == feature)
            .map(|i| self.coefficients[i])
    }

    pub fn provider_coefficients(&self) -> Vec<(String, f64)> {
        self.columns
            .iter()
            .zip(&self.coefficients)
            .filter_map(|(c, &v)| c.provider().map(|p| (p.to_string(), v)))
            .collect()
    }
}

/// Minimizes `‖Y − Xβ‖² + λ‖β_noIntercept‖²` with LSQR on the column-scaled
/// system. Non-convergence is reported in the diagnostics, not as an error.
pub fn fit_fixed_effects(design: &DesignMatrix, opts: FitOptions) -> Result<RegressionFit> {
    let n_cols = design.n_cols();
    if n_cols == 0 || design.n_rows() == 0 {
        return Err(Error::Input("empty design matrix".into()));
    }
    let norms_sq = design.column_norms_sq();
    let lambda = match opts.ridge_lambda {
        Some(l) if l < 0.0 || !l.is_finite() => {
            return Err(Error::Config(format!("ridge_lambda {l} must be finite and ≥ 0")))
        }
        Some(l) => l,
        None => 1e-6 * norms_sq.iter().sum::<f64>() / n_cols as f64,
    };
    let scale: Vec<f64> = norms_sq
        .iter()
        .map(|&s| if s > 0.0 { 1.0 / s.sqrt() } else { 1.0 })
        .collect();
    let damp: Vec<f64> = design
        .columns
        .iter()
        .zip(&scale)
        .map(|(c, s)| if *c == Feature::Intercept { 0.0 } else { lambda.sqrt() * s })
        .collect();
    let max_iter = opts.max_iter.unwrap_or(10 * n_cols).max(1);
    let op = design::ScaledRidge {
        x: design,
        scale: &scale,
        damp: &damp,
    };
    let mut b = design.target.clone();
    b.extend(std::iter::repeat_n(0.0, n_cols));
    let out = lsqr(&op, &b, opts.tol, max_iter);
    let coefficients: Vec<f64> = out.x.iter().zip(&scale).map(|(z, s)| z * s).collect();
    let fitted = design.mul(&coefficients);
    let residuals = design.target.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(RegressionFit {
        columns: design.columns.clone(),
        coefficients,
        residuals,
        ridge_lambda: lambda,
        diagnostics: SolverDiagnostics {
            iterations: out.iterations,
            max_iter,
            tolerance: opts.tol,
            relative_residual: out.relative_residual,
            converged: out.converged,
            dropped_columns: design.dropped.iter().map(ToString::to_string).collect(),
        },
    })
}

/// Providers by α descending, ties by id.
pub fn rank_by_coefficient(fit: &RegressionFit) -> Result<RankList> {
    let alphas = fit.provider_coefficients();
    if alphas.is_empty() {
        return Err(Error::Precondition("fit has no provider columns".into()));
    }
    RankList::from_scores(Source::Regression, alphas)
}

pub fn write_coefficients(path: &Path, fit: &RegressionFit) -> Result<()> {
    io::write_rows(
        path,
        &["descriptor", "value"],
        fit.columns
            .iter()
            .zip(&fit.coefficients)
            .map(|(c, &v)| vec![c.to_string(), io::fmt_f64(v)]),
    )
}

pub fn read_coefficients(path: &Path) -> Result<Vec<(Feature, f64)>> {
    let (_, rows) = io::read_records(path)?;
    rows.iter()
        .map(|r| {
            let d = r.get(0).unwrap_or_default();
            let v = r.get(1).unwrap_or_default();
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Input(format!("{}: bad coefficient `{v}`", path.display())))?;
            Ok((Feature::parse(d)?, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PatientHistory, VisitType};
    use std::collections::BTreeMap;

    fn exact(lambda: f64) -> FitOptions {
        FitOptions {
            ridge_lambda: Some(lambda),
            tol: 1e-12,
            max_iter: Some(1000),
        }
    }

    #[test]
    fn feature_descriptors_round_trip() {
        for f in [
            Feature::Intercept,
            Feature::History {
                visit: "physician".into(),
                code: "A01.2".into(),
            },
            Feature::Chronic("copd".into()),
            Feature::Zip3("101".into()),
            Feature::Provider("P0001".into()),
        ] {
            assert_eq!(Feature::parse(&f.to_string()).unwrap(), f);
        }
        assert!(Feature::parse("bogus").is_err());
    }

    #[test]
    fn single_column_least_squares_mean() {
        let d = DesignMatrix::from_dense(
            vec![Feature::Provider("A".into())],
            &[vec![1.0], vec![1.0]],
            vec![10.0, 12.0],
        )
        .unwrap();
        let fit = fit_fixed_effects(&d, exact(0.0)).unwrap();
        assert!((fit.coefficients[0] - 11.0).abs() < 1e-9);
        assert!(fit.diagnostics.converged);
    }

    #[test]
    fn huge_ridge_shrinks_to_zero() {
        let d = DesignMatrix::from_dense(
            vec![Feature::Intercept, Feature::Provider("A".into()), Feature::Provider("B".into())],
            &[vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            vec![10.0, 30.0, 14.0],
        )
        .unwrap();
        let fit = fit_fixed_effects(&d, exact(1e12)).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-6);
        assert!(fit.coefficients[2].abs() < 1e-6);
        assert!((fit.coefficients[0] - 18.0).abs() < 1e-4);
    }

    #[test]
    fn ranking_sorts_by_alpha() {
        let fit = RegressionFit {
            columns: vec![
                Feature::Intercept,
                Feature::Provider("A".into()),
                Feature::Provider("B".into()),
                Feature::Provider("C".into()),
            ],
            coefficients: vec![1.0, 5.0, -2.0, 9.0],
            residuals: vec![],
            ridge_lambda: 0.0,
            diagnostics: SolverDiagnostics {
                iterations: 0,
                max_iter: 0,
                tolerance: 0.0,
                relative_residual: 0.0,
                converged: true,
                dropped_columns: vec![],
            },
        };
        let r = rank_by_coefficient(&fit).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["C", "A", "B"]);
        let mut tied = fit.clone();
        tied.coefficients = vec![0.0, 1.0, 1.0, 1.0];
        let r = rank_by_coefficient(&tied).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["A", "B", "C"]);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 11) as f64 + (i == j) as u8 as f64).collect())
            .collect();
        let cols = (0..6).map(|j| Feature::Provider(format!("P{j}"))).collect();
        let y = (0..30).map(|i| (i as f64).sin() * 100.0).collect();
        let d = DesignMatrix::from_dense(cols, &rows, y).unwrap();
        let fit = fit_fixed_effects(
            &d,
            FitOptions {
                ridge_lambda: Some(0.0),
                tol: 1e-14,
                max_iter: Some(1),
            },
        )
        .unwrap();
        assert!(!fit.diagnostics.converged);
        assert_eq!(fit.coefficients.len(), 6);
    }

    #[test]
    fn identical_patients_recover_per_visit_excess() {
        // Three providers, patients identical apart from provider visits.
        let mk = |id: &str, p: &str, visits: u32, spend: f64| PatientHistory {
            beneficiary_id: id.into(),
            age_at_target_year: 75,
            history_counts: BTreeMap::from([((VisitType::Physician, "A01.0".to_string()), 1)]),
            chronic_flags: vec![],
            zip3: "100".into(),
            target_spend: spend,
            provider_visits: BTreeMap::from([(p.to_string(), visits)]),
        };
        let hs = vec![
            mk("b1", "A", 1, 1000.0),
            mk("b2", "A", 2, 2000.0),
            mk("b3", "B", 1, 1500.0),
            mk("b4", "B", 1, 1500.0),
            mk("b5", "C", 2, 3000.0),
        ];
        let d = build_design(&hs, &[]).unwrap();
        let fit = fit_fixed_effects(&d, exact(0.0)).unwrap();
        // The intercept, history and zip3 columns coincide, so only their sum
        // is identified; spend is linear in visits with zero intercept.
        let a = fit.coefficient(&Feature::Provider("A".into())).unwrap();
        let b = fit.coefficient(&Feature::Provider("B".into())).unwrap();
        let c = fit.coefficient(&Feature::Provider("C".into())).unwrap();
        let base: f64 = fit.coefficients[0]
            + fit.coefficient(&Feature::Zip3("100".into())).unwrap()
            + fit
                .coefficient(&Feature::History {
                    visit: "physician".into(),
                    code: "A01.0".into(),
                })
                .unwrap();
        assert!((a + base - 1000.0).abs() < 1e-4 && (2.0 * a + base - 2000.0).abs() < 1e-4);
        assert!((b + base - 1500.0).abs() < 1e-4);
        assert!((2.0 * c + base - 3000.0).abs() < 1e-4);
    }
}
