use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dollar::{DollarContext, IcdDollarMap};
use crate::error::{Error, Result};

/// Standard-deviation floor for z-scoring.
pub const STD_FLOOR: f64 = 1e-12;
/// Surrogates explaining less than this share of score variance are flagged.
pub const LOW_FIDELITY_R2: f64 = 0.1;

/// Ridge regression of detector scores on z-scored features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSurrogate {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
}

impl LinearSurrogate {
    /// Solved in the dual (`n × n`) since codes usually outnumber providers.
    pub fn fit(x: &Array2<f64>, y: &[f64], ridge: f64) -> Result<Self> {
        let (n, d) = x.dim();
        if n != y.len() || n == 0 {
            return Err(Error::Input("surrogate needs one score per row".into()));
        }
        if ridge <= 0.0 {
            return Err(Error::Config("surrogate ridge must be positive".into()));
        }
        let means: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
        let stds: Vec<f64> = (0..d)
            .map(|j| {
                let v = x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / n as f64;
                v.sqrt().max(STD_FLOOR)
            })
            .collect();
        let z = DMatrix::from_fn(n, d, |i, j| (x[[i, j]] - means[j]) / stds[j]);
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let mut k = &z * z.transpose();
        for i in 0..n {
            k[(i, i)] += ridge;
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| Error::Consistency("surrogate kernel matrix not positive definite".into()))?;
        let alpha = chol.solve(&yc);
        let w = z.transpose() * alpha;
        let fitted = &z * &w;
        let ss_res: f64 = fitted.iter().zip(yc.iter()).map(|(f, t)| (t - f).powi(2)).sum();
        let ss_tot: f64 = yc.iter().map(|t| t * t).sum();
        let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
        Ok(Self {
            means,
            stds,
            weights: w.iter().copied().collect(),
            intercept: y_mean,
            r2,
        })
    }

    pub fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.standardize(row).iter().zip(&self.weights).map(|(z, w)| z * w).sum::<f64>()
    }

    /// Exact Shapley values of the linear surrogate at `row`:
    /// `w_f · (x̃_f − mean x̃_f)`, where standardized means are zero.
    pub fn attributions(&self, row: &[f64]) -> Vec<f64> {
        self.standardize(row).iter().zip(&self.weights).map(|(z, w)| z * w).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapTerm {
    pub code: String,
    pub attribution: f64,
    /// `None` when the code appears in no claim.
    pub dollar: Option<DollarContext>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub provider_id: String,
    pub detector: String,
    pub score: f64,
    /// Surrogate prediction at the feature means.
    pub baseline: f64,
    pub prediction: f64,
    /// Sum over every feature, not only the reported ones.
    pub attribution_total: f64,
    pub r2: f64,
    pub low_fidelity: bool,
    /// Largest `|attribution|` first.
    pub terms: Vec<ShapTerm>,
}

pub fn explain_row(
    surrogate: &LinearSurrogate,
    codes: &[String],
    row: &[f64],
    provider_id: &str,
    detector: &str,
    score: f64,
    top_k: usize,
    dollars: &IcdDollarMap,
) -> ShapExplanation {
    let phi = surrogate.attributions(row);
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].abs().total_cmp(&phi[a].abs()).then(codes[a].cmp(&codes[b])));
    let terms = order
        .into_iter()
        .take(top_k)
        .map(|f| ShapTerm {
            code: codes[f].clone(),
            attribution: phi[f],
            dollar: dollars.context(&codes[f]),
        })
        .collect();
    ShapExplanation {
        provider_id: provider_id.to_string(),
        detector: detector.to_string(),
        score,
        baseline: surrogate.intercept,
        prediction: surrogate.predict(row),
        attribution_total: phi.iter().sum(),
        r2: surrogate.r2,
        low_fidelity: surrogate.r2 < LOW_FIDELITY_R2,
        terms,
    }
}
