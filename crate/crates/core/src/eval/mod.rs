//! Evaluation against positive-unlabeled labels and covariate profiling of
//! the top of the ranking.
//!
//! Unlabeled providers count as negatives, so every precision-type metric
//! here is a lower bound on the true value.

mod characterize;
mod curves;
mod ks;
mod labels;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

pub use characterize::{characterize_outliers, Characterization, CovariateRow, NumericSummary, UNKNOWN};
pub use curves::{lift_at, lift_at_fraction, lift_curve, pr_curve, LiftCurve, PrCurve, LIFT_AT, LIFT_GRID};
pub use ks::{kolmogorov_q, ks_two_sample, KsResult};
pub use labels::{match_labels, write_review, LabelMatch, LabelSet, Provenance, ReviewItem, ReviewKind};

pub const METRICS_SCHEMA_VERSION: u32 = 1;
pub const PU_NOTE: &str =
    "labels are positive-unlabeled; unlabeled providers are scored as negatives, so metrics are lower bounds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub source: String,
    pub average_precision: f64,
    pub lift_at_k: Vec<(usize, f64)>,
    pub lift_top_10pct: f64,
    pub mean_lift_over_grid: f64,
    pub hits_top_50: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub note: String,
    pub label_provenance: Provenance,
    pub n_providers: usize,
    pub n_positives: usize,
    pub base_rate: f64,
    pub final_ranking: RankingMetrics,
    pub per_source: Vec<RankingMetrics>,
    /// Regression coefficients of labeled vs other providers.
    pub coefficient_ks: Option<KsResult>,
}

pub fn ranking_metrics(ranking: &crate::RankList, labels: &LabelSet) -> Result<RankingMetrics> {
    let pr = pr_curve(ranking, labels)?;
    let lift = lift_curve(ranking, labels)?;
    let hits_top_50 = ranking.ids().take(50).filter(|id| labels.contains(id)).count();
    Ok(RankingMetrics {
        source: ranking.source.as_str().to_string(),
        average_precision: pr.average_precision,
        lift_at_k: lift.at_k.clone(),
        lift_top_10pct: lift_at_fraction(ranking, labels, 0.1)?,
        mean_lift_over_grid: lift.points.iter().map(|p| p.1).sum::<f64>() / lift.points.len() as f64,
        hits_top_50,
    })
}

pub fn write_pr_curve(path: &Path, c: &PrCurve) -> Result<()> {
    io::write_rows(
        path,
        &["k", "recall", "precision"],
        c.points
            .iter()
            .enumerate()
            .map(|(i, (r, p))| vec![(i + 1).to_string(), io::fmt_f64(*r), io::fmt_f64(*p)]),
    )
}

pub fn write_lift_curve(path: &Path, c: &LiftCurve) -> Result<()> {
    io::write_rows(
        path,
        &["fraction", "lift"],
        c.points.iter().map(|(f, l)| vec![io::fmt_f64(*f), io::fmt_f64(*l)]),
    )
}

pub fn write_characterization(path: &Path, ch: &Characterization) -> Result<()> {
    io::write_rows(
        path,
        &["covariate", "bucket", "outlier_share", "population_share"],
        ch.rows.iter().map(|r| {
            vec![
                r.covariate.clone(),
                r.bucket.clone(),
                io::fmt_f64(r.outlier_share),
                io::fmt_f64(r.population_share),
            ]
        }),
    )
}

/// Whitespace-separated `x y series` lines for gnuplot.
pub fn curves_dat(pr: &PrCurve, lift: &LiftCurve) -> String {
    let mut s = String::from("# x y series\n");
    for (r, p) in &pr.points {
        let _ = writeln!(s, "{} {} pr", io::fmt_f64(*r), io::fmt_f64(*p));
    }
    for (f, l) in &lift.points {
        let _ = writeln!(s, "{} {} lift", io::fmt_f64(*f), io::fmt_f64(*l));
    }
    s
}
