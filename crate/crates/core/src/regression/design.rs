use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;

use super::lsqr::Operator;
use super::Feature;
use crate::error::{Error, Result};
use crate::model::PatientHistory;

/// Sparse design matrix held in both row- and column-compressed form, so
/// `Xv` and `Xᵀu` are each an independent per-row / per-column sum and
/// parallelize without changing the reduction order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub columns: Vec<Feature>,
    pub target: Vec<f64>,
    pub row_ids: Vec<String>,
    /// Candidate columns removed because they were zero in every row.
    pub dropped: Vec<Feature>,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl DesignMatrix {
    /// Builds from per-row `(column, value)` triplets; zero columns are
    /// dropped and recorded.
    fn from_rows(
        candidates: Vec<Feature>,
        rows: Vec<Vec<(usize, f64)>>,
        target: Vec<f64>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        debug_assert_eq!(rows.len(), target.len());
        let mut used = vec![false; candidates.len()];
        for row in &rows {
            for &(c, v) in row {
                if v != 0.0 {
                    used[c] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; candidates.len()];
        let mut columns = Vec::new();
        let mut dropped = Vec::new();
        for (i, f) in candidates.into_iter().enumerate() {
            if used[i] {
                remap[i] = columns.len();
                columns.push(f);
            } else {
                dropped.push(f);
            }
        }
        if columns.is_empty() {
            return Err(Error::Input("design matrix has no non-zero column".into()));
        }
        let mut row_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut row_val = Vec::new();
        for mut row in rows {
            row.retain(|&(_, v)| v != 0.0);
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                row_idx.push(remap[c]);
                row_val.push(v);
            }
            row_ptr.push(row_idx.len());
        }
        let n_cols = columns.len();
        let mut counts = vec![0usize; n_cols + 1];
        for &c in &row_idx {
            counts[c + 1] += 1;
        }
        for i in 0..n_cols {
            counts[i + 1] += counts[i];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut col_idx = vec![0; row_idx.len()];
        let mut col_val = vec![0.0; row_idx.len()];
        for r in 0..row_ptr.len() - 1 {
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = row_idx[k];
                col_idx[fill[c]] = r;
                col_val[fill[c]] = row_val[k];
                fill[c] += 1;
            }
        }
        Ok(Self {
            columns,
            target,
            row_ids,
            dropped,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        })
    }

    /// Dense constructor, mainly for small fixtures.
    pub fn from_dense(columns: Vec<Feature>, rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self> {
        if rows.len() != target.len() {
            return Err(Error::Input("row count differs from target length".into()));
        }
        let n = columns.len();
        let triplets = rows
            .iter()
            .map(|r| {
                if r.len() != n {
                    return Err(Error::Input("ragged dense rows".into()));
                }
                Ok(r.iter().copied().enumerate().collect())
            })
            .collect::<Result<_>>()?;
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::from_rows(columns, triplets, target, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    pub fn column_index(&self, f: &Feature) -> Option<usize> {
        self.columns.iter().position(|c| c == f)
    }

    /// Row `r` as `(column, value)` pairs in column order.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.row_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.row_val[span].iter().copied())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|r| {
                let mut v = vec![0.0; self.n_cols()];
                for (c, x) in self.row(r) {
                    v[c] = x;
                }
                v
            })
            .collect()
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.n_cols())
            .map(|c| self.col_val[self.col_ptr[c]..self.col_ptr[c + 1]].iter().map(|v| v * v).sum())
            .collect()
    }

    /// `Xv`.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, x)| x * v[c]).sum())
            .collect()
    }

    /// `Xᵀu`.
    pub fn mul_t(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n_cols())
            .into_par_iter()
            .map(|c| {
                let span = self.col_ptr[c]..self.col_ptr[c + 1];
                self.col_idx[span.clone()]
                    .iter()
                    .zip(&self.col_val[span])
                    .map(|(&r, x)| x * u[r])
                    .sum()
            })
            .collect()
    }
}

/// `[X·S; diag(damp)]`, the scaled ridge-augmented operator.
pub(super) struct ScaledRidge<'a> {
    pub x: &'a DesignMatrix,
    pub scale: &'a [f64],
    pub damp: &'a [f64],
}

impl Operator for ScaledRidge<'_> {
    fn rows(&self) -> usize {
        self.x.n_rows() + self.x.n_cols()
    }

    fn cols(&self) -> usize {
        self.x.n_cols()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let sv: Vec<f64> = v.iter().zip(self.scale).map(|(a, s)| a * s).collect();
        let mut out = self.x.mul(&sv);
        out.extend(v.iter().zip(self.damp).map(|(a, d)| a * d));
        out
    }

    fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        let n = self.x.n_rows();
        self.x
            .mul_t(&u[..n])
            .into_iter()
            .zip(self.scale)
            .zip(self.damp.iter().zip(&u[n..]))
            .map(|((a, s), (d, w))| a * s + d * w)
            .collect()
    }

    fn frobenius_sq(&self) -> f64 {
        self.x
            .column_norms_sq()
            .iter()
            .zip(self.scale)
            .zip(self.damp)
            .map(|((n, s), d)| n * s * s + d * d)
            .sum()
    }
}

/// Assembles `[intercept | history | chronic | zip3 | providers]`, each block
/// in sorted order. Target-year codes never enter as features.
pub fn build_design(histories: &[PatientHistory], conditions: &[String]) -> Result<DesignMatrix> {
    if histories.is_empty() {
        return Err(Error::Input("no patient histories".into()));
    }
    let mut seen = HashSet::new();
    for h in histories {
        if !seen.insert(h.beneficiary_id.as_str()) {
            return Err(Error::Input(format!("duplicate beneficiary {}", h.beneficiary_id)));
        }
        if h.provider_visits.is_empty() {
            return Err(Error::Consistency(format!(
                "beneficiary {} has no target-year provider",
                h.beneficiary_id
            )));
        }
        if h.chronic_flags.len() != conditions.len() {
            return Err(Error::Input(format!(
                "beneficiary {} has {} chronic flags, expected {}",
                h.beneficiary_id,
                h.chronic_flags.len(),
                conditions.len()
            )));
        }
    }

    let history_keys: BTreeSet<_> = histories.iter().flat_map(|h| h.history_counts.keys()).collect();
    let zips: BTreeSet<&str> = histories
        .iter()
        .map(|h| h.zip3.as_str())
        .filter(|z| !z.is_empty())
        .collect();
    let providers: BTreeSet<&str> = histories
        .iter()
        .flat_map(|h| h.provider_visits.keys().map(String::as_str))
        .collect();
    let mut chronic_order: Vec<usize> = (0..conditions.len()).collect();
    chronic_order.sort_by(|&a, &b| conditions[a].cmp(&conditions[b]));

    let mut candidates = vec![Feature::Intercept];
    let mut hist_col = BTreeMap::new();
    for (vt, code) in &history_keys {
        hist_col.insert((*vt, code.as_str()), candidates.len());
        candidates.push(Feature::History {
            visit: vt.as_str().to_string(),
            code: code.clone(),
        });
    }
    let mut chronic_col = vec![0; conditions.len()];
    for &i in &chronic_order {
        chronic_col[i] = candidates.len();
        candidates.push(Feature::Chronic(conditions[i].clone()));
    }
    let mut zip_col = BTreeMap::new();
    for z in &zips {
        zip_col.insert(*z, candidates.len());
        candidates.push(Feature::Zip3(z.to_string()));
    }
    let mut prov_col = BTreeMap::new();
    for p in &providers {
        prov_col.insert(*p, candidates.len());
        candidates.push(Feature::Provider(p.to_string()));
    }

    let rows: Vec<Vec<(usize, f64)>> = histories
        .par_iter()
        .map(|h| {
            let mut row = vec![(0, 1.0)];
            for ((vt, code), &n) in &h.history_counts {
                row.push((hist_col[&(*vt, code.as_str())], n as f64));
            }
            for (i, &flag) in h.chronic_flags.iter().enumerate() {
                if flag {
                    row.push((chronic_col[i], 1.0));
                }
            }
            if let Some(&z) = zip_col.get(h.zip3.as_str()) {
                row.push((z, 1.0));
            }
            for (p, &n) in &h.provider_visits {
                row.push((prov_col[p.as_str()], n as f64));
            }
            row
        })
        .collect();
    let target = histories.iter().map(|h| h.target_spend).collect();
    let ids = histories.iter().map(|h| h.beneficiary_id.clone()).collect();
    DesignMatrix::from_rows(candidates, rows, target, ids)
}
