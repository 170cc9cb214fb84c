use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{IcdHierarchy, ProfileSet};

/// Sparse symmetric code-to-code similarity, rows in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutabilityMatrix {
    codes: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

/// Lowercased whitespace tokens with punctuation-only tokens removed.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(str::to_lowercase)
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

impl SubstitutabilityMatrix {
    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.rows[a]
            .binary_search_by_key(&b, |&(c, _)| c)
            .map(|k| self.rows[a][k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.len();
        let mut m = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// Validates symmetry, unit diagonal and the `[0, 1]` range.
    pub fn from_dense(codes: Vec<String>, m: &Array2<f64>) -> Result<Self> {
        let n = codes.len();
        if m.dim() != (n, n) {
            return Err(Error::Input(format!("similarity matrix is {:?}, expected {n}×{n}", m.dim())));
        }
        for i in 0..n {
            if m[[i, i]] != 1.0 {
                return Err(Error::Input(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = m[[i, j]];
                if !(0.0..=1.0).contains(&v) || v != m[[j, i]] {
                    return Err(Error::Input(format!("entry ({i}, {j}) = {v} invalid")));
                }
            }
        }
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| m[[i, j]] != 0.0).map(|j| (j, m[[i, j]])).collect())
            .collect();
        Ok(Self::assemble(codes, rows))
    }

    pub fn identity(codes: Vec<String>) -> Self {
        let rows = (0..codes.len()).map(|i| vec![(i, 1.0)]).collect();
        Self::assemble(codes, rows)
    }

    fn assemble(codes: Vec<String>, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let index = codes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Self { codes, index, rows }
    }

    /// Appends codes missing from the hierarchy as self-similar only.
    pub fn with_extra_codes(mut self, extra: &[String]) -> Self {
        for c in extra {
            if self.index.contains_key(c) {
                continue;
            }
            let i = self.codes.len();
            self.codes.push(c.clone());
            self.index.insert(c.clone(), i);
            self.rows.push(vec![(i, 1.0)]);
        }
        self
    }
}

/// Jaccard similarity of root-to-leaf descriptions over all leaf codes of
/// the hierarchy, computed within chapters. Leaves are ordered by code.
pub fn build_substitutability(h: &IcdHierarchy) -> Result<SubstitutabilityMatrix> {
    let mut leaves: Vec<&str> = h.leaves();
    leaves.sort_unstable();
    let mut by_chapter: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut toks = Vec::with_capacity(leaves.len());
    for (i, code) in leaves.iter().enumerate() {
        by_chapter.entry(h.chapter_of(code)?).or_default().push(i);
        let desc = h.full_description(code)?;
        let t = tokens(&desc);
        if t.is_empty() {
            return Err(Error::Input(format!("ICD code {code} has an empty description")));
        }
        toks.push(t);
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); leaves.len()];
    for members in by_chapter.values() {
        for &a in members {
            for &b in members {
                let v = if a == b { 1.0 } else { jaccard(&toks[a], &toks[b]) };
                if v > 0.0 {
                    rows[a].push((b, v));
                }
            }
        }
    }
    for r in &mut rows {
        r.sort_by_key(|&(c, _)| c);
    }
    Ok(SubstitutabilityMatrix::assemble(
        leaves.into_iter().map(str::to_string).collect(),
        rows,
    ))
}

/// `X · J`, skipping zero entries of `X`.
pub fn apply_substitutability(x: &Array2<f64>, j: &SubstitutabilityMatrix) -> Result<Array2<f64>> {
    let (n, m) = x.dim();
    if m != j.len() {
        return Err(Error::Input(format!(
            "X has {m} columns but the similarity matrix covers {} codes",
            j.len()
        )));
    }
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        for a in 0..m {
            let v = x[[i, a]];
            if v == 0.0 {
                continue;
            }
            for &(b, s) in j.row(a) {
                out[[i, b]] += v * s;
            }
        }
    }
    Ok(out)
}

/// Provider × code matrices with row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct IcdFeatureMatrix {
    pub provider_ids: Vec<String>,
    pub codes: Vec<String>,
    pub x_icd: Array2<f64>,
    pub x_sim: Array2<f64>,
    /// Whether `x_sim` rows were L1-normalized.
    pub normalized: bool,
    /// Observed codes absent from the hierarchy, kept as self-similar only.
    pub unknown_codes: Vec<String>,
}

impl IcdFeatureMatrix {
    pub fn build(profiles: &ProfileSet, j: SubstitutabilityMatrix, normalize: bool) -> Result<Self> {
        let unknown: Vec<String> = profiles
            .icd_index()
            .into_iter()
            .filter(|c| j.index_of(c).is_none())
            .collect();
        let j = j.with_extra_codes(&unknown);
        let n = profiles.profiles.len();
        let mut x = Array2::zeros((n, j.len()));
        for (i, p) in profiles.profiles.iter().enumerate() {
            for (code, &c) in &p.icd_counts {
                x[[i, j.index_of(code).expect("extended above")]] = c as f64;
            }
        }
        let mut x_sim = apply_substitutability(&x, &j)?;
        if normalize {
            for mut row in x_sim.rows_mut() {
                let s: f64 = row.sum();
                if s > 0.0 {
                    row.mapv_inplace(|v| v / s);
                }
            }
        }
        Ok(Self {
            provider_ids: profiles.profiles.iter().map(|p| p.provider_id.clone()).collect(),
            codes: j.codes().to_vec(),
            x_icd: x,
            x_sim,
            normalized: normalize,
            unknown_codes: unknown,
        })
    }
}
