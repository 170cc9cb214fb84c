//! Lightweight on-line detector of anomalies: histograms on sparse random
//! projections.

use ndarray::Array2;
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;

/// Equal-width bin count: Freedman–Diaconis, falling back to Sturges when
/// the interquartile range is zero.
pub fn bin_count(values: &[f64]) -> usize {
    let n = values.len();
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let range = v[n - 1] - v[0];
    let sturges = ((n as f64).log2().ceil() as usize + 1).max(1);
    if range <= 0.0 {
        return 1;
    }
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    let iqr = q(0.75) - q(0.25);
    if iqr <= 0.0 {
        return sturges;
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    ((range / width).ceil() as usize).clamp(1, n)
}

/// Negative log leave-one-out bin probability for every point of one
/// projection, or `None` when the projection has zero range.
pub fn projection_scores(z: &[f64], eps: f64) -> Option<Vec<f64>> {
    let n = z.len();
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) || n < 2 {
        return None;
    }
    let bins = bin_count(z);
    let width = (hi - lo) / bins as f64;
    let bin = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
    let mut counts = vec![0usize; bins];
    for &v in z {
        counts[bin(v)] += 1;
    }
    Some(
        z.iter()
            .map(|&v| {
                let p = (counts[bin(v)] - 1) as f64 / (n - 1) as f64;
                -p.max(eps).ln()
            })
            .collect(),
    )
}

pub fn loda_scores(x: &Array2<f64>, n_projections: usize, seed_value: u64) -> Result<Vec<f64>> {
    if n_projections == 0 {
        return Err(Error::Config("LODA needs at least one projection".into()));
    }
    let (n, d) = x.dim();
    if n == 0 || d == 0 {
        return Ok(vec![0.0; n]);
    }
    let nnz = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
    let eps = 1.0 / (10.0 * n as f64);
    let per: Vec<Option<Vec<f64>>> = (0..n_projections)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(seed_value, k as u64);
            let dims = sample(&mut rng, d, nnz).into_vec();
            let w: Vec<f64> = dims.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let z: Vec<f64> = (0..n)
                .map(|i| dims.iter().zip(&w).map(|(&j, wj)| x[[i, j]] * wj).sum())
                .collect();
            projection_scores(&z, eps)
        })
        .collect();
    let used: Vec<&Vec<f64>> = per.iter().flatten().collect();
    if used.is_empty() {
        return Ok(vec![0.0; n]);
    }
    Ok((0..n)
        .map(|i| used.iter().map(|s| s[i]).sum::<f64>() / used.len() as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_score_zero() {
        let x = Array2::from_elem((10, 4), 2.5);
        assert_eq!(loda_scores(&x, 20, 1).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn lone_point_scores_negative_log_floor() {
        // 9 points at 0, one at 100: the lone point has an empty bin.
        let mut z = vec![0.0; 9];
        z.push(100.0);
        let s = projection_scores(&z, 1.0 / 100.0).unwrap();
        assert!((s[9] - 100f64.ln()).abs() < 1e-12);
        assert!((s[0] + (8.0f64 / 9.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn sturges_fallback_for_zero_iqr() {
        let mut z = vec![1.0; 15];
        z.push(2.0);
        assert_eq!(bin_count(&z), 5);
    }

    #[test]
    fn seeded() {
        let x = Array2::from_shape_fn((30, 9), |(i, j)| ((i * 31 + j * 7) % 13) as f64);
        assert_eq!(loda_scores(&x, 15, 4).unwrap(), loda_scores(&x, 15, 4).unwrap());
    }
}
