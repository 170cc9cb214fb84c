//! Randomized subspace hashing: grid counts in random low-dimensional
//! subspaces with random cell widths.

use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;

pub fn rshash_scores(x: &Array2<f64>, n_hashes: usize, sample_size: usize, seed_value: u64) -> Result<Vec<f64>> {
    let (n, d) = x.dim();
    if sample_size > n {
        return Err(Error::Precondition(format!(
            "RSHash sample size {sample_size} exceeds {n} points"
        )));
    }
    if n_hashes == 0 || sample_size == 0 {
        return Err(Error::Config("RSHash needs n_hashes ≥ 1 and sample_size ≥ 1".into()));
    }
    if d == 0 {
        return Ok(vec![0.0; n]);
    }
    let s = sample_size;
    let per: Vec<Vec<f64>> = (0..n_hashes)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(seed_value, k as u64);
            let members = sample(&mut rng, n, s).into_vec();
            let root = (s as f64).sqrt();
            let (flo, fhi) = (1.0 / root, 1.0 - 1.0 / root);
            let f = if fhi > flo { rng.random_range(flo..fhi) } else { 0.5 };
            let base = (1.0 / f).max(2.0);
            let log_s = (s as f64).ln() / base.ln();
            let r_lo = (1.0 + 0.5 * log_s).floor() as usize;
            let r_hi = (log_s.floor() as usize).max(r_lo);
            let r = rng.random_range(r_lo..=r_hi).clamp(1, d);
            let dims = sample(&mut rng, d, r).into_vec();
            let shift: Vec<f64> = dims.iter().map(|_| rng.random_range(0.0..f)).collect();
            let bounds: Vec<(f64, f64)> = dims
                .iter()
                .map(|&j| {
                    members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
                        (a.min(x[[i, j]]), b.max(x[[i, j]]))
                    })
                })
                .collect();
            let cell = |i: usize| -> Vec<i64> {
                dims.iter()
                    .zip(&bounds)
                    .zip(&shift)
                    .map(|((&j, &(lo, hi)), a)| {
                        let u = if hi > lo { (x[[i, j]] - lo) / (hi - lo) } else { 0.0 };
                        ((u + a) / f).floor() as i64
                    })
                    .collect()
            };
            let mut counts: HashMap<Vec<i64>, usize> = HashMap::new();
            let mut in_sample = vec![false; n];
            for &i in &members {
                *counts.entry(cell(i)).or_default() += 1;
                in_sample[i] = true;
            }
            (0..n)
                .map(|i| {
                    let c = counts.get(&cell(i)).copied().unwrap_or(0) - usize::from(in_sample[i]);
                    -(1.0 + c as f64).ln()
                })
                .collect()
        })
        .collect();
    Ok((0..n)
        .map(|i| per.iter().map(|p| p[i]).sum::<f64>() / n_hashes as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_beats_cluster() {
        let mut x = Array2::from_shape_fn((21, 4), |(i, j)| 0.01 * ((i + j) % 5) as f64);
        x.row_mut(20).fill(9.0);
        let s = rshash_scores(&x, 50, 21, 2).unwrap();
        assert!(s.iter().all(|&v| v <= 0.0));
        assert!((0..20).all(|i| s[20] > s[i]));
        assert_eq!(s, rshash_scores(&x, 50, 21, 2).unwrap());
    }

    #[test]
    fn oversized_sample_rejected() {
        let x = Array2::zeros((5, 2));
        assert!(rshash_scores(&x, 3, 6, 0).is_err());
    }
}
