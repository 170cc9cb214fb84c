//! Subspace outlier degree with shared-nearest-neighbour reference sets.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SodParams {
    pub k_shared_nn: usize,
    pub ref_set_size: usize,
    pub variance_threshold: f64,
}

impl Default for SodParams {
    fn default() -> Self {
        Self {
            k_shared_nn: 20,
            ref_set_size: 20,
            variance_threshold: 0.8,
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sod_scores(x: &Array2<f64>, params: SodParams) -> Result<Vec<f64>> {
    let n = x.nrows();
    if n <= params.ref_set_size {
        return Err(Error::Precondition(format!(
            "SOD needs more than {} points, got {n}",
            params.ref_set_size
        )));
    }
    if params.ref_set_size == 0 || params.k_shared_nn == 0 {
        return Err(Error::Config("SOD k_shared_nn and ref_set_size must be ≥ 1".into()));
    }
    let k = params.k_shared_nn.min(n - 1);
    let dist: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| sq_dist(x.row(i), x.row(j))).collect())
        .collect();
    // kNN as sorted membership masks
    let knn: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
            let mut mask = vec![false; n];
            for &j in &order[..k] {
                mask[j] = true;
            }
            mask
        })
        .collect();
    let d = x.ncols();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(usize, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((0..n).filter(|&t| knn[i][t] && knn[j][t]).count(), j))
                .collect();
            cand.sort_by(|a, b| {
                b.0.cmp(&a.0)
                    .then(dist[i][a.1].total_cmp(&dist[i][b.1]))
                    .then(a.1.cmp(&b.1))
            });
            let refs: Vec<usize> = cand[..params.ref_set_size].iter().map(|c| c.1).collect();
            let l = refs.len() as f64;
            let mut mean = vec![0.0; d];
            for &r in &refs {
                for (m, v) in mean.iter_mut().zip(x.row(r)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= l);
            let mut var = vec![0.0; d];
            for &r in &refs {
                for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= l);
            let cutoff = params.variance_threshold * var.iter().sum::<f64>() / d as f64;
            let mut dims = 0usize;
            let mut acc = 0.0;
            for f in 0..d {
                if var[f] < cutoff {
                    dims += 1;
                    acc += (x[[i, f]] - mean[f]).powi(2);
                }
            }
            if dims == 0 {
                0.0
            } else {
                acc.sqrt() / dims as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn identical_points_score_zero() {
        let x = Array2::from_elem((25, 4), 3.0);
        let s = sod_scores(&x, SodParams::default()).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn off_plane_point_scores_highest() {
        // 20 points on a 2-D plane inside 10-D, plus one point off the plane.
        let mut x = Array2::zeros((21, 10));
        for i in 0..20 {
            x[[i, 0]] = (i % 5) as f64;
            x[[i, 1]] = (i / 5) as f64;
        }
        x[[20, 0]] = 2.0;
        x[[20, 1]] = 1.5;
        x[[20, 7]] = 3.0;
        let s = sod_scores(&x, SodParams::default()).unwrap();
        let best = (0..21).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        assert_eq!(best, 20);
    }

    #[test]
    fn permutation_equivariant() {
        // Generic coordinates, so no distance ties depend on row order.
        let params = SodParams {
            ref_set_size: 5,
            k_shared_nn: 6,
            ..SodParams::default()
        };
        let y = Array2::from_shape_fn((22, 3), |(i, j)| ((i * i) as f64 + 0.37 * (j * i) as f64).sqrt());
        let perm: Vec<usize> = (0..22).map(|i| (i * 5) % 22).collect();
        let yp = Array2::from_shape_fn((22, 3), |(i, j)| y[[perm[i], j]]);
        let s = sod_scores(&y, params).unwrap();
        let sp = sod_scores(&yp, params).unwrap();
        for i in 0..22 {
            assert!((s[perm[i]] - sp[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_points_is_precondition_error() {
        let x = Array2::zeros((20, 2));
        assert!(matches!(sod_scores(&x, SodParams::default()), Err(Error::Precondition(_))));
    }
}
