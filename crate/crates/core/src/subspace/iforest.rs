//! Isolation forest.

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average unsuccessful-search path length in a BST of `n` points.
pub fn c_factor(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

/// `2^(−E[h]/c(ψ))`.
pub fn anomaly_score(mean_path: f64, psi: usize) -> f64 {
    2f64.powf(-mean_path / c_factor(psi))
}

enum Node {
    Leaf { size: usize },
    Split { dim: usize, cut: f64, left: usize, right: usize },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn build(x: &Array2<f64>, idx: Vec<usize>, limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut t = Tree { nodes: Vec::new() };
        t.grow(x, idx, 0, limit, rng);
        t
    }

    fn grow(&mut self, x: &Array2<f64>, idx: Vec<usize>, depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: idx.len() });
        if depth >= limit || idx.len() <= 1 {
            return id;
        }
        // split only on attributes that vary within the node
        let varying: Vec<(usize, f64, f64)> = (0..x.ncols())
            .filter_map(|d| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(x[[i, d]]), hi.max(x[[i, d]]))
                });
                (hi > lo).then_some((d, lo, hi))
            })
            .collect();
        if varying.is_empty() {
            return id;
        }
        let (dim, lo, hi) = varying[rng.random_range(0..varying.len())];
        let cut = rng.random_range(lo..hi);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[[i, dim]] <= cut);
        let left = self.grow(x, l, depth + 1, limit, rng);
        let right = self.grow(x, r, depth + 1, limit, rng);
        self.nodes[id] = Node::Split { dim, cut, left, right };
        id
    }

    fn path_length(&self, p: ArrayView1<f64>) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                Node::Leaf { size } => return depth + c_factor(size),
                Node::Split { dim, cut, left, right } => {
                    node = if p[dim] <= cut { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

pub fn iforest_scores(x: &Array2<f64>, n_trees: usize, subsample: usize, seed_value: u64) -> Result<Vec<f64>> {
    if subsample < 2 {
        return Err(Error::Config("isolation forest subsample must be ≥ 2".into()));
    }
    if n_trees == 0 {
        return Err(Error::Config("isolation forest needs at least one tree".into()));
    }
    let n = x.nrows();
    let psi = subsample.min(n);
    let limit = (psi as f64).log2().ceil() as usize;
    let per_tree: Vec<Vec<f64>> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed_value, t as u64);
            let idx = sample(&mut rng, n, psi).into_vec();
            let tree = Tree::build(x, idx, limit, &mut rng);
            (0..n).map(|i| tree.path_length(x.row(i))).collect()
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let mean = per_tree.iter().map(|t| t[i]).sum::<f64>() / n_trees as f64;
            anomaly_score(mean, psi)
        })
        .collect())
}
