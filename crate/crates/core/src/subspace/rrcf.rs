//! Robust random cut forest scored by collusive displacement.

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;

enum Node {
    /// One distinct point with multiplicity `count`.
    Leaf { point: usize, count: usize },
    Split {
        dim: usize,
        cut: f64,
        left: usize,
        right: usize,
        count: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

struct Tree {
    nodes: Vec<Node>,
    parent: Vec<Option<usize>>,
    /// Leaf holding each sampled point.
    leaf_of: Vec<Option<usize>>,
}

fn bbox(x: &Array2<f64>, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = x.ncols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in idx {
        for (k, v) in x.row(i).iter().enumerate() {
            lo[k] = lo[k].min(*v);
            hi[k] = hi[k].max(*v);
        }
    }
    (lo, hi)
}

/// Dimension chosen with probability proportional to its side length,
/// then a uniform cut in that side. `None` when the box is a point.
fn random_cut(lo: &[f64], hi: &[f64], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
    let total: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).sum();
    if total <= 0.0 {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    let mut dim = 0;
    for (k, (l, h)) in lo.iter().zip(hi).enumerate() {
        let side = h - l;
        if side > 0.0 {
            dim = k;
            if r < side {
                break;
            }
            r -= side;
        }
    }
    let cut = lo[dim] + r.min(hi[dim] - lo[dim]);
    // keep the cut strictly below the top so both sides are non-empty
    Some((dim, if cut >= hi[dim] { lo[dim] } else { cut }))
}

impl Tree {
    fn build(x: &Array2<f64>, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> Self {
        let mut t = Tree {
            nodes: Vec::new(),
            parent: Vec::new(),
            leaf_of: vec![None; x.nrows()],
        };
        t.grow(x, idx, None, rng);
        t
    }

    fn grow(&mut self, x: &Array2<f64>, idx: Vec<usize>, parent: Option<usize>, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let count = idx.len();
        let (lo, hi) = bbox(x, &idx);
        self.parent.push(parent);
        match random_cut(&lo, &hi, rng) {
            None => {
                for &i in &idx {
                    self.leaf_of[i] = Some(id);
                }
                self.nodes.push(Node::Leaf { point: idx[0], count });
            }
            Some((dim, cut)) => {
                self.nodes.push(Node::Leaf { point: idx[0], count });
                let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[[i, dim]] <= cut);
                let left = self.grow(x, l, Some(id), rng);
                let right = self.grow(x, r, Some(id), rng);
                self.nodes[id] = Node::Split { dim, cut, left, right, count, lo, hi };
            }
        }
        id
    }

    fn count(&self, node: usize) -> usize {
        match self.nodes[node] {
            Node::Leaf { count, .. } | Node::Split { count, .. } => count,
        }
    }

    fn sibling(&self, node: usize) -> Option<usize> {
        let p = self.parent[node]?;
        match self.nodes[p] {
            Node::Split { left, right, .. } => Some(if left == node { right } else { left }),
            Node::Leaf { .. } => unreachable!("parent is always a split"),
        }
    }

    /// Collusive displacement of a point already in the tree.
    fn codisp_in(&self, leaf: usize) -> f64 {
        let mut node = leaf;
        let mut best = 0.0f64;
        while let Some(sib) = self.sibling(node) {
            best = best.max(self.count(sib) as f64 / self.count(node) as f64);
            node = self.parent[node].unwrap();
        }
        best
    }

    /// Collusive displacement of `p` after a simulated insertion.
    fn codisp_insert(&self, x: &Array2<f64>, p: ArrayView1<f64>, rng: &mut ChaCha8Rng) -> f64 {
        // (count of the subtree on x's path before insertion, its sibling count)
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut node = 0;
        let attach = loop {
            match &self.nodes[node] {
                Node::Leaf { point, count } => {
                    if x.row(*point) == p {
                        break Some(*count);
                    }
                    break None;
                }
                Node::Split { dim, cut, left, right, lo, hi, .. } => {
                    let elo: Vec<f64> = lo.iter().zip(p).map(|(a, b)| a.min(*b)).collect();
                    let ehi: Vec<f64> = hi.iter().zip(p).map(|(a, b)| a.max(*b)).collect();
                    if let Some((d, c)) = random_cut(&elo, &ehi, rng) {
                        let separated = (p[d] <= c && c < lo[d]) || (hi[d] <= c && c < p[d]);
                        if separated {
                            break None;
                        }
                    }
                    let next = if p[*dim] <= *cut { *left } else { *right };
                    let sib = if next == *left { *right } else { *left };
                    path.push((self.count(next), self.count(sib)));
                    node = next;
                }
            }
        };
        // A new leaf is displaced against the whole subtree it splits off
        // from; a duplicate only grows an existing leaf. Every node on the
        // path gains one point.
        let own_level = if attach.is_none() { self.count(node) as f64 } else { 0.0 };
        path.iter()
            .map(|&(own, sib)| sib as f64 / (own + 1) as f64)
            .fold(own_level, f64::max)
    }
}

pub fn rrcf_scores(x: &Array2<f64>, n_trees: usize, subsample: usize, seed_value: u64) -> Result<Vec<f64>> {
    if subsample < 2 {
        return Err(Error::Config("RRCF subsample must be ≥ 2".into()));
    }
    if n_trees == 0 {
        return Err(Error::Config("RRCF needs at least one tree".into()));
    }
    let n = x.nrows();
    let psi = subsample.min(n);
    let per_tree: Vec<Vec<f64>> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = seed::derive(seed_value, t as u64);
            let mut rng = seed::rng(tree_seed, u64::MAX);
            let idx = sample(&mut rng, n, psi).into_vec();
            let tree = Tree::build(x, idx, &mut rng);
            (0..n)
                .map(|i| match tree.leaf_of[i] {
                    Some(leaf) => tree.codisp_in(leaf),
                    None => tree.codisp_insert(x, x.row(i), &mut seed::rng(tree_seed, i as u64)),
                })
                .collect()
        })
        .collect();
    Ok((0..n)
        .map(|i| per_tree.iter().map(|t| t[i]).sum::<f64>() / n_trees as f64)
        .collect())
}
