//! Random forest with out-of-bag error estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cart::{CartParams, CartTree, Features};
use crate::seeds::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestOob {
    pub trees: usize,
    /// Out-of-bag vote counts per row and class.
    pub votes: Vec<Vec<u32>>,
    /// Out-of-bag prediction per row; `None` when no tree left the row out.
    pub predictions: Vec<Option<usize>>,
    pub error: f64,
    pub class_errors: Vec<f64>,
    pub class_sizes: Vec<usize>,
}

/// Grows `trees` fully grown trees on bootstrap samples with
/// `mtry = floor(sqrt(m))`. Tree `t` uses a seed derived from `(seed, t)`,
/// so the forest does not depend on the thread count.
pub fn forest_oob(x: Features<'_>, y: &[usize], n_classes: usize, trees: usize, seed: u64) -> ForestOob {
    let n = x.n;
    let mtry = ((x.m as f64).sqrt().floor() as usize).max(1);
    let params = CartParams {
        max_depth: usize::MAX,
        min_leaf: 1,
        mtry: Some(mtry),
    };
    let per_tree: Vec<Vec<(usize, usize)>> = (0..trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[t as u64]));
            let mut in_bag = vec![false; n];
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.gen_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            let tree = CartTree::fit(x, y, &rows, n_classes, params, &mut rng);
            (0..n)
                .filter(|&i| !in_bag[i])
                .map(|i| (i, tree.predict(x.row(i))))
                .collect()
        })
        .collect();
    let mut votes = vec![vec![0u32; n_classes]; n];
    for list in &per_tree {
        for &(i, c) in list {
            votes[i][c] += 1;
        }
    }
    let mut tie_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[u64::MAX]));
    let predictions: Vec<Option<usize>> = votes
        .iter()
        .map(|v| {
            let top = *v.iter().max().unwrap();
            if top == 0 {
                return None;
            }
            let winners: Vec<usize> = (0..n_classes).filter(|&c| v[c] == top).collect();
            Some(winners[tie_rng.gen_range(0..winners.len())])
        })
        .collect();
    let mut wrong = vec![0usize; n_classes];
    let mut seen = vec![0usize; n_classes];
    for i in 0..n {
        if let Some(p) = predictions[i] {
            seen[y[i]] += 1;
            if p != y[i] {
                wrong[y[i]] += 1;
            }
        }
    }
    let total_seen: usize = seen.iter().sum();
    let total_wrong: usize = wrong.iter().sum();
    ForestOob {
        trees,
        votes,
        predictions,
        error: if total_seen > 0 {
            total_wrong as f64 / total_seen as f64
        } else {
            f64::NAN
        },
        class_errors: (0..n_classes)
            .map(|c| {
                if seen[c] > 0 {
                    wrong[c] as f64 / seen[c] as f64
                } else {
                    f64::NAN
                }
            })
            .collect(),
        class_sizes: seen,
    }
}
