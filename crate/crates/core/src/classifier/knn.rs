//! k-nearest-neighbour classifier on dummy-coded rows.

use rand::Rng;

use super::cart::Features;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Majority vote among the `k` nearest rows, counting every row tied with
/// the k-th distance. Vote ties are broken at random.
fn vote<R: Rng>(dists: &mut [(f64, usize)], k: usize, n_classes: usize, rng: &mut R) -> usize {
    dists.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = k.min(dists.len());
    let cutoff = dists[k - 1].0;
    let mut counts = vec![0usize; n_classes];
    for &(d, c) in dists.iter() {
        if d > cutoff {
            break;
        }
        counts[c] += 1;
    }
    let top = *counts.iter().max().unwrap();
    let winners: Vec<usize> = (0..n_classes).filter(|&c| counts[c] == top).collect();
    winners[rng.gen_range(0..winners.len())]
}

pub const K_GRID: [usize; 5] = [1, 3, 5, 7, 9];

/// Chooses k from [`K_GRID`] by leave-one-out accuracy on the training rows.
pub fn tune_k<R: Rng>(x: Features<'_>, y: &[usize], train: &[usize], n_classes: usize, rng: &mut R) -> usize {
    let mut correct = [0usize; K_GRID.len()];
    let mut dists = Vec::with_capacity(train.len());
    for &i in train {
        dists.clear();
        dists.extend(train.iter().filter(|&&j| j != i).map(|&j| (sq_dist(x.row(i), x.row(j)), y[j])));
        if dists.is_empty() {
            continue;
        }
        for (g, &k) in K_GRID.iter().enumerate() {
            if vote(&mut dists, k, n_classes, rng) == y[i] {
                correct[g] += 1;
            }
        }
    }
    let mut best = 0;
    for g in 1..K_GRID.len() {
        if correct[g] > correct[best] {
            best = g;
        }
    }
    K_GRID[best]
}

pub fn knn_predict<R: Rng>(
    x: Features<'_>,
    y: &[usize],
    train: &[usize],
    test: &[usize],
    k: usize,
    n_classes: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut dists = Vec::with_capacity(train.len());
    test.iter()
        .map(|&i| {
            dists.clear();
            dists.extend(train.iter().map(|&j| (sq_dist(x.row(i), x.row(j)), y[j])));
            vote(&mut dists, k, n_classes, rng)
        })
        .collect()
}
