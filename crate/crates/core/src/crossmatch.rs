//! Minimum-weight perfect matching on the pooled sample and the cross-match
//! statistics.
//!
//! Identical observations are paired with each other before the general
//! matcher runs: by the triangle inequality some optimal matching pairs all
//! but at most one member of every group of identical rows internally. Within
//! a group, the deterministic policy pairs the first remaining member with
//! the last, so a pooled sample ordered by dataset yields many cross pairs
//! whenever the rows carry little information.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blossom::max_weight_matching;
use crate::data::PooledSample;
use crate::distances::{distance_matrix, DistanceMatrix, Metric};
use crate::error::{invalid, Result};
use crate::outcome::{chi2_sf, normal_cdf, Direction, SimilarityOutcome};
use crate::simgraph::tie_classes;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchPolicy {
    /// Pooled order as given.
    Deterministic,
    /// Observations are visited in a seeded random order.
    Permuted(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// Matched pairs with `a < b`, sorted.
    pub pairs: Vec<(usize, usize)>,
    pub weight: f64,
    /// The observation left over when N is odd.
    pub unmatched: Option<usize>,
}

fn quantize(d: &DistanceMatrix) -> (Box<dyn Fn(f64) -> i64 + '_>, i64) {
    let max = d.max();
    if d.metric() == Metric::Hamming {
        (Box::new(|x: f64| x as i64), max as i64)
    } else {
        let scale = if max > 0.0 { (1u64 << 36) as f64 / max } else { 1.0 };
        (Box::new(move |x: f64| (x * scale).round() as i64), (max * scale).round() as i64)
    }
}

/// Minimum-weight perfect matching. For odd N one observation is matched
/// to a phantom node at a distance above every real distance and reported
/// as unmatched.
pub fn min_weight_matching(d: &DistanceMatrix, policy: MatchPolicy) -> Result<Matching> {
    let n = d.n();
    if n < 2 {
        return Err(invalid("matching needs at least two observations"));
    }
    let order: Vec<usize> = match policy {
        MatchPolicy::Deterministic => (0..n).collect(),
        MatchPolicy::Permuted(seed) => {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            o
        }
    };
    let mut pairs = Vec::with_capacity(n / 2);
    let mut rest = Vec::new();
    if d.metric().is_row_metric() {
        let classes = tie_classes(d);
        let mut ordered: Vec<Vec<usize>> = vec![Vec::new(); classes.members.len()];
        for &i in &order {
            ordered[classes.class_of[i]].push(i);
        }
        let mut leftover: Vec<(usize, usize)> = Vec::new();
        for m in &ordered {
            let h = m.len() / 2;
            for a in 0..h {
                pairs.push((m[a], m[m.len() - 1 - a]));
            }
            if m.len() % 2 == 1 {
                leftover.push((order.iter().position(|&x| x == m[h]).unwrap(), m[h]));
            }
        }
        leftover.sort_unstable();
        rest.extend(leftover.into_iter().map(|(_, i)| i));
    } else {
        rest = order;
    }
    let mut unmatched = None;
    if !rest.is_empty() {
        let (q, qmax) = quantize(d);
        let phantom = rest.len() % 2 == 1;
        let m = rest.len() + usize::from(phantom);
        let big = qmax + 2;
        let mut edges = Vec::with_capacity(m * (m - 1) / 2);
        for a in 0..rest.len() {
            for b in a + 1..rest.len() {
                edges.push((a, b, big - q(d.get(rest[a], rest[b]))));
            }
            if phantom {
                edges.push((a, m - 1, big - (qmax + 1)));
            }
        }
        let mate = max_weight_matching(m, &edges, true);
        for a in 0..rest.len() {
            match mate[a] {
                Some(b) if b == rest.len() => unmatched = Some(rest[a]),
                Some(b) if a < b => pairs.push((rest[a], rest[b])),
                Some(_) => {}
                None => return Err(invalid("matcher returned an imperfect matching")),
            }
        }
    }
    for p in pairs.iter_mut() {
        *p = (p.0.min(p.1), p.0.max(p.1));
    }
    pairs.sort_unstable();
    let weight = pairs.iter().map(|&(a, b)| d.get(a, b)).sum();
    Ok(Matching {
        pairs,
        weight,
        unmatched,
    })
}

/// Symmetric k-by-k table of pair counts by sample label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossCounts {
    pub k: usize,
    pub counts: Vec<Vec<u64>>,
}

impl CrossCounts {
    /// Off-diagonal counts in the order (0,1), (0,2), ..., (k-2,k-1).
    pub fn cross_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for i in 0..self.k {
            for j in i + 1..self.k {
                v.push(self.counts[i][j] as f64);
            }
        }
        v
    }

    pub fn total_cross(&self) -> u64 {
        self.cross_vector().iter().sum::<f64>() as u64
    }
}

pub fn cross_counts(m: &Matching, membership: &[usize], k: usize) -> CrossCounts {
    let mut counts = vec![vec![0u64; k]; k];
    for &(a, b) in &m.pairs {
        let (i, j) = (membership[a], membership[b]);
        counts[i][j] += 1;
        if i != j {
            counts[j][i] += 1;
        }
    }
    CrossCounts { k, counts }
}

/// Permutation-null mean and covariance of the off-diagonal cross counts
/// for `pairs` disjoint pairs over observations with the given label sizes.
pub fn crossmatch_null_moments(sizes: &[usize], pairs: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = sizes.len();
    let n: usize = sizes.iter().sum();
    let nf = n as f64;
    let idx: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let ff = |m: usize, r: usize| -> f64 { (0..r).map(|t| m as f64 - t as f64).product() };
    let n4 = ff(n, 4);
    let prob = |&(i, j): &(usize, usize)| 2.0 * (sizes[i] * sizes[j]) as f64 / (nf * (nf - 1.0));
    let mp = pairs as f64;
    let mean: Vec<f64> = idx.iter().map(|ij| mp * prob(ij)).collect();
    let mut cov = vec![vec![0.0; idx.len()]; idx.len()];
    for (x, a) in idx.iter().enumerate() {
        for (y, b) in idx.iter().enumerate() {
            let (pa, pb) = (prob(a), prob(b));
            let same = if x == y { pa } else { 0.0 };
            let mut used = vec![0usize; k];
            for l in [a.0, a.1, b.0, b.1] {
                used[l] += 1;
            }
            let joint = if n >= 4 {
                4.0 * (0..k).map(|l| ff(sizes[l], used[l])).product::<f64>() / n4
            } else {
                0.0
            };
            cov[x][y] = mp * (same - pa * pb) + mp * (mp - 1.0) * (joint - pa * pb);
        }
    }
    (mean, cov)
}

pub(crate) fn tie_flag(d: &DistanceMatrix, k: usize) -> Option<String> {
    let c = tie_classes(d).members.len();
    (c <= 2 * k).then(|| "tie-dominated-matching".to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossTest {
    Petrie,
    Mmcm,
}

impl CrossTest {
    pub fn direction(self) -> Direction {
        match self {
            CrossTest::Petrie => Direction::HighMeansSimilar,
            CrossTest::Mmcm => Direction::LowMeansSimilar,
        }
    }
}

pub fn cross_test_on_matching(test: CrossTest, m: &Matching, pooled: &PooledSample) -> SimilarityOutcome {
    let dir = test.direction();
    let n = pooled.n();
    if n < 4 {
        return SimilarityOutcome::undefined("moment-degeneracy", dir);
    }
    let counts = cross_counts(m, pooled.membership(), pooled.k());
    let a = counts.cross_vector();
    let (mean, cov) = crossmatch_null_moments(pooled.sizes(), n / 2);
    let scale = ((n / 2) as f64).powi(2).max(1.0);
    let eps = 1e-9 * scale;
    match test {
        CrossTest::Petrie => {
            let t: f64 = a.iter().sum();
            let e: f64 = mean.iter().sum();
            let v: f64 = cov.iter().flatten().sum();
            if v <= eps {
                return SimilarityOutcome::undefined("null-variance-zero", dir);
            }
            let z = (t - e) / v.sqrt();
            SimilarityOutcome::ok(z, Some(normal_cdf(z)), dir).with_diag("cross_pairs", t)
        }
        CrossTest::Mmcm => {
            let len = a.len();
            let sigma = DMatrix::from_fn(len, len, |i, j| cov[i][j]);
            let x = DVector::from_fn(len, |i, _| a[i] - mean[i]);
            let min_eig = sigma.clone().symmetric_eigen().eigenvalues.min();
            if min_eig <= eps {
                return SimilarityOutcome::undefined("covariance-singular", dir);
            }
            let Some(chol) = sigma.cholesky() else {
                return SimilarityOutcome::undefined("covariance-singular", dir);
            };
            let s = x.dot(&chol.solve(&x));
            SimilarityOutcome::ok(s, Some(chi2_sf(s, len as f64)), dir)
        }
    }
}

pub fn cross_test(test: CrossTest, pooled: &PooledSample, policy: MatchPolicy, metric: Metric) -> SimilarityOutcome {
    let dir = test.direction();
    if test == CrossTest::Petrie && pooled.k() != 2 {
        return SimilarityOutcome::error("two-sample-only", dir);
    }
    let d = match distance_matrix(pooled, metric) {
        Ok(d) => d,
        Err(e) => return SimilarityOutcome::error(e.to_string(), dir),
    };
    cross_test_on_distances(test, &d, pooled, policy)
}

pub fn cross_test_on_distances(
    test: CrossTest,
    d: &DistanceMatrix,
    pooled: &PooledSample,
    policy: MatchPolicy,
) -> SimilarityOutcome {
    let dir = test.direction();
    match min_weight_matching(d, policy) {
        Ok(m) => {
            let flags: Vec<String> = tie_flag(d, pooled.k()).into_iter().collect();
            cross_test_on_matching(test, &m, pooled).with_flags(&flags)
        }
        Err(e) => SimilarityOutcome::error(e.to_string(), dir),
    }
}

pub fn petrie_statistic(pooled: &PooledSample, policy: MatchPolicy, metric: Metric) -> SimilarityOutcome {
    cross_test(CrossTest::Petrie, pooled, policy, metric)
}

pub fn mmcm_statistic(pooled: &PooledSample, policy: MatchPolicy, metric: Metric) -> SimilarityOutcome {
    cross_test(CrossTest::Mmcm, pooled, policy, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pool, CategoricalDataset};

    #[test]
    fn identical_rows_pair_outermost_first() {
        let a = CategoricalDataset::from_rows(&[vec![0, 0], vec![0, 0]], 2).unwrap();
        let b = CategoricalDataset::from_rows(&[vec![0, 0], vec![0, 0]], 2).unwrap();
        let pooled = pool(&[a, b]).unwrap();
        let d = distance_matrix(&pooled, Metric::EuclideanDummy).unwrap();
        let m = min_weight_matching(&d, MatchPolicy::Deterministic).unwrap();
        assert_eq!(m.pairs, vec![(0, 3), (1, 2)]);
        let c = cross_counts(&m, pooled.membership(), 2);
        assert_eq!(c.total_cross(), 2);
    }

    #[test]
    fn odd_size_leaves_one_out() {
        let d = DistanceMatrix::from_raw(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 5.0, 5.0, 5.0, 0.0]).unwrap();
        let m = min_weight_matching(&d, MatchPolicy::Deterministic).unwrap();
        assert_eq!(m.pairs, vec![(0, 1)]);
        assert_eq!(m.unmatched, Some(2));
    }

    #[test]
    fn equal_distances_any_perfect_matching() {
        let n = 6;
        let data: Vec<f64> = (0..n * n).map(|x| if x / n == x % n { 0.0 } else { 2.5 }).collect();
        let d = DistanceMatrix::from_raw(n, data).unwrap();
        let m = min_weight_matching(&d, MatchPolicy::Deterministic).unwrap();
        assert_eq!(m.pairs.len(), 3);
        assert!((m.weight - 7.5).abs() < 1e-12);
    }

    #[test]
    fn two_sample_expectation() {
        let (mean, _) = crossmatch_null_moments(&[3, 5], 4);
        assert!((mean[0] - 15.0 / 7.0).abs() < 1e-12);
    }
}
