//! Classifier-based similarity tests.

pub mod cart;
pub mod forest;
pub mod ggrl;
pub mod knn;
pub mod mlp;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::PooledSample;
use crate::distances::dummy_encode;
use crate::outcome::{binomial_lower, binomial_upper, normal_cdf, Direction, SimilarityOutcome};
use crate::seeds::derive_seed;
use cart::{CartParams, CartTree, Features};

pub const DEFAULT_SPLIT: f64 = 0.7;
pub const DEFAULT_TREES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum C2stClassifier {
    Knn,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OobMode {
    Overall,
    PerClass,
}

/// Train and test rows, stratified by sample. Each sample keeps
/// `round(fraction * n_i)` training rows, shuffled by `seed`.
pub fn stratified_split(membership: &[usize], k: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for s in 0..k {
        let mut rows: Vec<usize> = (0..membership.len()).filter(|&i| membership[i] == s).collect();
        rows.shuffle(&mut rng);
        let cut = (fraction * rows.len() as f64).round() as usize;
        if cut < 2 || rows.len() - cut < 2 {
            return Err(format!("sample {s} has too few rows for the train/test split"));
        }
        train.extend_from_slice(&rows[..cut]);
        test.extend_from_slice(&rows[cut..]);
    }
    Ok((train, test))
}

fn larger_share(pooled: &PooledSample) -> f64 {
    *pooled.sizes().iter().max().unwrap() as f64 / pooled.n() as f64
}

/// Held-out accuracy of a classifier trained to tell the samples apart.
pub fn c2st(pooled: &PooledSample, classifier: C2stClassifier, split: f64, seed: u64) -> SimilarityOutcome {
    let dir = Direction::LowMeansSimilar;
    let y = pooled.membership();
    let k = pooled.k();
    let (train, test) = match stratified_split(y, k, split, derive_seed(seed, &[0])) {
        Ok(s) => s,
        Err(e) => return SimilarityOutcome::error(e, dir),
    };
    let enc = dummy_encode(pooled.data());
    let x = Features::new(enc.n(), enc.width(), enc.data());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
    let (pred, extra) = match classifier {
        C2stClassifier::Knn => {
            let kk = knn::tune_k(x, y, &train, k, &mut rng);
            (knn::knn_predict(x, y, &train, &test, kk, k, &mut rng), Some(kk as f64))
        }
        C2stClassifier::Mlp => {
            let net = mlp::Mlp::fit(x, y, &train, k, mlp::MlpParams::default(), &mut rng);
            (test.iter().map(|&i| net.predict(x.row(i))).collect(), None)
        }
    };
    let correct = test.iter().zip(&pred).filter(|(&i, &p)| y[i] == p).count();
    let acc = correct as f64 / test.len() as f64;
    let p = binomial_upper(correct as u64, test.len() as u64, larger_share(pooled));
    let out = SimilarityOutcome::ok(acc, Some(p), dir).with_diag("test_size", test.len() as f64);
    match extra {
        Some(kk) => out.with_diag("k", kk),
        None => out,
    }
}

/// Standardized out-of-bag error of a random forest.
pub fn hmn(pooled: &PooledSample, mode: OobMode, trees: usize, seed: u64) -> SimilarityOutcome {
    let dir = Direction::HighMeansSimilar;
    if pooled.k() != 2 {
        return SimilarityOutcome::error("two-sample-only", dir);
    }
    let enc = dummy_encode(pooled.data());
    let x = Features::new(enc.n(), enc.width(), enc.data());
    let oob = forest::forest_oob(x, pooled.membership(), 2, trees, seed);
    let (err, p0, var) = match mode {
        OobMode::Overall => {
            let n: usize = oob.class_sizes.iter().sum();
            let p0 = *pooled.sizes().iter().min().unwrap() as f64 / pooled.n() as f64;
            (oob.error, p0, oob.error * (1.0 - oob.error) / n as f64)
        }
        OobMode::PerClass => {
            let c = oob.class_errors.len() as f64;
            let mean = oob.class_errors.iter().sum::<f64>() / c;
            let var = oob
                .class_errors
                .iter()
                .zip(&oob.class_sizes)
                .map(|(&e, &n)| e * (1.0 - e) / n as f64)
                .sum::<f64>()
                / (c * c);
            (mean, (c - 1.0) / c, var)
        }
    };
    if !err.is_finite() || !var.is_finite() {
        return SimilarityOutcome::error("no out-of-bag predictions", dir);
    }
    if var <= 0.0 {
        let reason = if err == 0.0 {
            "perfect-classification"
        } else {
            "null-variance-zero"
        };
        return SimilarityOutcome::undefined(reason, dir).with_diag("oob_error", err);
    }
    let z = (err - p0) / var.sqrt();
    SimilarityOutcome::ok(z, Some(normal_cdf(z)), dir).with_diag("oob_error", err)
}

/// Held-out error of a single classification tree.
pub fn ymrzl(pooled: &PooledSample, split: f64, seed: u64) -> SimilarityOutcome {
    let dir = Direction::HighMeansSimilar;
    let y = pooled.membership();
    let k = pooled.k();
    let (train, test) = match stratified_split(y, k, split, derive_seed(seed, &[0])) {
        Ok(s) => s,
        Err(e) => return SimilarityOutcome::error(e, dir),
    };
    let enc = dummy_encode(pooled.data());
    let x = Features::new(enc.n(), enc.width(), enc.data());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
    let tree = CartTree::fit(x, y, &train, k, CartParams::default(), &mut rng);
    let errors = test.iter().filter(|&&i| tree.predict(x.row(i)) != y[i]).count();
    let err = errors as f64 / test.len() as f64;
    let p = binomial_lower(errors as u64, test.len() as u64, 1.0 - larger_share(pooled));
    SimilarityOutcome::ok(err, Some(p), dir).with_diag("depth", tree.depth() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pool, CategoricalDataset};

    fn constant(n: usize, code: u32) -> CategoricalDataset {
        CategoricalDataset::from_rows(&vec![vec![code, code]; n], 2).unwrap()
    }

    #[test]
    fn split_is_stratified() {
        let membership: Vec<usize> = (0..50).map(|i| usize::from(i >= 20)).collect();
        let (train, test) = stratified_split(&membership, 2, 0.7, 3).unwrap();
        assert_eq!(train.iter().filter(|&&i| membership[i] == 0).count(), 14);
        assert_eq!(train.len() + test.len(), 50);
        assert!(stratified_split(&membership[..22], 2, 0.7, 3).is_err());
    }

    #[test]
    fn disjoint_supports_are_separated() {
        let pooled = pool(&[constant(20, 0), constant(20, 1)]).unwrap();
        let knn = c2st(&pooled, C2stClassifier::Knn, 0.7, 1);
        assert_eq!(knn.statistic, Some(1.0));
        let tree = ymrzl(&pooled, 0.7, 1);
        assert_eq!(tree.statistic, Some(0.0));
        let forest = hmn(&pooled, OobMode::Overall, 50, 1);
        assert_eq!(forest.status, crate::outcome::Status::Undefined("perfect-classification".into()));
    }
}
