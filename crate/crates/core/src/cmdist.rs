//! Constrained minimum distance with the independent-means feature
//! function: one indicator per non-reference category.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::outcome::{Direction, SimilarityOutcome};

/// Largest sample space the enumeration mode will visit.
pub const ENUMERATION_CAP: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovarianceMode {
    Enumerate,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFrequencies {
    pub theta: Vec<f64>,
}

fn offsets(arities: &[u32]) -> (Vec<usize>, usize) {
    let mut off = Vec::with_capacity(arities.len());
    let mut m = 0;
    for &a in arities {
        off.push(m);
        m += a as usize - 1;
    }
    (off, m)
}

/// Share of rows in each non-reference category.
pub fn feature_frequencies(d: &CategoricalDataset) -> FeatureFrequencies {
    let (off, m) = offsets(d.arities());
    let mut counts = vec![0u64; m];
    for i in 0..d.n() {
        for (j, &c) in d.row(i).iter().enumerate() {
            if c > 0 {
                counts[off[j] + c as usize - 1] += 1;
            }
        }
    }
    FeatureFrequencies {
        theta: counts.iter().map(|&c| c as f64 / d.n() as f64).collect(),
    }
}

/// Covariance of the features under the uniform distribution on the sample
/// space. `Err` carries the infeasibility reason.
pub fn feature_covariance(arities: &[u32], mode: CovarianceMode) -> Result<DMatrix<f64>, &'static str> {
    match mode {
        CovarianceMode::ClosedForm => Ok(closed_form(arities)),
        CovarianceMode::Enumerate => {
            let size = arities.iter().try_fold(1u128, |acc, &a| {
                let next = acc * a as u128;
                (next <= ENUMERATION_CAP).then_some(next)
            });
            if size.is_none() {
                return Err("sample-space-too-large");
            }
            static CACHE: OnceLock<Mutex<HashMap<Vec<u32>, Arc<DMatrix<f64>>>>> = OnceLock::new();
            let cache = CACHE.get_or_init(Default::default);
            if let Some(m) = cache.lock().unwrap().get(arities) {
                return Ok((**m).clone());
            }
            let m = enumerate(arities);
            cache.lock().unwrap().insert(arities.to_vec(), Arc::new(m.clone()));
            Ok(m)
        }
    }
}

fn closed_form(arities: &[u32]) -> DMatrix<f64> {
    let (off, m) = offsets(arities);
    let mut cov = DMatrix::zeros(m, m);
    for (j, &a) in arities.iter().enumerate() {
        let pi = 1.0 / a as f64;
        for r in 0..a as usize - 1 {
            for c in 0..a as usize - 1 {
                cov[(off[j] + r, off[j] + c)] = if r == c { pi - pi * pi } else { -pi * pi };
            }
        }
    }
    cov
}

/// Literal pass over every point of the sample space.
fn enumerate(arities: &[u32]) -> DMatrix<f64> {
    let (off, m) = offsets(arities);
    let p = arities.len();
    let mut state = vec![0u32; p];
    let mut sums = vec![0u64; m];
    let mut co = vec![0u64; m * m];
    let mut active = Vec::with_capacity(p);
    let mut total = 0u64;
    loop {
        active.clear();
        active.extend(
            state
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(j, &c)| off[j] + c as usize - 1),
        );
        for &a in &active {
            sums[a] += 1;
            for &b in &active {
                co[a * m + b] += 1;
            }
        }
        total += 1;
        let mut j = 0;
        loop {
            if j == p {
                let t = total as f64;
                return DMatrix::from_fn(m, m, |a, b| {
                    co[a * m + b] as f64 / t - (sums[a] as f64 / t) * (sums[b] as f64 / t)
                });
            }
            state[j] += 1;
            if state[j] < arities[j] {
                break;
            }
            state[j] = 0;
            j += 1;
        }
    }
}

pub fn cm_distance(d1: &CategoricalDataset, d2: &CategoricalDataset, mode: CovarianceMode) -> SimilarityOutcome {
    let dir = Direction::LowMeansSimilar;
    if d1.arities() != d2.arities() {
        return SimilarityOutcome::error("datasets disagree on column arities", dir);
    }
    let cov = match feature_covariance(d1.arities(), mode) {
        Ok(c) => c,
        Err(reason) => return SimilarityOutcome::infeasible(reason, dir),
    };
    let t1 = feature_frequencies(d1).theta;
    let t2 = feature_frequencies(d2).theta;
    let diff = DVector::from_iterator(t1.len(), t1.iter().zip(&t2).map(|(a, b)| a - b));
    let mut flags = Vec::new();
    let q = match cov.clone().cholesky() {
        Some(ch) => diff.dot(&ch.solve(&diff)),
        None => {
            flags.push("pseudo-inverse".to_string());
            match cov.pseudo_inverse(1e-12) {
                Ok(pinv) => diff.dot(&(pinv * &diff)),
                Err(e) => return SimilarityOutcome::error(e.to_string(), dir),
            }
        }
    };
    SimilarityOutcome::ok(q.max(0.0).sqrt(), None, dir).with_flags(&flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies() {
        let d = CategoricalDataset::from_rows(&[vec![0], vec![0], vec![1], vec![1]], 2).unwrap();
        assert_eq!(feature_frequencies(&d).theta, vec![0.5]);
        let d = CategoricalDataset::from_rows(&[vec![4], vec![4]], 5).unwrap();
        assert_eq!(feature_frequencies(&d).theta, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn binary_covariance_and_distance() {
        let c = feature_covariance(&[2], CovarianceMode::Enumerate).unwrap();
        assert_eq!(c[(0, 0)], 0.25);
        let zeros = CategoricalDataset::from_rows(&[vec![0], vec![0]], 2).unwrap();
        let ones = CategoricalDataset::from_rows(&[vec![1], vec![1]], 2).unwrap();
        let out = cm_distance(&zeros, &ones, CovarianceMode::ClosedForm);
        assert!((out.statistic.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(cm_distance(&zeros, &zeros, CovarianceMode::ClosedForm).statistic, Some(0.0));
    }

    #[test]
    fn modes_agree() {
        let a = [2, 5, 3];
        let e = feature_covariance(&a, CovarianceMode::Enumerate).unwrap();
        let c = feature_covariance(&a, CovarianceMode::ClosedForm).unwrap();
        assert!((e - c).abs().max() < 1e-12);
    }

    #[test]
    fn large_space_is_infeasible() {
        assert_eq!(
            feature_covariance(&[5; 50], CovarianceMode::Enumerate),
            Err("sample-space-too-large")
        );
    }
}
