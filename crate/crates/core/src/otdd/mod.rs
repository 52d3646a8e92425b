//! Optimal transport distance between labelled categorical datasets.
//!
//! The ground cost between labelled points `(x, y)` and `(x', y')` is
//! `(h(x, x')^q' + W(y, y')^q')^(1/q')`, where `h` is the Hamming distance
//! and `W(y, y')` is the q'-Wasserstein distance between the covariate
//! distributions of labels `y` and `y'` in the two datasets taken together.
//! Equal labels are therefore at label distance zero.

pub mod transport;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::outcome::{Direction, SimilarityOutcome};
use transport::{sinkhorn, transport_exact};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OtMode {
    Exact,
    /// Entropic solver with regularisation relative to the mean cost.
    Sinkhorn(f64),
}

/// Distinct rows with their multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelConditional {
    pub support: Vec<Vec<u32>>,
    pub counts: Vec<u64>,
}

impl LabelConditional {
    pub fn from_rows<'a>(rows: impl Iterator<Item = &'a [u32]>) -> Self {
        let mut map: BTreeMap<&[u32], u64> = BTreeMap::new();
        for r in rows {
            *map.entry(r).or_insert(0) += 1;
        }
        Self {
            support: map.keys().map(|r| r.to_vec()).collect(),
            counts: map.values().copied().collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        let t = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

/// Rows of `d` whose target equals `label`.
pub fn label_conditional(d: &CategoricalDataset, label: u8) -> Option<LabelConditional> {
    let t = d.target()?;
    let lc = LabelConditional::from_rows((0..d.n()).filter(|&i| t[i] == label).map(|i| d.row(i)));
    (lc.total() > 0).then_some(lc)
}

fn hamming(a: &[u32], b: &[u32]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
}

fn solve(a: &[u64], b: &[u64], cost: &[f64], mode: OtMode) -> Result<f64, String> {
    match mode {
        OtMode::Exact => {
            let (ta, tb) = (a.iter().sum::<u64>() as i64, b.iter().sum::<u64>() as i64);
            let supply: Vec<i64> = a.iter().map(|&x| x as i64 * tb).collect();
            let demand: Vec<i64> = b.iter().map(|&x| x as i64 * ta).collect();
            transport_exact(&supply, &demand, cost).map(|p| p.cost).map_err(|e| e.to_string())
        }
        OtMode::Sinkhorn(eps) => {
            let norm = |v: &[u64]| {
                let t = v.iter().sum::<u64>() as f64;
                v.iter().map(|&x| x as f64 / t).collect::<Vec<f64>>()
            };
            sinkhorn(&norm(a), &norm(b), cost, eps).map(|r| r.plan.cost)
        }
    }
}

/// q'-Wasserstein distance under the Hamming ground cost.
pub fn inner_wasserstein(a: &LabelConditional, b: &LabelConditional, q_inner: f64, mode: OtMode) -> Result<f64, String> {
    let cost: Vec<f64> = a
        .support
        .iter()
        .flat_map(|x| b.support.iter().map(move |y| hamming(x, y).powf(q_inner)))
        .collect();
    solve(&a.counts, &b.counts, &cost, mode).map(|c| c.max(0.0).powf(1.0 / q_inner))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtddParams {
    pub mode: OtMode,
    pub q: f64,
    pub q_inner: f64,
}

impl Default for OtddParams {
    fn default() -> Self {
        Self {
            mode: OtMode::Exact,
            q: 1.0,
            q_inner: 1.0,
        }
    }
}

fn labelled_support(d: &CategoricalDataset) -> Vec<((u8, &[u32]), u64)> {
    let t = d.target().unwrap();
    let mut map: BTreeMap<(u8, &[u32]), u64> = BTreeMap::new();
    for i in 0..d.n() {
        *map.entry((t[i], d.row(i))).or_insert(0) += 1;
    }
    map.into_iter().collect()
}

pub fn otdd(d1: &CategoricalDataset, d2: &CategoricalDataset, params: OtddParams) -> SimilarityOutcome {
    let dir = Direction::LowMeansSimilar;
    if d1.p() != d2.p() {
        return SimilarityOutcome::error("datasets disagree on the number of variables", dir);
    }
    let (Some(t1), Some(t2)) = (d1.target(), d2.target()) else {
        return SimilarityOutcome::error("dataset has no target", dir);
    };
    let mut cond = Vec::with_capacity(2);
    for y in 0..2u8 {
        let rows = (0..d1.n())
            .filter(|&i| t1[i] == y)
            .map(|i| d1.row(i))
            .chain((0..d2.n()).filter(|&i| t2[i] == y).map(|i| d2.row(i)));
        let lc = LabelConditional::from_rows(rows);
        if lc.total() == 0 {
            return SimilarityOutcome::error(format!("missing label class {y}"), dir);
        }
        cond.push(lc);
    }
    let w01 = match inner_wasserstein(&cond[0], &cond[1], params.q_inner, params.mode) {
        Ok(v) => v,
        Err(e) => return SimilarityOutcome::error(e, dir),
    };
    let w = [[0.0, w01], [w01, 0.0]];
    let (s1, s2) = (labelled_support(d1), labelled_support(d2));
    let qi = params.q_inner;
    let cost: Vec<f64> = s1
        .iter()
        .flat_map(|((y, x), _)| {
            s2.iter().map(move |((y2, x2), _)| {
                let dz = (hamming(x, x2).powf(qi) + w[*y as usize][*y2 as usize].powf(qi)).powf(1.0 / qi);
                dz.powf(params.q)
            })
        })
        .collect();
    let a: Vec<u64> = s1.iter().map(|(_, c)| *c).collect();
    let b: Vec<u64> = s2.iter().map(|(_, c)| *c).collect();
    match solve(&a, &b, &cost, params.mode) {
        Ok(c) => SimilarityOutcome::ok(c.max(0.0).powf(1.0 / params.q), None, dir)
            .with_diag("label_distance", w01),
        Err(e) => SimilarityOutcome::error(e, dir),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(rows: &[Vec<u32>], target: Vec<u8>) -> CategoricalDataset {
        CategoricalDataset::from_rows(rows, 3).unwrap().with_target(target).unwrap()
    }

    #[test]
    fn identical_datasets_have_zero_distance() {
        let d = labelled(&[vec![0, 1], vec![2, 2], vec![0, 1], vec![1, 0]], vec![0, 1, 1, 0]);
        let out = otdd(&d, &d, OtddParams::default());
        assert_eq!(out.statistic, Some(0.0));
    }

    #[test]
    fn single_points_same_label() {
        let a = labelled(&[vec![0, 0, 0], vec![2, 2, 2]], vec![1, 0]);
        let b = labelled(&[vec![1, 2, 0], vec![2, 2, 2]], vec![1, 0]);
        let out = otdd(&a, &b, OtddParams::default());
        assert_eq!(out.statistic, Some(1.0));
    }

    #[test]
    fn symmetric() {
        let a = labelled(&[vec![0, 0], vec![2, 1], vec![1, 1]], vec![1, 0, 0]);
        let b = labelled(&[vec![1, 2], vec![2, 2]], vec![1, 0]);
        let ab = otdd(&a, &b, OtddParams::default()).statistic.unwrap();
        let ba = otdd(&b, &a, OtddParams::default()).statistic.unwrap();
        assert!((ab - ba).abs() < 1e-10);
    }

    #[test]
    fn inner_point_masses() {
        let a = LabelConditional::from_rows([&[0u32, 1, 2][..]].into_iter());
        let b = LabelConditional::from_rows([&[0u32, 2, 1][..]].into_iter());
        assert_eq!(inner_wasserstein(&a, &b, 1.0, OtMode::Exact), Ok(2.0));
        assert_eq!(inner_wasserstein(&a, &a, 1.0, OtMode::Exact), Ok(0.0));
    }
}
