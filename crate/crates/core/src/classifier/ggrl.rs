//! Tree-partition distance: two trees fitted on the target of each dataset
//! are intersected into their common refinement, and the data proportions of
//! the two datasets over its cells are compared.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cart::{tune, CartParams, CartTree, Features};
use crate::data::CategoricalDataset;
use crate::distances::dummy_encode;
use crate::outcome::{Direction, SimilarityOutcome};
use crate::seeds::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffFn {
    /// Absolute differences.
    Abs,
    /// Absolute differences scaled by the mean of the two proportions.
    Scaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregate {
    Sum,
    Max,
}

/// Cells of a common refinement with integer counts for both datasets.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// Per-feature `(lower, upper]` bounds of each cell.
    pub boxes: Vec<Vec<(f64, f64)>>,
    pub counts1: Vec<u64>,
    pub counts2: Vec<u64>,
    pub n1: u64,
    pub n2: u64,
}

impl Partition {
    pub fn p(&self) -> Vec<f64> {
        self.counts1.iter().map(|&c| c as f64 / self.n1 as f64).collect()
    }

    pub fn q(&self) -> Vec<f64> {
        self.counts2.iter().map(|&c| c as f64 / self.n2 as f64).collect()
    }

    pub fn statistic(&self, f: DiffFn, g: Aggregate) -> f64 {
        let diffs = self.p().into_iter().zip(self.q()).map(|(p, q)| {
            let d = (p - q).abs();
            match f {
                DiffFn::Abs => d,
                DiffFn::Scaled if p + q == 0.0 => 0.0,
                DiffFn::Scaled => d / ((p + q) / 2.0),
            }
        });
        match g {
            Aggregate::Sum => diffs.sum(),
            Aggregate::Max => diffs.fold(0.0, f64::max),
        }
    }
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<Vec<(f64, f64)>> {
    a.iter()
        .zip(b)
        .map(|(&(l1, u1), &(l2, u2))| {
            let (l, u) = (l1.max(l2), u1.min(u2));
            (l < u).then_some((l, u))
        })
        .collect()
}

/// Common refinement of two leaf partitions, with each row of `x1` and `x2`
/// assigned to the cell given by its pair of leaves.
pub fn refine(
    boxes_a: &[Vec<(f64, f64)>],
    boxes_b: &[Vec<(f64, f64)>],
    leaf_a: impl Fn(&[f64]) -> usize,
    leaf_b: impl Fn(&[f64]) -> usize,
    x1: Features<'_>,
    x2: Features<'_>,
) -> Partition {
    let mut cell_of = vec![vec![None; boxes_b.len()]; boxes_a.len()];
    let mut boxes = Vec::new();
    for (i, ba) in boxes_a.iter().enumerate() {
        for (j, bb) in boxes_b.iter().enumerate() {
            if let Some(b) = intersect(ba, bb) {
                cell_of[i][j] = Some(boxes.len());
                boxes.push(b);
            }
        }
    }
    let mut counts1 = vec![0u64; boxes.len()];
    let mut counts2 = vec![0u64; boxes.len()];
    for (x, counts) in [(x1, &mut counts1), (x2, &mut counts2)] {
        for r in 0..x.n {
            let row = x.row(r);
            let cell = cell_of[leaf_a(row)][leaf_b(row)].expect("row lies in an empty intersection");
            counts[cell] += 1;
        }
    }
    Partition {
        boxes,
        counts1,
        counts2,
        n1: x1.n as u64,
        n2: x2.n as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GgrlParams {
    pub f: DiffFn,
    pub g: Aggregate,
    pub tune: bool,
}

impl Default for GgrlParams {
    fn default() -> Self {
        Self {
            f: DiffFn::Abs,
            g: Aggregate::Sum,
            tune: false,
        }
    }
}

fn fit_target_tree(d: &CategoricalDataset, x: Features<'_>, tune_params: bool, seed: u64) -> Result<CartTree, String> {
    let y: Vec<usize> = match d.target() {
        Some(t) => t.iter().map(|&v| v as usize).collect(),
        None => return Err("dataset has no target".into()),
    };
    if !y.contains(&0) || !y.contains(&1) {
        return Err("target has a single class; the tree cannot be fitted".into());
    }
    let rows: Vec<usize> = (0..d.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = if tune_params {
        tune(x, &y, &rows, 2, &mut rng)
    } else {
        CartParams::default()
    };
    Ok(CartTree::fit(x, &y, &rows, 2, params, &mut rng))
}

pub fn ggrl(d1: &CategoricalDataset, d2: &CategoricalDataset, params: GgrlParams, seed: u64) -> SimilarityOutcome {
    let dir = Direction::LowMeansSimilar;
    if d1.arities() != d2.arities() {
        return SimilarityOutcome::error("datasets disagree on column arities", dir);
    }
    let (e1, e2) = (dummy_encode(d1), dummy_encode(d2));
    let x1 = Features::new(e1.n(), e1.width(), e1.data());
    let x2 = Features::new(e2.n(), e2.width(), e2.data());
    let t1 = match fit_target_tree(d1, x1, params.tune, derive_seed(seed, &[1])) {
        Ok(t) => t,
        Err(e) => return SimilarityOutcome::error(e, dir),
    };
    let t2 = match fit_target_tree(d2, x2, params.tune, derive_seed(seed, &[2])) {
        Ok(t) => t,
        Err(e) => return SimilarityOutcome::error(e, dir),
    };
    let part = refine(
        &t1.leaf_boxes(),
        &t2.leaf_boxes(),
        |r| t1.leaf_index(r),
        |r| t2.leaf_index(r),
        x1,
        x2,
    );
    SimilarityOutcome::ok(part.statistic(params.f, params.g), None, dir).with_diag("cells", part.boxes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_crossing_partitions() {
        // One binary feature; tree A splits at 0.5, tree B does not split.
        let a = vec![vec![(f64::NEG_INFINITY, 0.5)], vec![(0.5, f64::INFINITY)]];
        let b = vec![vec![(f64::NEG_INFINITY, f64::INFINITY)]];
        let d1 = [0.0, 0.0, 1.0, 1.0];
        let d2 = [0.0, 1.0, 1.0, 1.0];
        let part = refine(
            &a,
            &b,
            |r| usize::from(r[0] > 0.5),
            |_| 0,
            Features::new(4, 1, &d1),
            Features::new(4, 1, &d2),
        );
        assert!(part.boxes.len() <= 4);
        assert_eq!(part.counts1, vec![2, 2]);
        assert_eq!(part.counts2, vec![1, 3]);
        assert!((part.statistic(DiffFn::Abs, Aggregate::Sum) - 0.5).abs() < 1e-15);
        assert!((part.statistic(DiffFn::Abs, Aggregate::Max) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identical_datasets_score_zero() {
        let rows: Vec<Vec<u32>> = (0..40).map(|i| vec![(i % 2) as u32, (i / 2 % 2) as u32]).collect();
        let target: Vec<u8> = rows.iter().map(|r| r[0] as u8).collect();
        let d = CategoricalDataset::from_rows(&rows, 2).unwrap().with_target(target).unwrap();
        let out = ggrl(&d, &d, GgrlParams::default(), 0);
        assert_eq!(out.statistic, Some(0.0));
    }

    #[test]
    fn single_class_target_is_an_error() {
        let rows: Vec<Vec<u32>> = (0..10).map(|i| vec![(i % 2) as u32]).collect();
        let d = CategoricalDataset::from_rows(&rows, 2).unwrap().with_target(vec![1; 10]).unwrap();
        assert!(!ggrl(&d, &d, GgrlParams::default(), 0).is_ok());
    }
}
