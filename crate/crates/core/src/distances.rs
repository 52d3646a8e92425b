//! Pairwise distances and dummy encoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CategoricalDataset, PooledSample};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Hamming,
    EuclideanDummy,
    Custom,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(Metric::Hamming),
            "euclidean" | "euclidean-dummy" => Ok(Metric::EuclideanDummy),
            _ => Err(invalid(format!("unknown metric '{s}'"))),
        }
    }

    /// True for metrics computed from the categorical rows, where a zero
    /// distance means identical rows and the triangle inequality holds.
    pub fn is_row_metric(self) -> bool {
        matches!(self, Metric::Hamming | Metric::EuclideanDummy)
    }
}

/// Number of positions where the two rows differ.
pub fn hamming(a: &[u32], b: &[u32]) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::Mismatch("row lengths".into()));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u32)
}

/// Squared Euclidean distance between the reference dummy codings of two rows.
fn dummy_sq(a: &[u32], b: &[u32]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x == y, x == 0 || y == 0) {
            (true, _) => 0,
            (false, true) => 1,
            (false, false) => 2,
        })
        .sum()
}

/// Reference dummy coding: code 0 maps to all zeros, code `c > 0` sets
/// indicator `c - 1` of its column block.
#[derive(Clone, Debug, PartialEq)]
pub struct DummyEncoding {
    n: usize,
    width: usize,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl DummyEncoding {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Row-major indicator values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Start of each variable's indicator block.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Indices of the indicators set in row `i`.
    pub fn active(&self, i: usize) -> Vec<usize> {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

pub fn dummy_encode(d: &CategoricalDataset) -> DummyEncoding {
    let mut offsets = Vec::with_capacity(d.p());
    let mut width = 0;
    for &a in d.arities() {
        offsets.push(width);
        width += a as usize - 1;
    }
    let mut data = vec![0.0; d.n() * width];
    for i in 0..d.n() {
        for (j, &c) in d.row(i).iter().enumerate() {
            if c > 0 {
                data[i * width + offsets[j] + c as usize - 1] = 1.0;
            }
        }
    }
    DummyEncoding {
        n: d.n(),
        width,
        offsets,
        data,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    metric: Metric,
}

impl DistanceMatrix {
    /// Wraps a user-supplied square matrix, checking symmetry, a zero
    /// diagonal and non-negative finite entries.
    pub fn from_raw(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid("distance matrix must be n*n"));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(invalid("distance matrix diagonal must be zero"));
            }
            for j in 0..i {
                let v = data[i * n + j];
                if !(v.is_finite() && v >= 0.0) || v != data[j * n + i] {
                    return Err(invalid("distance matrix must be symmetric, finite and non-negative"));
                }
            }
        }
        Ok(Self {
            n,
            data,
            metric: Metric::Custom,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Copy with rows and columns reordered so that new index `a` is old
    /// index `order[a]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                data[a * n + b] = self.get(order[a], order[b]);
            }
        }
        Self {
            n,
            data,
            metric: self.metric,
        }
    }
}

/// Pairwise distances between all pooled rows.
pub fn distance_matrix(pooled: &PooledSample, metric: Metric) -> Result<DistanceMatrix> {
    dataset_distances(pooled.data(), metric)
}

pub fn dataset_distances(d: &CategoricalDataset, metric: Metric) -> Result<DistanceMatrix> {
    let n = d.n();
    let mut data = vec![0.0; n * n];
    let f: fn(&[u32], &[u32]) -> f64 = match metric {
        Metric::Hamming => |a, b| a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
        Metric::EuclideanDummy => |a, b| (dummy_sq(a, b) as f64).sqrt(),
        Metric::Custom => return Err(invalid("custom metrics come from DistanceMatrix::from_raw")),
    };
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let ri = d.row(i);
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = f(ri, d.row(j));
            }
        }
    });
    Ok(DistanceMatrix { n, data, metric })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&[0, 1, 2], &[0, 2, 2]).unwrap(), 1);
        assert!(hamming(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn dummy_distance_matches_encoding() {
        let d = CategoricalDataset::from_rows(&[vec![0, 2], vec![1, 3], vec![1, 0]], 4).unwrap();
        let enc = dummy_encode(&d);
        assert_eq!(enc.width(), 6);
        let dm = dataset_distances(&d, Metric::EuclideanDummy).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let direct: f64 = enc
                    .row(i)
                    .iter()
                    .zip(enc.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert_eq!(dm.get(i, j), direct);
            }
        }
    }

    #[test]
    fn raw_matrix_validation() {
        assert!(DistanceMatrix::from_raw(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_raw(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }
}
