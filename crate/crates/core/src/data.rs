//! Categorical datasets, CSV loading, and pooling.
//!
//! Cells are stored as integer codes `0..arity` in row-major order. The
//! optional binary target never counts towards `p`.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalDataset {
    n: usize,
    p: usize,
    values: Vec<u32>,
    arities: Vec<u32>,
    target: Option<Vec<u8>>,
}

impl CategoricalDataset {
    /// Builds a dataset from row-major codes. Every code must be below its
    /// column arity and every arity must be at least 2.
    pub fn new(
        n: usize,
        p: usize,
        values: Vec<u32>,
        arities: Vec<u32>,
        target: Option<Vec<u8>>,
    ) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Empty);
        }
        if values.len() != n * p {
            return Err(Error::Mismatch(format!(
                "value count {} != n*p = {}",
                values.len(),
                n * p
            )));
        }
        if arities.len() != p {
            return Err(Error::Mismatch("arity vector length".into()));
        }
        if let Some(column) = arities.iter().position(|&a| a < 2) {
            return Err(Error::ArityTooSmall { column });
        }
        for (idx, &v) in values.iter().enumerate() {
            if v >= arities[idx % p] {
                return Err(Error::InvalidParameter(format!(
                    "code {v} out of range in row {} column {}",
                    idx / p,
                    idx % p
                )));
            }
        }
        if let Some(t) = &target {
            if t.len() != n {
                return Err(Error::Mismatch("target length".into()));
            }
            if t.iter().any(|&y| y > 1) {
                return Err(Error::BadTarget);
            }
        }
        Ok(Self {
            n,
            p,
            values,
            arities,
            target,
        })
    }

    /// Builds a dataset from rows with a common arity for every column.
    pub fn from_rows(rows: &[Vec<u32>], arity: u32) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let values: Vec<u32> = rows.iter().flatten().copied().collect();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Mismatch("row lengths".into()));
        }
        Self::new(rows.len(), p, values, vec![arity; p], None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn value(&self, i: usize, j: usize) -> u32 {
        self.values[i * self.p + j]
    }

    pub fn target(&self) -> Option<&[u8]> {
        self.target.as_deref()
    }

    pub fn with_target(mut self, target: Vec<u8>) -> Result<Self> {
        if target.len() != self.n {
            return Err(Error::Mismatch("target length".into()));
        }
        if target.iter().any(|&y| y > 1) {
            return Err(Error::BadTarget);
        }
        self.target = Some(target);
        Ok(self)
    }

    pub fn without_target(mut self) -> Self {
        self.target = None;
        self
    }

    /// Subset of rows, keeping arities and target.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n: rows.len(),
            p: self.p,
            values,
            arities: self.arities.clone(),
            target: self
                .target
                .as_ref()
                .map(|t| rows.iter().map(|&i| t[i]).collect()),
        }
    }
}

/// Mapping from original cell labels to integer codes, per column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBook {
    pub columns: Vec<String>,
    pub labels: Vec<Vec<String>>,
}

impl CodeBook {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["column", "label", "code"])?;
        for (name, labels) in self.columns.iter().zip(&self.labels) {
            for (code, label) in labels.iter().enumerate() {
                w.write_record([name.as_str(), label.as_str(), &code.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LoadedCsv {
    pub dataset: CategoricalDataset,
    pub codebook: CodeBook,
}

/// Loads a headered CSV of categorical cells. When `has_target` is set the
/// last column is read as a 0/1 target. Codes follow the sorted order of the
/// distinct labels in each column, numeric when every label is an integer.
pub fn load_csv(path: &Path, has_target: bool) -> Result<LoadedCsv> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, has_target)
}

pub fn load_csv_reader<R: Read>(reader: R, has_target: bool) -> Result<LoadedCsv> {
    let (header, cells) = read_cells(reader)?;
    let (mut sets, codebook) = encode(&header, &[cells], has_target)?;
    Ok(LoadedCsv {
        dataset: sets.remove(0),
        codebook,
    })
}

/// Loads several CSVs with identical headers under one shared code book, so
/// equal labels get equal codes across files.
pub fn load_csv_set(paths: &[&Path], has_target: bool) -> Result<(Vec<CategoricalDataset>, CodeBook)> {
    let mut header: Option<Vec<String>> = None;
    let mut all = Vec::with_capacity(paths.len());
    for path in paths {
        let (h, cells) = read_cells(std::fs::File::open(path)?)?;
        match &header {
            None => header = Some(h),
            Some(first) if *first != h => {
                return Err(Error::Mismatch(format!("header of {} differs", path.display())));
            }
            Some(_) => {}
        }
        all.push(cells);
    }
    let header = header.ok_or(Error::Empty)?;
    encode(&header, &all, has_target)
}

type Cells = Vec<Vec<String>>;

fn read_cells<R: Read>(reader: R) -> Result<(Vec<String>, Cells)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let width = header.len();
    let mut cells: Cells = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::RaggedRow {
                line: idx + 2,
                expected: width,
                found: rec.len(),
            });
        }
        cells.push(rec.iter().map(str::to_string).collect());
    }
    if cells.is_empty() {
        return Err(Error::Empty);
    }
    Ok((header, cells))
}

fn encode(header: &[String], sets: &[Cells], has_target: bool) -> Result<(Vec<CategoricalDataset>, CodeBook)> {
    let width = header.len();
    let p = if has_target { width - 1 } else { width };
    if p == 0 {
        return Err(Error::Empty);
    }
    let mut labels = Vec::with_capacity(p);
    let mut indices: Vec<HashMap<String, u32>> = Vec::with_capacity(p);
    for j in 0..p {
        let distinct: BTreeSet<&str> = sets.iter().flatten().map(|r| r[j].as_str()).collect();
        let mut sorted: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();
        if sorted.iter().all(|s| s.parse::<i64>().is_ok()) {
            sorted.sort_by_key(|s| s.parse::<i64>().unwrap());
        }
        if sorted.len() < 2 {
            return Err(Error::ArityTooSmall { column: j });
        }
        indices.push(sorted.iter().enumerate().map(|(c, s)| (s.clone(), c as u32)).collect());
        labels.push(sorted);
    }
    let arities: Vec<u32> = labels.iter().map(|l| l.len() as u32).collect();
    let mut out = Vec::with_capacity(sets.len());
    for cells in sets {
        let n = cells.len();
        let mut values = vec![0u32; n * p];
        for (i, r) in cells.iter().enumerate() {
            for j in 0..p {
                values[i * p + j] = indices[j][r[j].as_str()];
            }
        }
        let target = if has_target {
            let mut t = Vec::with_capacity(n);
            for r in cells {
                match r[p].as_str() {
                    "0" => t.push(0u8),
                    "1" => t.push(1u8),
                    _ => return Err(Error::BadTarget),
                }
            }
            Some(t)
        } else {
            None
        };
        out.push(CategoricalDataset::new(n, p, values, arities.clone(), target)?);
    }
    Ok((
        out,
        CodeBook {
            columns: header[..p].to_vec(),
            labels,
        },
    ))
}

/// Concatenation of several datasets with a 0-based sample label per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PooledSample {
    data: CategoricalDataset,
    membership: Vec<usize>,
    sizes: Vec<usize>,
}

impl PooledSample {
    pub fn data(&self) -> &CategoricalDataset {
        &self.data
    }

    /// Sample index of each row, in `0..k`.
    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// Inverse of [`pool`]: one dataset per sample, rows in original order.
    pub fn split(&self) -> Vec<CategoricalDataset> {
        (0..self.k())
            .map(|s| {
                let rows: Vec<usize> = (0..self.n()).filter(|&i| self.membership[i] == s).collect();
                self.data.select(&rows)
            })
            .collect()
    }
}

/// Stacks datasets that share `p` and arities. Targets are dropped.
pub fn pool(datasets: &[CategoricalDataset]) -> Result<PooledSample> {
    if datasets.len() < 2 {
        return Err(Error::InvalidParameter("pooling needs at least two datasets".into()));
    }
    let first = &datasets[0];
    for d in &datasets[1..] {
        if d.p() != first.p() {
            return Err(Error::Mismatch("number of variables".into()));
        }
        if d.arities() != first.arities() {
            return Err(Error::Mismatch("column arities".into()));
        }
    }
    let n: usize = datasets.iter().map(CategoricalDataset::n).sum();
    let mut values = Vec::with_capacity(n * first.p());
    let mut membership = Vec::with_capacity(n);
    for (s, d) in datasets.iter().enumerate() {
        values.extend_from_slice(d.values());
        membership.extend(std::iter::repeat(s).take(d.n()));
    }
    let data = CategoricalDataset::new(n, first.p(), values, first.arities().to_vec(), None)?;
    Ok(PooledSample {
        data,
        membership,
        sizes: datasets.iter().map(CategoricalDataset::n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_category_column_is_rejected() {
        let err = load_csv_reader("a,b\n0,1\n1,1\n".as_bytes(), false).unwrap_err();
        assert_eq!(err.to_string(), "arity<2 in column 1");
    }

    #[test]
    fn labels_are_coded_in_sorted_order() {
        let loaded = load_csv_reader("x,y\n10,b\n2,a\n10,c\n".as_bytes(), false).unwrap();
        assert_eq!(loaded.codebook.labels[0], vec!["2", "10"]);
        assert_eq!(loaded.dataset.row(0), &[1, 1]);
        assert_eq!(loaded.dataset.row(1), &[0, 0]);
        assert_eq!(loaded.dataset.arities(), &[2, 3]);
    }

    #[test]
    fn ragged_rows_and_bad_targets() {
        assert!(matches!(
            load_csv_reader("a,b\n0,1\n1\n".as_bytes(), false),
            Err(Error::RaggedRow { line: 3, .. })
        ));
        assert!(matches!(
            load_csv_reader("a,b,y\n0,1,1\n1,0,2\n".as_bytes(), true),
            Err(Error::BadTarget)
        ));
        let ok = load_csv_reader("a,b,y\n0,1,1\n1,0,0\n".as_bytes(), true).unwrap();
        assert_eq!(ok.dataset.p(), 2);
        assert_eq!(ok.dataset.target(), Some(&[1u8, 0][..]));
    }

    #[test]
    fn pooling_round_trips() {
        let a = CategoricalDataset::from_rows(&[vec![0, 1], vec![1, 1]], 2).unwrap();
        let b = CategoricalDataset::from_rows(&[vec![1, 0]], 2).unwrap();
        let pooled = pool(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(pooled.membership(), &[0, 0, 1]);
        assert_eq!(pooled.split(), vec![a, b]);
    }

    #[test]
    fn pooling_requires_matching_arities() {
        let a = CategoricalDataset::from_rows(&[vec![0, 1]], 2).unwrap();
        let b = CategoricalDataset::from_rows(&[vec![0, 1]], 3).unwrap();
        assert!(pool(&[a, b]).is_err());
    }
}
