//! Similarity graphs on pooled samples and the edge-count statistics built
//! on them.
//!
//! Graphs are first built on the distinct values of the pooled sample and
//! then lifted to observations. Union mode keeps every edge of every optimal
//! graph: a clique inside each group of identical observations plus all
//! pairs across linked values. Average mode weights each observation pair by
//! its inclusion frequency when every group is connected by a uniformly
//! random spanning structure and every linked pair of values is realised by
//! one uniformly chosen pair of representatives.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::PooledSample;
use crate::distances::{distance_matrix, DistanceMatrix, Metric};
use crate::error::{invalid, Result};
use crate::outcome::{chi2_sf, normal_cdf, Direction, SimilarityOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphKind {
    Mst,
    Nn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TieMode {
    Average,
    Union,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub k: usize,
    pub tie: TieMode,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, k: usize, tie: TieMode) -> Self {
        Self { kind, k, tie }
    }

    /// Parses ids such as `1nn-u`, `5mst-u` or `5nn-a`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || invalid(format!("bad graph spec '{s}', expected e.g. 5mst-u"));
        let (body, tie) = s.rsplit_once('-').ok_or_else(bad)?;
        let tie = match tie {
            "u" => TieMode::Union,
            "a" => TieMode::Average,
            _ => return Err(bad()),
        };
        let (digits, kind) = if let Some(d) = body.strip_suffix("mst") {
            (d, GraphKind::Mst)
        } else if let Some(d) = body.strip_suffix("nn") {
            (d, GraphKind::Nn)
        } else {
            return Err(bad());
        };
        let k: usize = digits.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(Self { kind, k, tie })
    }

    /// The three graphs used when no graph is named.
    pub fn default_menu() -> [GraphSpec; 3] {
        [
            GraphSpec::new(GraphKind::Nn, 1, TieMode::Union),
            GraphSpec::new(GraphKind::Mst, 5, TieMode::Union),
            GraphSpec::new(GraphKind::Nn, 5, TieMode::Average),
        ]
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            GraphKind::Mst => "mst",
            GraphKind::Nn => "nn",
        };
        let tie = match self.tie {
            TieMode::Union => "u",
            TieMode::Average => "a",
        };
        write!(f, "{}{}-{}", self.k, kind, tie)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub spec: Option<GraphSpec>,
    pub metric: Metric,
    pub flags: Vec<String>,
    /// Number of distinct values the graph was built on.
    pub distinct: usize,
}

impl SimilarityGraph {
    /// Graph from an explicit edge list. Rejects self-loops, duplicates and
    /// weights outside (0, 1].
    pub fn from_edges(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u == e.v || e.u >= n || e.v >= n {
                return Err(invalid("edge endpoints must be distinct nodes below n"));
            }
            if !(e.w > 0.0 && e.w <= 1.0) {
                return Err(invalid("edge weights must lie in (0, 1]"));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(invalid("duplicate edge"));
            }
        }
        Ok(Self {
            n,
            edges,
            spec: None,
            metric: Metric::Custom,
            flags: Vec::new(),
            distinct: n,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.u] += e.w;
            d[e.v] += e.w;
        }
        d
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["u", "v", "weight"])?;
        for e in &self.edges {
            w.write_record([e.u.to_string(), e.v.to_string(), e.w.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Groups of observations at distance zero from each other, in order of
/// first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieClasses {
    pub class_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

pub fn tie_classes(d: &DistanceMatrix) -> TieClasses {
    let mut class_of = vec![0; d.n()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..d.n() {
        match members.iter().position(|m| d.get(m[0], i) == 0.0) {
            Some(c) => {
                class_of[i] = c;
                members[c].push(i);
            }
            None => {
                class_of[i] = members.len();
                members.push(vec![i]);
            }
        }
    }
    TieClasses { class_of, members }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Union of all optimal k-NN graphs on the distinct values.
fn distinct_knn(dist: &dyn Fn(usize, usize) -> f64, c: usize, k: usize) -> Vec<(usize, usize)> {
    let mut adj = vec![vec![false; c]; c];
    let mut row: Vec<f64> = Vec::with_capacity(c);
    for u in 0..c {
        row.clear();
        row.extend((0..c).filter(|&v| v != u).map(|v| dist(u, v)));
        if row.is_empty() {
            continue;
        }
        let threshold = if row.len() <= k {
            f64::INFINITY
        } else {
            let (_, kth, _) = row.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
            *kth
        };
        for v in 0..c {
            if v != u && dist(u, v) <= threshold {
                adj[u][v] = true;
                adj[v][u] = true;
            }
        }
    }
    let mut out = Vec::new();
    for u in 0..c {
        for v in u + 1..c {
            if adj[u][v] {
                out.push((u, v));
            }
        }
    }
    out
}

/// Union of all optimal k-MST layers on the distinct values. The flag is set
/// when some layer could not span all values.
fn distinct_kmst(dist: &dyn Fn(usize, usize) -> f64, c: usize, k: usize) -> (Vec<(usize, usize)>, bool) {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(c * c.saturating_sub(1) / 2);
    for u in 0..c {
        for v in u + 1..c {
            cand.push((dist(u, v), u, v));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = vec![false; cand.len()];
    let mut out = Vec::new();
    let mut disconnected = false;
    for _ in 0..k {
        let mut uf = UnionFind::new(c);
        let mut merges = 0;
        let mut start = 0;
        let mut qualified = Vec::new();
        while start < cand.len() {
            let w = cand[start].0;
            let mut end = start;
            while end < cand.len() && cand[end].0 == w {
                end += 1;
            }
            qualified.clear();
            for idx in start..end {
                if !used[idx] {
                    let (_, u, v) = cand[idx];
                    if uf.find(u) != uf.find(v) {
                        qualified.push(idx);
                    }
                }
            }
            for &idx in &qualified {
                let (_, u, v) = cand[idx];
                if uf.union(u, v) {
                    merges += 1;
                }
                used[idx] = true;
                out.push((u, v));
            }
            start = end;
        }
        if merges + 1 < c {
            disconnected = true;
        }
    }
    out.sort_unstable();
    (out, disconnected)
}

/// Builds the k-NN graph. Union links every value to all values within its
/// k-th smallest distance to another value.
pub fn knn_graph(d: &DistanceMatrix, k: usize, tie: TieMode) -> Result<SimilarityGraph> {
    if k == 0 || k >= d.n() {
        return Err(invalid(format!("k = {k} must satisfy 1 <= k < N = {}", d.n())));
    }
    build(d, GraphSpec::new(GraphKind::Nn, k, tie))
}

/// Builds the k-MST graph: layer i is a minimum spanning tree of the edges
/// not used by layers 1..i-1.
pub fn kmst_graph(d: &DistanceMatrix, k: usize, tie: TieMode) -> Result<SimilarityGraph> {
    if k == 0 || k + 1 > d.n() {
        return Err(invalid(format!("k = {k} must satisfy 1 <= k <= N - 1 = {}", d.n() - 1)));
    }
    build(d, GraphSpec::new(GraphKind::Mst, k, tie))
}

pub fn build_graph(d: &DistanceMatrix, spec: GraphSpec) -> Result<SimilarityGraph> {
    match spec.kind {
        GraphKind::Nn => knn_graph(d, spec.k, spec.tie),
        GraphKind::Mst => kmst_graph(d, spec.k, spec.tie),
    }
}

fn build(d: &DistanceMatrix, spec: GraphSpec) -> Result<SimilarityGraph> {
    let classes = tie_classes(d);
    let c = classes.members.len();
    let reps: Vec<usize> = classes.members.iter().map(|m| m[0]).collect();
    let dist = |u: usize, v: usize| d.get(reps[u], reps[v]);
    let mut flags = Vec::new();
    let links = match spec.kind {
        GraphKind::Nn => distinct_knn(&dist, c, spec.k),
        GraphKind::Mst => {
            let (links, disconnected) = distinct_kmst(&dist, c, spec.k);
            if disconnected {
                flags.push("disconnected-layer".to_string());
            }
            links
        }
    };
    let edges = lift(&classes, &links, spec);
    Ok(SimilarityGraph {
        n: d.n(),
        edges,
        spec: Some(spec),
        metric: d.metric(),
        flags,
        distinct: c,
    })
}

/// Observation-level edges from links between distinct values.
pub fn lift(classes: &TieClasses, links: &[(usize, usize)], spec: GraphSpec) -> Vec<Edge> {
    let mut edges = Vec::new();
    for m in &classes.members {
        let size = m.len() as f64;
        let w = match spec.tie {
            TieMode::Union => 1.0,
            TieMode::Average => (2.0 * spec.k as f64 / size).min(1.0),
        };
        for (a, &u) in m.iter().enumerate() {
            for &v in &m[a + 1..] {
                edges.push(Edge { u, v, w });
            }
        }
    }
    for &(a, b) in links {
        let (ma, mb) = (&classes.members[a], &classes.members[b]);
        let w = match spec.tie {
            TieMode::Union => 1.0,
            TieMode::Average => 1.0 / (ma.len() * mb.len()) as f64,
        };
        for &u in ma {
            for &v in mb {
                edges.push(Edge {
                    u: u.min(v),
                    v: u.max(v),
                    w,
                });
            }
        }
    }
    edges
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeCounts {
    /// Between-sample weight.
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub degrees: Vec<f64>,
    pub total: f64,
}

/// Weighted edge counts for a two-sample membership (labels 0 and 1).
pub fn edge_counts(g: &SimilarityGraph, membership: &[usize]) -> Result<EdgeCounts> {
    if membership.len() != g.n || membership.iter().any(|&m| m > 1) {
        return Err(invalid("edge counts need a two-sample membership of length N"));
    }
    let (mut r, mut r1, mut r2) = (0.0, 0.0, 0.0);
    for e in &g.edges {
        match (membership[e.u], membership[e.v]) {
            (0, 0) => r1 += e.w,
            (1, 1) => r2 += e.w,
            _ => r += e.w,
        }
    }
    Ok(EdgeCounts {
        r,
        r1,
        r2,
        degrees: g.degrees(),
        total: g.total_weight(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullMoments {
    pub e_r: f64,
    pub e_r1: f64,
    pub e_r2: f64,
    pub var_r: f64,
    pub var_r1: f64,
    pub var_r2: f64,
    pub cov_r12: f64,
    /// Total edge weight, the scale for the zero-variance threshold.
    pub scale: f64,
}

/// Relative threshold below which a null variance counts as zero.
pub const EPS_VAR: f64 = 1e-9;

impl NullMoments {
    /// Zero-variance threshold: `EPS_VAR` relative to the total weight plus
    /// the rounding error of the moment formulas, whose terms grow like the
    /// squared weight.
    pub fn eps(&self) -> f64 {
        EPS_VAR * self.scale.max(1.0) + 16.0 * f64::EPSILON * self.scale * self.scale
    }
}

/// Permutation-null moments of the edge counts for a fixed graph.
pub fn null_moments(g: &SimilarityGraph, n1: usize, n2: usize) -> std::result::Result<NullMoments, &'static str> {
    if n1 + n2 != g.n {
        return Err("size-mismatch");
    }
    let big_n = g.n;
    if big_n < 4 {
        return Err("moment-degeneracy");
    }
    let w: f64 = g.total_weight();
    let w2: f64 = g.edges.iter().map(|e| e.w * e.w).sum();
    let deg_sq: f64 = g.degrees().iter().map(|d| d * d).sum();
    let s = deg_sq - 2.0 * w2;
    let rest = w * w - w2 - s;
    let nf = big_n as f64;
    let ff = |m: usize, r: usize| -> f64 { (0..r).map(|i| m as f64 - i as f64).product() };
    let denom = |r: usize| ff(big_n, r);
    let p = |m: usize, r: usize| ff(m, r) / denom(r);
    let var_of = |m: usize| {
        let (p2, p3, p4) = (p(m, 2), p(m, 3), p(m, 4));
        w2 * p2 + s * p3 + rest * p4 - w * w * p2 * p2
    };
    let (p1, p2) = (p(n1, 2), p(n2, 2));
    let q = ff(n1, 2) * ff(n2, 2) / denom(4);
    let var_r1 = var_of(n1);
    let var_r2 = var_of(n2);
    let cov_r12 = rest * q - w * w * p1 * p2;
    Ok(NullMoments {
        e_r: w * 2.0 * (n1 * n2) as f64 / (nf * (nf - 1.0)),
        e_r1: w * p1,
        e_r2: w * p2,
        var_r: var_r1 + var_r2 + 2.0 * cov_r12,
        var_r1,
        var_r2,
        cov_r12,
        scale: w,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeTest {
    Fr,
    Ccs,
    Cf,
    Zc { kappa: f64 },
}

impl EdgeTest {
    pub fn direction(self) -> Direction {
        match self {
            EdgeTest::Fr => Direction::HighMeansSimilar,
            _ => Direction::LowMeansSimilar,
        }
    }
}

/// Allowed values of the max-type weight.
pub const KAPPA_VALUES: [f64; 3] = [1.0, 1.14, 1.31];

pub fn validate_kappa(kappa: f64) -> Result<()> {
    if KAPPA_VALUES.contains(&kappa) {
        Ok(())
    } else {
        Err(invalid(format!("kappa must be one of {KAPPA_VALUES:?}, got {kappa}")))
    }
}

fn standardize(x: f64, mean: f64, var: f64, eps: f64) -> Option<f64> {
    if var <= eps {
        None
    } else {
        Some((x - mean) / var.sqrt())
    }
}

/// Statistic on a prebuilt graph. `membership` uses labels 0 and 1.
pub fn edge_test_on_graph(test: EdgeTest, g: &SimilarityGraph, membership: &[usize]) -> SimilarityOutcome {
    let dir = test.direction();
    let counts = match edge_counts(g, membership) {
        Ok(c) => c,
        Err(e) => return SimilarityOutcome::error(e.to_string(), dir),
    };
    let n2 = membership.iter().filter(|&&m| m == 1).count();
    let n1 = g.n - n2;
    let m = match null_moments(g, n1, n2) {
        Ok(m) => m,
        Err(reason) => return SimilarityOutcome::undefined(reason, dir).with_flags(&g.flags),
    };
    let eps = m.eps();
    let undefined = || {
        SimilarityOutcome::undefined("null-variance-zero", dir)
            .with_flags(&g.flags)
            .with_diag("r", counts.r)
            .with_diag("r1", counts.r1)
            .with_diag("r2", counts.r2)
    };
    let nf = g.n as f64;
    let (a, b) = (n1 as f64 / nf, n2 as f64 / nf);
    let rw = a * counts.r1 + b * counts.r2;
    let e_rw = a * m.e_r1 + b * m.e_r2;
    let var_rw = a * a * m.var_r1 + b * b * m.var_r2 + 2.0 * a * b * m.cov_r12;
    let outcome = match test {
        EdgeTest::Fr => match standardize(counts.r, m.e_r, m.var_r, eps) {
            Some(z) => SimilarityOutcome::ok(z, Some(normal_cdf(z)), dir),
            None => return undefined(),
        },
        EdgeTest::Ccs => match standardize(rw, e_rw, var_rw, eps) {
            Some(z) => SimilarityOutcome::ok(z, Some(1.0 - normal_cdf(z)), dir),
            None => return undefined(),
        },
        EdgeTest::Cf => {
            let (v1, v2, c) = (m.var_r1, m.var_r2, m.cov_r12);
            let half_tr = 0.5 * (v1 + v2);
            let disc = (0.25 * (v1 - v2) * (v1 - v2) + c * c).sqrt();
            if half_tr - disc <= eps {
                return undefined();
            }
            let det = v1 * v2 - c * c;
            let (x1, x2) = (counts.r1 - m.e_r1, counts.r2 - m.e_r2);
            let s = (v2 * x1 * x1 - 2.0 * c * x1 * x2 + v1 * x2 * x2) / det;
            SimilarityOutcome::ok(s, Some(chi2_sf(s, 2.0)), dir)
        }
        EdgeTest::Zc { kappa } => {
            let var_rd = m.var_r1 + m.var_r2 - 2.0 * m.cov_r12;
            let zw = standardize(rw, e_rw, var_rw, eps);
            let zd = standardize(counts.r1 - counts.r2, m.e_r1 - m.e_r2, var_rd, eps);
            match (zw, zd) {
                (Some(zw), Some(zd)) => {
                    let stat = (kappa * zw).max(zd.abs());
                    let p = if kappa > 0.0 {
                        1.0 - normal_cdf(stat / kappa) * (2.0 * normal_cdf(stat) - 1.0)
                    } else {
                        2.0 * (1.0 - normal_cdf(stat))
                    };
                    SimilarityOutcome::ok(stat, Some(p), dir)
                        .with_diag("z_w", zw)
                        .with_diag("z_d", zd)
                }
                _ => return undefined(),
            }
        }
    };
    outcome
        .with_flags(&g.flags)
        .with_diag("r", counts.r)
        .with_diag("r1", counts.r1)
        .with_diag("r2", counts.r2)
}

/// Builds the graph on the pooled sample and evaluates the statistic.
pub fn edge_test(test: EdgeTest, pooled: &PooledSample, spec: GraphSpec, metric: Metric) -> SimilarityOutcome {
    let dir = test.direction();
    if pooled.k() != 2 {
        return SimilarityOutcome::error("two-sample-only", dir);
    }
    if let EdgeTest::Zc { kappa } = test {
        if let Err(e) = validate_kappa(kappa) {
            return SimilarityOutcome::error(e.to_string(), dir);
        }
    }
    let graph = distance_matrix(pooled, metric).and_then(|d| build_graph(&d, spec));
    match graph {
        Ok(g) => edge_test_on_graph(test, &g, pooled.membership()),
        Err(e) => SimilarityOutcome::error(e.to_string(), dir),
    }
}

pub fn fr_statistic(pooled: &PooledSample, spec: GraphSpec, metric: Metric) -> SimilarityOutcome {
    edge_test(EdgeTest::Fr, pooled, spec, metric)
}

pub fn ccs_statistic(pooled: &PooledSample, spec: GraphSpec, metric: Metric) -> SimilarityOutcome {
    edge_test(EdgeTest::Ccs, pooled, spec, metric)
}

pub fn cf_statistic(pooled: &PooledSample, spec: GraphSpec, metric: Metric) -> SimilarityOutcome {
    edge_test(EdgeTest::Cf, pooled, spec, metric)
}

pub fn zc_statistic(pooled: &PooledSample, spec: GraphSpec, metric: Metric, kappa: f64) -> SimilarityOutcome {
    edge_test(EdgeTest::Zc { kappa }, pooled, spec, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pool, CategoricalDataset};
    use crate::outcome::Status;

    fn raw(n: usize, f: impl Fn(usize, usize) -> f64) -> DistanceMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    data[i * n + j] = f(i.min(j), i.max(j));
                }
            }
        }
        DistanceMatrix::from_raw(n, data).unwrap()
    }

    #[test]
    fn spec_parsing_round_trips() {
        for s in ["1nn-u", "5mst-u", "5nn-a", "3mst-a"] {
            assert_eq!(GraphSpec::parse(s).unwrap().to_string(), s);
        }
        assert!(GraphSpec::parse("0nn-u").is_err());
        assert!(GraphSpec::parse("5xx-u").is_err());
    }

    #[test]
    fn mst_union_keeps_tied_edges() {
        // d(0,1)=1, d(0,2)=1, d(1,2)=2
        let d = raw(3, |i, j| if (i, j) == (1, 2) { 2.0 } else { 1.0 });
        let g = kmst_graph(&d, 1, TieMode::Union).unwrap();
        let pairs: Vec<_> = g.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn distinct_distances_give_classical_mst() {
        let pos: [f64; 5] = [0.0, 1.0, 3.0, 7.0, 15.0];
        let d = raw(5, |i, j| (pos[i] - pos[j]).abs());
        let g = kmst_graph(&d, 1, TieMode::Average).unwrap();
        assert_eq!(g.edges.len(), 4);
        assert!(g.edges.iter().all(|e| e.w == 1.0 && e.v == e.u + 1));
    }

    #[test]
    fn path_counts() {
        let g = SimilarityGraph::from_edges(
            3,
            vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 2, w: 1.0 }],
        )
        .unwrap();
        let c = edge_counts(&g, &[0, 1, 0]).unwrap();
        assert_eq!((c.r, c.r1, c.r2), (2.0, 0.0, 0.0));
    }

    #[test]
    fn path_expectation() {
        let g = SimilarityGraph::from_edges(
            4,
            (0..3).map(|i| Edge { u: i, v: i + 1, w: 1.0 }).collect(),
        )
        .unwrap();
        let m = null_moments(&g, 2, 2).unwrap();
        assert!((m.e_r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_has_no_variance() {
        let n = 7;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push(Edge { u, v, w: 1.0 });
            }
        }
        let g = SimilarityGraph::from_edges(n, edges).unwrap();
        let m = null_moments(&g, 3, 4).unwrap();
        for v in [m.var_r1, m.var_r2, m.cov_r12, m.var_r] {
            let v: f64 = v;
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn small_n_is_degenerate() {
        let g = SimilarityGraph::from_edges(3, vec![Edge { u: 0, v: 1, w: 1.0 }]).unwrap();
        assert_eq!(null_moments(&g, 1, 2), Err("moment-degeneracy"));
    }

    #[test]
    fn binary_two_variables_degenerate() {
        let rows1 = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 0], vec![1, 1]];
        let rows2 = vec![vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 0], vec![0, 1]];
        let a = CategoricalDataset::from_rows(&rows1, 2).unwrap();
        let b = CategoricalDataset::from_rows(&rows2, 2).unwrap();
        let pooled = pool(&[a, b]).unwrap();
        let spec = GraphSpec::parse("5nn-u").unwrap();
        for test in [EdgeTest::Fr, EdgeTest::Ccs, EdgeTest::Cf, EdgeTest::Zc { kappa: 1.14 }] {
            let out = edge_test(test, &pooled, spec, Metric::Hamming);
            assert_eq!(out.status, Status::Undefined("null-variance-zero".into()));
        }
        let avg = GraphSpec::parse("1nn-a").unwrap();
        for test in [EdgeTest::Cf, EdgeTest::Zc { kappa: 1.14 }] {
            let out = edge_test(test, &pooled, avg, Metric::Hamming);
            assert_eq!(out.status, Status::Undefined("null-variance-zero".into()));
        }
        assert!(edge_test(EdgeTest::Fr, &pooled, avg, Metric::Hamming).is_ok());
    }

    #[test]
    fn kappa_is_validated() {
        assert!(validate_kappa(1.14).is_ok());
        assert!(validate_kappa(2.0).is_err());
    }
}
