//! Brute-force reference computations for tiny inputs.
//!
//! Nothing here calls the production statistics: the functions take plain
//! slices and enumerate label assignments, matchings, optimal graphs and
//! transport vertices directly. [`verify_suite`] compares them with the
//! production code on random instances.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest input each oracle accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub permutations: usize,
    pub matchings: usize,
    pub graphs: usize,
    pub transport: usize,
}

pub const BUDGET: OracleBudget = OracleBudget {
    permutations: 8,
    matchings: 10,
    graphs: 7,
    transport: 4,
};

/// Cap on the number of optimal graphs listed before giving up.
const GRAPH_LIMIT: usize = 200_000;

fn over(what: &str, n: usize, max: usize) -> String {
    format!("{what}: input size {n} exceeds the oracle budget {max}")
}

/// Calls `f` with every assignment of labels `0..k` to `n` slots using
/// exactly `sizes[l]` copies of label `l`.
fn for_each_assignment(sizes: &[usize], f: &mut dyn FnMut(&[usize])) {
    fn rec(pos: usize, left: &mut [usize], cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if left.iter().all(|&x| x == 0) {
            f(cur);
            return;
        }
        for l in 0..left.len() {
            if left[l] > 0 {
                left[l] -= 1;
                cur.push(l);
                rec(pos + 1, left, cur, f);
                cur.pop();
                left[l] += 1;
            }
        }
    }
    let mut left = sizes.to_vec();
    rec(0, &mut left, &mut Vec::new(), f);
}

/// Exact null moments of the weighted edge counts (R, R1, R2).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMoments {
    pub mean: [f64; 3],
    pub var: [f64; 3],
    pub cov_r1_r2: f64,
    pub assignments: usize,
}

/// Moments of the between-sample, within-first and within-second edge
/// weights over all equally likely relabellings with sizes `(n1, n2)`.
pub fn edge_count_moments(n: usize, edges: &[(usize, usize, f64)], n1: usize) -> Result<EdgeMoments, String> {
    if n > BUDGET.permutations {
        return Err(over("permutation moments", n, BUDGET.permutations));
    }
    if n1 > n {
        return Err("first sample larger than N".into());
    }
    let mut samples: Vec<[f64; 3]> = Vec::new();
    for_each_assignment(&[n1, n - n1], &mut |lab| {
        let mut x = [0.0; 3];
        for &(u, v, w) in edges {
            match (lab[u], lab[v]) {
                (0, 0) => x[1] += w,
                (1, 1) => x[2] += w,
                _ => x[0] += w,
            }
        }
        samples.push(x);
    });
    let m = samples.len() as f64;
    let mut mean = [0.0; 3];
    for s in &samples {
        for i in 0..3 {
            mean[i] += s[i] / m;
        }
    }
    let mut var = [0.0; 3];
    let mut cov = 0.0;
    for s in &samples {
        for i in 0..3 {
            var[i] += (s[i] - mean[i]).powi(2) / m;
        }
        cov += (s[1] - mean[1]) * (s[2] - mean[2]) / m;
    }
    Ok(EdgeMoments { mean, var, cov_r1_r2: cov, assignments: samples.len() })
}

/// Exact null mean and covariance of the off-diagonal pair counts of a
/// fixed set of disjoint pairs, in the order (0,1), (0,2), ..., (k-2,k-1).
pub fn cross_count_moments(pairs: &[(usize, usize)], sizes: &[usize]) -> Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    let n: usize = sizes.iter().sum();
    if n > BUDGET.permutations {
        return Err(over("cross-count moments", n, BUDGET.permutations));
    }
    let k = sizes.len();
    let cells: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for_each_assignment(sizes, &mut |lab| {
        let mut a = vec![0.0; cells.len()];
        for &(u, v) in pairs {
            let (x, y) = (lab[u].min(lab[v]), lab[u].max(lab[v]));
            if x != y {
                let idx = cells.iter().position(|&c| c == (x, y)).unwrap();
                a[idx] += 1.0;
            }
        }
        samples.push(a);
    });
    let m = samples.len() as f64;
    let len = cells.len();
    let mut mean = vec![0.0; len];
    for s in &samples {
        for i in 0..len {
            mean[i] += s[i] / m;
        }
    }
    let mut cov = vec![vec![0.0; len]; len];
    for s in &samples {
        for i in 0..len {
            for j in 0..len {
                cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]) / m;
            }
        }
    }
    Ok((mean, cov))
}

/// Weight of a minimum-weight matching covering all but at most one node,
/// by exhaustive search. `d` is a row-major `n x n` matrix.
pub fn brute_force_matching(n: usize, d: &[f64]) -> Result<f64, String> {
    if n > BUDGET.matchings {
        return Err(over("matching", n, BUDGET.matchings));
    }
    fn rec(free: &mut Vec<usize>, skip_left: bool, n: usize, d: &[f64]) -> f64 {
        if free.len() < 2 {
            return 0.0;
        }
        let first = free.remove(0);
        let mut best = f64::INFINITY;
        for idx in 0..free.len() {
            let other = free.remove(idx);
            best = best.min(d[first * n + other] + rec(free, skip_left, n, d));
            free.insert(idx, other);
        }
        if skip_left {
            best = best.min(rec(free, false, n, d));
        }
        free.insert(0, first);
        best
    }
    let mut free: Vec<usize> = (0..n).collect();
    Ok(rec(&mut free, n % 2 == 1, n, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleGraph {
    Nn,
    Mst,
}

type EdgeSet = BTreeSet<(usize, usize)>;

fn k_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut with: Vec<Vec<usize>> = k_subsets(&items[1..], k - 1);
    for s in &mut with {
        s.insert(0, items[0]);
    }
    with.extend(k_subsets(&items[1..], k));
    with
}

fn find(parent: &mut [usize], x: usize) -> usize {
    if parent[x] == x {
        x
    } else {
        let r = find(parent, parent[x]);
        parent[x] = r;
        r
    }
}

/// All minimum spanning forests of the graph with edge list `avail`.
fn all_min_forests(n: usize, avail: &[(usize, usize, f64)]) -> Vec<EdgeSet> {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut comps = n;
    for &(u, v, _) in avail {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            comps -= 1;
        }
    }
    let size = n - comps;
    let mut best = f64::INFINITY;
    let mut out: Vec<EdgeSet> = Vec::new();
    fn rec(
        i: usize,
        chosen: &mut Vec<usize>,
        weight: f64,
        size: usize,
        n: usize,
        avail: &[(usize, usize, f64)],
        best: &mut f64,
        out: &mut Vec<EdgeSet>,
    ) {
        if chosen.len() == size {
            let mut parent: Vec<usize> = (0..n).collect();
            for &c in chosen.iter() {
                let (u, v, _) = avail[c];
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a == b {
                    return;
                }
                parent[a] = b;
            }
            if weight < *best - 1e-12 {
                *best = weight;
                out.clear();
            }
            if (weight - *best).abs() <= 1e-12 {
                out.push(chosen.iter().map(|&c| (avail[c].0, avail[c].1)).collect());
            }
            return;
        }
        if i == avail.len() || avail.len() - i < size - chosen.len() {
            return;
        }
        chosen.push(i);
        rec(i + 1, chosen, weight + avail[i].2, size, n, avail, best, out);
        chosen.pop();
        rec(i + 1, chosen, weight, size, n, avail, best, out);
    }
    rec(0, &mut Vec::new(), 0.0, size, n, avail, &mut best, &mut out);
    out
}

/// Every optimal k-NN or k-MST graph on `n` points with distance matrix
/// `d`. A k-NN graph joins each point to some set of k others none of which
/// is farther than a point left out; a k-MST graph stacks k minimum
/// spanning forests, each avoiding the edges of the earlier ones.
pub fn optimal_graphs(n: usize, d: &[f64], kind: OracleGraph, k: usize) -> Result<Vec<EdgeSet>, String> {
    if n > BUDGET.graphs {
        return Err(over("optimal graphs", n, BUDGET.graphs));
    }
    let mut graphs: BTreeSet<EdgeSet> = BTreeSet::new();
    match kind {
        OracleGraph::Nn => {
            let mut choices: Vec<Vec<Vec<usize>>> = Vec::new();
            for i in 0..n {
                let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let ok: Vec<Vec<usize>> = k_subsets(&others, k.min(others.len()))
                    .into_iter()
                    .filter(|s| {
                        let inside = s.iter().map(|&j| d[i * n + j]).fold(0.0, f64::max);
                        others.iter().filter(|j| !s.contains(j)).all(|&j| d[i * n + j] >= inside)
                    })
                    .collect();
                choices.push(ok);
            }
            let total: usize = choices.iter().map(Vec::len).product();
            if total > GRAPH_LIMIT {
                return Err(format!("{total} optimal graphs exceed the enumeration limit"));
            }
            let mut idx = vec![0usize; n];
            loop {
                let mut g = EdgeSet::new();
                for i in 0..n {
                    for &j in &choices[i][idx[i]] {
                        g.insert((i.min(j), i.max(j)));
                    }
                }
                graphs.insert(g);
                let mut p = 0;
                loop {
                    if p == n {
                        return Ok(graphs.into_iter().collect());
                    }
                    idx[p] += 1;
                    if idx[p] < choices[p].len() {
                        break;
                    }
                    idx[p] = 0;
                    p += 1;
                }
            }
        }
        OracleGraph::Mst => {
            let all: Vec<(usize, usize, f64)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .map(|(u, v)| (u, v, d[u * n + v]))
                .collect();
            let mut frontier: BTreeSet<EdgeSet> = BTreeSet::from([EdgeSet::new()]);
            for _ in 0..k {
                let mut next = BTreeSet::new();
                for used in &frontier {
                    let avail: Vec<(usize, usize, f64)> =
                        all.iter().copied().filter(|&(u, v, _)| !used.contains(&(u, v))).collect();
                    for f in all_min_forests(n, &avail) {
                        let mut g = used.clone();
                        g.extend(f);
                        next.insert(g);
                    }
                    if next.len() > GRAPH_LIMIT {
                        return Err("optimal graphs exceed the enumeration limit".into());
                    }
                }
                frontier = next;
            }
            graphs = frontier;
        }
    }
    Ok(graphs.into_iter().collect())
}

/// Layer-by-layer union for k-MST: each layer is the union of all minimum
/// spanning forests of the edges left after removing every earlier layer.
pub fn layered_mst_union(n: usize, d: &[f64], k: usize) -> Result<EdgeSet, String> {
    if n > BUDGET.graphs {
        return Err(over("optimal graphs", n, BUDGET.graphs));
    }
    let mut used = EdgeSet::new();
    for _ in 0..k {
        let avail: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|e| !used.contains(e))
            .map(|(u, v)| (u, v, d[u * n + v]))
            .collect();
        let layer = union_of(&all_min_forests(n, &avail));
        used.extend(layer);
    }
    Ok(used)
}

pub fn union_of(graphs: &[EdgeSet]) -> EdgeSet {
    graphs.iter().flatten().copied().collect()
}

/// Share of optimal graphs containing each edge.
pub fn inclusion_frequency(graphs: &[EdgeSet]) -> BTreeMap<(usize, usize), f64> {
    let mut out = BTreeMap::new();
    for g in graphs {
        for &e in g {
            *out.entry(e).or_insert(0.0) += 1.0 / graphs.len() as f64;
        }
    }
    out
}

/// Minimum expected cost over all vertices of the transportation polytope
/// with the given marginals (each normalised to sum one).
pub fn transport_vertex_enumeration(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<f64, String> {
    let (m, n) = (supply.len(), demand.len());
    if m > BUDGET.transport || n > BUDGET.transport {
        return Err(over("transport", m.max(n), BUDGET.transport));
    }
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    let a: Vec<f64> = supply.iter().map(|x| x / sa).collect();
    let b: Vec<f64> = demand.iter().map(|x| x / sb).collect();
    let cells: Vec<usize> = (0..m * n).collect();
    let rank = m + n - 1;
    let mut best = f64::INFINITY;
    for basis in k_subsets(&cells, rank) {
        // constraints: rows 0..m, columns 0..n-1 (the last column is implied)
        let rows = m + n - 1;
        let mut mat = vec![vec![0.0; rank + 1]; rows];
        for (c, &cell) in basis.iter().enumerate() {
            let (i, j) = (cell / n, cell % n);
            mat[i][c] = 1.0;
            if j < n - 1 {
                mat[m + j][c] = 1.0;
            }
        }
        for i in 0..m {
            mat[i][rank] = a[i];
        }
        for j in 0..n - 1 {
            mat[m + j][rank] = b[j];
        }
        let Some(x) = solve_square(mat) else { continue };
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let c: f64 = basis.iter().zip(&x).map(|(&cell, &v)| cost[cell] * v.max(0.0)).sum();
        best = best.min(c);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err("no feasible vertex".into())
    }
}

/// Gaussian elimination with partial pivoting on an augmented square
/// system; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Outcome of one comparison between an oracle and the production code.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, instances: usize, worst: f64, tol: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: worst <= tol,
        detail: format!("{instances} instances, max deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

/// Runs every oracle against the production code on random instances.
pub fn verify_suite(seed: u64, instances: usize) -> Vec<Check> {
    use crate::crossmatch::{crossmatch_null_moments, min_weight_matching, MatchPolicy};
    use crate::distances::DistanceMatrix;
    use crate::otdd::transport::transport_exact;
    use crate::simgraph::{build_graph, null_moments, Edge, GraphKind, GraphSpec, SimilarityGraph, TieMode};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // edge-count moments
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..instances {
        let n = rng.gen_range(4..=BUDGET.permutations);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.5) {
                    edges.push((u, v, [1.0, 0.5, 0.25][rng.gen_range(0..3)]));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, 1, 1.0));
        }
        let g = SimilarityGraph::from_edges(n, edges.iter().map(|&(u, v, w)| Edge { u, v, w }).collect()).unwrap();
        for n1 in 1..n {
            let o = edge_count_moments(n, &edges, n1).unwrap();
            let p = null_moments(&g, n1, n - n1).unwrap();
            let diffs = [
                o.mean[0] - p.e_r,
                o.mean[1] - p.e_r1,
                o.mean[2] - p.e_r2,
                o.var[0] - p.var_r,
                o.var[1] - p.var_r1,
                o.var[2] - p.var_r2,
                o.cov_r1_r2 - p.cov_r12,
            ];
            worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
            count += 1;
        }
    }
    out.push(check("edge-count null moments vs enumeration", count, worst, 1e-10));

    // matching weight
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let n = rng.gen_range(2..=BUDGET.matchings);
        let mut d = vec![0.0; n * n];
        let hamming_like = t % 2 == 0;
        let rows: Vec<Vec<u32>> = (0..n).map(|_| (0..4).map(|_| rng.gen_range(0..3)).collect()).collect();
        for u in 0..n {
            for v in u + 1..n {
                let x = if hamming_like {
                    rows[u].iter().zip(&rows[v]).filter(|(a, b)| a != b).count() as f64
                } else {
                    rng.gen_range(1..20) as f64
                };
                d[u * n + v] = x;
                d[v * n + u] = x;
            }
        }
        let brute = brute_force_matching(n, &d).unwrap();
        let dm = DistanceMatrix::from_raw(n, d).unwrap();
        let m = min_weight_matching(&dm, MatchPolicy::Deterministic).unwrap();
        worst = worst.max((m.weight - brute).abs());
    }
    out.push(check("blossom matching weight vs brute force", instances, worst, 0.0));

    // cross-count moments
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..instances.div_ceil(4) {
        let n = rng.gen_range(4..=BUDGET.permutations);
        let k = rng.gen_range(2..=3.min(n / 2).max(2));
        let mut sizes = vec![1; k];
        for _ in k..n {
            sizes[rng.gen_range(0..k)] += 1;
        }
        let pairs: Vec<(usize, usize)> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
        let (om, oc) = cross_count_moments(&pairs, &sizes).unwrap();
        let (pm, pc) = crossmatch_null_moments(&sizes, n / 2);
        for i in 0..om.len() {
            worst = worst.max((om[i] - pm[i]).abs());
            for j in 0..om.len() {
                worst = worst.max((oc[i][j] - pc[i][j]).abs());
            }
        }
        count += 1;
    }
    out.push(check("cross-count null moments vs enumeration", count, worst, 1e-10));

    // optimal graph unions on distinct points
    let mut mismatches = 0;
    let mut count = 0;
    let mut first_mismatch = String::new();
    let mut realization_extra = 0;
    let mut mst_multi = 0;
    for t in 0..instances.div_ceil(4) {
        let n = rng.gen_range(3..=6);
        let mut d = vec![0.0; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let x = rng.gen_range(1..4) as f64;
                d[u * n + v] = x;
                d[v * n + u] = x;
            }
        }
        let k = rng.gen_range(1..=2.min(n - 2).max(1));
        let (expected, kind) = if t % 2 == 0 {
            match optimal_graphs(n, &d, OracleGraph::Nn, k) {
                Ok(g) => (union_of(&g), GraphKind::Nn),
                Err(_) => continue,
            }
        } else {
            let layered = layered_mst_union(n, &d, k).unwrap();
            if k > 1 {
                if let Ok(g) = optimal_graphs(n, &d, OracleGraph::Mst, k) {
                    mst_multi += 1;
                    realization_extra += usize::from(union_of(&g) != layered);
                }
            }
            (layered, GraphKind::Mst)
        };
        let dm = DistanceMatrix::from_raw(n, d.clone()).unwrap();
        let g = build_graph(&dm, GraphSpec::new(kind, k, TieMode::Union)).unwrap();
        let got: EdgeSet = g.edges.iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
        if got != expected {
            mismatches += 1;
            if first_mismatch.is_empty() {
                first_mismatch = format!("; first: {kind:?} k={k} n={n} got {got:?} expected {expected:?}");
            }
        }
        count += 1;
    }
    out.push(Check {
        name: "union graph vs optimal-graph enumeration".into(),
        passed: mismatches == 0,
        detail: format!("{count} instances, {mismatches} mismatches{first_mismatch}"),
    });
    out.push(Check {
        name: "k-MST layered union vs union over whole realizations (informational)".into(),
        passed: true,
        detail: format!("{realization_extra} of {mst_multi} multi-layer instances differ"),
    });

    // average-mode weights vs inclusion frequency over raw-level optimal graphs
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..instances.div_ceil(8) {
        let n = rng.gen_range(4..=BUDGET.graphs);
        let rows: Vec<[u32; 2]> = (0..n).map(|_| [rng.gen_range(0..2), rng.gen_range(0..2)]).collect();
        let mut d = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                d[u * n + v] = (0..2).filter(|&c| rows[u][c] != rows[v][c]).count() as f64;
            }
        }
        let Ok(graphs) = optimal_graphs(n, &d, OracleGraph::Mst, 1) else { continue };
        let freq = inclusion_frequency(&graphs);
        let dm = DistanceMatrix::from_raw(n, d).unwrap();
        let g = build_graph(&dm, GraphSpec::new(GraphKind::Mst, 1, TieMode::Average)).unwrap();
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in &g.edges {
            weights.insert((e.u.min(e.v), e.u.max(e.v)), e.w);
        }
        let keys: BTreeSet<(usize, usize)> = freq.keys().chain(weights.keys()).copied().collect();
        for key in keys {
            let a = freq.get(&key).copied().unwrap_or(0.0);
            let b = weights.get(&key).copied().unwrap_or(0.0);
            worst = worst.max((a - b).abs());
        }
        count += 1;
    }
    out.push(Check {
        name: "1-MST average weights vs inclusion frequency of optimal trees (informational)".into(),
        passed: true,
        detail: format!("{count} instances, max deviation {worst:.3}"),
    });

    // exact transport
    let mut worst: f64 = 0.0;
    for _ in 0..instances.div_ceil(4) {
        let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let total = 12;
        let split = |rng: &mut ChaCha8Rng, parts: usize| {
            let mut v = vec![1i64; parts];
            for _ in parts..total {
                v[rng.gen_range(0..parts)] += 1;
            }
            v
        };
        let a = split(&mut rng, m);
        let b = split(&mut rng, n);
        let cost: Vec<f64> = (0..m * n).map(|_| rng.gen_range(0..5) as f64).collect();
        let af: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let bf: Vec<f64> = b.iter().map(|&x| x as f64).collect();
        let o = transport_vertex_enumeration(&af, &bf, &cost).unwrap();
        let p = transport_exact(&a, &b, &cost).unwrap();
        worst = worst.max((o - p.cost).abs());
    }
    out.push(check("exact transport vs vertex enumeration", instances.div_ceil(4), worst, 1e-9));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        // triangle, sizes (2,1): R counts the two edges to the singleton
        let tri = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)];
        let m = edge_count_moments(3, &tri, 2).unwrap();
        assert_eq!(m.assignments, 3);
        assert!((m.mean[0] - 2.0).abs() < 1e-12);
        // complete graph on four nodes, sizes (2,2): R1 is always 1
        let k4: Vec<(usize, usize, f64)> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v, 1.0))).collect();
        let m = edge_count_moments(4, &k4, 2).unwrap();
        assert!(m.var[1].abs() < 1e-12);
        let (mean, _) = cross_count_moments(&[(0, 1), (2, 3)], &[2, 2]).unwrap();
        assert!((mean[0] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn graph_enumeration_examples() {
        let eq = [0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let trees = optimal_graphs(3, &eq, OracleGraph::Mst, 1).unwrap();
        assert_eq!(trees.len(), 3);
        assert_eq!(union_of(&trees).len(), 3);
        let distinct = [0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0];
        assert_eq!(optimal_graphs(3, &distinct, OracleGraph::Mst, 1).unwrap().len(), 1);
        // the four binary points of two variables under Hamming distance
        let pts = [[0, 0], [0, 1], [1, 0], [1, 1]];
        let mut d = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                d[i * 4 + j] = (0..2).filter(|&c| pts[i][c] != pts[j][c]).count() as f64;
            }
        }
        let u = union_of(&optimal_graphs(4, &d, OracleGraph::Nn, 1).unwrap());
        assert_eq!(u, EdgeSet::from([(0, 1), (0, 2), (1, 3), (2, 3)]));
        assert!(optimal_graphs(8, &[0.0; 64], OracleGraph::Nn, 1).is_err());
    }

    #[test]
    fn matching_and_transport_examples() {
        let d = [0.0, 1.0, 5.0, 5.0, 1.0, 0.0, 5.0, 5.0, 5.0, 5.0, 0.0, 2.0, 5.0, 5.0, 2.0, 0.0];
        assert_eq!(brute_force_matching(4, &d).unwrap(), 3.0);
        let c = transport_vertex_enumeration(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn suite_passes() {
        for c in verify_suite(3, 40) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
