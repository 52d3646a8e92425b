//! Discrete optimal transport: an exact transportation simplex on integer
//! masses and a log-domain Sinkhorn solver.

use crate::error::{Error, Result};

/// Sparse coupling between two finite supports.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    /// `(row, column, mass)` for every non-zero entry.
    pub entries: Vec<(usize, usize, f64)>,
    pub row_marginal: Vec<f64>,
    pub col_marginal: Vec<f64>,
    /// Expected cost under the plan.
    pub cost: f64,
}

/// Exact optimal transport between integer supplies and demands with equal
/// totals. Masses are normalised by the total in the returned plan.
pub fn transport_exact(supply: &[i64], demand: &[i64], cost: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::Transport("empty support or cost shape mismatch".into()));
    }
    if supply.iter().chain(demand).any(|&x| x < 0) {
        return Err(Error::Transport("negative mass".into()));
    }
    let total: i64 = supply.iter().sum();
    if total != demand.iter().sum::<i64>() || total == 0 {
        return Err(Error::Transport("supply and demand totals differ".into()));
    }
    let mut s = Simplex::new(m, n, cost);
    s.northwest(supply, demand);
    s.optimize()?;
    let t = total as f64;
    let mut entries: Vec<(usize, usize, f64)> = s
        .cells
        .iter()
        .filter(|c| c.flow > 0)
        .map(|c| (c.i, c.j, c.flow as f64 / t))
        .collect();
    entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let exact: f64 = s
        .cells
        .iter()
        .map(|c| c.flow as f64 * cost[c.i * n + c.j])
        .sum::<f64>()
        / t;
    Ok(TransportPlan {
        entries,
        row_marginal: supply.iter().map(|&x| x as f64 / t).collect(),
        col_marginal: demand.iter().map(|&x| x as f64 / t).collect(),
        cost: exact,
    })
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    i: usize,
    j: usize,
    flow: i64,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    cells: Vec<Cell>,
    /// Basis cells incident to each node; rows are `0..m`, columns `m..m+n`.
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(m: usize, n: usize, cost: &'a [f64]) -> Self {
        Self {
            m,
            n,
            cost,
            cells: Vec::with_capacity(m + n - 1),
            adj: vec![Vec::new(); m + n],
            u: vec![0.0; m],
            v: vec![0.0; n],
        }
    }

    fn add_cell(&mut self, i: usize, j: usize, flow: i64) -> usize {
        let id = self.cells.len();
        self.cells.push(Cell { i, j, flow });
        self.adj[i].push(id);
        self.adj[self.m + j].push(id);
        id
    }

    /// Staircase starting basis with exactly m + n - 1 cells.
    fn northwest(&mut self, supply: &[i64], demand: &[i64]) {
        let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]);
            self.add_cell(i, j, x);
            s[i] -= x;
            d[j] -= x;
            if i == self.m - 1 && j == self.n - 1 {
                break;
            }
            if (s[i] == 0 && i < self.m - 1) || j == self.n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    fn potentials(&mut self) {
        let mut done = vec![false; self.m + self.n];
        let mut stack = vec![0usize];
        done[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &id in &self.adj[node] {
                let c = self.cells[id];
                let (row, col) = (c.i, self.m + c.j);
                let other = if node == row { col } else { row };
                if done[other] {
                    continue;
                }
                done[other] = true;
                let cij = self.cost[c.i * self.n + c.j];
                if other == col {
                    self.v[c.j] = cij - self.u[c.i];
                } else {
                    self.u[c.i] = cij - self.v[c.j];
                }
                stack.push(other);
            }
        }
    }

    /// Basis cells on the tree path from column node `m + j` to row `i`.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let mut parent = vec![usize::MAX; total];
        let mut via = vec![usize::MAX; total];
        let mut stack = vec![i];
        parent[i] = i;
        while let Some(node) = stack.pop() {
            if node == self.m + j {
                break;
            }
            for &id in &self.adj[node] {
                let c = self.cells[id];
                let other = if node == c.i { self.m + c.j } else { c.i };
                if parent[other] == usize::MAX {
                    parent[other] = node;
                    via[other] = id;
                    stack.push(other);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = self.m + j;
        while node != i {
            out.push(via[node]);
            node = parent[node];
        }
        out
    }

    fn optimize(&mut self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let scale = self.cost.iter().fold(0.0f64, |a, &c| a.max(c.abs())).max(1.0);
        let tol = 1e-11 * scale;
        let block = ((m * n) as f64).sqrt().ceil() as usize + 1;
        let limit = 50 * (m * n + m + n) + 10_000;
        let mut pos = 0usize;
        for _ in 0..limit {
            self.potentials();
            let mut best: Option<(f64, usize)> = None;
            let mut scanned = 0;
            while scanned < m * n {
                let end = (scanned + block).min(m * n);
                for step in scanned..end {
                    let idx = (pos + step) % (m * n);
                    let (i, j) = (idx / n, idx % n);
                    let rc = self.cost[idx] - self.u[i] - self.v[j];
                    if rc < -tol && best.map_or(true, |b| rc < b.0) {
                        best = Some((rc, idx));
                    }
                }
                scanned = end;
                if best.is_some() {
                    break;
                }
            }
            let Some((_, idx)) = best else {
                return Ok(());
            };
            pos = (pos + scanned) % (m * n);
            let (i, j) = (idx / n, idx % n);
            let path = self.path(i, j);
            // The first path cell touches column j and loses flow; signs alternate.
            let mut theta = i64::MAX;
            let mut leave = usize::MAX;
            for (k, &id) in path.iter().enumerate() {
                if k % 2 == 0 && self.cells[id].flow < theta {
                    theta = self.cells[id].flow;
                    leave = id;
                }
            }
            for (k, &id) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.cells[id].flow -= theta;
                } else {
                    self.cells[id].flow += theta;
                }
            }
            let old = self.cells[leave];
            self.adj[old.i].retain(|&x| x != leave);
            self.adj[m + old.j].retain(|&x| x != leave);
            self.cells[leave] = Cell { i, j, flow: theta };
            self.adj[i].push(leave);
            self.adj[m + j].push(leave);
        }
        Err(Error::Transport("iteration limit reached".into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornResult {
    pub plan: TransportPlan,
    pub iterations: usize,
    /// Dual objective after every full iteration.
    pub dual_trace: Vec<f64>,
}

pub const SINKHORN_MAX_ITER: usize = 5000;
pub const SINKHORN_TOL: f64 = 1e-6;
/// Iterations per warm-start stage.
const SINKHORN_WARM_ITER: usize = 50;
const SINKHORN_MAX_OMEGA: f64 = 1.95;

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Entropic transport with regularisation `eps_rel * mean(cost)`, iterated in
/// the log domain until the row marginals match to `SINKHORN_TOL` in L1.
/// At most `SINKHORN_MAX_ITER` sweeps in total, including the warm start.
///
/// Sweeps are over-relaxed. The factor starts from the error ratio of the
/// last plain sweep and creeps towards `SINKHORN_MAX_OMEGA` while relaxed
/// sweeps keep raising the dual objective. A relaxed sweep that would lower
/// it is replaced by a plain one and the factor is reset, so the dual trace
/// is non-decreasing.
pub fn sinkhorn(a: &[f64], b: &[f64], cost: &[f64], eps_rel: f64) -> std::result::Result<SinkhornResult, String> {
    let (m, n) = (a.len(), b.len());
    if cost.len() != m * n || m == 0 || n == 0 {
        return Err("cost shape mismatch".into());
    }
    let mean = cost.iter().sum::<f64>() / cost.len() as f64;
    if mean == 0.0 {
        let entries = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, a[i] * b[j]))
            .filter(|e| e.2 > 0.0)
            .collect();
        return Ok(SinkhornResult {
            plan: TransportPlan {
                entries,
                row_marginal: a.to_vec(),
                col_marginal: b.to_vec(),
                cost: 0.0,
            },
            iterations: 0,
            dual_trace: Vec::new(),
        });
    }
    let eps = eps_rel * mean;
    let (la, lb): (Vec<f64>, Vec<f64>) = (a.iter().map(|x| x.ln()).collect(), b.iter().map(|x| x.ln()).collect());
    // Row-marginal L1 error and dual objective.
    let evaluate = |f: &[f64], g: &[f64], eps: f64| -> (f64, f64) {
        let mut err = 0.0;
        let mut mass = 0.0;
        for i in 0..m {
            let r: f64 = (0..n).map(|j| ((f[i] + g[j] - cost[i * n + j]) / eps).exp()).sum();
            err += (r - a[i]).abs();
            mass += r;
        }
        let dual = a.iter().zip(f).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(g).map(|(x, y)| x * y).sum::<f64>()
            - eps * mass
            + eps;
        (err, dual)
    };
    let sweep = |f: &mut [f64], g: &mut [f64], eps: f64, omega: f64| {
        for i in 0..m {
            let row = &cost[i * n..(i + 1) * n];
            let fi = eps * la[i] - eps * log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps));
            f[i] += omega * (fi - f[i]);
        }
        for j in 0..n {
            let gj = eps * lb[j] - eps * log_sum_exp((0..m).map(|i| (f[i] - cost[i * n + j]) / eps));
            g[j] += omega * (gj - g[j]);
        }
    };
    let step = |f: &mut Vec<f64>, g: &mut Vec<f64>, solver: &mut Relaxation, eps: f64| -> (f64, f64) {
        let omega = solver.omega;
        let (mut f1, mut g1) = (f.clone(), g.clone());
        sweep(&mut f1, &mut g1, eps, omega);
        let mut out = evaluate(&f1, &g1, eps);
        if omega > 1.0 && !(out.1 >= solver.dual) {
            (f1, g1) = (f.clone(), g.clone());
            sweep(&mut f1, &mut g1, eps, 1.0);
            out = evaluate(&f1, &g1, eps);
            solver.omega = 1.0;
        } else if omega > 1.0 {
            solver.omega = (omega + 0.05 * (2.0 - omega)).min(SINKHORN_MAX_OMEGA);
        } else if solver.err > 0.0 {
            let ratio = (out.0 / solver.err).min(0.999);
            if ratio > 0.0 {
                solver.omega = 2.0 / (1.0 + (1.0 - ratio).sqrt());
            }
        }
        (*f, *g) = (f1, g1);
        (solver.err, solver.dual) = out;
        out
    };
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    // Warm start by annealing the regularisation down from the mean cost.
    let mut budget = SINKHORN_MAX_ITER;
    let mut stage = mean.max(eps);
    while stage > eps * 1.5 && budget > SINKHORN_MAX_ITER / 2 {
        let mut solver = Relaxation::new();
        for _ in 0..SINKHORN_WARM_ITER {
            budget -= 1;
            if step(&mut f, &mut g, &mut solver, stage).0 < SINKHORN_TOL {
                break;
            }
        }
        stage *= 0.5;
    }
    let mut trace = Vec::new();
    let mut solver = Relaxation::new();
    for it in 1..=budget {
        let (err, dual) = step(&mut f, &mut g, &mut solver, eps);
        if !dual.is_finite() {
            return Err("sinkhorn-diverged".into());
        }
        trace.push(dual);
        if err < SINKHORN_TOL {
            let mut entries = Vec::new();
            let mut total = 0.0;
            for i in 0..m {
                for j in 0..n {
                    let p = ((f[i] + g[j] - cost[i * n + j]) / eps).exp();
                    if p > 0.0 {
                        entries.push((i, j, p));
                        total += p * cost[i * n + j];
                    }
                }
            }
            return Ok(SinkhornResult {
                plan: TransportPlan {
                    entries,
                    row_marginal: a.to_vec(),
                    col_marginal: b.to_vec(),
                    cost: total,
                },
                iterations: SINKHORN_MAX_ITER - budget + it,
                dual_trace: trace,
            });
        }
    }
    Err("sinkhorn-diverged".into())
}

/// Over-relaxation state: the current factor and the error and dual of the
/// last accepted sweep.
struct Relaxation {
    omega: f64,
    err: f64,
    dual: f64,
}

impl Relaxation {
    fn new() -> Self {
        Relaxation { omega: 1.0, err: 0.0, dual: f64::NEG_INFINITY }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let plan = transport_exact(&[3], &[3], &[2.5]).unwrap();
        assert_eq!(plan.cost, 2.5);
        assert_eq!(plan.entries, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn small_assignment() {
        // Identity is optimal.
        let cost = [0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
        let plan = transport_exact(&[1, 1, 1], &[1, 1, 1], &cost).unwrap();
        assert_eq!(plan.cost, 0.0);
        let cost = [4.0, 1.0, 2.0, 3.0];
        let plan = transport_exact(&[2, 1], &[1, 2], &cost).unwrap();
        // Ship 1 unit 0->0 is forced? Optimal: 0->1 x2 (cost 2), 1->0 x1 (cost 2); total 4/3.
        assert!((plan.cost - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_hold() {
        let supply = [5, 1, 4];
        let demand = [2, 2, 2, 4];
        let cost: Vec<f64> = (0..12).map(|x| ((x * 7) % 5) as f64).collect();
        let plan = transport_exact(&supply, &demand, &cost).unwrap();
        let mut rows = [0.0; 3];
        let mut cols = [0.0; 4];
        for &(i, j, w) in &plan.entries {
            assert!(w > 0.0);
            rows[i] += w;
            cols[j] += w;
        }
        for i in 0..3 {
            assert!((rows[i] - supply[i] as f64 / 10.0).abs() < 1e-12);
        }
        for j in 0..4 {
            assert!((cols[j] - demand[j] as f64 / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinkhorn_dual_increases() {
        let a = [0.2, 0.5, 0.3];
        let b = [0.4, 0.6];
        let cost = [0.0, 1.0, 2.0, 1.0, 1.0, 0.0];
        let res = sinkhorn(&a, &b, &cost, 0.05).unwrap();
        for w in res.dual_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn sinkhorn_moves_a_tiny_mass() {
        let a = [0.5, 0.5];
        let b = [0.4989, 0.5011];
        let res = sinkhorn(&a, &b, &[0.0, 1.0, 1.0, 0.0], 0.01).unwrap();
        assert!((res.plan.cost - 0.0011).abs() < 1e-5, "{}", res.plan.cost);
        for w in res.dual_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }
}
