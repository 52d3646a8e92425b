//! Classification trees with Gini splits on real-valued features.

use rand::seq::index::sample;
use rand::Rng;

/// Row-major feature matrix view.
#[derive(Clone, Copy, Debug)]
pub struct Features<'a> {
    pub n: usize,
    pub m: usize,
    pub data: &'a [f64],
}

impl<'a> Features<'a> {
    pub fn new(n: usize, m: usize, data: &'a [f64]) -> Self {
        assert_eq!(data.len(), n * m, "feature matrix shape");
        Self { n, m, data }
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features drawn at random per node; all features when `None`.
    pub mtry: Option<usize>,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 5,
            mtry: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        counts: Vec<u32>,
        class: usize,
        leaf: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartTree {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
    pub n_leaves: usize,
    pub m: usize,
}

fn gini_sum(counts: &[u32], total: u32) -> f64 {
    // n * gini impurity
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    t - counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / t
}

fn majority(counts: &[u32]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a, R: Rng> {
    x: Features<'a>,
    y: &'a [usize],
    n_classes: usize,
    params: CartParams,
    binary: Vec<bool>,
    rng: &'a mut R,
    nodes: Vec<Node>,
    n_leaves: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&mut self, counts: Vec<u32>) -> usize {
        let class = majority(&counts);
        self.nodes.push(Node::Leaf {
            counts,
            class,
            leaf: self.n_leaves,
        });
        self.n_leaves += 1;
        self.nodes.len() - 1
    }

    fn best_split(&mut self, rows: &[usize], counts: &[u32]) -> Option<(usize, f64)> {
        let total = rows.len() as u32;
        let parent = gini_sum(counts, total);
        let features: Vec<usize> = match self.params.mtry {
            Some(k) if k < self.x.m => {
                let mut f = sample(self.rng, self.x.m, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.x.m).collect(),
        };
        let min_leaf = self.params.min_leaf.max(1) as u32;
        let mut best: Option<(f64, usize, f64)> = None;
        let nc = self.n_classes;
        let mut left = vec![0u32; nc];
        let mut right = vec![0u32; nc];
        let mut vals: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for f in features {
            if self.binary[f] {
                left.iter_mut().for_each(|c| *c = 0);
                for &i in rows {
                    if self.x.get(i, f) == 0.0 {
                        left[self.y[i]] += 1;
                    }
                }
                let nl: u32 = left.iter().sum();
                let nr = total - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                for c in 0..nc {
                    right[c] = counts[c] - left[c];
                }
                let gain = parent - gini_sum(&left, nl) - gini_sum(&right, nr);
                if gain > 1e-12 && best.map_or(true, |b| gain > b.0 + 1e-12) {
                    best = Some((gain, f, 0.5));
                }
                continue;
            }
            vals.clear();
            vals.extend(rows.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(counts);
            for s in 0..vals.len() - 1 {
                left[vals[s].1] += 1;
                right[vals[s].1] -= 1;
                if vals[s].0 == vals[s + 1].0 {
                    continue;
                }
                let nl = s as u32 + 1;
                let nr = total - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let gain = parent - gini_sum(&left, nl) - gini_sum(&right, nr);
                if gain > 1e-12 && best.map_or(true, |b| gain > b.0 + 1e-12) {
                    best = Some((gain, f, 0.5 * (vals[s].0 + vals[s + 1].0)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0u32; self.n_classes];
        for &i in &rows {
            counts[self.y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf.max(1) {
            return self.leaf(counts);
        }
        let Some((feature, threshold)) = self.best_split(&rows, &counts) else {
            return self.leaf(counts);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        let idx = self.nodes.len();
        self.nodes.push(Node::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[idx] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        idx
    }
}

impl CartTree {
    /// Fits a tree on the given rows. The rng is only used when `mtry` is set.
    pub fn fit<R: Rng>(
        x: Features<'_>,
        y: &[usize],
        rows: &[usize],
        n_classes: usize,
        params: CartParams,
        rng: &mut R,
    ) -> CartTree {
        let binary = (0..x.m)
            .map(|f| rows.iter().all(|&i| matches!(x.get(i, f), v if v == 0.0 || v == 1.0)))
            .collect();
        let mut b = Builder {
            x,
            y,
            n_classes,
            params,
            binary,
            rng,
            nodes: Vec::new(),
            n_leaves: 0,
        };
        let root = b.grow(rows.to_vec(), 0);
        debug_assert_eq!(root, 0);
        CartTree {
            nodes: b.nodes,
            n_classes,
            n_leaves: b.n_leaves,
            m: x.m,
        }
    }

    fn leaf_node(&self, row: &[f64]) -> &Node {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if row[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        match self.leaf_node(row) {
            Node::Leaf { class, .. } => *class,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Index of the leaf reached by `row`, in `0..n_leaves`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        match self.leaf_node(row) {
            Node::Leaf { leaf, .. } => *leaf,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &CartTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Axis-aligned box of every leaf as per-feature `(lower, upper]`
    /// intervals, in leaf order.
    pub fn leaf_boxes(&self) -> Vec<Vec<(f64, f64)>> {
        let mut out = vec![Vec::new(); self.n_leaves];
        let mut stack = vec![(0usize, vec![(f64::NEG_INFINITY, f64::INFINITY); self.m])];
        while let Some((i, bounds)) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf { leaf, .. } => out[*leaf] = bounds,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let mut lb = bounds.clone();
                    lb[*feature].1 = lb[*feature].1.min(*threshold);
                    let mut rb = bounds;
                    rb[*feature].0 = rb[*feature].0.max(*threshold);
                    stack.push((*left, lb));
                    stack.push((*right, rb));
                }
            }
        }
        out
    }
}

/// Stratified k-fold assignment: rows of each class dealt round-robin.
pub fn fold_ids(y: &[usize], rows: &[usize], folds: usize) -> Vec<usize> {
    let mut next = std::collections::HashMap::new();
    rows.iter()
        .map(|&i| {
            let c = next.entry(y[i]).or_insert(0usize);
            let f = *c % folds;
            *c += 1;
            f
        })
        .collect()
}

/// Grid search over depth {2,4,8} and minimum leaf size {2,5,10} by
/// 5-fold cross-validated error; ties keep the earlier grid point.
pub fn tune<R: Rng>(x: Features<'_>, y: &[usize], rows: &[usize], n_classes: usize, rng: &mut R) -> CartParams {
    let folds = fold_ids(y, rows, 5);
    let mut best = (usize::MAX, CartParams::default());
    for depth in [2, 4, 8] {
        for min_leaf in [2, 5, 10] {
            let params = CartParams {
                max_depth: depth,
                min_leaf,
                mtry: None,
            };
            let mut errors = 0;
            for f in 0..5 {
                let train: Vec<usize> = rows.iter().zip(&folds).filter(|(_, &g)| g != f).map(|(&i, _)| i).collect();
                if train.is_empty() {
                    continue;
                }
                let tree = CartTree::fit(x, y, &train, n_classes, params, rng);
                errors += rows
                    .iter()
                    .zip(&folds)
                    .filter(|(&i, &g)| g == f && tree.predict(x.row(i)) != y[i])
                    .count();
            }
            if errors < best.0 {
                best = (errors, params);
            }
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfectly_predictive_feature_gives_stump() {
        let data = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let x = Features::new(6, 2, &data);
        let y = [0, 0, 0, 1, 1, 1];
        let rows: Vec<usize> = (0..6).collect();
        let params = CartParams {
            max_depth: 8,
            min_leaf: 1,
            mtry: None,
        };
        let t = CartTree::fit(x, &y, &rows, 2, params, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.depth(), 1);
        assert!(rows.iter().all(|&i| t.predict(x.row(i)) == y[i]));
    }

    #[test]
    fn continuous_threshold_is_midpoint() {
        let data = vec![0.1, 0.4, 0.9, 1.3];
        let x = Features::new(4, 1, &data);
        let y = [0, 0, 1, 1];
        let params = CartParams {
            max_depth: 3,
            min_leaf: 1,
            mtry: None,
        };
        let t = CartTree::fit(x, &y, &[0, 1, 2, 3], 2, params, &mut ChaCha8Rng::seed_from_u64(0));
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert!((threshold - 0.65).abs() < 1e-12),
            _ => panic!("expected a split"),
        }
    }
}
