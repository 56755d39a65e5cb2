//! CART regression tree used as the learned evaluation function.

use alloc::vec::Vec;

use thiserror::Error;

/// Default depth limit.
pub const DEFAULT_MAX_DEPTH: usize = 8;
/// Fewest rows a leaf may hold.
pub const MIN_LEAF_ROWS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("training row has {found} features, expected {expected}")]
    Arity { expected: usize, found: usize },
    #[error("training value is not finite")]
    NotFinite,
    #[error("training set is empty")]
    Empty,
}

/// Rows of `(features, target)` with a fixed feature arity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    rows: Vec<(Vec<f64>, f64)>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, features: Vec<f64>, target: f64) -> Result<(), TreeError> {
        if let Some((first, _)) = self.rows.first() {
            if first.len() != features.len() {
                return Err(TreeError::Arity { expected: first.len(), found: features.len() });
            }
        }
        if !target.is_finite() || features.iter().any(|f| !f.is_finite()) {
            return Err(TreeError::NotFinite);
        }
        self.rows.push((features, target));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Binary regression tree; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn constant(value: f64) -> Self {
        RegressionTree { nodes: alloc::vec![Node::Leaf { value }] }
    }

    /// A single split with two leaves.
    pub fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        RegressionTree {
            nodes: alloc::vec![
                Node::Split { feature, threshold, left: 1, right: 2 },
                Node::Leaf { value: left },
                Node::Leaf { value: right },
            ],
        }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    idx = if features[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Split `(feature, threshold)` pairs in preorder.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Split { feature, threshold, .. } => Some((feature, threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

/// Fits a CART regression tree by greedy variance reduction. A node stays a
/// leaf at `max_depth`, when it cannot give both children
/// [`MIN_LEAF_ROWS`] rows, or when its targets are constant.
pub fn fit_tree(data: &TrainingSet, max_depth: usize) -> Result<RegressionTree, TreeError> {
    if data.is_empty() {
        return Err(TreeError::Empty);
    }
    let mut tree = RegressionTree { nodes: Vec::new() };
    let idx: Vec<usize> = (0..data.len()).collect();
    grow(data.rows(), idx, 0, max_depth, &mut tree.nodes);
    Ok(tree)
}

fn mean(rows: &[(Vec<f64>, f64)], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| rows[i].1).sum::<f64>() / idx.len() as f64
}

fn sse(rows: &[(Vec<f64>, f64)], idx: &[usize]) -> f64 {
    let m = mean(rows, idx);
    idx.iter().map(|&i| (rows[i].1 - m) * (rows[i].1 - m)).sum()
}

fn grow(rows: &[(Vec<f64>, f64)], idx: Vec<usize>, depth: usize, max_depth: usize, nodes: &mut Vec<Node>) -> usize {
    let at = nodes.len();
    nodes.push(Node::Leaf { value: mean(rows, &idx) });
    let parent_sse = sse(rows, &idx);
    if depth >= max_depth || idx.len() < 2 * MIN_LEAF_ROWS || parent_sse <= 0.0 {
        return at;
    }
    let Some((feature, threshold)) = best_split(rows, &idx, parent_sse) else {
        return at;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i].0[feature] <= threshold);
    let l = grow(rows, left, depth + 1, max_depth, nodes);
    let r = grow(rows, right, depth + 1, max_depth, nodes);
    nodes[at] = Node::Split { feature, threshold, left: l, right: r };
    at
}

fn best_split(rows: &[(Vec<f64>, f64)], idx: &[usize], parent_sse: f64) -> Option<(usize, f64)> {
    let arity = rows[idx[0]].0.len();
    let n = idx.len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for feature in 0..arity {
        order.sort_by(|&a, &b| rows[a].0[feature].total_cmp(&rows[b].0[feature]).then(a.cmp(&b)));
        // prefix sums of target and squared target
        let mut sum = Vec::with_capacity(n + 1);
        let mut sq = Vec::with_capacity(n + 1);
        sum.push(0.0);
        sq.push(0.0);
        for &i in &order {
            let y = rows[i].1;
            sum.push(sum.last().unwrap() + y);
            sq.push(sq.last().unwrap() + y * y);
        }
        for split in MIN_LEAF_ROWS..=(n - MIN_LEAF_ROWS) {
            let lo = rows[order[split - 1]].0[feature];
            let hi = rows[order[split]].0[feature];
            if lo >= hi {
                continue;
            }
            let (nl, nr) = (split as f64, (n - split) as f64);
            let (sl, sr) = (sum[split], sum[n] - sum[split]);
            let left = (sq[split] - sl * sl / nl).max(0.0);
            let right = ((sq[n] - sq[split]) - sr * sr / nr).max(0.0);
            let total = left + right;
            if best.is_none_or(|(b, _, _)| total < b) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((total, feature, threshold));
            }
        }
    }
    match best {
        Some((total, feature, threshold)) if total < parent_sse * (1.0 - 1e-12) => Some((feature, threshold)),
        _ => None,
    }
}
