//! Binary decision trees shared by the forest (Gini, class leaves) and the
//! booster (Newton gain, real-valued leaves).
//!
//! Splits send `x[feature] <= threshold` left, and the threshold is always an
//! observed training value (the largest value on the left side). A tree is
//! therefore unchanged by any strictly increasing transform of a feature,
//! applied to training and query rows alike.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::sample_without_replacement;
use crate::NUM_CLASSES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(&self, row: &[f64]) -> &L {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    #[cfg(test)]
    pub fn depth(&self) -> usize {
        fn walk<L>(nodes: &[Node<L>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Column-major copy of a row-major matrix.
pub(crate) fn to_columns(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x.first().map_or(0, Vec::len);
    (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect()
}

fn sort_by_feature(idx: &mut [usize], col: &[f64]) {
    idx.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
}

/// Splits `idx` into rows at or below `threshold` and rows above it.
fn partition(idx: &[usize], col: &[f64], threshold: f64) -> (Vec<usize>, Vec<usize>) {
    idx.iter().partition(|&&i| col[i] <= threshold)
}

pub(crate) struct ClassTreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Non-constant features to examine per node.
    pub max_features: usize,
}

fn majority(counts: &[usize; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

fn gini_mass(counts: &[usize; NUM_CLASSES], n: usize) -> f64 {
    // n * gini(counts)
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    n - counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / n
}

/// Grows a Gini classification tree on the (possibly repeated) rows in
/// `sample`. Returns the tree and the impurity decrease credited to each
/// feature.
pub(crate) fn grow_class_tree<R: Rng>(
    cols: &[Vec<f64>],
    y: &[usize],
    sample: Vec<usize>,
    params: &ClassTreeParams,
    rng: &mut R,
) -> (Tree<usize>, Vec<f64>) {
    let d = cols.len();
    let mut importance = vec![0.0; d];
    let mut nodes: Vec<Node<usize>> = Vec::new();
    // (rows, depth, slot in `nodes`)
    let mut stack: Vec<(Vec<usize>, usize, usize)> = Vec::new();
    nodes.push(Node::Leaf(0));
    stack.push((sample, 0, 0));

    while let Some((idx, depth, slot)) = stack.pop() {
        let mut counts = [0usize; NUM_CLASSES];
        for &i in &idx {
            counts[y[i]] += 1;
        }
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || n < 2 * params.min_samples_leaf {
            nodes[slot] = Node::Leaf(majority(&counts));
            continue;
        }

        let order = sample_without_replacement(rng, d, d);
        let mut examined = 0;
        // (score, feature, threshold); score = sum c^2/n over both children
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.clone();
        for &f in &order {
            if examined >= params.max_features {
                break;
            }
            let col = &cols[f];
            sort_by_feature(&mut sorted, col);
            if col[sorted[0]] == col[sorted[n - 1]] {
                continue;
            }
            examined += 1;
            let mut left = [0usize; NUM_CLASSES];
            for k in 0..n - 1 {
                left[y[sorted[k]]] += 1;
                let nl = k + 1;
                let nr = n - nl;
                if col[sorted[k]] == col[sorted[k + 1]] || nl < params.min_samples_leaf || nr < params.min_samples_leaf {
                    continue;
                }
                let mut score = 0.0;
                for c in 0..NUM_CLASSES {
                    let l = left[c] as f64;
                    let r = (counts[c] - left[c]) as f64;
                    score += l * l / nl as f64 + r * r / nr as f64;
                }
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, f, col[sorted[k]]));
                }
            }
        }

        match best {
            None => nodes[slot] = Node::Leaf(majority(&counts)),
            Some((score, f, threshold)) => {
                let col = &cols[f];
                let (l, r) = partition(&idx, col, threshold);
                // n*gini(parent) - nl*gini(l) - nr*gini(r)
                let decrease = gini_mass(&counts, n) - (n as f64 - score);
                importance[f] += decrease.max(0.0);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                nodes.push(Node::Leaf(0));
                nodes.push(Node::Leaf(0));
                nodes[slot] = Node::Split {
                    feature: f,
                    threshold,
                    left: li,
                    right: ri,
                };
                stack.push((r, depth + 1, ri));
                stack.push((l, depth + 1, li));
            }
        }
    }
    (Tree { nodes }, importance)
}

pub(crate) struct RegTreeParams {
    pub max_depth: usize,
    pub l2_lambda: f64,
    pub min_child_weight: f64,
}

pub(crate) const MIN_GAIN: f64 = 1e-12;

/// Grows a second-order regression tree on gradients `g` and Hessians `h`.
/// Leaf weights are `-G / (H + lambda)`; the returned vector holds the total
/// split gain per feature.
pub(crate) fn grow_newton_tree(
    cols: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    rows: Vec<usize>,
    params: &RegTreeParams,
) -> (Tree<f64>, Vec<f64>) {
    let d = cols.len();
    let lambda = params.l2_lambda;
    let mut gains = vec![0.0; d];
    let mut nodes: Vec<Node<f64>> = vec![Node::Leaf(0.0)];
    let mut stack = vec![(rows, 0usize, 0usize)];
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);

    while let Some((idx, depth, slot)) = stack.pop() {
        let gsum: f64 = idx.iter().map(|&i| g[i]).sum();
        let hsum: f64 = idx.iter().map(|&i| h[i]).sum();
        let weight = if hsum + lambda > 0.0 { -gsum / (hsum + lambda) } else { 0.0 };
        let n = idx.len();
        if depth >= params.max_depth || n < 2 {
            nodes[slot] = Node::Leaf(weight);
            continue;
        }
        let parent = score(gsum, hsum);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.clone();
        for (f, col) in cols.iter().enumerate() {
            sort_by_feature(&mut sorted, col);
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n - 1 {
                gl += g[sorted[k]];
                hl += h[sorted[k]];
                if col[sorted[k]] == col[sorted[k + 1]] {
                    continue;
                }
                let (gr, hr) = (gsum - gl, hsum - hl);
                if hl < params.min_child_weight || hr < params.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent);
                if gain > MIN_GAIN && best.is_none_or(|(b, _, _)| gain > b) {
                    best = Some((gain, f, col[sorted[k]]));
                }
            }
        }
        match best {
            None => nodes[slot] = Node::Leaf(weight),
            Some((gain, f, threshold)) => {
                gains[f] += gain;
                let (l, r) = partition(&idx, &cols[f], threshold);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                nodes.push(Node::Leaf(0.0));
                nodes.push(Node::Leaf(0.0));
                nodes[slot] = Node::Split {
                    feature: f,
                    threshold,
                    left: li,
                    right: ri,
                };
                stack.push((r, depth + 1, ri));
                stack.push((l, depth + 1, li));
            }
        }
    }
    (Tree { nodes }, gains)
}
