//! Second-order gradient boosting with a softmax cross-entropy objective.
//!
//! Scores start at the log class frequencies. Each round fits one Newton
//! regression tree per class to the gradients `p - y` and Hessian diagonals
//! `p (1 - p)` of the current softmax, and adds the learning-rate-scaled leaf
//! weights `-G / (H + lambda)` to that class's score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_newton_tree, to_columns, Node, RegTreeParams, Tree};
use super::{softmax, BoostParams, ProbTriple};
use crate::rng::{sample_without_replacement, unit_rng};
use crate::NUM_CLASSES;

const FREQ_FLOOR: f64 = 1e-6;
const MIN_CHILD_WEIGHT: f64 = 1e-6;

/// Gradient and Hessian diagonal of `-log softmax(z)[label]` with respect to `z`.
pub fn softmax_grad_hess(z: &[f64; NUM_CLASSES], label: usize) -> ([f64; NUM_CLASSES], [f64; NUM_CLASSES]) {
    let p = softmax(z);
    let g = std::array::from_fn(|c| p[c] - if c == label { 1.0 } else { 0.0 });
    let h = p.map(|pc| pc * (1.0 - pc));
    (g, h)
}

/// `-log softmax(z)[label]`, computed stably.
pub fn softmax_cross_entropy(z: &[f64; NUM_CLASSES], label: usize) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[label]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct BoostState {
    base: [f64; NUM_CLASSES],
    /// One tree per class per round; leaves already carry the learning rate.
    rounds: Vec<Vec<Tree<f64>>>,
    /// Total split gain per feature.
    pub importance: Vec<f64>,
    /// Mean training log-loss before boosting and after every round.
    pub train_loss: Vec<f64>,
}

fn mean_loss(scores: &[[f64; NUM_CLASSES]], y: &[usize]) -> f64 {
    scores.iter().zip(y).map(|(z, &c)| softmax_cross_entropy(z, c)).sum::<f64>() / y.len() as f64
}

pub(crate) fn fit(p: &BoostParams, x: &[Vec<f64>], y: &[usize]) -> BoostState {
    let n = x.len();
    let cols = to_columns(x);
    let mut freq = [0.0; NUM_CLASSES];
    for &c in y {
        freq[c] += 1.0 / n as f64;
    }
    let base = freq.map(|f: f64| f.max(FREQ_FLOOR).ln());
    let mut scores = vec![base; n];
    let mut importance = vec![0.0; cols.len()];
    let mut train_loss = vec![mean_loss(&scores, y)];
    let mut rounds = Vec::with_capacity(p.n_rounds);
    let params = RegTreeParams {
        max_depth: p.max_depth,
        l2_lambda: p.l2_lambda,
        min_child_weight: MIN_CHILD_WEIGHT,
    };
    let per_round = ((p.subsample * n as f64).round() as usize).clamp(1, n);

    for r in 0..p.n_rounds {
        let mut g = vec![vec![0.0; n]; NUM_CLASSES];
        let mut h = vec![vec![0.0; n]; NUM_CLASSES];
        for i in 0..n {
            let (gi, hi) = softmax_grad_hess(&scores[i], y[i]);
            for c in 0..NUM_CLASSES {
                g[c][i] = gi[c];
                h[c][i] = hi[c];
            }
        }
        let rows: Vec<usize> = if per_round < n {
            let mut rows = sample_without_replacement(&mut unit_rng(p.seed, r as u64), n, per_round);
            rows.sort_unstable();
            rows
        } else {
            (0..n).collect()
        };
        let trees: Vec<(Tree<f64>, Vec<f64>)> = (0..NUM_CLASSES)
            .into_par_iter()
            .map(|c| {
                let (mut tree, gains) = grow_newton_tree(&cols, &g[c], &h[c], rows.clone(), &params);
                for node in &mut tree.nodes {
                    if let Node::Leaf(w) = node {
                        *w *= p.learning_rate;
                    }
                }
                (tree, gains)
            })
            .collect();
        let mut round = Vec::with_capacity(NUM_CLASSES);
        for (c, (tree, gains)) in trees.into_iter().enumerate() {
            for (acc, v) in importance.iter_mut().zip(&gains) {
                *acc += v;
            }
            for (i, s) in scores.iter_mut().enumerate() {
                s[c] += tree.leaf(&x[i]);
            }
            round.push(tree);
        }
        rounds.push(round);
        train_loss.push(mean_loss(&scores, y));
    }
    BoostState {
        base,
        rounds,
        importance,
        train_loss,
    }
}

impl BoostState {
    pub fn scores(&self, row: &[f64]) -> [f64; NUM_CLASSES] {
        let mut z = self.base;
        for round in &self.rounds {
            for (c, tree) in round.iter().enumerate() {
                z[c] += tree.leaf(row);
            }
        }
        z
    }

    pub fn predict_proba(&self, row: &[f64]) -> ProbTriple {
        let p = softmax(&self.scores(row));
        ProbTriple {
            p_draw: p[0],
            p_home: p[1],
            p_away: p[2],
        }
    }
}
