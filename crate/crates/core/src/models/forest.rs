use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_class_tree, to_columns, ClassTreeParams, Tree};
use super::{ForestParams, ProbTriple};
use crate::rng::unit_rng;
use crate::NUM_CLASSES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Forest {
    trees: Vec<Tree<usize>>,
    /// Mean over trees of each tree's normalized impurity decrease.
    pub importance: Vec<f64>,
}

/// `round(sqrt(d))`, at least 1.
pub(crate) fn default_max_features(d: usize) -> usize {
    ((d as f64).sqrt().round() as usize).max(1)
}

pub(crate) fn fit(p: &ForestParams, x: &[Vec<f64>], y: &[usize]) -> Forest {
    let n = x.len();
    let cols = to_columns(x);
    let d = cols.len();
    let params = ClassTreeParams {
        max_depth: p.max_depth,
        min_samples_leaf: p.min_samples_leaf,
        max_features: p.max_features.unwrap_or_else(|| default_max_features(d)).min(d),
    };
    let grown: Vec<(Tree<usize>, Vec<f64>)> = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = unit_rng(p.seed, t as u64);
            // a lone tree sees the data as is
            let sample: Vec<usize> = if p.n_trees == 1 {
                (0..n).collect()
            } else {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            };
            grow_class_tree(&cols, y, sample, &params, &mut rng)
        })
        .collect();

    let mut importance = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importance.iter_mut().zip(&imp) {
                *acc += v / total;
            }
        }
        trees.push(tree);
    }
    for v in &mut importance {
        *v /= trees.len() as f64;
    }
    Forest { trees, importance }
}

impl Forest {
    pub fn votes(&self, row: &[f64]) -> [usize; NUM_CLASSES] {
        let mut counts = [0usize; NUM_CLASSES];
        for t in &self.trees {
            counts[*t.leaf(row)] += 1;
        }
        counts
    }

    pub fn predict_proba(&self, row: &[f64]) -> ProbTriple {
        ProbTriple::from_weights(self.votes(row).map(|c| c as f64))
    }
}
