use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, KnnParams, ProbTriple};
use crate::rng::unit_rng;
use crate::NUM_CLASSES;

/// Shuffles per feature when measuring permutation importance.
pub(crate) const PERMUTATION_REPEATS: usize = 5;
const PERMUTATION_SEED: u64 = 0x6b6e6e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct KnnState {
    k: usize,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
}

pub(crate) fn fit(p: &KnnParams, x: &[Vec<f64>], y: &[usize]) -> KnnState {
    KnnState {
        k: p.k,
        x: x.to_vec(),
        y: y.to_vec(),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Votes of the `k` nearest rows under `dist`; distance ties go to the lower
/// training index.
fn vote(dist: &[f64], y: &[usize], k: usize, order: &mut Vec<usize>) -> [usize; NUM_CLASSES] {
    order.clear();
    order.extend(0..dist.len());
    let cmp = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
    }
    let mut counts = [0usize; NUM_CLASSES];
    for &i in &order[..k] {
        counts[y[i]] += 1;
    }
    counts
}

fn vote_class(counts: &[usize; NUM_CLASSES]) -> usize {
    argmax(&counts.map(|c| c as f64))
}

impl KnnState {
    pub fn votes(&self, row: &[f64]) -> [usize; NUM_CLASSES] {
        let dist: Vec<f64> = self.x.iter().map(|r| sq_dist(r, row)).collect();
        vote(&dist, &self.y, self.k, &mut Vec::new())
    }

    pub fn predict_proba(&self, row: &[f64]) -> ProbTriple {
        ProbTriple::from_weights(self.votes(row).map(|c| c as f64))
    }

    /// Mean drop in training accuracy when one feature of the query rows is
    /// shuffled, over [`PERMUTATION_REPEATS`] seeded shuffles. Negative means
    /// are reported as 0.
    pub fn permutation_importance(&self) -> Vec<f64> {
        let n = self.x.len();
        let d = self.x.first().map_or(0, Vec::len);
        let mut base = vec![0.0; n * n];
        for i in 0..n {
            for b in 0..n {
                base[i * n + b] = sq_dist(&self.x[i], &self.x[b]);
            }
        }
        let mut order = Vec::with_capacity(n);
        let base_correct = (0..n)
            .filter(|&i| vote_class(&vote(&base[i * n..(i + 1) * n], &self.y, self.k, &mut order)) == self.y[i])
            .count();

        (0..d)
            .into_par_iter()
            .map(|j| {
                let mut rng = unit_rng(PERMUTATION_SEED, j as u64);
                let mut perm: Vec<usize> = (0..n).collect();
                let mut dist = vec![0.0; n];
                let mut order = Vec::with_capacity(n);
                let mut drop = 0.0;
                for _ in 0..PERMUTATION_REPEATS {
                    perm.shuffle(&mut rng);
                    let mut correct = 0;
                    for i in 0..n {
                        let (own, swapped) = (self.x[i][j], self.x[perm[i]][j]);
                        for (b, slot) in dist.iter_mut().enumerate() {
                            let xb = self.x[b][j];
                            *slot = base[i * n + b] - (own - xb) * (own - xb) + (swapped - xb) * (swapped - xb);
                        }
                        if vote_class(&vote(&dist, &self.y, self.k, &mut order)) == self.y[i] {
                            correct += 1;
                        }
                    }
                    drop += (base_correct as f64 - correct as f64) / n as f64;
                }
                (drop / PERMUTATION_REPEATS as f64).max(0.0)
            })
            .collect()
    }
}
