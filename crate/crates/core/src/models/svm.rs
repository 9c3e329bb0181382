//! Linear one-vs-rest SVM.
//!
//! Each class `c` gets a separate hyperplane minimizing
//! `lambda/2 |w|^2 + mean(max(0, 1 - t (w.x + b)))` with `t = +1` for rows of
//! class `c` and `-1` otherwise, `lambda = 1 / (C n)` and an unregularized
//! bias. Training is full-batch subgradient descent: a step is kept only if
//! it lowers the objective (the step size then grows by 5%), otherwise the
//! step size is halved and retried. The objective is therefore
//! non-increasing across epochs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, softmax, ProbTriple, SvmParams};
use crate::rng::unit_rng;
use crate::NUM_CLASSES;

const MAX_HALVINGS: usize = 40;
const STEP_GROWTH: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Hyperplane {
    w: Vec<f64>,
    b: f64,
}

impl Hyperplane {
    fn decision(&self, row: &[f64]) -> f64 {
        self.w.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct SvmState {
    planes: Vec<Hyperplane>,
    /// Summed one-vs-rest objective before training and after each epoch.
    pub objective: Vec<f64>,
    /// Bootstrap replicas, each a full set of class hyperplanes.
    replicas: Vec<Vec<Hyperplane>>,
}

fn objective(plane: &Hyperplane, x: &[Vec<f64>], t: &[f64], rows: &[usize], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * plane.w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(t)
        .map(|(&i, &ti)| (1.0 - ti * plane.decision(&x[i])).max(0.0))
        .sum();
    reg + hinge / rows.len() as f64
}

/// Fits one class-vs-rest hyperplane; returns it with its objective per epoch.
fn fit_plane(x: &[Vec<f64>], t: &[f64], rows: &[usize], p: &SvmParams) -> (Hyperplane, Vec<f64>) {
    let d = x.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let lambda = 1.0 / (p.c * n);
    let mut plane = Hyperplane { w: vec![0.0; d], b: 0.0 };
    let mut current = objective(&plane, x, t, rows, lambda);
    let mut history = vec![current];
    let mut eta = p.learning_rate;
    let mut gw = vec![0.0; d];

    'epochs: for _ in 0..p.epochs {
        for (g, w) in gw.iter_mut().zip(&plane.w) {
            *g = lambda * w;
        }
        let mut gb = 0.0;
        for (&i, &ti) in rows.iter().zip(t) {
            if ti * plane.decision(&x[i]) < 1.0 {
                for (g, xv) in gw.iter_mut().zip(&x[i]) {
                    *g -= ti * xv / n;
                }
                gb -= ti / n;
            }
        }
        for _ in 0..MAX_HALVINGS {
            let candidate = Hyperplane {
                w: plane.w.iter().zip(&gw).map(|(w, g)| w - eta * g).collect(),
                b: plane.b - eta * gb,
            };
            let value = objective(&candidate, x, t, rows, lambda);
            if value < current {
                plane = candidate;
                current = value;
                history.push(current);
                eta *= STEP_GROWTH;
                continue 'epochs;
            }
            eta *= 0.5;
        }
        // no descent along the subgradient: stationary up to step resolution
        history.push(current);
        break;
    }
    (plane, history)
}

fn fit_planes(x: &[Vec<f64>], y: &[usize], rows: &[usize], p: &SvmParams) -> (Vec<Hyperplane>, Vec<f64>) {
    let mut planes = Vec::with_capacity(NUM_CLASSES);
    let mut total: Vec<f64> = Vec::new();
    for c in 0..NUM_CLASSES {
        let t: Vec<f64> = rows.iter().map(|&i| if y[i] == c { 1.0 } else { -1.0 }).collect();
        let (plane, history) = fit_plane(x, &t, rows, p);
        // pad early stops with their final value
        let len = total.len().max(history.len());
        let last = |h: &[f64], k: usize| h.get(k).or(h.last()).copied().unwrap_or(0.0);
        total = (0..len).map(|k| last(&total, k) + last(&history, k)).collect();
        planes.push(plane);
    }
    (planes, total)
}

pub(crate) fn fit(p: &SvmParams, x: &[Vec<f64>], y: &[usize]) -> SvmState {
    let n = x.len();
    let all: Vec<usize> = (0..n).collect();
    let (planes, objective) = fit_planes(x, y, &all, p);
    let replicas = (0..p.replicas)
        .map(|r| {
            let mut rng = unit_rng(p.seed, r as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            fit_planes(x, y, &rows, p).0
        })
        .collect();
    SvmState {
        planes,
        objective,
        replicas,
    }
}

fn decisions(planes: &[Hyperplane], row: &[f64]) -> [f64; NUM_CLASSES] {
    std::array::from_fn(|c| planes[c].decision(row))
}

impl SvmState {
    pub fn predict_proba(&self, row: &[f64]) -> ProbTriple {
        let p = softmax(&decisions(&self.planes, row));
        ProbTriple {
            p_draw: p[0],
            p_home: p[1],
            p_away: p[2],
        }
    }

    pub fn replica_votes(&self, row: &[f64]) -> Option<[usize; NUM_CLASSES]> {
        if self.replicas.is_empty() {
            return None;
        }
        let mut counts = [0usize; NUM_CLASSES];
        for planes in &self.replicas {
            counts[argmax(&decisions(planes, row))] += 1;
        }
        Some(counts)
    }

    /// Mean absolute weight per feature across the class hyperplanes.
    pub fn importance(&self) -> Vec<f64> {
        let d = self.planes[0].w.len();
        (0..d)
            .map(|j| self.planes.iter().map(|pl| pl.w[j].abs()).sum::<f64>() / self.planes.len() as f64)
            .collect()
    }
}
