use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, Hyperparams, ModelError, ModelKind, Result};
use crate::dataset::fixture_groups;
use crate::dataset::Dataset;
use crate::metrics::accuracy;
use crate::rng::unit_rng;

/// Parameter name to candidate values. Points are enumerated in mixed-radix
/// order with the last parameter varying fastest.
pub type ParamGrid = IndexMap<String, Vec<serde_json::Value>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SearchMode {
    Exhaustive,
    Randomized { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub point: IndexMap<String, serde_json::Value>,
    pub hyperparams: Hyperparams,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Hyperparams,
    /// Evaluated points in grid order.
    pub table: Vec<GridRow>,
}

/// Time-ordered folds over whole fixtures: the fixtures are cut into
/// `folds + 1` contiguous blocks and fold `i` trains on blocks `0..i` and
/// validates on block `i`. Returns `(train_rows, validation_rows)` pairs.
pub fn time_series_folds(dataset: &Dataset, folds: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 {
        return Err(ModelError::InsufficientData(format!("need at least 2 folds, got {folds}")));
    }
    let groups = fixture_groups(dataset);
    let f = groups.len();
    if f < folds + 1 {
        return Err(ModelError::InsufficientData(format!(
            "{f} fixtures cannot form {folds} folds"
        )));
    }
    let blocks = folds + 1;
    let bound = |b: usize| groups.get(b * f / blocks).map_or(dataset.n_rows(), |g| g.start);
    Ok((1..blocks)
        .map(|i| ((0..bound(i)).collect(), (bound(i)..bound(i + 1)).collect()))
        .collect())
}

fn grid_size(grid: &ParamGrid) -> usize {
    grid.values().map(Vec::len).product()
}

fn grid_point(grid: &ParamGrid, mut index: usize) -> IndexMap<String, serde_json::Value> {
    let mut point: Vec<(String, serde_json::Value)> = Vec::with_capacity(grid.len());
    for (name, values) in grid.iter().rev() {
        point.push((name.clone(), values[index % values.len()].clone()));
        index /= values.len();
    }
    point.into_iter().rev().collect()
}

pub fn grid_search(
    kind: ModelKind,
    grid: &ParamGrid,
    train_set: &Dataset,
    folds: usize,
    mode: SearchMode,
) -> Result<SearchResult> {
    grid_search_from(&Hyperparams::default_for(kind), grid, train_set, folds, mode)
}

/// Grid search where parameters outside the grid keep their values in `base`.
pub fn grid_search_from(
    base: &Hyperparams,
    grid: &ParamGrid,
    train_set: &Dataset,
    folds: usize,
    mode: SearchMode,
) -> Result<SearchResult> {
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err(ModelError::InvalidHyperparams("grid must have at least one value per parameter".into()));
    }
    let splits = time_series_folds(train_set, folds)?;
    let total = grid_size(grid);
    let indices: Vec<usize> = match mode {
        SearchMode::Exhaustive => (0..total).collect(),
        SearchMode::Randomized { n_samples, seed } => {
            let mut picked = rand::seq::index::sample(&mut unit_rng(seed, 0), total, n_samples.min(total)).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    let candidates: Vec<(IndexMap<String, serde_json::Value>, Hyperparams)> = indices
        .iter()
        .map(|&i| {
            let point = grid_point(grid, i);
            let mut hp = base.clone();
            for (name, v) in &point {
                hp.set(name, v)?;
            }
            hp.validate()?;
            Ok((point, hp))
        })
        .collect::<Result<_>>()?;

    let folds_of = |hp: &Hyperparams| -> Result<Vec<f64>> {
        splits
            .iter()
            .map(|(tr, va)| {
                let model = train(hp.kind(), hp, &train_set.select_rows(tr))?;
                let valid = train_set.select_rows(va);
                let pred = model.predict_dataset(&valid)?;
                Ok(accuracy(valid.y(), &pred).expect("validation block is non-empty"))
            })
            .collect()
    };
    let table: Vec<GridRow> = candidates
        .into_par_iter()
        .map(|(point, hp)| {
            let fold_accuracy = folds_of(&hp)?;
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
            Ok(GridRow {
                point,
                hyperparams: hp,
                fold_accuracy,
                mean_accuracy,
            })
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.mean_accuracy > table[best].mean_accuracy {
            best = i;
        }
    }
    Ok(SearchResult {
        best: table[best].hyperparams.clone(),
        table,
    })
}
