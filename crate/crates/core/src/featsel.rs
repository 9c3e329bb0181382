//! Feature-subset selection: recursive feature elimination driven by model
//! importance, and ranking by Pearson correlation with the class label.
//!
//! Correlating against the ordinal label codes {0, 1, 2} treats the classes
//! as ordered, which they are not; it is kept because it is a cheap and
//! commonly used screen.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::models::{train, Hyperparams, ModelError, ModelKind};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error)]
pub enum FeatselError {
    #[error("k = {k} outside 1..={n_features}")]
    KOutOfRange { k: usize, n_features: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, FeatselError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    All,
    Rfe,
    Correlation,
}

impl SelectionMethod {
    pub fn slug(self) -> &'static str {
        match self {
            SelectionMethod::All => "all",
            SelectionMethod::Rfe => "rfe",
            SelectionMethod::Correlation => "correlation",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SelectionMethod::All => "All Features",
            SelectionMethod::Rfe => "RFE Features",
            SelectionMethod::Correlation => "Correlation Features",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub method: SelectionMethod,
    pub names: Vec<String>,
    pub k: usize,
    /// Features removed by RFE, first removal first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eliminated: Vec<String>,
}

impl FeatureSubset {
    pub fn all(dataset: &Dataset) -> Self {
        Self {
            method: SelectionMethod::All,
            names: dataset.feature_names().to_vec(),
            k: dataset.n_features(),
            eliminated: Vec::new(),
        }
    }
}

fn check_k(k: usize, n_features: usize) -> Result<()> {
    if k == 0 || k > n_features {
        return Err(FeatselError::KOutOfRange { k, n_features });
    }
    Ok(())
}

/// Recursive feature elimination with step 1: retrain on the surviving
/// features and drop the least important one (the later one on ties) until
/// `k` remain.
pub fn rfe(kind: ModelKind, hp: &Hyperparams, train_set: &Dataset, k: usize) -> Result<FeatureSubset> {
    check_k(k, train_set.n_features())?;
    let mut names = train_set.feature_names().to_vec();
    let mut eliminated = Vec::new();
    while names.len() > k {
        let model = train(kind, hp, &train_set.select_features(&names).map_err(ModelError::from)?)?;
        let scores = model.importance_scores();
        let mut worst = 0;
        for (j, s) in scores.iter().enumerate() {
            if *s <= scores[worst] {
                worst = j;
            }
        }
        log::debug!("rfe: dropping `{}` ({} left)", names[worst], names.len() - 1);
        eliminated.push(names.remove(worst));
    }
    Ok(FeatureSubset {
        method: SelectionMethod::Rfe,
        names,
        k,
        eliminated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub const TARGET_LABEL: &str = "result";

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|v| *v == col[0])
}

/// Pairwise Pearson coefficients over all feature columns, plus the label
/// (as `result`) when `include_target` is set. Constant columns correlate 0
/// with everything and 1 with themselves.
pub fn correlation_matrix(dataset: &Dataset, include_target: bool) -> Result<CorrelationMatrix> {
    if dataset.n_rows() < 2 {
        return Err(FeatselError::TooFewRows(dataset.n_rows()));
    }
    let mut labels = dataset.feature_names().to_vec();
    let mut cols: Vec<Vec<f64>> = (0..dataset.n_features()).map(|j| dataset.column(j)).collect();
    if include_target {
        labels.push(TARGET_LABEL.to_string());
        cols.push(dataset.y().iter().map(|&c| c as f64).collect());
    }
    let m = cols.len();
    let mut values = vec![vec![0.0; m]; m];
    for i in 0..m {
        values[i][i] = 1.0;
        for j in 0..i {
            let r = if is_constant(&cols[i]) || is_constant(&cols[j]) {
                0.0
            } else {
                pearson(&cols[i], &cols[j])
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { labels, values })
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, ",{}", self.labels.join(","));
        for (label, row) in self.labels.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{label},{}", cells.join(","));
        }
        out
    }
}

/// `|r|` of every feature against the label codes, in feature order.
pub fn target_correlations(dataset: &Dataset) -> Result<Vec<(String, f64)>> {
    if dataset.n_rows() < 2 {
        return Err(FeatselError::TooFewRows(dataset.n_rows()));
    }
    let y: Vec<f64> = dataset.y().iter().map(|&c| c as f64).collect();
    Ok((0..dataset.n_features())
        .map(|j| {
            let col = dataset.column(j);
            let r = if is_constant(&col) { 0.0 } else { pearson(&col, &y) };
            (dataset.feature_names()[j].clone(), r.abs())
        })
        .collect())
}

/// The `k` features with the largest `|r|` against the label, descending;
/// ties go to the lexically smaller name.
pub fn select_by_correlation(dataset: &Dataset, k: usize) -> Result<FeatureSubset> {
    check_k(k, dataset.n_features())?;
    let mut ranked = target_correlations(dataset)?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(FeatureSubset {
        method: SelectionMethod::Correlation,
        names: ranked.into_iter().take(k).map(|(n, _)| n).collect(),
        k,
        eliminated: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ForestParams;

    fn toy() -> Dataset {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 3) as f64, ((i * 7) % 5) as f64, 4.0, 2.0 * (i % 3) as f64])
            .collect();
        let y = (0..30).map(|i| i % 3).collect();
        Dataset::from_matrix(vec!["a".into(), "n".into(), "c".into(), "a2".into()], x, y).unwrap()
    }

    #[test]
    fn self_and_linear_correlation() {
        let m = correlation_matrix(&toy(), true).unwrap();
        assert_eq!(m.get("a", "a"), Some(1.0));
        assert!((m.get("a", "a2").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.get("c", "a"), Some(0.0));
        assert_eq!(m.get("c", "c"), Some(1.0));
        assert!((m.get("a", TARGET_LABEL).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.to_csv().starts_with(",a,n,c,a2,result\n"));
    }

    #[test]
    fn too_few_rows() {
        let ds = toy().select_rows(&[0]);
        assert!(matches!(correlation_matrix(&ds, false), Err(FeatselError::TooFewRows(1))));
    }

    #[test]
    fn correlation_ranking_breaks_ties_lexically() {
        let s = select_by_correlation(&toy(), 2).unwrap();
        // a and a2 both have |r| = 1
        assert_eq!(s.names, ["a", "a2"]);
        assert!(matches!(select_by_correlation(&toy(), 5), Err(FeatselError::KOutOfRange { .. })));
    }

    #[test]
    fn rfe_identity_and_size() {
        let hp = Hyperparams::RandomForest(ForestParams {
            n_trees: 10,
            ..Default::default()
        });
        let ds = toy();
        let s = rfe(ModelKind::RandomForest, &hp, &ds, 4).unwrap();
        assert_eq!(s.names, ds.feature_names());
        assert!(s.eliminated.is_empty());
        let s = rfe(ModelKind::RandomForest, &hp, &ds, 1).unwrap();
        assert_eq!(s.names.len(), 1);
        assert_eq!(s.eliminated.len(), 3);
        assert!(s.names[0] == "a" || s.names[0] == "a2");
        assert!(rfe(ModelKind::RandomForest, &hp, &ds, 0).is_err());
    }
}
