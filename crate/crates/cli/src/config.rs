//! Experiment configuration (JSON). Every field is optional in the file and
//! falls back to the default documented on it.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use oddsmith::dataset::{ImputeStrategy, SplitSpec, SplitVariant, DEFAULT_TEST_FRACTION};
use oddsmith::featsel::{SelectionMethod, DEFAULT_K};
use oddsmith::models::{ForestParams, Hyperparams, ModelKind, ParamGrid, SearchMode};
use oddsmith::odds::Margin;

use crate::error::{CliError, Result};

/// How raw match CSVs become a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataOptions {
    /// Match CSV. Default `matches.csv`.
    pub data: PathBuf,
    /// Statistic columns to read; `null` (default) keeps every numeric column.
    pub stats: Option<Vec<String>>,
    /// Missing-value strategy. Default `mean`.
    pub impute: ImputeStrategy,
    /// Features dropped before modelling. Default [`OUTCOME_DERIVED`].
    pub exclude_features: Vec<String>,
}

/// Statistics that are arithmetic on the final score of the same match
/// (goals, goals per shot, clean sheet, saves given shots against, goal
/// creating actions, penalty goals). Left in, they give the result away.
pub const OUTCOME_DERIVED: [&str; 9] = ["gf", "ga", "g_sh", "g_sot", "cs", "saves", "save_pct", "gca", "pk"];

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            data: PathBuf::from("matches.csv"),
            stats: None,
            impute: ImputeStrategy::Mean,
            exclude_features: OUTCOME_DERIVED.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Search over a model's grid; its seed is the experiment seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SearchConfig {
    #[default]
    Exhaustive,
    Randomized { n_samples: usize },
}

impl SearchConfig {
    pub fn mode(self, seed: u64) -> SearchMode {
        match self {
            SearchConfig::Exhaustive => SearchMode::Exhaustive,
            SearchConfig::Randomized { n_samples } => SearchMode::Randomized { n_samples, seed },
        }
    }
}

/// Forest used to rank features for RFE: 100 trees of depth 8. One ranking
/// per split is shared by every model.
pub fn default_rfe_estimator() -> Hyperparams {
    Hyperparams::RandomForest(ForestParams {
        n_trees: 100,
        max_depth: Some(8),
        ..Default::default()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Match CSV. Default `matches.csv`.
    pub data: PathBuf,
    /// Statistic columns to read; `null` (default) keeps every numeric column.
    pub stats: Option<Vec<String>>,
    /// Missing-value strategy. Default `mean`.
    pub impute: ImputeStrategy,
    /// Default [`OUTCOME_DERIVED`].
    pub exclude_features: Vec<String>,
    /// Fraction of fixtures held out at the end. Default 0.2.
    pub test_fraction: f64,
    /// Default: two seasons, one season, last 10 matchweeks.
    pub splits: Vec<SplitVariant>,
    /// Default: all four models.
    pub models: Vec<ModelKind>,
    /// Per-model overrides of the preset hyperparameters.
    pub hyperparams: IndexMap<ModelKind, Hyperparams>,
    /// Per-model grids; a model with a grid is tuned on its training split.
    pub grids: IndexMap<ModelKind, ParamGrid>,
    /// Time-ordered CV folds for grid search. Default 3.
    pub folds: usize,
    pub search: SearchConfig,
    /// Default: all, rfe, correlation.
    pub subsets: Vec<SelectionMethod>,
    /// Subset size for RFE and correlation selection. Default 10.
    pub k: usize,
    pub rfe_estimator: Hyperparams,
    /// Bookmaker margin for odds output. Default 0.05.
    pub margin: Margin,
    /// Master seed for every random choice. Default 42.
    pub seed: u64,
    /// Output directory. Default `out`.
    pub output: PathBuf,
    /// Record feature importance per cell. Default true.
    pub importance: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let data = DataOptions::default();
        Self {
            data: data.data,
            stats: data.stats,
            impute: data.impute,
            exclude_features: data.exclude_features,
            test_fraction: DEFAULT_TEST_FRACTION,
            splits: vec![
                SplitVariant::TwoSeasons,
                SplitVariant::OneSeason,
                SplitVariant::LastNMatchweeks(10),
            ],
            models: ModelKind::ALL.to_vec(),
            hyperparams: IndexMap::new(),
            grids: IndexMap::new(),
            folds: 3,
            search: SearchConfig::Exhaustive,
            subsets: vec![SelectionMethod::All, SelectionMethod::Rfe, SelectionMethod::Correlation],
            k: DEFAULT_K,
            rfe_estimator: default_rfe_estimator(),
            margin: Margin::default(),
            seed: 42,
            output: PathBuf::from("out"),
            importance: true,
        }
    }
}

fn no_duplicates<T: std::hash::Hash + Eq + std::fmt::Debug>(what: &str, items: &[T]) -> Result<()> {
    let mut seen = HashSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(CliError::input(format!("config: duplicate {what} {item:?}")));
        }
    }
    if items.is_empty() {
        return Err(CliError::input(format!("config: no {what} selected")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::input(format!("config: {m}")));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        no_duplicates("model", &self.models)?;
        no_duplicates("split", &self.splits)?;
        no_duplicates("subset", &self.subsets)?;
        if self.splits.contains(&SplitVariant::LastNMatchweeks(0)) {
            return bad("last_n_matchweeks must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        for (kind, hp) in &self.hyperparams {
            if hp.kind() != *kind {
                return bad(format!("hyperparams for {kind} have kind {}", hp.kind()));
            }
            hp.validate().map_err(|e| CliError::input(format!("config: {kind}: {e}")))?;
        }
        for (kind, grid) in &self.grids {
            if grid.is_empty() || grid.values().any(Vec::is_empty) {
                return bad(format!("grid for {kind} is empty"));
            }
            let mut probe = self.hyperparams_for(*kind);
            for (name, values) in grid {
                for v in values {
                    probe
                        .set(name, v)
                        .map_err(|e| CliError::input(format!("config: grid for {kind}: {e}")))?;
                }
            }
        }
        if !self.grids.is_empty() && self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if let SearchConfig::Randomized { n_samples: 0 } = self.search {
            return bad("randomized search needs n_samples >= 1".into());
        }
        self.rfe_estimator
            .validate()
            .map_err(|e| CliError::input(format!("config: rfe_estimator: {e}")))?;
        Ok(())
    }

    /// Preset or overridden hyperparameters, reseeded with the master seed.
    pub fn hyperparams_for(&self, kind: ModelKind) -> Hyperparams {
        self.hyperparams
            .get(&kind)
            .cloned()
            .unwrap_or_else(|| Hyperparams::default_for(kind))
            .with_seed(self.seed)
    }

    pub fn data_options(&self) -> DataOptions {
        DataOptions {
            data: self.data.clone(),
            stats: self.stats.clone(),
            impute: self.impute,
            exclude_features: self.exclude_features.clone(),
        }
    }

    pub fn split_spec(&self, variant: SplitVariant) -> SplitSpec {
        SplitSpec {
            variant,
            test_fraction: self.test_fraction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_means_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(text.contains("\"last_n_matchweeks\": 10"));
    }

    #[test]
    fn rejects_bad_values() {
        let parse = |s: &str| serde_json::from_str::<ExperimentConfig>(s);
        assert!(parse(r#"{"margin": 1.2}"#).is_err());
        assert!(parse(r#"{"colour": "red"}"#).is_err());
        let cfg = parse(r#"{"models": ["knn", "knn"]}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = parse(r#"{"grids": {"knn": {"depth": [1]}}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = parse(r#"{"hyperparams": {"knn": {"kind": "svm", "c": 1, "epochs": 1, "learning_rate": 0.1, "seed": 1}}}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
