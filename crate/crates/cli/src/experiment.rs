//! The model x split x feature-subset evaluation matrix.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use oddsmith::dataset::{normalize, split, Dataset, SplitVariant};
use oddsmith::featsel::{rfe, select_by_correlation, FeatureSubset, SelectionMethod};
use oddsmith::metrics::{render_table, report, EvalReport};
use oddsmith::models::{grid_search_from, train, GridRow, Hyperparams, ModelKind};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::pipeline::{load_dataset, to_pretty_json, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: ModelKind,
    pub split: SplitVariant,
    pub subset: SelectionMethod,
    pub features: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    /// Hyperparameters the reported model was trained with.
    pub hyperparams: Hyperparams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridRow>>,
    pub report: EvalReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<Vec<(String, f64)>>,
}

impl CellReport {
    pub fn file_stem(&self) -> String {
        cell_stem(self.model, self.split, self.subset)
    }
}

pub fn cell_stem(model: ModelKind, split: SplitVariant, subset: SelectionMethod) -> String {
    format!("{}__{}__{}", model.slug(), split.slug(), subset.slug())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub split: SplitVariant,
    pub subset: FeatureSubset,
}

/// Everything an experiment produced, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBundle {
    pub config: ExperimentConfig,
    pub subsets: Vec<SubsetRecord>,
    pub cells: Vec<CellReport>,
}

struct SplitData {
    variant: SplitVariant,
    train: Dataset,
    test: Dataset,
    subsets: Vec<FeatureSubset>,
}

fn prepare_split(cfg: &ExperimentConfig, ds: &Dataset, variant: SplitVariant) -> Result<SplitData> {
    let (train_set, test_set) = split(ds, &cfg.split_spec(variant))?;
    let n_features = train_set.n_features();
    if cfg.k > n_features && cfg.subsets.iter().any(|s| *s != SelectionMethod::All) {
        return Err(CliError::input(format!("k = {} exceeds the {n_features} available features", cfg.k)));
    }
    let subsets = cfg
        .subsets
        .iter()
        .map(|method| {
            Ok(match method {
                SelectionMethod::All => FeatureSubset::all(&train_set),
                SelectionMethod::Rfe => {
                    let hp = cfg.rfe_estimator.clone().with_seed(cfg.seed);
                    rfe(hp.kind(), &hp, &train_set, cfg.k)?
                }
                SelectionMethod::Correlation => select_by_correlation(&train_set, cfg.k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    log::info!(
        "{}: {} train rows, {} test rows",
        variant.label(),
        train_set.n_rows(),
        test_set.n_rows()
    );
    Ok(SplitData {
        variant,
        train: train_set,
        test: test_set,
        subsets,
    })
}

/// Trains and scores one cell. k-NN and the SVM see features min-max scaled
/// with ranges fitted on the training rows only.
pub fn run_cell(
    cfg: &ExperimentConfig,
    model: ModelKind,
    split: SplitVariant,
    subset: &FeatureSubset,
    train_set: &Dataset,
    test_set: &Dataset,
) -> Result<CellReport> {
    let mut tr = train_set.select_features(&subset.names)?;
    let mut te = test_set.select_features(&subset.names)?;
    if model.needs_normalized_input() {
        let (scaled, params) = normalize(&tr);
        te = params.apply(&te)?;
        tr = scaled;
    }
    let mut hp = cfg.hyperparams_for(model);
    let mut grid = None;
    if let Some(g) = cfg.grids.get(&model) {
        let result = grid_search_from(&hp, g, &tr, cfg.folds, cfg.search.mode(cfg.seed))?;
        hp = result.best;
        grid = Some(result.table);
    }
    let fitted = train(model, &hp, &tr)?;
    let pred = fitted.predict_dataset(&te)?;
    let report = report(te.y(), &pred)?;
    log::info!(
        "{} / {} / {}: accuracy {:.4}",
        model.display_name(),
        split.label(),
        subset.method.label(),
        report.accuracy
    );
    Ok(CellReport {
        model,
        split,
        subset: subset.method,
        features: subset.names.clone(),
        n_train: tr.n_rows(),
        n_test: te.n_rows(),
        hyperparams: hp,
        grid,
        report,
        importance: cfg.importance.then(|| fitted.feature_importance()),
    })
}

/// Runs the configured matrix on an already loaded dataset.
pub fn run_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<ExperimentBundle> {
    cfg.validate()?;
    let splits: Vec<SplitData> = cfg
        .splits
        .iter()
        .map(|&v| prepare_split(cfg, ds, v))
        .collect::<Result<_>>()?;

    // cells in (model, split, subset) order
    let mut jobs = Vec::new();
    for &model in &cfg.models {
        for sd in &splits {
            for subset in &sd.subsets {
                jobs.push((model, sd, subset));
            }
        }
    }
    let cells: Vec<CellReport> = jobs
        .into_par_iter()
        .map(|(model, sd, subset)| run_cell(cfg, model, sd.variant, subset, &sd.train, &sd.test))
        .collect::<Result<_>>()?;

    let subsets = splits
        .iter()
        .flat_map(|sd| {
            sd.subsets.iter().map(|s| SubsetRecord {
                split: sd.variant,
                subset: s.clone(),
            })
        })
        .collect();
    Ok(ExperimentBundle {
        config: cfg.clone(),
        subsets,
        cells,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentBundle> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.data_options())?;
    run_on(cfg, &ds)
}

impl ExperimentBundle {
    /// Plain-text tables, one per (model, subset), rows per split.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for &model in &self.config.models {
            for &subset in &self.config.subsets {
                let blocks: Vec<(String, &EvalReport)> = self
                    .cells
                    .iter()
                    .filter(|c| c.model == model && c.subset == subset)
                    .map(|c| (c.split.label(), &c.report))
                    .collect();
                if blocks.is_empty() {
                    continue;
                }
                out.push_str(&format!("{} ({})\n", model.display_name(), subset.label()));
                out.push_str(&render_table("Data", &blocks));
                out.push('\n');
            }
        }
        out
    }

    /// Writes `config.json`, `cells/*.json`, `summary.txt` and `bundle.json`
    /// under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("config.json"), &to_pretty_json(&self.config))?;
        for cell in &self.cells {
            let path = dir.join("cells").join(format!("{}.json", cell.file_stem()));
            write_atomic(&path, &to_pretty_json(cell))?;
        }
        write_atomic(&dir.join("summary.txt"), self.summary().as_bytes())?;
        write_atomic(&dir.join("bundle.json"), &to_pretty_json(self))?;
        Ok(())
    }
}
