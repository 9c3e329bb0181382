//! The four outcome classifiers behind one train/predict contract.
//!
//! Every model predicts a [`ProbTriple`] over the classes 0 (draw), 1 (win)
//! and 2 (loss). How the triple is formed depends on the model:
//!
//! | model           | probabilities                                  | importance                  |
//! |-----------------|------------------------------------------------|-----------------------------|
//! | random forest   | fraction of tree votes                         | mean impurity decrease      |
//! | k-NN            | fraction of neighbour votes                    | permutation accuracy drop   |
//! | linear SVM      | softmax of the one-vs-rest decision values     | mean \|w\| across classes   |
//! | gradient boost  | softmax of the per-class boosted scores        | total split gain            |
//!
//! k-NN and the SVM expect min-max normalized features.

pub mod boost;
mod forest;
mod knn;
mod search;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::NUM_CLASSES;

pub use search::{grid_search, grid_search_from, time_series_folds, GridRow, ParamGrid, SearchMode, SearchResult};

/// Version written into serialized models; loading any other version fails.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("non-finite value at row {row}, feature `{feature}`")]
    NonFiniteFeature { row: usize, feature: String },
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("unknown parameter `{param}` for {kind}")]
    UnknownParam { kind: ModelKind, param: String },
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    Knn,
    Svm,
    GradientBoost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::RandomForest,
        ModelKind::Knn,
        ModelKind::Svm,
        ModelKind::GradientBoost,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
            ModelKind::GradientBoost => "gradient_boost",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "Random Forest Classifier",
            ModelKind::Knn => "KNN Classifier",
            ModelKind::Svm => "Support Vector Machine",
            ModelKind::GradientBoost => "XGB Classifier",
        }
    }

    /// Whether the model expects min-max normalized input.
    pub fn needs_normalized_input(self) -> bool {
        matches!(self, ModelKind::Knn | ModelKind::Svm)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "knn" => Ok(ModelKind::Knn),
            "svm" => Ok(ModelKind::Svm),
            "gradient_boost" | "xgb" | "gb" => Ok(ModelKind::GradientBoost),
            other => Err(format!("unknown model `{other}` (random_forest, knn, svm, gradient_boost)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
    #[serde(default)]
    pub metric: Metric,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 15,
            metric: Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    /// Inverse regularization strength.
    pub c: f64,
    pub epochs: usize,
    /// Initial step size of the subgradient descent.
    pub learning_rate: f64,
    pub seed: u64,
    /// Bootstrap replicas trained only to produce vote counts (0 = none).
    #[serde(default)]
    pub replicas: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 200,
            learning_rate: 0.5,
            seed: 42,
            replicas: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    /// Row fraction drawn (without replacement) for each round.
    #[serde(default = "one")]
    pub subsample: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            l2_lambda: 1.0,
            subsample: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparams {
    RandomForest(ForestParams),
    Knn(KnnParams),
    Svm(SvmParams),
    GradientBoost(BoostParams),
}

fn as_count(param: &str, v: &serde_json::Value) -> Result<usize> {
    v.as_f64()
        .filter(|x| x.fract() == 0.0 && *x >= 0.0)
        .map(|x| x as usize)
        .ok_or_else(|| ModelError::InvalidHyperparams(format!("`{param}` must be a non-negative integer, got {v}")))
}

fn as_real(param: &str, v: &serde_json::Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| ModelError::InvalidHyperparams(format!("`{param}` must be a number, got {v}")))
}

fn as_optional_count(param: &str, v: &serde_json::Value) -> Result<Option<usize>> {
    if v.is_null() {
        Ok(None)
    } else {
        as_count(param, v).map(Some)
    }
}

impl Hyperparams {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::RandomForest => Hyperparams::RandomForest(ForestParams::default()),
            ModelKind::Knn => Hyperparams::Knn(KnnParams::default()),
            ModelKind::Svm => Hyperparams::Svm(SvmParams::default()),
            ModelKind::GradientBoost => Hyperparams::GradientBoost(BoostParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::RandomForest(_) => ModelKind::RandomForest,
            Hyperparams::Knn(_) => ModelKind::Knn,
            Hyperparams::Svm(_) => ModelKind::Svm,
            Hyperparams::GradientBoost(_) => ModelKind::GradientBoost,
        }
    }

    /// Same parameters with the seed replaced (k-NN has none).
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Hyperparams::RandomForest(p) => p.seed = seed,
            Hyperparams::Knn(_) => {}
            Hyperparams::Svm(p) => p.seed = seed,
            Hyperparams::GradientBoost(p) => p.seed = seed,
        }
        self
    }

    /// Overrides one named parameter; used by the grid search.
    pub fn set(&mut self, param: &str, v: &serde_json::Value) -> Result<()> {
        let kind = self.kind();
        let unknown = || ModelError::UnknownParam {
            kind,
            param: param.to_string(),
        };
        match self {
            Hyperparams::RandomForest(p) => match param {
                "n_trees" => p.n_trees = as_count(param, v)?,
                "max_depth" => p.max_depth = as_optional_count(param, v)?,
                "min_samples_leaf" => p.min_samples_leaf = as_count(param, v)?,
                "max_features" => p.max_features = as_optional_count(param, v)?,
                "seed" => p.seed = as_count(param, v)? as u64,
                _ => return Err(unknown()),
            },
            Hyperparams::Knn(p) => match param {
                "k" => p.k = as_count(param, v)?,
                _ => return Err(unknown()),
            },
            Hyperparams::Svm(p) => match param {
                "c" => p.c = as_real(param, v)?,
                "epochs" => p.epochs = as_count(param, v)?,
                "learning_rate" => p.learning_rate = as_real(param, v)?,
                "replicas" => p.replicas = as_count(param, v)?,
                "seed" => p.seed = as_count(param, v)? as u64,
                _ => return Err(unknown()),
            },
            Hyperparams::GradientBoost(p) => match param {
                "n_rounds" => p.n_rounds = as_count(param, v)?,
                "max_depth" => p.max_depth = as_count(param, v)?,
                "learning_rate" => p.learning_rate = as_real(param, v)?,
                "l2_lambda" => p.l2_lambda = as_real(param, v)?,
                "subsample" => p.subsample = as_real(param, v)?,
                "seed" => p.seed = as_count(param, v)? as u64,
                _ => return Err(unknown()),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ModelError::InvalidHyperparams(msg.to_string()));
        match self {
            Hyperparams::RandomForest(p) => {
                if p.n_trees == 0 || p.min_samples_leaf == 0 {
                    return bad("n_trees and min_samples_leaf must be at least 1");
                }
                if p.max_depth == Some(0) || p.max_features == Some(0) {
                    return bad("max_depth and max_features must be at least 1 (or null)");
                }
            }
            Hyperparams::Knn(p) => {
                if p.k == 0 {
                    return bad("k must be at least 1");
                }
            }
            Hyperparams::Svm(p) => {
                if !(p.c > 0.0 && p.c.is_finite()) {
                    return bad("c must be positive");
                }
                if p.epochs == 0 {
                    return bad("epochs must be at least 1");
                }
                if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                    return bad("learning_rate must be positive");
                }
            }
            Hyperparams::GradientBoost(p) => {
                if p.n_rounds == 0 || p.max_depth == 0 {
                    return bad("n_rounds and max_depth must be at least 1");
                }
                // zero is allowed: it leaves the base-rate prior untouched
                if !(0.0..=1.0).contains(&p.learning_rate) {
                    return bad("learning_rate must lie in [0, 1]");
                }
                if !(p.l2_lambda >= 0.0 && p.l2_lambda.is_finite()) {
                    return bad("l2_lambda must be non-negative");
                }
                if !(p.subsample > 0.0 && p.subsample <= 1.0) {
                    return bad("subsample must lie in (0, 1]");
                }
            }
        }
        Ok(())
    }
}

/// Class probabilities in class-code order: draw (0), win (1), loss (2).
///
/// For a home-perspective row `p_home` is the home win probability; for an
/// away row it is the away side's win probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbTriple {
    pub p_draw: f64,
    pub p_home: f64,
    pub p_away: f64,
}

pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

impl ProbTriple {
    pub fn new(p_draw: f64, p_home: f64, p_away: f64) -> Result<Self> {
        let t = Self { p_draw, p_home, p_away };
        t.validate()?;
        Ok(t)
    }

    pub fn from_array(p: [f64; NUM_CLASSES]) -> Result<Self> {
        Self::new(p[0], p[1], p[2])
    }

    /// Normalizes non-negative weights (votes, exponentials) to a triple.
    pub(crate) fn from_weights(w: [f64; NUM_CLASSES]) -> Self {
        let total: f64 = w.iter().sum();
        Self {
            p_draw: w[0] / total,
            p_home: w[1] / total,
            p_away: w[2] / total,
        }
    }

    pub fn as_array(&self) -> [f64; NUM_CLASSES] {
        [self.p_draw, self.p_home, self.p_away]
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.as_array();
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ModelError::InvalidProbabilities(format!("{p:?} outside [0, 1]")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(ModelError::InvalidProbabilities(format!("{p:?} sum to {sum}")));
        }
        Ok(())
    }

    /// Most probable class; ties go to the lowest class code.
    pub fn argmax(&self) -> usize {
        argmax(&self.as_array())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub(crate) fn softmax(z: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FittedState {
    RandomForest(forest::Forest),
    Knn(knn::KnnState),
    Svm(svm::SvmState),
    GradientBoost(boost::BoostState),
}

/// A fitted classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    hyperparams: Hyperparams,
    feature_names: Vec<String>,
    classes: [usize; NUM_CLASSES],
    state: FittedState,
}

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format_version: u32,
    kind: ModelKind,
    model: TrainedModel,
}

/// Fits a model of `kind` on `data`.
pub fn train(kind: ModelKind, hp: &Hyperparams, data: &Dataset) -> Result<TrainedModel> {
    if hp.kind() != kind {
        return Err(ModelError::InvalidHyperparams(format!(
            "{} hyperparameters given for {kind}",
            hp.kind()
        )));
    }
    hp.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    for (i, row) in data.x().iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteFeature {
                row: i,
                feature: data.feature_names()[j].clone(),
            });
        }
    }
    let state = match hp {
        Hyperparams::RandomForest(p) => FittedState::RandomForest(forest::fit(p, data.x(), data.y())),
        Hyperparams::Knn(p) => {
            if p.k > data.n_rows() {
                return Err(ModelError::KTooLarge {
                    k: p.k,
                    n: data.n_rows(),
                });
            }
            FittedState::Knn(knn::fit(p, data.x(), data.y()))
        }
        Hyperparams::Svm(p) => FittedState::Svm(svm::fit(p, data.x(), data.y())),
        Hyperparams::GradientBoost(p) => FittedState::GradientBoost(boost::fit(p, data.x(), data.y())),
    };
    Ok(TrainedModel {
        hyperparams: hp.clone(),
        feature_names: data.feature_names().to_vec(),
        classes: [0, 1, 2],
        state,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.hyperparams.kind()
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn classes(&self) -> [usize; NUM_CLASSES] {
        self.classes
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.feature_names.len() {
            return Err(ModelError::FeatureMismatch(format!(
                "row has {} values, model expects {} features",
                row.len(),
                self.feature_names.len()
            )));
        }
        Ok(())
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<ProbTriple> {
        self.check_row(row)?;
        Ok(match &self.state {
            FittedState::RandomForest(f) => f.predict_proba(row),
            FittedState::Knn(k) => k.predict_proba(row),
            FittedState::Svm(s) => s.predict_proba(row),
            FittedState::GradientBoost(b) => b.predict_proba(row),
        })
    }

    /// Argmax of [`predict_proba`](Self::predict_proba), lowest class on ties.
    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        Ok(self.predict_proba(row)?.argmax())
    }

    /// Raw per-class counts behind the probabilities, where the model has
    /// them: tree votes, neighbour votes, or SVM bootstrap-replica votes.
    pub fn vote_counts(&self, row: &[f64]) -> Result<Option<[usize; NUM_CLASSES]>> {
        self.check_row(row)?;
        Ok(match &self.state {
            FittedState::RandomForest(f) => Some(f.votes(row)),
            FittedState::Knn(k) => Some(k.votes(row)),
            FittedState::Svm(s) => s.replica_votes(row),
            FittedState::GradientBoost(_) => None,
        })
    }

    /// Checks that `dataset` carries every model feature and returns it
    /// restricted to the model's features, in the model's order.
    pub fn align(&self, dataset: &Dataset) -> Result<Dataset> {
        dataset.select_features(&self.feature_names).map_err(|e| match e {
            DatasetError::UnknownFeature(name) => {
                ModelError::FeatureMismatch(format!("dataset lacks model feature `{name}`"))
            }
            other => other.into(),
        })
    }

    pub fn predict_proba_dataset(&self, dataset: &Dataset) -> Result<Vec<ProbTriple>> {
        let aligned = self.align(dataset)?;
        aligned.x().iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba_dataset(dataset)?
            .iter()
            .map(ProbTriple::argmax)
            .collect())
    }

    /// Importance per feature, in feature order.
    pub fn importance_scores(&self) -> Vec<f64> {
        match &self.state {
            FittedState::RandomForest(f) => f.importance.clone(),
            FittedState::Knn(k) => k.permutation_importance(),
            FittedState::Svm(s) => s.importance(),
            FittedState::GradientBoost(b) => b.importance.clone(),
        }
    }

    /// `(feature, score)` pairs sorted by descending score (stable on ties).
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let mut pairs: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.importance_scores())
            .collect();
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
        pairs
    }

    /// Per-round training log-loss of a boosted model.
    pub fn training_curve(&self) -> Option<&[f64]> {
        match &self.state {
            FittedState::GradientBoost(b) => Some(&b.train_loss),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let env = ModelEnvelope {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            model: self.clone(),
        };
        Ok(serde_json::to_string(&env)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text)?;
        if v.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::VersionMismatch {
                found: v.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let env: ModelEnvelope = serde_json::from_str(text)?;
        if env.kind != env.model.kind() {
            return Err(ModelError::InvalidHyperparams("envelope kind disagrees with model".into()));
        }
        Ok(env.model)
    }
}
