//! Football match-outcome forecasting.
//!
//! The crate covers the whole offline pipeline: ingest per-team match
//! statistics ([`dataset`]), train one of four multiclass classifiers
//! ([`models`]), pick feature subsets ([`featsel`]), score predictions
//! ([`metrics`]) and turn class probabilities into 1x2 decimal odds with an
//! overround, including a flat-stake backtester ([`odds`]).
//!
//! Class codes are fixed throughout: `0` draw, `1` win, `2` loss, always from
//! the perspective of the row's own team.

pub mod dataset;
pub mod featsel;
pub mod metrics;
pub mod models;
pub mod odds;
mod rng;

pub use dataset::{Dataset, DatasetError, MatchRecord};
pub use models::{Hyperparams, ModelError, ModelKind, ProbTriple, TrainedModel};

/// Number of outcome classes (draw, win, loss).
pub const NUM_CLASSES: usize = 3;
