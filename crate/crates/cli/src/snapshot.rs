use std::path::Path;

use serde::{Deserialize, Serialize};

use oddsmith::dataset::NormalizationParams;
use oddsmith::TrainedModel;

use crate::config::DataOptions;
use crate::error::{CliError, Result};
use crate::pipeline::{to_pretty_json, write_atomic};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

/// A trained model plus what is needed to feed it new rows: the data
/// options it was trained under and, for scaled models, the fitted ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub format_version: u32,
    pub data: DataOptions,
    pub normalization: Option<NormalizationParams>,
    /// `SEASON:MATCHWEEK` the training rows stop before, if any.
    pub trained_before: Option<String>,
    pub n_train: usize,
    /// Versioned model document, see [`TrainedModel::to_json`].
    pub model: serde_json::Value,
}

impl ModelSnapshot {
    pub fn new(
        model: &TrainedModel,
        data: DataOptions,
        normalization: Option<NormalizationParams>,
        trained_before: Option<String>,
        n_train: usize,
    ) -> Result<Self> {
        let text = model.to_json()?;
        Ok(Self {
            format_version: SNAPSHOT_FORMAT_VERSION,
            data,
            normalization,
            trained_before,
            n_train,
            model: serde_json::from_str(&text).map_err(|e| CliError::runtime(e.to_string()))?,
        })
    }

    pub fn model(&self) -> Result<TrainedModel> {
        Ok(TrainedModel::from_json(&self.model.to_string())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &to_pretty_json(self))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read model {}: {e}", path.display())))?;
        let snap: ModelSnapshot = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("model {}: {e}", path.display())))?;
        if snap.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(CliError::input(format!(
                "model {}: snapshot format {} is not supported (expected {SNAPSHOT_FORMAT_VERSION})",
                path.display(),
                snap.format_version
            )));
        }
        Ok(snap)
    }
}
