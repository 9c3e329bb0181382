use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, MatchRecord, Result, DESCRIPTOR_FEATURES};

/// Free-text columns dropped before modelling.
pub const PRUNED_COLUMNS: [&str; 5] = ["match report", "notes", "referee", "captain", "formation"];

/// Removes the annotation columns in [`PRUNED_COLUMNS`] from every record.
pub fn prune_columns(mut records: Vec<MatchRecord>) -> Vec<MatchRecord> {
    for r in &mut records {
        r.stats.retain(|name, _| !PRUNED_COLUMNS.contains(&name.as_str()));
    }
    records
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeStrategy {
    #[default]
    Mean,
    Median,
    Mode,
}

/// Fills missing statistics column by column.
///
/// Fill values come from the non-missing entries of the same column across
/// all records. Mode ties resolve to the smallest value.
pub fn impute(mut records: Vec<MatchRecord>, strategy: ImputeStrategy) -> Result<Vec<MatchRecord>> {
    let mut names: Vec<String> = Vec::new();
    for r in &records {
        for (name, v) in &r.stats {
            if v.is_none() && !names.contains(name) {
                names.push(name.clone());
            }
        }
    }
    for name in names {
        let mut present: Vec<f64> = records
            .iter()
            .filter_map(|r| r.stats.get(&name).copied().flatten())
            .collect();
        if present.is_empty() {
            return Err(DatasetError::AllMissing(name));
        }
        let fill = match strategy {
            ImputeStrategy::Mean => present.iter().sum::<f64>() / present.len() as f64,
            ImputeStrategy::Median => {
                present.sort_by(f64::total_cmp);
                let n = present.len();
                if n % 2 == 1 {
                    present[n / 2]
                } else {
                    (present[n / 2 - 1] + present[n / 2]) / 2.0
                }
            }
            ImputeStrategy::Mode => {
                present.sort_by(f64::total_cmp);
                let (mut best, mut best_run) = (present[0], 0usize);
                let mut i = 0;
                while i < present.len() {
                    let mut j = i;
                    while j < present.len() && present[j] == present[i] {
                        j += 1;
                    }
                    if j - i > best_run {
                        best = present[i];
                        best_run = j - i;
                    }
                    i = j;
                }
                best
            }
        };
        for r in &mut records {
            if let Some(slot) = r.stats.get_mut(&name) {
                if slot.is_none() {
                    *slot = Some(fill);
                }
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Per-feature min-max ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub features: Vec<FeatureRange>,
}

impl NormalizationParams {
    pub fn fit(dataset: &Dataset) -> Self {
        let features = dataset
            .feature_names()
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let (min, max) = dataset
                    .x()
                    .iter()
                    .map(|r| r[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                let (min, max) = if min.is_finite() { (min, max) } else { (0.0, 0.0) };
                FeatureRange { name: name.clone(), min, max }
            })
            .collect();
        Self { features }
    }

    fn ranges_for(&self, names: &[String]) -> Result<Vec<(f64, f64)>> {
        names
            .iter()
            .map(|n| {
                self.features
                    .iter()
                    .find(|f| &f.name == n)
                    .map(|f| (f.min, f.max))
                    .ok_or_else(|| DatasetError::UnknownFeature(n.clone()))
            })
            .collect()
    }

    fn scale(v: f64, (min, max): (f64, f64)) -> f64 {
        if max > min {
            (v - min) / (max - min)
        } else {
            0.0
        }
    }

    /// Maps `dataset` through these ranges (matched by feature name).
    ///
    /// Values outside the fitted range land outside [0, 1].
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        let ranges = self.ranges_for(dataset.feature_names())?;
        let x = dataset
            .x()
            .iter()
            .map(|row| row.iter().zip(&ranges).map(|(&v, &r)| Self::scale(v, r)).collect())
            .collect();
        Ok(dataset.with_x(x, Some(self.clone())))
    }

    pub fn apply_row(&self, names: &[String], row: &[f64]) -> Result<Vec<f64>> {
        let ranges = self.ranges_for(names)?;
        Ok(row.iter().zip(&ranges).map(|(&v, &r)| Self::scale(v, r)).collect())
    }

    /// Undoes [`apply`](Self::apply). Constant columns come back as their minimum.
    pub fn invert(&self, dataset: &Dataset) -> Result<Dataset> {
        let ranges = self.ranges_for(dataset.feature_names())?;
        let x = dataset
            .x()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&ranges)
                    .map(|(&v, &(min, max))| min + v * (max - min))
                    .collect()
            })
            .collect();
        Ok(dataset.with_x(x, None))
    }
}

/// Min-max normalized copy of `dataset`; constant columns become 0.
pub fn normalize(dataset: &Dataset) -> (Dataset, NormalizationParams) {
    let params = NormalizationParams::fit(dataset);
    let out = params.apply(dataset).expect("params fitted on the same features");
    (out, params)
}

/// Replaces the statistics of every row in (`season`, `matchweek`) with the
/// team's mean over its earlier matchweeks of that season.
///
/// The encoded venue/team/opponent columns, labels and metadata are left
/// alone.
pub fn season_average_substitute(dataset: &Dataset, season: &str, matchweek: u32) -> Result<Dataset> {
    let meta = dataset.meta();
    let targets: Vec<usize> = (0..dataset.n_rows())
        .filter(|&i| meta[i].season == season && meta[i].matchweek == matchweek)
        .collect();
    if targets.is_empty() {
        return Err(DatasetError::UnknownMatchweek {
            season: season.to_string(),
            matchweek,
        });
    }
    let stat_cols: Vec<usize> = dataset
        .feature_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| !DESCRIPTOR_FEATURES.contains(&n.as_str()))
        .map(|(j, _)| j)
        .collect();

    let mut means: HashMap<u32, Vec<f64>> = HashMap::new();
    for &i in &targets {
        let team = meta[i].team;
        if means.contains_key(&team) {
            continue;
        }
        let prior: Vec<usize> = (0..dataset.n_rows())
            .filter(|&r| meta[r].season == season && meta[r].team == team && meta[r].matchweek < matchweek)
            .collect();
        if prior.is_empty() {
            let name = dataset.encoders().team_name(team).unwrap_or("?").to_string();
            return Err(DatasetError::NoPriorMatches(name));
        }
        let n = prior.len() as f64;
        let m = stat_cols
            .iter()
            .map(|&j| prior.iter().map(|&r| dataset.row(r)[j]).sum::<f64>() / n)
            .collect();
        means.insert(team, m);
    }

    let mut x = dataset.x().to_vec();
    for &i in &targets {
        let m = &means[&meta[i].team];
        for (k, &j) in stat_cols.iter().enumerate() {
            x[i][j] = m[k];
        }
    }
    Ok(dataset.with_x(x, dataset.normalization().cloned()))
}
