//! Match data: ingestion, cleaning, encoding and chronological splits.
//!
//! Raw input is one CSV row per team per fixture (so every fixture appears
//! twice, once from each side). [`load_csv`] turns rows into
//! [`MatchRecord`]s, [`prune_columns`] and [`impute`] clean them, and
//! [`encode`] produces the numeric [`Dataset`] the models consume.

mod ingest;
mod preprocess;
mod split;
pub mod synthetic;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{load_csv, load_csv_all, read_csv, REQUIRED_COLUMNS};
pub use preprocess::{
    impute, normalize, prune_columns, season_average_substitute, ImputeStrategy,
    NormalizationParams, PRUNED_COLUMNS,
};
pub use split::{split, SplitSpec, SplitVariant, DEFAULT_TEST_FRACTION};
pub(crate) use split::fixture_groups;

/// Encoded descriptor columns that lead every feature vector.
pub const DESCRIPTOR_FEATURES: [&str; 3] = ["venue", "team", "opponent"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("EmptyFile: no header or no data rows")]
    EmptyFile,
    #[error("every value of column `{0}` is missing")]
    AllMissing(String),
    #[error("unknown result `{0}` (expected W, D or L)")]
    UnknownResult(String),
    #[error("team `{0}` has no prior matches in the season")]
    NoPriorMatches(String),
    #[error("season {season} has no matchweek {matchweek}")]
    UnknownMatchweek { season: String, matchweek: u32 },
    #[error("insufficient data for split {0}")]
    InsufficientData(String),
    #[error("feature `{0}` not present in dataset")]
    UnknownFeature(String),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Venue {
    Home,
    Away,
}

impl Venue {
    pub fn code(self) -> u32 {
        match self {
            Venue::Home => 1,
            Venue::Away => 0,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(Venue::Home),
            0 => Some(Venue::Away),
            _ => None,
        }
    }
}

impl FromStr for Venue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Home" | "home" => Ok(Venue::Home),
            "Away" | "away" => Ok(Venue::Away),
            other => Err(format!("venue must be Home or Away, got `{other}`")),
        }
    }
}

/// Match outcome from the row team's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchResult {
    Win,
    Draw,
    Loss,
}

impl MatchResult {
    /// Class code: draw 0, win 1, loss 2.
    pub fn code(self) -> usize {
        match self {
            MatchResult::Draw => 0,
            MatchResult::Win => 1,
            MatchResult::Loss => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<Self> {
        match code {
            0 => Some(MatchResult::Draw),
            1 => Some(MatchResult::Win),
            2 => Some(MatchResult::Loss),
            _ => None,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            MatchResult::Win => "W",
            MatchResult::Draw => "D",
            MatchResult::Loss => "L",
        }
    }
}

impl FromStr for MatchResult {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "W" => Ok(MatchResult::Win),
            "D" => Ok(MatchResult::Draw),
            "L" => Ok(MatchResult::Loss),
            other => Err(DatasetError::UnknownResult(other.to_string())),
        }
    }
}

/// One team's view of one fixture. `None` in `stats` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub date: NaiveDate,
    pub season: String,
    pub matchweek: u32,
    pub team: String,
    pub opponent: String,
    pub venue: Venue,
    pub result: MatchResult,
    pub stats: IndexMap<String, Option<f64>>,
}

/// Integer codes for the categorical columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMaps {
    pub venue_code: IndexMap<String, u32>,
    pub team_code: IndexMap<String, u32>,
    pub result_code: IndexMap<String, usize>,
}

impl Default for EncodingMaps {
    fn default() -> Self {
        let venue_code = [("Home".to_string(), 1), ("Away".to_string(), 0)]
            .into_iter()
            .collect();
        let result_code = [MatchResult::Win, MatchResult::Draw, MatchResult::Loss]
            .into_iter()
            .map(|r| (r.letter().to_string(), r.code()))
            .collect();
        Self {
            venue_code,
            team_code: IndexMap::new(),
            result_code,
        }
    }
}

impl EncodingMaps {
    fn intern_team(&mut self, name: &str) -> u32 {
        let next = self.team_code.len() as u32;
        *self.team_code.entry(name.to_string()).or_insert(next)
    }

    pub fn team_name(&self, code: u32) -> Option<&str> {
        self.team_code
            .get_index(code as usize)
            .filter(|(_, &c)| c == code)
            .map(|(name, _)| name.as_str())
    }
}

/// Per-row bookkeeping kept next to the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub date: NaiveDate,
    pub season: String,
    pub matchweek: u32,
    pub team: u32,
    pub opponent: u32,
    /// Chronological fixture index; both perspectives of a fixture share it.
    pub fixture: usize,
}

/// Encoded, column-aligned design matrix.
///
/// Rows are sorted by (date, fixture, venue) with the home row first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    meta: Vec<RowMeta>,
    encoders: EncodingMaps,
    #[serde(default)]
    normalization: Option<NormalizationParams>,
}

impl Dataset {
    /// Assembles a dataset from parts, checking shapes and labels.
    pub fn from_parts(
        feature_names: Vec<String>,
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        meta: Vec<RowMeta>,
        encoders: EncodingMaps,
    ) -> Result<Self> {
        if x.len() != y.len() || x.len() != meta.len() {
            return Err(DatasetError::Inconsistent(format!(
                "{} rows, {} labels, {} meta entries",
                x.len(),
                y.len(),
                meta.len()
            )));
        }
        let width = feature_names.len();
        if let Some(i) = x.iter().position(|r| r.len() != width) {
            return Err(DatasetError::Inconsistent(format!(
                "row {i} has {} values for {width} features",
                x[i].len()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= crate::NUM_CLASSES) {
            return Err(DatasetError::Inconsistent(format!("label {bad} out of range")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(DatasetError::Inconsistent(format!("duplicate feature `{dup}`")));
        }
        Ok(Self {
            feature_names,
            x,
            y,
            meta,
            encoders,
            normalization: None,
        })
    }

    /// Toy dataset without match context: row `i` is its own fixture on day `i`.
    pub fn from_matrix(feature_names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Self> {
        let base = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let meta = (0..x.len())
            .map(|i| RowMeta {
                date: base + chrono::Days::new(i as u64),
                season: "toy".to_string(),
                matchweek: i as u32 + 1,
                team: 0,
                opponent: 1,
                fixture: i,
            })
            .collect();
        Self::from_parts(feature_names, x, y, meta, EncodingMaps::default())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i]
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn encoders(&self) -> &EncodingMaps {
        &self.encoders
    }

    pub fn normalization(&self) -> Option<&NormalizationParams> {
        self.normalization.as_ref()
    }

    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().map(|r| r[j]).collect()
    }

    pub fn n_fixtures(&self) -> usize {
        let mut last = None;
        let mut count = 0;
        for m in &self.meta {
            if last != Some(m.fixture) {
                count += 1;
                last = Some(m.fixture);
            }
        }
        count
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            meta: rows.iter().map(|&i| self.meta[i].clone()).collect(),
            encoders: self.encoders.clone(),
            normalization: self.normalization.clone(),
        }
    }

    /// Column subset, in the order given by `names`.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n.as_ref())
                    .ok_or_else(|| DatasetError::UnknownFeature(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            feature_names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            x: self
                .x
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            y: self.y.clone(),
            meta: self.meta.clone(),
            encoders: self.encoders.clone(),
            normalization: self.normalization.clone(),
        })
    }

    /// All features except those named in `excluded` (absent names are ignored).
    pub fn without_features<S: AsRef<str>>(&self, excluded: &[S]) -> Dataset {
        let keep: Vec<&String> = self
            .feature_names
            .iter()
            .filter(|n| !excluded.iter().any(|e| e.as_ref() == n.as_str()))
            .collect();
        self.select_features(&keep).expect("names come from the dataset")
    }

    /// Decodes row `i` back to (venue, team, opponent, result).
    pub fn decode_row(&self, i: usize) -> Option<(Venue, &str, &str, MatchResult)> {
        let m = &self.meta[i];
        let venue = match self.feature_index("venue") {
            Some(j) if self.normalization.is_none() => Venue::from_code(self.x[i][j] as u32)?,
            _ => return None,
        };
        Some((
            venue,
            self.encoders.team_name(m.team)?,
            self.encoders.team_name(m.opponent)?,
            MatchResult::from_code(self.y[i])?,
        ))
    }

    pub(crate) fn with_x(&self, x: Vec<Vec<f64>>, normalization: Option<NormalizationParams>) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x,
            y: self.y.clone(),
            meta: self.meta.clone(),
            encoders: self.encoders.clone(),
            normalization,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes")
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} rows x {} features ({} fixtures)",
            self.n_rows(),
            self.n_features(),
            self.n_fixtures()
        )
    }
}

/// Encodes cleaned records into a [`Dataset`].
///
/// Both perspectives of a fixture are matched on (date, unordered team pair)
/// and placed next to each other, home row first. Fixtures on the same date
/// keep their order of first appearance in `records`. Team codes follow first
/// appearance in the sorted fixture list. Every record must carry the same
/// statistic names, and no value may still be missing.
pub fn encode(records: &[MatchRecord]) -> Result<Dataset> {
    let stat_names: Vec<String> = match records.first() {
        Some(r) => r.stats.keys().cloned().collect(),
        None => Vec::new(),
    };

    // fixture key -> order of first appearance
    let mut fixture_order: HashMap<(NaiveDate, String, String), usize> = HashMap::new();
    let mut keyed: Vec<(usize, usize)> = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let (a, b) = if r.team <= r.opponent {
            (r.team.clone(), r.opponent.clone())
        } else {
            (r.opponent.clone(), r.team.clone())
        };
        let next = fixture_order.len();
        let order = *fixture_order.entry((r.date, a, b)).or_insert(next);
        keyed.push((i, order));
    }
    keyed.sort_by(|&(i, fi), &(j, fj)| {
        let (ri, rj) = (&records[i], &records[j]);
        ri.date
            .cmp(&rj.date)
            .then(fi.cmp(&fj))
            .then(rj.venue.code().cmp(&ri.venue.code()))
    });

    let mut encoders = EncodingMaps::default();
    let mut feature_names: Vec<String> = DESCRIPTOR_FEATURES.iter().map(|s| s.to_string()).collect();
    feature_names.extend(stat_names.iter().cloned());

    let mut x = Vec::with_capacity(records.len());
    let mut y = Vec::with_capacity(records.len());
    let mut meta = Vec::with_capacity(records.len());
    let mut fixture = 0usize;
    let mut prev_order = None;
    for &(i, order) in &keyed {
        let r = &records[i];
        if let Some(p) = prev_order {
            if p != order {
                fixture += 1;
            }
        }
        prev_order = Some(order);
        let team = encoders.intern_team(&r.team);
        let opponent = encoders.intern_team(&r.opponent);
        let mut row = Vec::with_capacity(feature_names.len());
        row.push(r.venue.code() as f64);
        row.push(team as f64);
        row.push(opponent as f64);
        for name in &stat_names {
            match r.stats.get(name) {
                Some(Some(v)) => row.push(*v),
                Some(None) => {
                    return Err(DatasetError::Inconsistent(format!(
                        "{} vs {} on {}: `{name}` is still missing (impute first)",
                        r.team, r.opponent, r.date
                    )))
                }
                None => return Err(DatasetError::MissingColumn(name.clone())),
            }
        }
        if r.stats.len() != stat_names.len() {
            return Err(DatasetError::Inconsistent(format!(
                "{} vs {} on {}: {} statistics, expected {}",
                r.team,
                r.opponent,
                r.date,
                r.stats.len(),
                stat_names.len()
            )));
        }
        x.push(row);
        y.push(r.result.code());
        meta.push(RowMeta {
            date: r.date,
            season: r.season.clone(),
            matchweek: r.matchweek,
            team,
            opponent,
            fixture,
        });
    }
    Dataset::from_parts(feature_names, x, y, meta, encoders)
}
