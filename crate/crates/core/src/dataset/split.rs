use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Result};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Which training window precedes the held-out tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitVariant {
    /// The last two seasons before the tail.
    TwoSeasons,
    /// The season the tail starts in, up to the tail.
    OneSeason,
    /// The final `n` matchweeks before the tail.
    LastNMatchweeks(u32),
}

impl SplitVariant {
    /// Short identifier used in file names and tables.
    pub fn slug(&self) -> String {
        match self {
            SplitVariant::TwoSeasons => "two_seasons".into(),
            SplitVariant::OneSeason => "one_season".into(),
            SplitVariant::LastNMatchweeks(n) => format!("last_{n}_matchweeks"),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SplitVariant::TwoSeasons => "2 Seasons of Data".into(),
            SplitVariant::OneSeason => "1 Season of Data".into(),
            SplitVariant::LastNMatchweeks(n) => format!("{n} Match Weeks of Data"),
        }
    }
}

/// Chronological split: the test set is always the final `test_fraction` of
/// fixtures, so every variant is scored on the same rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub variant: SplitVariant,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}

impl SplitSpec {
    pub fn new(variant: SplitVariant) -> Self {
        Self {
            variant,
            test_fraction: DEFAULT_TEST_FRACTION,
        }
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (test fraction {})", self.variant.slug(), self.test_fraction)
    }
}

/// Row ranges of consecutive fixtures, in dataset order.
pub(crate) fn fixture_groups(dataset: &Dataset) -> Vec<Range<usize>> {
    let meta = dataset.meta();
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=meta.len() {
        if i == meta.len() || meta[i].fixture != meta[start].fixture {
            groups.push(start..i);
            start = i;
        }
    }
    if meta.is_empty() {
        groups.clear();
    }
    groups
}

/// Splits `dataset` into (train, test) along fixture boundaries.
///
/// The test tail holds `round(test_fraction * fixtures)` fixtures. Training
/// rows are drawn only from fixtures before the tail, so no train row is
/// dated after a test row.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let insufficient = |why: &str| DatasetError::InsufficientData(format!("{spec}: {why}"));
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(insufficient("test fraction must lie in (0, 1)"));
    }
    let groups = fixture_groups(dataset);
    let n_test = (groups.len() as f64 * spec.test_fraction).round() as usize;
    if n_test == 0 || n_test >= groups.len() {
        return Err(insufficient(&format!("{} fixtures cannot form both sides", groups.len())));
    }
    let (pre, tail) = groups.split_at(groups.len() - n_test);
    let meta = dataset.meta();
    let first = |g: &Range<usize>| &meta[g.start];

    let keep: Vec<&Range<usize>> = match spec.variant {
        SplitVariant::TwoSeasons | SplitVariant::OneSeason => {
            let mut seasons: Vec<&str> = Vec::new();
            for g in pre {
                let s = first(g).season.as_str();
                if !seasons.contains(&s) {
                    seasons.push(s);
                }
            }
            let want = if spec.variant == SplitVariant::TwoSeasons { 2 } else { 1 };
            if seasons.len() < want {
                return Err(insufficient(&format!("{} season(s) before the test tail", seasons.len())));
            }
            let window = &seasons[seasons.len() - want..];
            pre.iter().filter(|g| window.contains(&first(g).season.as_str())).collect()
        }
        SplitVariant::LastNMatchweeks(n) => {
            let n = n as usize;
            let mut weeks: Vec<(&str, u32)> = Vec::new();
            for g in pre {
                let key = (first(g).season.as_str(), first(g).matchweek);
                if !weeks.contains(&key) {
                    weeks.push(key);
                }
            }
            if n == 0 || weeks.len() < n {
                return Err(insufficient(&format!("{} matchweek(s) before the test tail", weeks.len())));
            }
            let window = &weeks[weeks.len() - n..];
            pre.iter()
                .filter(|g| window.contains(&(first(g).season.as_str(), first(g).matchweek)))
                .collect()
        }
    };
    if keep.is_empty() {
        return Err(insufficient("empty training window"));
    }
    let train_rows: Vec<usize> = keep.into_iter().flat_map(|g| g.clone()).collect();
    let test_rows: Vec<usize> = tail.iter().flat_map(|g| g.clone()).collect();
    Ok((dataset.select_rows(&train_rows), dataset.select_rows(&test_rows)))
}
