//! Odds sheets for one matchweek and their backtest.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use oddsmith::dataset::{season_average_substitute, Dataset, MatchResult, Venue};
use oddsmith::odds::{backtest, make_book, BacktestReport, Margin, OddsTriple, Strategy};
use oddsmith::{ModelKind, ProbTriple, TrainedModel};

use crate::error::{CliError, Result};
use crate::snapshot::ModelSnapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    /// From the home side: `p_home` is a home win.
    pub probs: ProbTriple,
    /// Tree, neighbour or replica votes behind `probs`, where available.
    pub votes: Option<[usize; 3]>,
    pub prediction: usize,
    /// 1x2 label of `prediction`: "1", "X" or "2".
    pub pick: String,
    pub odds: OddsTriple,
    /// Recorded result (home perspective) when the fixture has been played.
    pub actual: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSheet {
    pub season: String,
    pub matchweek: u32,
    pub model: ModelKind,
    pub margin: f64,
    pub fixtures: Vec<ForecastRow>,
}

pub fn pick_label(class: usize) -> &'static str {
    match class {
        0 => "X",
        1 => "1",
        _ => "2",
    }
}

/// Reads a `home_team,away_team[,...]` CSV into ordered pairs.
pub fn read_fixture_list(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| CliError::input(format!("{}: missing column `{name}`", path.display())))
    };
    let (h, a) = (col("home_team")?, col("away_team")?);
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Ok((r.get(h).unwrap_or("").to_string(), r.get(a).unwrap_or("").to_string()))
        })
        .collect()
}

/// Prices the home rows of (`season`, `matchweek`) after season-average
/// substitution, optionally restricted to `fixtures`.
pub fn forecast(
    snapshot: &ModelSnapshot,
    model: &TrainedModel,
    dataset: &Dataset,
    season: &str,
    matchweek: u32,
    fixtures: Option<&[(String, String)]>,
    margin: Margin,
) -> Result<ForecastSheet> {
    let substituted = season_average_substitute(dataset, season, matchweek)?;
    let aligned = model.align(&substituted)?;
    let mut rows = Vec::new();
    let mut found: HashMap<(String, String), usize> = HashMap::new();
    for i in 0..substituted.n_rows() {
        let meta = &substituted.meta()[i];
        if meta.season != season || meta.matchweek != matchweek {
            continue;
        }
        let Some((venue, team, opponent, result)) = substituted.decode_row(i) else {
            return Err(CliError::runtime(format!("row {i} cannot be decoded")));
        };
        if venue != Venue::Home {
            continue;
        }
        let key = (team.to_string(), opponent.to_string());
        if let Some(list) = fixtures {
            if !list.contains(&key) {
                continue;
            }
        }
        let mut x = aligned.row(i).to_vec();
        if let Some(params) = &snapshot.normalization {
            x = params.apply_row(model.feature_names(), &x)?;
        }
        let probs = model.predict_proba(&x)?;
        let prediction = probs.argmax();
        found.insert(key.clone(), rows.len());
        rows.push(ForecastRow {
            date: meta.date,
            home_team: key.0,
            away_team: key.1,
            probs,
            votes: model.vote_counts(&x)?,
            prediction,
            pick: pick_label(prediction).to_string(),
            odds: make_book(&probs, margin)?,
            actual: Some(MatchResult::code(result)),
        });
    }
    if let Some(list) = fixtures {
        let missing: Vec<String> = list
            .iter()
            .filter(|k| !found.contains_key(*k))
            .map(|(h, a)| format!("{h} v {a}"))
            .collect();
        if !missing.is_empty() {
            return Err(CliError::input(format!(
                "fixtures not in {season} matchweek {matchweek}: {}",
                missing.join(", ")
            )));
        }
        // keep the order of the fixture list
        rows = list.iter().map(|k| rows[found[k]].clone()).collect();
    }
    Ok(ForecastSheet {
        season: season.to_string(),
        matchweek,
        model: model.kind(),
        margin: margin.value(),
        fixtures: rows,
    })
}

impl ForecastSheet {
    /// `home_team,away_team,odds_1,odds_X,odds_2,margin`, odds to 6 decimals.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::runtime(e.to_string());
        w.write_record(["home_team", "away_team", "odds_1", "odds_X", "odds_2", "margin"])
            .map_err(io)?;
        for r in &self.fixtures {
            w.write_record([
                r.home_team.clone(),
                r.away_team.clone(),
                format!("{:.6}", r.odds.home),
                format!("{:.6}", r.odds.draw),
                format!("{:.6}", r.odds.away),
                format!("{}", self.margin),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Human-readable table with probabilities, votes and odds.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:<20} {:>6} {:>6} {:>6} {:>14} {:>4} {:>9} {:>9} {:>9}",
            "home", "away", "p(1)", "p(X)", "p(2)", "votes 1/X/2", "pick", "odds 1", "odds X", "odds 2"
        );
        for r in &self.fixtures {
            let votes = r
                .votes
                .map_or_else(|| "-".to_string(), |v| format!("{}/{}/{}", v[1], v[0], v[2]));
            let _ = writeln!(
                out,
                "{:<20} {:<20} {:>6.3} {:>6.3} {:>6.3} {:>14} {:>4} {:>9.3} {:>9.3} {:>9.3}",
                r.home_team,
                r.away_team,
                r.probs.p_home,
                r.probs.p_draw,
                r.probs.p_away,
                votes,
                r.pick,
                r.odds.home,
                r.odds.draw,
                r.odds.away
            );
        }
        out
    }
}

/// Reads bookmaker prices keyed by (home, away) from
/// `home_team,away_team,odds_1,odds_X,odds_2`.
pub fn read_book(path: &Path) -> Result<HashMap<(String, String), OddsTriple>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::input(format!("{}: missing column `{name}`", path.display())))
    };
    let cols = [col("home_team")?, col("away_team")?, col("odds_1")?, col("odds_X")?, col("odds_2")?];
    let mut book = HashMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let price = |j: usize| -> Result<f64> {
            let raw = rec.get(cols[j]).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| *v >= 1.0)
                .ok_or_else(|| CliError::input(format!("{} line {}: bad odds `{raw}`", path.display(), n + 2)))
        };
        let odds = OddsTriple {
            home: price(2)?,
            draw: price(3)?,
            away: price(4)?,
        };
        let key = (rec.get(cols[0]).unwrap_or("").to_string(), rec.get(cols[1]).unwrap_or("").to_string());
        book.insert(key, odds);
    }
    Ok(book)
}

/// Flat-stake backtest of a sheet against `book` (or the sheet's own prices).
pub fn backtest_sheet(
    sheet: &ForecastSheet,
    book: Option<&HashMap<(String, String), OddsTriple>>,
    stake: f64,
) -> Result<BacktestReport> {
    let mut probs = Vec::new();
    let mut actuals = Vec::new();
    let mut prices = Vec::new();
    for r in &sheet.fixtures {
        let Some(actual) = r.actual else {
            return Err(CliError::input(format!("{} v {} has no recorded result", r.home_team, r.away_team)));
        };
        let price = match book {
            Some(b) => *b
                .get(&(r.home_team.clone(), r.away_team.clone()))
                .ok_or_else(|| CliError::input(format!("no book prices for {} v {}", r.home_team, r.away_team)))?,
            None => r.odds,
        };
        probs.push(r.probs);
        actuals.push(actual);
        prices.push(price);
    }
    Ok(backtest(&probs, &actuals, &prices, Strategy::FlatStakeArgmax { stake })?)
}
