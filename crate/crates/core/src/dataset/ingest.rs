use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use indexmap::IndexMap;

use super::{DatasetError, MatchRecord, MatchResult, Result, Venue, PRUNED_COLUMNS};

/// Descriptor columns every match CSV must carry.
pub const REQUIRED_COLUMNS: [&str; 7] = [
    "date", "season", "matchweek", "team", "opponent", "venue", "result",
];

const MISSING_MARKERS: [&str; 6] = ["", "NA", "N/A", "NaN", "nan", "null"];

/// Reads a match CSV, keeping the statistic columns named in `schema`.
///
/// Descriptor columns are always required. Schema names that are missing
/// from the header fail with [`DatasetError::MissingColumn`]; header columns
/// outside the schema are skipped with a warning.
pub fn load_csv<P: AsRef<Path>, S: AsRef<str>>(path: P, schema: &[S]) -> Result<Vec<MatchRecord>> {
    let file = File::open(path)?;
    let schema: Vec<String> = schema.iter().map(|s| normalize_header(s.as_ref())).collect();
    read_csv(file, Some(&schema))
}

/// Reads a match CSV treating every numeric non-descriptor column as a
/// statistic. Text columns other than the pruned annotations are skipped.
pub fn load_csv_all<P: AsRef<Path>>(path: P) -> Result<Vec<MatchRecord>> {
    read_csv(File::open(path)?, None)
}

/// Parses match rows from any reader. `schema = None` keeps every column.
pub fn read_csv<R: Read>(reader: R, schema: Option<&[String]>) -> Result<Vec<MatchRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(normalize_header).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(DatasetError::EmptyFile);
    }

    let position = |name: &str| header.iter().position(|h| h == name);
    let mut desc = [0usize; REQUIRED_COLUMNS.len()];
    for (slot, name) in desc.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = position(name).ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
    }

    let rows: Vec<csv::StringRecord> = rdr.records().collect::<csv::Result<_>>()?;
    let descriptors: HashSet<&str> = REQUIRED_COLUMNS.into_iter().collect();
    let stat_cols: Vec<(String, usize)> = match schema {
        Some(schema) => {
            let mut cols = Vec::new();
            for name in schema.iter().filter(|n| !descriptors.contains(n.as_str())) {
                let j = position(name).ok_or_else(|| DatasetError::MissingColumn(name.clone()))?;
                cols.push((name.clone(), j));
            }
            let wanted: HashSet<&str> = schema.iter().map(String::as_str).collect();
            for h in &header {
                if !descriptors.contains(h.as_str()) && !wanted.contains(h.as_str()) {
                    log::warn!("ignoring column `{h}` (not in schema)");
                }
            }
            cols
        }
        // without a schema, keep annotation columns and every column whose
        // values are all numeric or missing
        None => header
            .iter()
            .enumerate()
            .filter(|(_, h)| !descriptors.contains(h.as_str()) && !h.is_empty())
            .filter(|(j, h)| {
                let numeric = PRUNED_COLUMNS.contains(&h.as_str())
                    || rows.iter().all(|r| {
                        let v = r.get(*j).unwrap_or("");
                        MISSING_MARKERS.contains(&v) || v.parse::<f64>().is_ok_and(f64::is_finite)
                    });
                if !numeric {
                    log::warn!("ignoring non-numeric column `{h}`");
                }
                numeric
            })
            .map(|(j, h)| (h.clone(), j))
            .collect(),
    };
    let annotation: Vec<bool> = stat_cols
        .iter()
        .map(|(name, _)| PRUNED_COLUMNS.contains(&name.as_str()))
        .collect();

    let mut records = Vec::new();
    for row in &rows {
        let line = row.position().map_or(0, |p| p.line());
        let malformed = |reason: String| DatasetError::MalformedRow { line, reason };
        if row.len() != header.len() {
            return Err(malformed(format!("{} fields, header has {}", row.len(), header.len())));
        }
        let field = |j: usize| row.get(j).unwrap_or("");
        let [date, season, matchweek, team, opponent, venue, result] = desc.map(field);

        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
            .map_err(|_| malformed(format!("unparseable date `{date}` (expected YYYY-MM-DD)")))?;
        if season.is_empty() {
            return Err(malformed("empty season".into()));
        }
        let matchweek: u32 = matchweek
            .parse()
            .ok()
            .filter(|&w| w >= 1)
            .ok_or_else(|| malformed(format!("matchweek must be a positive integer, got `{matchweek}`")))?;
        if team.is_empty() || opponent.is_empty() {
            return Err(malformed("empty team or opponent".into()));
        }
        if team == opponent {
            return Err(malformed(format!("team and opponent are both `{team}`")));
        }
        let venue: Venue = venue.parse().map_err(malformed)?;
        let result: MatchResult = result.parse().map_err(|e: DatasetError| malformed(e.to_string()))?;

        let mut stats = IndexMap::with_capacity(stat_cols.len());
        for ((name, j), &is_annotation) in stat_cols.iter().zip(&annotation) {
            let raw = field(*j);
            let value = if MISSING_MARKERS.contains(&raw) {
                None
            } else {
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    // free-text columns that pruning removes anyway
                    _ if is_annotation => None,
                    _ => return Err(malformed(format!("column `{name}`: `{raw}` is not a finite number"))),
                }
            };
            stats.insert(name.clone(), value);
        }

        records.push(MatchRecord {
            date,
            season: season.to_string(),
            matchweek,
            team: team.to_string(),
            opponent: opponent.to_string(),
            venue,
            result,
            stats,
        });
    }
    if records.is_empty() {
        return Err(DatasetError::EmptyFile);
    }
    Ok(records)
}

fn normalize_header(h: &str) -> String {
    h.trim().trim_start_matches('\u{feff}').to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "date,season,matchweek,team,opponent,venue,result,gf,ga,xg";

    fn parse(body: &str, schema: Option<&[&str]>) -> Result<Vec<MatchRecord>> {
        let schema: Option<Vec<String>> = schema.map(|s| s.iter().map(|x| x.to_string()).collect());
        read_csv(body.as_bytes(), schema.as_deref())
    }

    fn rows(n: usize) -> String {
        let mut s = String::from(HEADER);
        for i in 0..n {
            s.push_str(&format!(
                "\n2022-08-{:02},2022-2023,{},Arsenal,Fulham,Home,W,2,1,1.{}",
                i + 1,
                i + 1,
                i
            ));
        }
        s
    }

    #[test]
    fn one_record_per_row() {
        let recs = parse(&rows(10), None).unwrap();
        assert_eq!(recs.len(), 10);
        assert_eq!(recs[3].stats["xg"], Some(1.3));
        assert_eq!(recs[0].venue, Venue::Home);
    }

    #[test]
    fn missing_result_column() {
        let body = "date,season,matchweek,team,opponent,venue,gf\n2022-08-01,s,1,A,B,Home,1";
        match parse(body, None) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "result"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_schema_column() {
        match parse(&rows(2), Some(&["gf", "sot"])) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "sot"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_restricts_stats() {
        let recs = parse(&rows(2), Some(&["xg", "gf"])).unwrap();
        let names: Vec<&String> = recs[0].stats.keys().collect();
        assert_eq!(names, ["xg", "gf"]);
    }

    #[test]
    fn neutral_venue_is_malformed() {
        let body = format!("{HEADER}\n2022-08-01,s,1,A,B,Neutral,W,1,0,1.0");
        match parse(&body, None) {
            Err(DatasetError::MalformedRow { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("Neutral"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_date_and_result_are_malformed() {
        let body = format!("{HEADER}\n01/08/2022,s,1,A,B,Home,W,1,0,1.0");
        assert!(matches!(parse(&body, None), Err(DatasetError::MalformedRow { .. })));
        let body = format!("{HEADER}\n2022-08-01,s,1,A,B,Home,X,1,0,1.0");
        assert!(matches!(parse(&body, None), Err(DatasetError::MalformedRow { .. })));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse("", None), Err(DatasetError::EmptyFile)));
        assert!(matches!(parse(HEADER, None), Err(DatasetError::EmptyFile)));
    }

    #[test]
    fn missing_markers_and_annotations() {
        let body = "date,season,matchweek,team,opponent,venue,result,xg,referee\n\
                    2022-08-01,s,1,A,B,Home,W,,Michael Oliver\n\
                    2022-08-01,s,1,B,A,Away,L,NA,Michael Oliver";
        let recs = parse(body, None).unwrap();
        assert_eq!(recs[0].stats["xg"], None);
        assert_eq!(recs[1].stats["xg"], None);
        assert_eq!(recs[0].stats["referee"], None);

        // a schema column must be numeric
        let body = "date,season,matchweek,team,opponent,venue,result,xg\n2022-08-01,s,1,A,B,Home,W,lots";
        assert!(matches!(parse(body, Some(&["xg"])), Err(DatasetError::MalformedRow { .. })));
    }

    #[test]
    fn inference_skips_text_columns() {
        let body = "date,season,matchweek,team,opponent,venue,result,comp,xg\n\
                    2022-08-01,s,1,A,B,Home,W,Premier League,1.2";
        let recs = parse(body, None).unwrap();
        let names: Vec<&String> = recs[0].stats.keys().collect();
        assert_eq!(names, ["xg"]);
    }

    #[test]
    fn headers_are_case_insensitive() {
        let body = "Date,Season,Matchweek,Team,Opponent,Venue,Result,Match Report\n\
                    2022-08-01,s,1,A,B,Away,D,Match Report";
        let recs = parse(body, None).unwrap();
        assert!(recs[0].stats.contains_key("match report"));
    }
}
