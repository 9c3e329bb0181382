//! Simulated double round-robin league with fbref-style team statistics.
//!
//! Used for demos, tests and timing runs where no scraped data is at hand.
//! Each team has latent attack/defence strengths; per-match statistics are
//! noisy functions of the resulting expected goals, so the usual predictive
//! signal (xg, xga, sca, gca, shots) is present without being decisive.

use std::io::Write;

use chrono::{Datelike, NaiveDate};
use indexmap::IndexMap;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};

use super::{encode, Dataset, MatchRecord, MatchResult, Venue};
use crate::rng::unit_rng;

/// Statistic roster of the simulated feed (34 columns).
pub const STAT_ROSTER: [&str; 34] = [
    "gf", "ga", "xg", "xga", "poss", "sh", "sot", "dist", "fk", "pk", "pkatt", "npxg", "sot_pct",
    "g_sh", "g_sot", "sota", "saves", "save_pct", "cs", "psxg", "cmp", "att", "cmp_pct", "totdist",
    "prgdist", "kp", "ppa", "crspa", "prgp", "sca", "gca", "tkl", "int", "blocks",
];

/// Text columns written around the statistics so the CSV has the fbref shape.
const TEXT_COLUMNS: [&str; 18] = [
    "date", "time", "comp", "round", "day", "venue", "result", "opponent", "captain", "formation",
    "referee", "match report", "notes", "season", "team", "matchweek", "stadium", "manager",
];

const TEAMS: [&str; 20] = [
    "Arsenal", "Aston Villa", "Bournemouth", "Brentford", "Brighton", "Chelsea", "Crystal Palace",
    "Everton", "Fulham", "Leeds United", "Leicester City", "Liverpool", "Manchester City",
    "Manchester United", "Newcastle United", "Nottingham Forest", "Southampton", "Tottenham",
    "West Ham", "Wolves",
];

#[derive(Debug, Clone)]
pub struct LeagueConfig {
    /// Even number of teams, at most 20.
    pub teams: usize,
    pub seasons: usize,
    /// Truncate every season after this many matchweeks.
    pub matchweeks: Option<u32>,
    pub first_season_year: i32,
    /// Fraction of statistic cells blanked out (missing).
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self {
            teams: 20,
            seasons: 2,
            matchweeks: None,
            first_season_year: 2021,
            missing_rate: 0.0,
            seed: 7,
        }
    }
}

pub struct SyntheticLeague {
    pub records: Vec<MatchRecord>,
    /// Encoded records; only populated when `missing_rate` is zero.
    pub dataset: Dataset,
}

struct TeamStrength {
    attack: f64,
    defence: f64,
}

/// Circle-method round robin: `rounds[r]` lists (home, away) pairs.
fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut ring: Vec<usize> = (1..n).collect();
    let mut rounds = Vec::with_capacity(2 * (n - 1));
    for r in 0..n - 1 {
        let mut pairs = Vec::with_capacity(n / 2);
        let opp = ring[ring.len() - 1];
        pairs.push(if r % 2 == 0 { (0, opp) } else { (opp, 0) });
        for k in 0..(n / 2 - 1) {
            let (a, b) = (ring[k], ring[ring.len() - 2 - k]);
            pairs.push(if k % 2 == 0 { (a, b) } else { (b, a) });
        }
        rounds.push(pairs);
        ring.rotate_right(1);
    }
    let second: Vec<Vec<(usize, usize)>> = rounds
        .iter()
        .map(|p| p.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    rounds.extend(second);
    rounds
}

pub fn generate_league(cfg: &LeagueConfig) -> SyntheticLeague {
    assert!(cfg.teams >= 2 && cfg.teams.is_multiple_of(2) && cfg.teams <= TEAMS.len());
    let mut rng = unit_rng(cfg.seed, 0);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut strengths: Vec<TeamStrength> = (0..cfg.teams)
        .map(|_| TeamStrength {
            attack: 0.25 * unit.sample(&mut rng),
            defence: 0.25 * unit.sample(&mut rng),
        })
        .collect();

    let schedule = round_robin(cfg.teams);
    let mut records = Vec::new();
    for s in 0..cfg.seasons {
        let year = cfg.first_season_year + s as i32;
        let season = format!("{}-{}", year, year + 1);
        let start = NaiveDate::from_ymd_opt(year, 8, 6).expect("valid date");
        for t in &mut strengths {
            t.attack += 0.05 * unit.sample(&mut rng);
            t.defence += 0.05 * unit.sample(&mut rng);
        }
        let weeks = cfg.matchweeks.map_or(schedule.len(), |w| (w as usize).min(schedule.len()));
        for (w, pairs) in schedule.iter().take(weeks).enumerate() {
            for (f, &(h, a)) in pairs.iter().enumerate() {
                let date = start + chrono::Days::new(7 * w as u64 + (f % 3) as u64);
                let (home_stats, away_stats) = simulate_match(&mut rng, &strengths[h], &strengths[a]);
                let gf = home_stats["gf"];
                let ga = away_stats["gf"];
                let result = match gf.partial_cmp(&ga).expect("finite goals") {
                    std::cmp::Ordering::Greater => MatchResult::Win,
                    std::cmp::Ordering::Equal => MatchResult::Draw,
                    std::cmp::Ordering::Less => MatchResult::Loss,
                };
                let flip = match result {
                    MatchResult::Win => MatchResult::Loss,
                    MatchResult::Loss => MatchResult::Win,
                    MatchResult::Draw => MatchResult::Draw,
                };
                for (team, opp, venue, res, own, other) in [
                    (h, a, Venue::Home, result, &home_stats, &away_stats),
                    (a, h, Venue::Away, flip, &away_stats, &home_stats),
                ] {
                    let mut stats = team_row(own, other);
                    if cfg.missing_rate > 0.0 {
                        for v in stats.values_mut() {
                            if rng.random::<f64>() < cfg.missing_rate {
                                *v = None;
                            }
                        }
                    }
                    records.push(MatchRecord {
                        date,
                        season: season.clone(),
                        matchweek: w as u32 + 1,
                        team: TEAMS[team].to_string(),
                        opponent: TEAMS[opp].to_string(),
                        venue,
                        result: res,
                        stats,
                    });
                }
            }
        }
    }
    let dataset = if cfg.missing_rate > 0.0 {
        Dataset::from_matrix(Vec::new(), Vec::new(), Vec::new()).expect("empty dataset")
    } else {
        encode(&records).expect("simulated records are complete")
    };
    SyntheticLeague { records, dataset }
}

/// Raw per-side quantities for one match.
fn simulate_match<R: Rng>(rng: &mut R, home: &TeamStrength, away: &TeamStrength) -> (IndexMap<&'static str, f64>, IndexMap<&'static str, f64>) {
    let noise = Normal::new(0.0, 0.25).expect("valid normal");
    let lambda_home = (0.35 + home.attack - away.defence + 0.12).exp();
    let lambda_away = (0.15 + away.attack - home.defence).exp();
    let poss_home = (50.0 + 30.0 * (home.attack - away.attack) + 4.0 * noise.sample(rng)).clamp(25.0, 75.0);
    let side = |rng: &mut R, lambda: f64, poss: f64| -> IndexMap<&'static str, f64> {
        let xg = (lambda * (noise.sample(rng)).exp()).max(0.05);
        let goals = Poisson::new(xg).expect("positive rate").sample(rng);
        let shots = Poisson::new(xg * 8.5 + 2.0).expect("positive rate").sample(rng).max(goals);
        let sot = Binomial::new(shots as u64, 0.34).expect("valid binomial").sample(rng) as f64;
        let sot = sot.max(goals);
        let mut m = IndexMap::new();
        m.insert("gf", goals);
        m.insert("xg", round2(xg));
        m.insert("poss", poss.round());
        m.insert("sh", shots);
        m.insert("sot", sot);
        m.insert("sca", (shots * 1.7 + 2.0 * noise.sample(rng) * 4.0).round().max(shots));
        m.insert("gca", (goals * 1.6 + noise.sample(rng)).round().max(0.0));
        m
    };
    let h = side(rng, lambda_home, poss_home);
    let a = side(rng, lambda_away, 100.0 - poss_home);
    (h, a)
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Derives the full 34-statistic row for one side.
fn team_row(own: &IndexMap<&'static str, f64>, other: &IndexMap<&'static str, f64>) -> IndexMap<String, Option<f64>> {
    let gf = own["gf"];
    let ga = other["gf"];
    let sh = own["sh"];
    let sot = own["sot"];
    let poss = own["poss"];
    let sota = other["sot"];
    let saves = (sota - ga).max(0.0);
    let att = (poss * 9.5).round();
    let cmp = (att * (0.62 + poss / 400.0)).round();
    let ratio = |a: f64, b: f64| if b > 0.0 { round2(a / b) } else { 0.0 };
    let pk = if gf >= 3.0 { 1.0 } else { 0.0 };
    let values: [(&str, f64); 34] = [
        ("gf", gf),
        ("ga", ga),
        ("xg", own["xg"]),
        ("xga", other["xg"]),
        ("poss", poss),
        ("sh", sh),
        ("sot", sot),
        ("dist", round2(17.0 - own["xg"] * 1.5 + (sh % 3.0))),
        ("fk", (sh / 12.0).floor()),
        ("pk", pk),
        ("pkatt", pk),
        ("npxg", round2((own["xg"] - 0.76 * pk).max(0.0))),
        ("sot_pct", ratio(100.0 * sot, sh)),
        ("g_sh", ratio(gf, sh)),
        ("g_sot", ratio(gf, sot)),
        ("sota", sota),
        ("saves", saves),
        ("save_pct", ratio(100.0 * saves, sota)),
        ("cs", if ga == 0.0 { 1.0 } else { 0.0 }),
        ("psxg", round2(other["xg"] * 0.9 + 0.1 * sota)),
        ("cmp", cmp),
        ("att", att),
        ("cmp_pct", ratio(100.0 * cmp, att)),
        ("totdist", (cmp * 17.5).round()),
        ("prgdist", (cmp * 5.8).round()),
        ("kp", (own["sca"] * 0.45).round()),
        ("ppa", (poss * 0.16 + own["xg"] * 2.0).round()),
        ("crspa", (sh * 0.2).round()),
        ("prgp", (poss * 0.6).round()),
        ("sca", own["sca"]),
        ("gca", own["gca"]),
        ("tkl", (18.0 - poss * 0.1 + other["xg"] * 1.3).round()),
        ("int", (12.0 - poss * 0.05 + (sota % 4.0)).round()),
        ("blocks", (other["sh"] * 0.8).round()),
    ];
    values.iter().map(|&(n, v)| (n.to_string(), Some(v))).collect()
}

/// Writes records in the 52-column fbref layout (text columns plus the
/// 34 statistics). Missing statistics are written as empty cells.
pub fn write_league_csv<W: Write>(records: &[MatchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let stat_names: Vec<&String> = records.first().map(|r| r.stats.keys().collect()).unwrap_or_default();
    let header: Vec<&str> = TEXT_COLUMNS
        .iter()
        .copied()
        .chain(stat_names.iter().map(|s| s.as_str()))
        .collect();
    w.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for col in TEXT_COLUMNS {
            row.push(match col {
                "date" => r.date.format("%Y-%m-%d").to_string(),
                "time" => "15:00".to_string(),
                "comp" => "Premier League".to_string(),
                "round" => format!("Matchweek {}", r.matchweek),
                "day" => r.date.weekday().to_string(),
                "venue" => format!("{:?}", r.venue),
                "result" => r.result.letter().to_string(),
                "opponent" => r.opponent.clone(),
                "captain" => "Captain".to_string(),
                "formation" => "4-3-3".to_string(),
                "referee" => "Referee".to_string(),
                "match report" => "Match Report".to_string(),
                "notes" => String::new(),
                "season" => r.season.clone(),
                "team" => r.team.clone(),
                "matchweek" => r.matchweek.to_string(),
                "stadium" => "Stadium".to_string(),
                "manager" => "Manager".to_string(),
                _ => unreachable!("unknown text column"),
            });
        }
        for name in &stat_names {
            row.push(match r.stats.get(name.as_str()).copied().flatten() {
                Some(v) => v.to_string(),
                None => String::new(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
