use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use oddsmith::dataset::synthetic::{generate_league, write_league_csv, LeagueConfig};
use oddsmith::dataset::{normalize, ImputeStrategy};
use oddsmith::featsel::{correlation_matrix, rfe, select_by_correlation, SelectionMethod};
use oddsmith::models::{train, Hyperparams, ModelKind};
use oddsmith::odds::Margin;

use crate::config::{DataOptions, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::experiment::{self, CellReport, ExperimentBundle};
use crate::forecast::{backtest_sheet, forecast, read_book, read_fixture_list, ForecastSheet};
use crate::pipeline::{input_shape, load_dataset, load_encoded, to_pretty_json, write_atomic};
use crate::snapshot::ModelSnapshot;

#[derive(Debug, Parser)]
#[command(name = "oddsmith", version, about = "Football match-outcome forecasting and 1x2 odds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a match CSV and write the encoded dataset snapshot.
    Ingest(IngestArgs),
    /// Run the model x split x feature-subset evaluation matrix.
    Experiment(ExperimentArgs),
    /// Pick a feature subset by RFE or correlation ranking.
    Select(SelectArgs),
    /// Train one model and save it with its preprocessing.
    Train(TrainArgs),
    /// Price a matchweek's fixtures with a saved model.
    Forecast(ForecastArgs),
    /// Flat-stake backtest of a forecast sheet.
    Backtest(BacktestArgs),
    /// Print the tables of an experiment bundle or one cell.
    Report(ReportArgs),
    /// Write a simulated league CSV for demos and tests.
    Simulate(SimulateArgs),
}

/// Data flags shared by the modelling commands. Explicit flags win over the
/// config file, which wins over the defaults.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// JSON config file (experiment schema).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Match CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Statistic columns to read (comma separated); default: all numeric.
    #[arg(long, value_delimiter = ',')]
    pub stats: Option<Vec<String>>,
    /// mean, median or mode.
    #[arg(long, value_parser = parse_impute)]
    pub impute: Option<ImputeStrategy>,
    /// Features to drop (comma separated); default: the score-derived columns.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl DataArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.data {
            cfg.data = d.clone();
        }
        if let Some(s) = &self.stats {
            cfg.stats = Some(s.clone());
        }
        if let Some(i) = self.impute {
            cfg.impute = i;
        }
        if let Some(e) = &self.exclude {
            cfg.exclude_features = e.iter().filter(|s| !s.is_empty()).cloned().collect();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn parse_impute(s: &str) -> std::result::Result<ImputeStrategy, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown impute strategy `{s}` (mean, median, mode)"))
}

fn parse_method(s: &str) -> std::result::Result<SelectionMethod, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown selection method `{s}` (all, rfe, correlation)"))
}

fn parse_margin(s: &str) -> std::result::Result<Margin, String> {
    let m: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    Margin::new(m).map_err(|e| e.to_string())
}

/// `SEASON:MATCHWEEK`, e.g. `2022-2023:38`.
fn parse_week(s: &str) -> std::result::Result<(String, u32), String> {
    let (season, week) = s.rsplit_once(':').ok_or("expected SEASON:MATCHWEEK")?;
    let week = week.parse().map_err(|_| format!("bad matchweek `{week}`"))?;
    Ok((season.to_string(), week))
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Where to write the dataset snapshot.
    #[arg(long, default_value = "dataset.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Models to run (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelKind>>,
    /// Feature subsets to run (comma separated: all, rfe, correlation).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub subsets: Option<Vec<SelectionMethod>>,
    /// Subset size for rfe and correlation.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// rfe or correlation.
    #[arg(long, value_parser = parse_method, default_value = "rfe")]
    pub method: SelectionMethod,
    #[arg(long)]
    pub k: Option<usize>,
    /// Ranking model for RFE; default: the config's RFE forest.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Where to write the subset JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the feature/label correlation matrix as CSV.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: ModelKind,
    /// Hyperparameters as a JSON file or inline JSON object.
    #[arg(long)]
    pub hyperparams: Option<String>,
    /// Train on these features only (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Train only on rows before SEASON:MATCHWEEK.
    #[arg(long, value_parser = parse_week)]
    pub before: Option<(String, u32)>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Saved model from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Match CSV; default: the file the model was trained from.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub season: String,
    #[arg(long)]
    pub matchweek: u32,
    /// CSV with home_team,away_team columns limiting the fixtures.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, value_parser = parse_margin, default_value = "0.05")]
    pub margin: Margin,
    /// Odds CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full sheet as JSON (probabilities, votes, odds, results).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Forecast sheet JSON from `forecast --json`.
    #[arg(long)]
    pub forecast: PathBuf,
    /// Bookmaker prices (home_team,away_team,odds_1,odds_X,odds_2); default:
    /// the sheet's own odds.
    #[arg(long)]
    pub book: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub stake: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// bundle.json, or the experiment output directory.
    #[arg(long, conflicts_with = "cell")]
    pub bundle: Option<PathBuf>,
    /// One cell JSON.
    #[arg(long)]
    pub cell: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "matches.csv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub seasons: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Fraction of statistic cells left blank.
    #[arg(long, default_value_t = 0.0)]
    pub missing_rate: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Experiment(a) => cmd_experiment(&a).map(|_| ()),
        Command::Select(a) => cmd_select(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Backtest(a) => cmd_backtest(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{what} {}: {e}", path.display())))
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let cfg = args.data.resolve()?;
    let opts = cfg.data_options();
    let dataset = load_encoded(&opts)?;
    let shape = input_shape(&opts.data)?;
    write_atomic(&args.out, dataset.to_json().as_bytes())?;
    println!("rows: {}", shape.rows);
    println!("columns: {}", shape.columns);
    println!("features: {}", dataset.n_features());
    println!("fixtures: {}", dataset.n_fixtures());
    println!("snapshot: {}", args.out.display());
    Ok(())
}

/// Resolves the effective config, runs the matrix and writes the bundle.
pub fn cmd_experiment(args: &ExperimentArgs) -> Result<ExperimentBundle> {
    let mut cfg = args.data.resolve()?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(m) = &args.models {
        cfg.models = m.clone();
    }
    if let Some(s) = &args.subsets {
        cfg.subsets = s.clone();
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(t) = args.test_fraction {
        cfg.test_fraction = t;
    }
    cfg.validate()?;
    let bundle = experiment::run(&cfg)?;
    bundle.write(&cfg.output)?;
    print!("{}", bundle.summary());
    println!("{} cells written to {}", bundle.cells.len(), cfg.output.display());
    Ok(bundle)
}

pub fn cmd_select(args: &SelectArgs) -> Result<()> {
    let cfg = args.data.resolve()?;
    let k = args.k.unwrap_or(cfg.k);
    let dataset = load_dataset(&cfg.data_options())?;
    let subset = match args.method {
        SelectionMethod::All => oddsmith::featsel::FeatureSubset::all(&dataset),
        SelectionMethod::Rfe => {
            let hp = match args.model {
                Some(kind) => cfg.hyperparams_for(kind),
                None => cfg.rfe_estimator.clone().with_seed(cfg.seed),
            };
            let ds = if hp.kind().needs_normalized_input() {
                normalize(&dataset).0
            } else {
                dataset.clone()
            };
            rfe(hp.kind(), &hp, &ds, k)?
        }
        SelectionMethod::Correlation => select_by_correlation(&dataset, k)?,
    };
    if let Some(path) = &args.matrix {
        write_atomic(path, correlation_matrix(&dataset, true)?.to_csv().as_bytes())?;
    }
    if let Some(path) = &args.out {
        write_atomic(path, &to_pretty_json(&subset))?;
    }
    println!("{}", subset.names.join(","));
    Ok(())
}

fn parse_hyperparams(kind: ModelKind, raw: &str) -> Result<Hyperparams> {
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).map_err(|e| CliError::input(format!("cannot read hyperparams {raw}: {e}")))?
    };
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("hyperparams: {e}")))?;
    // the kind tag is implied by --model
    if let Some(obj) = value.as_object_mut() {
        obj.entry("kind").or_insert_with(|| serde_json::Value::String(kind.slug().into()));
    }
    let hp: Hyperparams = serde_json::from_value(value).map_err(|e| CliError::input(format!("hyperparams: {e}")))?;
    if hp.kind() != kind {
        return Err(CliError::input(format!("hyperparams are for {}, not {kind}", hp.kind())));
    }
    hp.validate().map_err(|e| CliError::input(format!("hyperparams: {e}")))?;
    Ok(hp)
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = args.data.resolve()?;
    let opts: DataOptions = cfg.data_options();
    let mut dataset = load_dataset(&opts)?;
    if let Some((season, week)) = &args.before {
        let cut = dataset
            .meta()
            .iter()
            .position(|m| &m.season == season && m.matchweek == *week)
            .ok_or_else(|| CliError::input(format!("matchweek {season}:{week} is not in the data")))?;
        dataset = dataset.select_rows(&(0..cut).collect::<Vec<_>>());
    }
    if let Some(features) = &args.features {
        dataset = dataset.select_features(features)?;
    }
    let hp = match &args.hyperparams {
        Some(raw) => parse_hyperparams(args.model, raw)?.with_seed(cfg.seed),
        None => cfg.hyperparams_for(args.model),
    };
    let (train_set, normalization) = if args.model.needs_normalized_input() {
        let (scaled, params) = normalize(&dataset);
        (scaled, Some(params))
    } else {
        (dataset, None)
    };
    let model = train(args.model, &hp, &train_set)?;
    let before = args.before.as_ref().map(|(s, w)| format!("{s}:{w}"));
    let snapshot = ModelSnapshot::new(&model, opts, normalization, before, train_set.n_rows())?;
    snapshot.save(&args.out)?;
    println!(
        "trained {} on {} rows x {} features -> {}",
        args.model,
        train_set.n_rows(),
        train_set.n_features(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_forecast(args: &ForecastArgs) -> Result<()> {
    let snapshot = ModelSnapshot::load(&args.model)?;
    let model = snapshot.model()?;
    let mut opts = snapshot.data.clone();
    if let Some(d) = &args.data {
        opts.data = d.clone();
    }
    let dataset = load_encoded(&opts)?;
    let fixtures = args.fixtures.as_deref().map(read_fixture_list).transpose()?;
    let sheet = forecast(
        &snapshot,
        &model,
        &dataset,
        &args.season,
        args.matchweek,
        fixtures.as_deref(),
        args.margin,
    )?;
    let csv = sheet.to_csv()?;
    match &args.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            print!("{}", sheet.render());
        }
        None => print!("{csv}"),
    }
    if let Some(path) = &args.json {
        write_atomic(path, &to_pretty_json(&sheet))?;
    }
    Ok(())
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<()> {
    let sheet: ForecastSheet = read_json(&args.forecast, "forecast")?;
    let book = args.book.as_deref().map(read_book).transpose()?;
    if !(args.stake > 0.0 && args.stake.is_finite()) {
        return Err(CliError::input(format!("stake {} must be positive", args.stake)));
    }
    let report = backtest_sheet(&sheet, book.as_ref(), args.stake)?;
    let json = to_pretty_json(&report);
    match &args.out {
        Some(path) => write_atomic(path, &json)?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    eprintln!(
        "{} bets, staked {:.2}, returned {:.2}, roi {:+.4}",
        report.n_bets, report.staked, report.returned, report.roi
    );
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    if let Some(path) = &args.cell {
        let cell: CellReport = read_json(path, "cell")?;
        println!(
            "{} / {} / {} ({} train, {} test rows)",
            cell.model.display_name(),
            cell.split.label(),
            cell.subset.label(),
            cell.n_train,
            cell.n_test
        );
        print!("{}", cell.report.classification_report());
        println!();
        print!("{}", cell.report.confusion);
        if let Some(imp) = &cell.importance {
            println!();
            for (name, score) in imp.iter().take(10) {
                println!("{name:<16} {score:.6}");
            }
        }
        return Ok(());
    }
    let path = args
        .bundle
        .clone()
        .ok_or_else(|| CliError::input("report needs --bundle or --cell"))?;
    let path = if path.is_dir() { path.join("bundle.json") } else { path };
    let bundle: ExperimentBundle = read_json(&path, "bundle")?;
    print!("{}", bundle.summary());
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    if !(0.0..1.0).contains(&args.missing_rate) {
        return Err(CliError::input("missing rate must lie in [0, 1)"));
    }
    if args.seasons == 0 {
        return Err(CliError::input("need at least one season"));
    }
    let cfg = LeagueConfig {
        seasons: args.seasons,
        seed: args.seed,
        missing_rate: args.missing_rate,
        ..Default::default()
    };
    let league = generate_league(&cfg);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(&args.out)?;
    write_league_csv(&league.records, BufWriter::new(file)).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("{} rows -> {}", league.records.len(), args.out.display());
    Ok(())
}
