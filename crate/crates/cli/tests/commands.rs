use std::fs;
use std::path::Path;
use std::process::Command;

use oddsmith::dataset::{encode, impute, load_csv_all, normalize, prune_columns, split, ImputeStrategy, SplitSpec};
use oddsmith::metrics::report;
use oddsmith::models::{train, Hyperparams, KnnParams, ModelKind};
use oddsmith::odds::{make_book, Margin};
use oddsmith_cli::experiment::ExperimentBundle;
use oddsmith_cli::forecast::ForecastSheet;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn oddsmith(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_oddsmith"))
        .args(args)
        .current_dir(dir)
        .env("ODDSMITH_THREADS", "0")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let r = oddsmith(dir, args);
    assert_eq!(r.code, 0, "oddsmith {args:?} failed: {}", r.stderr);
    r.stdout
}

fn league_dir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--out", "league.csv"]);
    dir
}

/// Small presets so a full matrix finishes quickly.
const FAST_CONFIG: &str = r#"{
    "data": "league.csv",
    "hyperparams": {
        "random_forest": {"kind": "random_forest", "n_trees": 20, "max_depth": 6, "min_samples_leaf": 1, "max_features": null, "seed": 0},
        "svm": {"kind": "svm", "c": 1.0, "epochs": 40, "learning_rate": 0.5, "seed": 0},
        "gradient_boost": {"kind": "gradient_boost", "n_rounds": 15, "max_depth": 3, "learning_rate": 0.1, "l2_lambda": 1.0, "seed": 0}
    },
    "rfe_estimator": {"kind": "random_forest", "n_trees": 15, "max_depth": 6, "min_samples_leaf": 1, "max_features": null, "seed": 0},
    "output": "out"
}"#;

#[test]
fn ingest_reports_shape_and_is_reproducible() {
    let dir = league_dir();
    let stdout = ok(dir.path(), &["ingest", "--data", "league.csv", "--out", "a.json"]);
    assert!(stdout.contains("rows: 1520"), "{stdout}");
    assert!(stdout.contains("columns: 52"), "{stdout}");
    assert!(stdout.contains("fixtures: 760"), "{stdout}");
    ok(dir.path(), &["ingest", "--data", "league.csv", "--out", "b.json"]);
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let r = oddsmith(dir.path(), &["ingest", "--data", "empty.csv"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("EmptyFile"), "{}", r.stderr);

    fs::write(
        dir.path().join("bad.csv"),
        "date,season,matchweek,team,opponent,venue,result,xg\n2022-08-05,2022-2023,1,A,B,Home,Q,1.0\n",
    )
    .unwrap();
    let r = oddsmith(dir.path(), &["ingest", "--data", "bad.csv"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);

    fs::write(dir.path().join("cfg.json"), r#"{"seeed": 1}"#).unwrap();
    let r = oddsmith(dir.path(), &["experiment", "--config", "cfg.json"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn experiment_matrix_and_config_echo() {
    let dir = league_dir();
    fs::write(dir.path().join("fast.json"), FAST_CONFIG).unwrap();
    let stdout = ok(dir.path(), &["experiment", "--config", "fast.json"]);
    assert!(stdout.contains("36 cells"), "{stdout}");
    let cells = fs::read_dir(dir.path().join("out/cells")).unwrap().count();
    assert_eq!(cells, 36);
    let first = fs::read(dir.path().join("out/bundle.json")).unwrap();
    let bundle: ExperimentBundle = serde_json::from_slice(&first).unwrap();
    assert_eq!(bundle.cells.len(), 36);
    for cell in &bundle.cells {
        assert_eq!(cell.n_test, 304);
        assert_eq!(cell.report.n, 304);
    }

    // the echoed config reproduces the bundle
    fs::copy(dir.path().join("out/config.json"), dir.path().join("echo.json")).unwrap();
    fs::remove_dir_all(dir.path().join("out")).unwrap();
    ok(dir.path(), &["experiment", "--config", "echo.json"]);
    assert_eq!(fs::read(dir.path().join("out/bundle.json")).unwrap(), first);

    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("KNN Classifier (RFE Features)"));
    let report = ok(dir.path(), &["report", "--bundle", "out"]);
    assert_eq!(report, summary);
}

#[test]
fn single_cell_matches_library_calls() {
    let dir = league_dir();
    fs::write(
        dir.path().join("one.json"),
        r#"{"data": "league.csv", "models": ["knn"], "splits": ["one_season"], "subsets": ["all"],
            "hyperparams": {"knn": {"kind": "knn", "k": 7}}, "output": "one"}"#,
    )
    .unwrap();
    ok(dir.path(), &["experiment", "--config", "one.json"]);
    let bundle: ExperimentBundle = serde_json::from_slice(&fs::read(dir.path().join("one/bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle.cells.len(), 1);
    let cell = &bundle.cells[0];

    let records = load_csv_all(dir.path().join("league.csv")).unwrap();
    let ds = encode(&impute(prune_columns(records), ImputeStrategy::Mean).unwrap())
        .unwrap()
        .without_features(&oddsmith_cli::config::OUTCOME_DERIVED);
    let (tr, te) = split(&ds, &SplitSpec::new(oddsmith::dataset::SplitVariant::OneSeason)).unwrap();
    let (tr_scaled, params) = normalize(&tr);
    let te_scaled = params.apply(&te).unwrap();
    let model = train(ModelKind::Knn, &Hyperparams::Knn(KnnParams { k: 7, ..KnnParams::default() }), &tr_scaled).unwrap();
    let expected = report(te.y(), &model.predict_dataset(&te_scaled).unwrap()).unwrap();
    assert_eq!(cell.report, expected);
    assert_eq!(cell.features, ds.feature_names());
    assert_eq!(cell.n_train, tr.n_rows());
}

fn last_week_fixtures(dir: &Path) -> Vec<(String, String)> {
    let sheet = ok(dir, &["forecast", "--model", "rf.json", "--season", "2022-2023", "--matchweek", "38"]);
    sheet
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].to_string(), cols[1].to_string())
        })
        .collect()
}

#[test]
fn forecast_sheet_contract() {
    let dir = league_dir();
    let hp = r#"{"kind": "random_forest", "n_trees": 60, "max_depth": null, "min_samples_leaf": 1, "max_features": null, "seed": 3}"#;
    ok(dir.path(), &["train", "--data", "league.csv", "--model", "rf", "--hyperparams", hp, "--before", "2022-2023:38", "--out", "rf.json"]);

    let all = last_week_fixtures(dir.path());
    assert_eq!(all.len(), 10);
    let mut list = String::from("home_team,away_team\n");
    for (h, a) in all.iter().rev().take(8) {
        list.push_str(&format!("{h},{a}\n"));
    }
    fs::write(dir.path().join("fixtures.csv"), list).unwrap();
    ok(
        dir.path(),
        &[
            "forecast", "--model", "rf.json", "--season", "2022-2023", "--matchweek", "38", "--fixtures",
            "fixtures.csv", "--margin", "0.07", "--out", "odds.csv", "--json", "sheet.json",
        ],
    );
    let odds = fs::read_to_string(dir.path().join("odds.csv")).unwrap();
    assert_eq!(odds.lines().next().unwrap(), "home_team,away_team,odds_1,odds_X,odds_2,margin");
    assert_eq!(odds.lines().count(), 9);

    let sheet: ForecastSheet = serde_json::from_slice(&fs::read(dir.path().join("sheet.json")).unwrap()).unwrap();
    assert_eq!(sheet.fixtures.len(), 8);
    let want: Vec<_> = all.iter().rev().take(8).cloned().collect();
    let got: Vec<_> = sheet.fixtures.iter().map(|r| (r.home_team.clone(), r.away_team.clone())).collect();
    assert_eq!(got, want);
    for (row, line) in sheet.fixtures.iter().zip(odds.lines().skip(1)) {
        let p = row.probs.as_array();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let book = make_book(&row.probs, Margin::new(0.07).unwrap()).unwrap();
        assert_eq!(row.odds, book);
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], format!("{:.6}", book.home));
        assert_eq!(cols[3], format!("{:.6}", book.draw));
        assert_eq!(cols[4], format!("{:.6}", book.away));
        let votes = row.votes.unwrap();
        assert_eq!(votes.iter().sum::<usize>(), 60);
        assert!((votes[1] as f64 / 60.0 - row.probs.p_home).abs() < 1e-12);
        assert_eq!(row.prediction, row.probs.argmax());
    }

    ok(dir.path(), &["backtest", "--forecast", "sheet.json", "--out", "bt.json"]);
    let bt: oddsmith::odds::BacktestReport = serde_json::from_slice(&fs::read(dir.path().join("bt.json")).unwrap()).unwrap();
    assert_eq!(bt.n_bets, 8);
    assert_eq!(bt.staked, 8.0);
    let returned: f64 = sheet
        .fixtures
        .iter()
        .filter(|r| r.actual == Some(r.prediction))
        .map(|r| r.odds.for_class(r.prediction))
        .sum();
    assert!((bt.returned - returned).abs() < 1e-9);
}

#[test]
fn feature_mismatch_exits_3() {
    let dir = league_dir();
    ok(dir.path(), &["train", "--data", "league.csv", "--model", "knn", "--features", "xg,xga,sh", "--out", "knn.json"]);
    // same fixtures without the xga column
    let text = fs::read_to_string(dir.path().join("league.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let drop = headers.iter().position(|h| h == "xga").unwrap();
    let mut w = csv::Writer::from_path(dir.path().join("short.csv")).unwrap();
    w.write_record(headers.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, h)| h)).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        w.write_record(rec.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, v)| v)).unwrap();
    }
    w.flush().unwrap();
    let r = oddsmith(
        dir.path(),
        &["forecast", "--model", "knn.json", "--data", "short.csv", "--season", "2022-2023", "--matchweek", "38"],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("xga"), "{}", r.stderr);
}

#[test]
fn select_writes_valid_subsets() {
    let dir = league_dir();
    ok(dir.path(), &["select", "--data", "league.csv", "--method", "correlation", "--k", "6", "--out", "corr.json", "--matrix", "m.csv"]);
    let subset: oddsmith::featsel::FeatureSubset =
        serde_json::from_slice(&fs::read(dir.path().join("corr.json")).unwrap()).unwrap();
    assert_eq!(subset.names.len(), 6);
    let matrix = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(matrix.lines().next().unwrap().ends_with(",result"));
    let r = oddsmith(dir.path(), &["select", "--data", "league.csv", "--method", "correlation", "--k", "500"]);
    assert_ne!(r.code, 0);
}
