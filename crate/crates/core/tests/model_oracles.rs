use oddsmith::models::boost::{softmax_cross_entropy, softmax_grad_hess};
use oddsmith::models::{
    grid_search, train, BoostParams, ForestParams, Hyperparams, KnnParams, ModelError, ModelKind, ParamGrid,
    SearchMode, SvmParams, TrainedModel,
};
use oddsmith::Dataset;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let y = (0..n).map(|_| rng.random_range(0..3)).collect();
    Dataset::from_matrix(names(d), x, y).unwrap()
}

/// Three Gaussian-ish blobs, labelled by blob.
fn blobs(n: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres = [[0.0, 4.0], [4.0, -2.0], [-4.0, -2.0]];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = i % 3;
        x.push(vec![
            centres[c][0] + spread * rng.random_range(-1.0..1.0),
            centres[c][1] + spread * rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]);
        y.push(c);
    }
    Dataset::from_matrix(names(3), x, y).unwrap()
}

fn small_hyperparams(kind: ModelKind) -> Hyperparams {
    match kind {
        ModelKind::RandomForest => Hyperparams::RandomForest(ForestParams {
            n_trees: 25,
            ..ForestParams::default()
        }),
        ModelKind::Knn => Hyperparams::Knn(KnnParams { k: 5, ..KnnParams::default() }),
        ModelKind::Svm => Hyperparams::Svm(SvmParams {
            epochs: 60,
            replicas: 5,
            ..SvmParams::default()
        }),
        ModelKind::GradientBoost => Hyperparams::GradientBoost(BoostParams {
            n_rounds: 20,
            ..BoostParams::default()
        }),
    }
}

fn lowest_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for c in 1..v.len() {
        if v[c] > v[best] {
            best = c;
        }
    }
    best
}

#[test]
fn knn_matches_sort_oracle_on_integer_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let n = rng.random_range(5..=50);
        let d = rng.random_range(1..=8);
        // small integer coordinates make distance ties common
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0..3) as f64).collect()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let ds = Dataset::from_matrix(names(d), x.clone(), y.clone()).unwrap();
        for k in [1, 3, 5] {
            let model = train(ModelKind::Knn, &Hyperparams::Knn(KnnParams { k, ..KnnParams::default() }), &ds).unwrap();
            for _ in 0..10 {
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(0..3) as f64).collect();
                let mut order: Vec<(f64, usize)> = x
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let mut votes = [0.0; 3];
                for &(_, i) in &order[..k] {
                    votes[y[i]] += 1.0;
                }
                assert_eq!(model.predict(&q).unwrap(), lowest_argmax(&votes));
                let p = model.predict_proba(&q).unwrap().as_array();
                for c in 0..3 {
                    assert!((p[c] - votes[c] / k as f64).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn knn_k1_returns_training_label() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ds = random_dataset(&mut rng, 40, 4);
    let model = train(ModelKind::Knn, &Hyperparams::Knn(KnnParams { k: 1, ..KnnParams::default() }), &ds).unwrap();
    for i in 0..ds.n_rows() {
        let p = model.predict_proba(ds.row(i)).unwrap().as_array();
        assert_eq!(p[ds.y()[i]], 1.0);
    }
}

#[test]
fn knn_too_large_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ds = random_dataset(&mut rng, 4, 2);
    let err = train(ModelKind::Knn, &Hyperparams::Knn(KnnParams { k: 5, ..KnnParams::default() }), &ds).unwrap_err();
    assert!(matches!(err, ModelError::KTooLarge { k: 5, n: 4 }), "{err:?}");
}

fn oracle_loss(z: &[f64; 3], label: usize) -> f64 {
    let total: f64 = z.iter().map(|v| v.exp()).sum();
    -(z[label].exp() / total).ln()
}

fn oracle_grad(z: &[f64; 3], label: usize, c: usize) -> f64 {
    let total: f64 = z.iter().map(|v| v.exp()).sum();
    z[c].exp() / total - if c == label { 1.0 } else { 0.0 }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

proptest! {
    #[test]
    fn boost_gradients_match_finite_differences(
        z in prop::array::uniform3(-5.0f64..5.0),
        label in 0usize..3,
    ) {
        prop_assert!((softmax_cross_entropy(&z, label) - oracle_loss(&z, label)).abs() < 1e-12);
        let (g, h) = softmax_grad_hess(&z, label);
        let step = 1e-5;
        for c in 0..3 {
            let (mut up, mut down) = (z, z);
            up[c] += step;
            down[c] -= step;
            let fd_g = (oracle_loss(&up, label) - oracle_loss(&down, label)) / (2.0 * step);
            prop_assert!(rel_err(g[c], fd_g) < 1e-4, "grad {c}: {} vs {fd_g}", g[c]);
            let fd_h = (oracle_grad(&up, label, c) - oracle_grad(&down, label, c)) / (2.0 * step);
            prop_assert!(rel_err(h[c], fd_h) < 1e-4, "hess {c}: {} vs {fd_h}", h[c]);
        }
    }

    #[test]
    fn probabilities_are_valid(seed in any::<u64>(), kind_ix in 0usize..4) {
        let kind = ModelKind::ALL[kind_ix];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, 30, 3);
        let model = train(kind, &small_hyperparams(kind), &ds).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
            let p = model.predict_proba(&q).unwrap().as_array();
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn forest_ignores_monotone_transforms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, 60, 3);
        let queries: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        // strictly increasing per feature
        let warp = |row: &[f64]| -> Vec<f64> { vec![row[0].exp(), 3.0 * row[1] - 7.0, row[2].powi(3) + row[2]] };
        let warped = Dataset::from_matrix(names(3), ds.x().iter().map(|r| warp(r)).collect(), ds.y().to_vec()).unwrap();
        let hp = Hyperparams::RandomForest(ForestParams { n_trees: 15, seed, ..ForestParams::default() });
        let a = train(ModelKind::RandomForest, &hp, &ds).unwrap();
        let b = train(ModelKind::RandomForest, &hp, &warped).unwrap();
        for q in &queries {
            prop_assert_eq!(a.vote_counts(q).unwrap(), b.vote_counts(&warp(q)).unwrap());
        }
    }

    #[test]
    fn single_tree_fits_consistent_data(seed in any::<u64>(), n in 5usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, n, 4);
        let hp = Hyperparams::RandomForest(ForestParams {
            n_trees: 1,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: Some(4),
            seed,
        });
        let model = train(ModelKind::RandomForest, &hp, &ds).unwrap();
        prop_assert_eq!(model.predict_dataset(&ds).unwrap(), ds.y().to_vec());
    }
}

#[test]
fn boost_loss_decreases_on_blobs() {
    let ds = blobs(300, 2.5, 3);
    for lr in [0.05, 0.1, 0.3] {
        let hp = Hyperparams::GradientBoost(BoostParams {
            n_rounds: 40,
            learning_rate: lr,
            ..BoostParams::default()
        });
        let model = train(ModelKind::GradientBoost, &hp, &ds).unwrap();
        let curve = model.training_curve().unwrap();
        assert_eq!(curve.len(), 41);
        for w in curve.windows(2) {
            assert!(w[1] <= w[0], "lr {lr}: {} then {}", w[0], w[1]);
        }
    }
}

#[test]
fn predict_is_argmax_of_proba() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let ds = random_dataset(&mut rng, 80, 4);
    for kind in ModelKind::ALL {
        let model = train(kind, &small_hyperparams(kind), &ds).unwrap();
        for _ in 0..1000 {
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
            let p = model.predict_proba(&q).unwrap().as_array();
            assert_eq!(model.predict(&q).unwrap(), lowest_argmax(&p), "{kind:?}");
        }
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ds = random_dataset(&mut rng, 90, 5);
    for kind in ModelKind::ALL {
        let hp = small_hyperparams(kind);
        let a = train(kind, &hp, &ds).unwrap();
        let b = train(kind, &hp, &ds).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap(), "{kind:?}");
        assert_eq!(a.predict_proba_dataset(&ds).unwrap(), b.predict_proba_dataset(&ds).unwrap());
        assert_eq!(a.importance_scores(), b.importance_scores());
    }
}

#[test]
fn model_json_round_trip_and_version_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ds = random_dataset(&mut rng, 50, 3);
    for kind in ModelKind::ALL {
        let model = train(kind, &small_hyperparams(kind), &ds).unwrap();
        let text = model.to_json().unwrap();
        let back = TrainedModel::from_json(&text).unwrap();
        assert_eq!(back.predict_proba_dataset(&ds).unwrap(), model.predict_proba_dataset(&ds).unwrap());

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["format_version"] = serde_json::json!(99);
        let err = TrainedModel::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::VersionMismatch { found: 99, expected: 1 }), "{err:?}");
    }
}

#[test]
fn feature_mismatch_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ds = random_dataset(&mut rng, 30, 3);
    let model = train(ModelKind::Knn, &small_hyperparams(ModelKind::Knn), &ds).unwrap();
    assert!(matches!(model.predict_proba(&[0.0, 1.0]), Err(ModelError::FeatureMismatch(_))));
    let renamed = Dataset::from_matrix(vec!["a".into(), "b".into(), "c".into()], ds.x().to_vec(), ds.y().to_vec()).unwrap();
    assert!(matches!(model.align(&renamed), Err(ModelError::FeatureMismatch(_))));
}

#[test]
fn forest_importance_prefers_the_informative_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random_range(0.0..3.0), 5.0]).collect();
    let y: Vec<usize> = x.iter().map(|r| r[0].floor() as usize).collect();
    let ds = Dataset::from_matrix(vec!["a".into(), "b".into()], x, y).unwrap();
    let model = train(ModelKind::RandomForest, &small_hyperparams(ModelKind::RandomForest), &ds).unwrap();
    let imp = model.importance_scores();
    assert!(imp[0] > 0.0);
    assert_eq!(imp[1], 0.0);
    assert_eq!(model.feature_importance()[0].0, "a");
}

#[test]
fn importance_is_nonnegative_and_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut ds = random_dataset(&mut rng, 60, 4);
    // informative fourth feature plus a constant fifth
    let x: Vec<Vec<f64>> = ds
        .x()
        .iter()
        .zip(ds.y())
        .map(|(r, &c)| {
            let mut r = r.clone();
            r.push(c as f64);
            r.push(1.0);
            r
        })
        .collect();
    ds = Dataset::from_matrix(names(6), x, ds.y().to_vec()).unwrap();
    for kind in ModelKind::ALL {
        let model = train(kind, &small_hyperparams(kind), &ds).unwrap();
        let ranked = model.feature_importance();
        assert_eq!(ranked.len(), 6);
        assert!(ranked.iter().all(|(_, s)| s.is_finite() && *s >= 0.0), "{kind:?}: {ranked:?}");
        assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        let constant = ranked.iter().find(|(n, _)| n == "x5").unwrap().1;
        if kind == ModelKind::Svm {
            // a non-zero constant column doubles as a bias; scaled, it is all zeros
            let (scaled, _) = oddsmith::dataset::normalize(&ds);
            let scaled_model = train(kind, &small_hyperparams(kind), &scaled).unwrap();
            let w = scaled_model.importance_scores()[5];
            assert_eq!(w, 0.0);
        } else {
            assert!(constant.abs() < 1e-12, "{kind:?}: constant feature scored {constant}");
        }
    }
}

#[test]
fn svm_separates_blobs_and_objective_descends() {
    let ds = blobs(150, 1.0, 9);
    let hp = Hyperparams::Svm(SvmParams {
        c: 10.0,
        ..SvmParams::default()
    });
    let model = train(ModelKind::Svm, &hp, &ds).unwrap();
    assert_eq!(model.predict_dataset(&ds).unwrap(), ds.y().to_vec());
    let curve = model.training_curve();
    if let Some(curve) = curve {
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    }
}

/// Time-ordered cross-validation computed independently of the library.
fn oracle_cv_accuracy(ds: &Dataset, k: usize, folds: usize) -> f64 {
    let n = ds.n_rows();
    let blocks = folds + 1;
    let bound = |b: usize| b * n / blocks;
    let mut total = 0.0;
    for i in 1..blocks {
        let (lo, hi) = (bound(i), bound(i + 1));
        let mut correct = 0;
        for q in lo..hi {
            let mut order: Vec<(f64, usize)> = (0..lo)
                .map(|t| {
                    let d: f64 = ds.row(t).iter().zip(ds.row(q)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, t)
                })
                .collect();
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut votes = [0.0; 3];
            for &(_, t) in &order[..k] {
                votes[ds.y()[t]] += 1.0;
            }
            if lowest_argmax(&votes) == ds.y()[q] {
                correct += 1;
            }
        }
        total += correct as f64 / (hi - lo) as f64;
    }
    total / folds as f64
}

#[test]
fn grid_search_matches_recomputation() {
    // clean signal with label noise on a quarter of the rows
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let x: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random_range(0.0..3.0), rng.random_range(0.0..1.0)]).collect();
    let y: Vec<usize> = x
        .iter()
        .map(|r| if rng.random::<f64>() < 0.25 { rng.random_range(0..3) } else { r[0].floor() as usize })
        .collect();
    let ds = Dataset::from_matrix(names(2), x, y).unwrap();
    let mut grid = ParamGrid::new();
    grid.insert("k".to_string(), vec![serde_json::json!(1), serde_json::json!(3)]);
    let result = grid_search(ModelKind::Knn, &grid, &ds, 3, SearchMode::Exhaustive).unwrap();
    assert_eq!(result.table.len(), 2);
    let expected: Vec<f64> = [1, 3].iter().map(|&k| oracle_cv_accuracy(&ds, k, 3)).collect();
    for (row, want) in result.table.iter().zip(&expected) {
        assert!((row.mean_accuracy - want).abs() < 1e-12, "{} vs {want}", row.mean_accuracy);
    }
    let best_k = if expected[1] > expected[0] { 3 } else { 1 };
    assert_eq!(result.best, Hyperparams::Knn(KnnParams { k: best_k, ..KnnParams::default() }));
}

#[test]
fn randomized_search_evaluates_distinct_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ds = random_dataset(&mut rng, 60, 2);
    let mut grid = ParamGrid::new();
    grid.insert("k".to_string(), (1..=6).map(|k| serde_json::json!(k)).collect());
    for n in [1, 4, 6, 20] {
        let result = grid_search(ModelKind::Knn, &grid, &ds, 2, SearchMode::Randomized { n_samples: n, seed: 3 }).unwrap();
        assert_eq!(result.table.len(), n.min(6));
        let mut ks: Vec<_> = result.table.iter().map(|r| r.point["k"].as_u64().unwrap()).collect();
        ks.dedup();
        assert_eq!(ks.len(), n.min(6));
    }
    let mut single = ParamGrid::new();
    single.insert("k".to_string(), vec![serde_json::json!(2)]);
    let result = grid_search(ModelKind::Knn, &single, &ds, 2, SearchMode::Exhaustive).unwrap();
    assert_eq!(result.best, Hyperparams::Knn(KnnParams { k: 2, ..KnnParams::default() }));
    assert!(matches!(
        grid_search(ModelKind::Knn, &single, &ds, 1, SearchMode::Exhaustive),
        Err(ModelError::InsufficientData(_))
    ));
}

#[test]
fn knn_with_every_neighbour_returns_class_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let ds = random_dataset(&mut rng, 37, 3);
    let hp = Hyperparams::Knn(KnnParams { k: 37, ..KnnParams::default() });
    let model = train(ModelKind::Knn, &hp, &ds).unwrap();
    let mut freq = [0.0; 3];
    for &c in ds.y() {
        freq[c] += 1.0 / 37.0;
    }
    for _ in 0..20 {
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-9.0..9.0)).collect();
        let p = model.predict_proba(&q).unwrap().as_array();
        for c in 0..3 {
            assert!((p[c] - freq[c]).abs() < 1e-12);
        }
    }
}

#[test]
fn thread_count_does_not_change_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let ds = random_dataset(&mut rng, 120, 5);
    let fit_all = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            ModelKind::ALL
                .iter()
                .map(|&kind| {
                    let model = train(kind, &small_hyperparams(kind), &ds).unwrap();
                    format!("{}{:?}", model.to_json().unwrap(), model.importance_scores())
                })
                .collect()
        })
    };
    assert_eq!(fit_all(1), fit_all(4));
}

#[test]
fn partial_hyperparams_fill_from_defaults() {
    let hp: Hyperparams = serde_json::from_str(r#"{"kind":"knn","k":9}"#).unwrap();
    assert_eq!(hp, Hyperparams::Knn(KnnParams { k: 9, ..KnnParams::default() }));
    assert!(serde_json::from_str::<Hyperparams>(r#"{"kind":"svm","cc":1.0}"#).is_err());
}
