mod common;

use common::median;
use mlskelm::features::FeatureMatrix;
use mlskelm::kelm::{self, KelmHyperparams, OneHotLabels};
use mlskelm::ssa::{
    functions, optimize, stratified_folds, tune_kelm, FnObjective, Objective, Ssa, SsaConfig,
};
use proptest::prelude::*;

fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positions_in_bounds_and_best_never_worsens(
        seed in 0u64..10_000,
        lo in prop::collection::vec(-10.0f64..0.0, 1..5),
        width in 0.1f64..10.0,
        pop in 2usize..20,
    ) {
        let d = lo.len();
        let hi: Vec<f64> = lo.iter().map(|l| l + width).collect();
        let obj = FnObjective::new(d, functions::rastrigin);
        let cfg = SsaConfig { pop_size: pop, max_iter: 15, seed, ..SsaConfig::with_bounds(lo.clone(), hi.clone()) };
        let mut ssa = Ssa::new(&obj, &cfg).unwrap();
        let mut best = ssa.state().best_fit;
        for _ in 0..cfg.max_iter {
            ssa.step().unwrap();
            let s = ssa.state();
            prop_assert!(s.best_fit <= best);
            best = s.best_fit;
            prop_assert_eq!(s.best_fit, s.fitness.iter().cloned().fold(f64::INFINITY, f64::min));
            for p in &s.positions {
                for e in 0..d {
                    prop_assert!(lo[e] <= p[e] && p[e] <= hi[e]);
                }
            }
            for (p, f) in s.positions.iter().zip(&s.fitness) {
                prop_assert_eq!(obj.evaluate(p), *f);
            }
        }
        prop_assert_eq!(ssa.trace().len(), cfg.max_iter);
    }
}

#[test]
fn same_seed_same_trace_for_any_thread_count() {
    let obj = FnObjective::new(6, functions::rosenbrock);
    let cfg = SsaConfig {
        max_iter: 40,
        seed: 17,
        ..SsaConfig::with_bounds(vec![-3.0; 6], vec![3.0; 6])
    };
    let one = run_in_pool(1, || optimize(&obj, &cfg).unwrap());
    let four = run_in_pool(4, || optimize(&obj, &cfg).unwrap());
    let again = optimize(&obj, &cfg).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, again);
    let bits = |o: &mlskelm::ssa::SearchOutcome| o.trace.iter().map(|r| r.best_fit.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&one), bits(&four));
    let other = optimize(&obj, &SsaConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(one.trace, other.trace);
}

#[test]
fn shifted_parabola_converges() {
    let obj = FnObjective::new(1, |x: &[f64]| (x[0] - 3.0).powi(2));
    let mut finals: Vec<f64> = (0..10)
        .map(|seed| {
            let cfg = SsaConfig {
                max_iter: 50,
                seed,
                ..SsaConfig::with_bounds(vec![0.0], vec![10.0])
            };
            optimize(&obj, &cfg).unwrap().best_fit
        })
        .collect();
    let med = median(&mut finals);
    assert!(med < 1e-4, "median {med}");
}

#[test]
fn literal_v_flag_still_converges_on_sphere() {
    let obj = FnObjective::new(4, functions::sphere);
    let cfg = SsaConfig {
        max_iter: 60,
        paper_literal_v: true,
        ..SsaConfig::with_bounds(vec![-5.0; 4], vec![5.0; 4])
    };
    let out = optimize(&obj, &cfg).unwrap();
    assert!(out.best_fit < 1e-3);
    assert!(out.trace.windows(2).all(|w| w[1].best_fit <= w[0].best_fit));
}

fn blobs(n_per: usize) -> (FeatureMatrix, Vec<u16>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_per {
        let t = i as f64 / n_per as f64;
        rows.push(vec![0.2 + 0.1 * (7.0 * t).sin(), 0.2 + 0.1 * (5.0 * t).cos()]);
        labels.push(1);
        rows.push(vec![0.8 + 0.1 * (3.0 * t).cos(), 0.8 + 0.1 * (11.0 * t).sin()]);
        labels.push(2);
    }
    (FeatureMatrix::from_rows(&rows).unwrap(), labels)
}

/// Held-out MSE of one `(C, γ)` with the same folds as the search.
fn fold_mse(x: &FeatureMatrix, y: &[u16], assignment: &[usize], k: usize, hyper: KelmHyperparams) -> f64 {
    let mut total = 0.0;
    for f in 0..k {
        let train: Vec<usize> = (0..y.len()).filter(|&i| k == 1 || assignment[i] != f).collect();
        let held: Vec<usize> = (0..y.len()).filter(|&i| k == 1 || assignment[i] == f).collect();
        let model = kelm::train(
            &x.select_rows(&train),
            &train.iter().map(|&i| y[i]).collect::<Vec<_>>(),
            2,
            hyper,
        )
        .unwrap();
        let scores = model.predict(&x.select_rows(&held)).unwrap().scores;
        let targets = OneHotLabels::new(&held.iter().map(|&i| y[i]).collect::<Vec<_>>(), &[1, 2]).unwrap();
        total += kelm::mse_fitness(&scores, &targets).unwrap();
    }
    total / k as f64
}

#[test]
fn tuning_separable_blobs_finds_low_fold_mse() {
    let (x, y) = blobs(20);
    let cfg = SsaConfig::default();
    let out = tune_kelm(&x, &y, 2, &cfg, 5).unwrap();
    let (assignment, k) = stratified_folds(&y, 5, cfg.seed).unwrap();
    let achieved = fold_mse(&x, &y, &assignment, k, out.hyper);
    let search = out.search.as_ref().unwrap();
    assert!((achieved - search.best_fit).abs() < 1e-9, "{achieved} vs {}", search.best_fit);
    assert!(achieved < 0.05, "fold MSE {achieved}");

    // a coarse grid over the same box confirms such a region exists
    let grid_best = (0..=12)
        .flat_map(|i| (0..=12).map(move |j| (-2.0 + 0.5 * i as f64, -3.0 + 0.5 * j as f64)))
        .map(|(lc, lg)| fold_mse(&x, &y, &assignment, k, KelmHyperparams::new(10f64.powf(lc), 10f64.powf(lg)).unwrap()))
        .fold(f64::INFINITY, f64::min);
    assert!(grid_best < 0.05);
    assert!(achieved <= grid_best * 1.5 + 1e-6);
}

#[test]
fn single_fold_scores_training_mse() {
    let (x, y) = blobs(6);
    let cfg = SsaConfig {
        max_iter: 3,
        pop_size: 4,
        ..SsaConfig::default()
    };
    let out = tune_kelm(&x, &y, 2, &cfg, 1).unwrap();
    assert_eq!(out.folds, 1);
    let training = fold_mse(&x, &y, &[0; 12], 1, out.hyper);
    assert!((training - out.search.unwrap().best_fit).abs() < 1e-9);
}
