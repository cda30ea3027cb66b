//! Each kernel runs once on a single-thread pool and once on the default
//! pool. Build with `--no-default-features` to time the sequential code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use mlskelm::kelm::{self, kernel_matrix, KelmHyperparams};
use mlskelm::lbp::{lbp_features, LbpConfig};
use mlskelm::mstv::{group_and_average, multiscale_stack, RtvParams};
use mlskelm::pipeline::make_synthetic_cube;
use mlskelm::ssa::{functions, optimize, FnObjective, SsaConfig};
use mlskelm::FeatureMatrix;

fn pools() -> Vec<(String, ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let n = default.current_num_threads();
    vec![
        ("1-thread".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        (format!("default-{n}-thread"), default),
    ]
}

fn features(rows: usize, cols: usize) -> FeatureMatrix {
    let data = (0..rows * cols).map(|i| ((i * 2_654_435_761) % 1000) as f64 / 1000.0).collect();
    FeatureMatrix::new(rows, cols, data).unwrap()
}

fn bench_rtv(c: &mut Criterion) {
    let (cube, _) = make_synthetic_cube(48, 48, 40, 4, 0.1, 0).unwrap();
    let reduced = group_and_average(&cube, 8).unwrap();
    let scales: Vec<RtvParams> = [1.0, 2.0, 3.0].iter().map(|&s| RtvParams::new(0.005, s)).collect();
    let mut g = c.benchmark_group("multiscale_rtv");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| multiscale_stack(&reduced, &scales).unwrap()))
        });
    }
    g.finish();
}

fn bench_lbp(c: &mut Criterion) {
    let (cube, _) = make_synthetic_cube(128, 128, 20, 4, 0.1, 0).unwrap();
    let mut g = c.benchmark_group("lbp_features");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| lbp_features(&cube, &LbpConfig::default()).unwrap()))
        });
    }
    g.finish();
}

fn bench_kelm(c: &mut Criterion) {
    let x = features(400, 40);
    let labels: Vec<u16> = (0..400).map(|i| (i % 5) as u16 + 1).collect();
    let hyper = KelmHyperparams::new(100.0, 0.5).unwrap();
    let model = kelm::train(&x, &labels, 5, hyper).unwrap();
    let queries = features(4000, 40);
    let mut g = c.benchmark_group("kelm");
    g.sample_size(20);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("kernel_matrix", &name), |b| {
            b.iter(|| pool.install(|| kernel_matrix(&x, 0.5)))
        });
        g.bench_function(BenchmarkId::new("predict", &name), |b| {
            b.iter(|| pool.install(|| model.predict(&queries).unwrap()))
        });
    }
    g.finish();
}

fn bench_ssa(c: &mut Criterion) {
    let obj = FnObjective::new(10, |x: &[f64]| {
        // a deliberately costly objective so evaluation dominates
        (0..200).map(|k| functions::rastrigin(x) * (1.0 + k as f64 * 1e-9)).sum::<f64>()
    });
    let cfg = SsaConfig {
        max_iter: 20,
        ..SsaConfig::with_bounds(vec![-5.0; 10], vec![5.0; 10])
    };
    let mut g = c.benchmark_group("ssa_optimize");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| optimize(&obj, &cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_rtv, bench_lbp, bench_kelm, bench_ssa);
criterion_main!(benches);
