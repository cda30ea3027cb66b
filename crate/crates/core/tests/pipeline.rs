use std::time::Instant;

use mlskelm::datacube::{save_cube, save_labels};
use mlskelm::metrics::{ConfusionMatrix, Summary};
use mlskelm::mstv::MstvConfig;
use mlskelm::pipeline::{
    self, class_signature, fuse, make_synthetic_cube, normalize_features, render_map, PipelineConfig,
};
use mlskelm::ssa::SsaConfig;
use mlskelm::{Error, ErrorKind, FeatureMatrix, KelmHyperparams};

fn small_config(dir: &std::path::Path) -> PipelineConfig {
    let (cube, labels) = make_synthetic_cube(20, 16, 12, 3, 0.05, 4).unwrap();
    save_cube(&cube, dir.join("cube.json")).unwrap();
    save_labels(&labels, dir.join("labels.json")).unwrap();
    PipelineConfig {
        cube_path: dir.join("cube.json"),
        label_path: dir.join("labels.json"),
        mstv: MstvConfig {
            k: 6,
            n_components: 6,
            ..MstvConfig::default()
        },
        ssa: SsaConfig {
            pop_size: 8,
            max_iter: 4,
            ..SsaConfig::default()
        },
        folds: 3,
        train_fraction: 0.2,
        output_dir: dir.join("out"),
        ..PipelineConfig::default()
    }
}

#[test]
fn report_matches_emitted_confusion_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let start = Instant::now();
    let report = pipeline::run_full(&cfg).unwrap();
    let wall = start.elapsed().as_secs_f64();

    let cm = ConfusionMatrix::load_csv(cfg.output_dir.join(&report.confusion_path)).unwrap();
    let s = Summary::of(&cm).unwrap();
    assert_eq!((s.oa, s.aa, s.kappa), (report.oa, report.aa, report.kappa));
    assert_eq!(cm.total() as usize, report.test_samples);
    assert_eq!(report.train_samples + report.test_samples, 20 * 16);

    let stages: f64 = report.per_stage_times.values().sum();
    assert!(report.per_stage_times.values().all(|&t| t > 0.0));
    assert!((stages - wall).abs() <= 0.1 * wall, "stages {stages} vs wall {wall}");
    for stage in ["load", "mstv", "lbp", "fuse", "split", "tune", "train", "predict", "evaluate", "write"] {
        assert!(report.per_stage_times.contains_key(stage), "{stage}");
    }

    let trace = std::fs::read_to_string(cfg.output_dir.join(report.ssa_trace_path.as_ref().unwrap())).unwrap();
    assert_eq!(trace.lines().count(), 1 + 4);
    let map = std::fs::read(cfg.output_dir.join(&report.map_path)).unwrap();
    assert!(map.starts_with(b"P6\n16 20\n255\n"));

    let reread = pipeline::RunReport::load(cfg.output_dir.join(pipeline::REPORT_FILE)).unwrap();
    assert_eq!(reread, report);
}

#[test]
fn fixed_hyperparams_skip_the_search() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        fixed_hyperparams: Some(KelmHyperparams::new(100.0, 0.5).unwrap()),
        canonical: true,
        ..small_config(dir.path())
    };
    let report = pipeline::run_full(&cfg).unwrap();
    assert!(report.ssa_trace_path.is_none());
    assert!(!report.per_stage_times.contains_key("tune"));
    assert!(!cfg.output_dir.join(pipeline::TRACE_FILE).exists());
    assert_eq!(report.chosen_hyperparams.c, 100.0);
    assert_eq!(report.train_time, 0.0);
    assert!(report.per_stage_times.values().all(|&t| t == 0.0));
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(json.get("ssaTracePath").is_none());
}

#[test]
fn canonical_runs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        canonical: true,
        ..small_config(dir.path())
    };
    let files = [pipeline::REPORT_FILE, pipeline::CONFUSION_FILE, pipeline::MAP_FILE, pipeline::TRACE_FILE];
    pipeline::run_full(&cfg).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(cfg.output_dir.join(f)).unwrap()).collect();
    pipeline::run_full(&cfg).unwrap();
    let second: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(cfg.output_dir.join(f)).unwrap()).collect();
    assert_eq!(first, second);
}

#[test]
fn full_training_fraction_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        train_fraction: 1.0,
        ..small_config(dir.path())
    };
    let err = pipeline::run_full(&cfg).unwrap_err();
    assert!(err.to_string().contains("empty test split"), "{err}");
    assert_eq!(err.kind(), ErrorKind::Config);
}

#[test]
fn stage_errors_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.cube_path = dir.path().join("missing.json");
    let err = pipeline::run_full(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "load", .. }), "{err}");
    assert_eq!(err.kind(), ErrorKind::Data);

    let mut cfg = small_config(dir.path());
    cfg.mstv.k = 99;
    let err = pipeline::run_full(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "mstv", .. }), "{err}");
}

#[test]
fn config_file_paths_resolve_next_to_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::default();
    let path = dir.path().join("run.json");
    cfg.save(&path).unwrap();
    let back = PipelineConfig::load(&path).unwrap();
    assert_eq!(back.cube_path, dir.path().join("cube.json"));
    assert_eq!(back.output_dir, dir.path().join("out"));
    std::fs::write(&path, "{\"folds\": \"three\"}").unwrap();
    assert_eq!(PipelineConfig::load(&path).unwrap_err().kind(), ErrorKind::Config);
}

#[test]
fn noiseless_scene_separates_by_nearest_centroid() {
    let (cube, labels) = make_synthetic_cube(10, 12, 16, 2, 0.0, 3).unwrap();
    let centroids: Vec<Vec<f64>> = (0..2).map(|k| (0..16).map(|b| class_signature(k, b, 16)).collect()).collect();
    for p in 0..cube.pixels() {
        let s = cube.spectrum(p);
        let dist = |c: &Vec<f64>| c.iter().zip(&s).map(|(a, b)| (a - f64::from(*b)).powi(2)).sum::<f64>();
        let nearest = if dist(&centroids[0]) <= dist(&centroids[1]) { 1 } else { 2 };
        assert_eq!(nearest, labels.labels()[p]);
    }
}

#[test]
fn fused_width_follows_block_widths() {
    let spectral = FeatureMatrix::zeros(145 * 145, 20);
    let spatial = FeatureMatrix::zeros(145 * 145, 20);
    let f = fuse(&normalize_features(&spectral), &normalize_features(&spatial)).unwrap();
    assert_eq!((f.rows(), f.cols()), (21025, 40));
}

#[test]
fn map_of_full_scene_has_scene_size() {
    let img = render_map(&vec![3u16; 145 * 145], 145, 145).unwrap();
    assert!(img.starts_with(b"P6\n145 145\n255\n"));
    assert_eq!(img.len(), b"P6\n145 145\n255\n".len() + 145 * 145 * 3);
}

#[test]
fn lbp_source_selects_the_texture_cube() {
    use mlskelm::lbp::{LbpConfig, LbpSource};
    let (cube, _) = make_synthetic_cube(12, 10, 12, 3, 0.05, 2).unwrap();
    let mstv = MstvConfig {
        k: 4,
        n_components: 3,
        ..MstvConfig::default()
    };
    let grouped = pipeline::extract_features(&cube, &mstv, &LbpConfig::default()).unwrap();
    assert_eq!(grouped.cols(), 3 + 4);
    let smoothed_cfg = LbpConfig {
        source: LbpSource::Smoothed,
        ..LbpConfig::default()
    };
    let smoothed = pipeline::extract_features(&cube, &mstv, &smoothed_cfg).unwrap();
    assert_eq!(smoothed.cols(), 3 + 4 * mstv.scales.len());
    let parsed: LbpConfig = serde_json::from_str(r#"{"source":"smoothed"}"#).unwrap();
    assert_eq!(parsed, smoothed_cfg);
}
