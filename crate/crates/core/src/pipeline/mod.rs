//! End-to-end classification: load, spectral features, spatial features,
//! fusion, hyperparameter search, training, prediction and evaluation, with
//! every artifact written to one output directory.

mod render;
mod synth;

pub use render::{class_color, render_map, save_map};
pub use synth::{class_signature, make_synthetic_cube};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::datacube::{self, stratified_split, HyperCube, LabelRaster, SampleSplit};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::kelm::{self, KelmHyperparams, KelmModel};
use crate::lbp::{lbp_features, LbpConfig, LbpSource};
use crate::metrics::{confusion, ConfusionMatrix, Summary};
use crate::mstv::{self, MstvConfig};
use crate::ssa::{self, SsaConfig};

pub const REPORT_FILE: &str = "report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const MAP_FILE: &str = "map.ppm";
pub const TRACE_FILE: &str = "ssa_trace.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PipelineConfig {
    pub cube_path: PathBuf,
    pub label_path: PathBuf,
    /// Taken from the largest label when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<u16>,
    pub mstv: MstvConfig,
    pub lbp: LbpConfig,
    pub ssa: SsaConfig,
    pub train_fraction: f64,
    pub folds: usize,
    /// Drives the split, the KPCA landmarks and the search; overrides the
    /// per-stage seeds.
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_hyperparams: Option<KelmHyperparams>,
    /// Zero every timing field so reports compare byte for byte.
    pub canonical: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cube_path: PathBuf::from("cube.json"),
            label_path: PathBuf::from("labels.json"),
            num_classes: None,
            mstv: MstvConfig::default(),
            lbp: LbpConfig::default(),
            ssa: SsaConfig::default(),
            train_fraction: 0.1,
            folds: 5,
            seed: 0,
            output_dir: PathBuf::from("out"),
            fixed_hyperparams: None,
            canonical: false,
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            for p in [&mut cfg.cube_path, &mut cfg.label_path, &mut cfg.output_dir] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, to_json(self)).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_fraction == 1.0 {
            return Err(Error::EmptyTestSplit);
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        if self.folds == 0 {
            return Err(Error::Config("fold count must be at least 1".into()));
        }
        self.lbp.validate()?;
        match &self.fixed_hyperparams {
            Some(h) => h.validate(),
            None => self.ssa.validate(),
        }
    }

    /// Copy with the master seed pushed into every seeded stage.
    pub fn seeded(&self) -> Self {
        let mut cfg = self.clone();
        cfg.mstv.seed = self.seed;
        cfg.ssa.seed = self.seed;
        cfg
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    /// Seconds spent in the search and the final fit.
    pub train_time: f64,
    pub per_stage_times: BTreeMap<String, f64>,
    pub chosen_hyperparams: KelmHyperparams,
    /// Relative to the output directory; absent when the search was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa_trace_path: Option<String>,
    pub confusion_path: String,
    pub map_path: String,
    pub seed: u64,
    pub train_samples: usize,
    pub test_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds_used: Option<usize>,
    pub config_echo: PipelineConfig,
}

impl RunReport {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Wall-clock time per stage; errors leaving a stage carry its name.
#[derive(Debug, Default)]
struct StageTimer {
    times: BTreeMap<String, f64>,
}

impl StageTimer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        *self.times.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64();
        if out.is_ok() {
            info!("{stage} finished in {:.3} s", self.times[stage]);
        }
        out
    }

    fn get(&self, stage: &str) -> f64 {
        self.times.get(stage).copied().unwrap_or(0.0)
    }
}

/// Column-wise min-max scaling to `[0, 1]`; constant columns become 0.
pub fn normalize_features(f: &FeatureMatrix) -> FeatureMatrix {
    let (rows, cols) = (f.rows(), f.cols());
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for i in 0..rows {
        for (j, &v) in f.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let mut out = f.clone();
    for i in 0..rows {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            let range = hi[j] - lo[j];
            *v = if range > 0.0 { (*v - lo[j]) / range } else { 0.0 };
        }
    }
    out
}

/// Row-wise concatenation, spectral block first.
pub fn fuse(spectral: &FeatureMatrix, spatial: &FeatureMatrix) -> Result<FeatureMatrix> {
    if spectral.rows() != spatial.rows() {
        return Err(Error::dims(
            format!("{} pixels", spectral.rows()),
            format!("{} pixels", spatial.rows()),
        ));
    }
    let (n, k) = (spectral.cols(), spatial.cols());
    let mut out = FeatureMatrix::zeros(spectral.rows(), n + k);
    for i in 0..spectral.rows() {
        let row = out.row_mut(i);
        row[..n].copy_from_slice(spectral.row(i));
        row[n..].copy_from_slice(spatial.row(i));
    }
    Ok(out)
}

/// Loads the cube and label raster named by the config and checks they align.
pub fn load_inputs(cfg: &PipelineConfig) -> Result<(HyperCube, LabelRaster)> {
    let cube = datacube::load_cube(&cfg.cube_path)?;
    let labels = match cfg.num_classes {
        Some(c) => datacube::load_labels(&cfg.label_path, c)?,
        None => datacube::load_labels_inferred(&cfg.label_path)?,
    };
    labels.check_matches(&cube)?;
    Ok((cube, labels))
}

fn features_timed(
    cube: &HyperCube,
    mstv_cfg: &MstvConfig,
    lbp_cfg: &LbpConfig,
    timer: &mut StageTimer,
) -> Result<FeatureMatrix> {
    let (reduced, stacked, spectral) = timer.run("mstv", || {
        mstv_cfg.validate(cube.bands())?;
        let reduced = mstv::group_and_average(cube, mstv_cfg.k)?;
        let stacked = mstv::multiscale_stack(&reduced, &mstv_cfg.scales)?;
        let spectral = mstv::kpca_reduce(&mstv::normalize_bands(&stacked), mstv_cfg)?;
        Ok((reduced, stacked, spectral))
    })?;
    let spatial = timer.run("lbp", || match lbp_cfg.source {
        LbpSource::Grouped => lbp_features(&reduced, lbp_cfg),
        LbpSource::Smoothed => lbp_features(&stacked, lbp_cfg),
    })?;
    timer.run("fuse", || {
        fuse(&normalize_features(&spectral), &normalize_features(&spatial))
    })
}

/// Fused, normalized `pixels × (N + K)` features: KPCA-fused multiscale
/// spectral features followed by LBP codes of the grouped bands (or of the
/// smoothed stack, per `LbpConfig::source`).
pub fn extract_features(cube: &HyperCube, mstv_cfg: &MstvConfig, lbp_cfg: &LbpConfig) -> Result<FeatureMatrix> {
    features_timed(cube, mstv_cfg, lbp_cfg, &mut StageTimer::default())
}

/// Split used by every stage of a run; errors if nothing is left to test on.
pub fn split_for(labels: &LabelRaster, fraction: f64, seed: u64) -> Result<SampleSplit> {
    let split = stratified_split(labels, fraction, seed)?;
    if split.test_idx.is_empty() {
        return Err(Error::EmptyTestSplit);
    }
    Ok(split)
}

fn labels_at(labels: &LabelRaster, idx: &[usize]) -> Vec<u16> {
    idx.iter().map(|&i| labels.labels()[i]).collect()
}

/// Search for `(C, γ)` on the training pixels of `split`.
pub fn tune_on_split(
    features: &FeatureMatrix,
    labels: &LabelRaster,
    split: &SampleSplit,
    ssa_cfg: &SsaConfig,
    folds: usize,
) -> Result<ssa::TuneOutcome> {
    ssa::tune_kelm(
        &features.select_rows(&split.train_idx),
        &labels_at(labels, &split.train_idx),
        labels.num_classes(),
        ssa_cfg,
        folds,
    )
}

pub fn train_on_split(
    features: &FeatureMatrix,
    labels: &LabelRaster,
    split: &SampleSplit,
    hyper: KelmHyperparams,
) -> Result<KelmModel> {
    kelm::train(
        &features.select_rows(&split.train_idx),
        &labels_at(labels, &split.train_idx),
        labels.num_classes(),
        hyper,
    )
}

/// Predicted class per pixel. With a mask, only its labeled pixels are
/// classified and the rest stay 0.
pub fn predict_map(model: &KelmModel, features: &FeatureMatrix, mask: Option<&LabelRaster>) -> Result<Vec<u16>> {
    let idx: Vec<usize> = match mask {
        Some(m) => (0..m.labels().len()).filter(|&i| m.labels()[i] != 0).collect(),
        None => (0..features.rows()).collect(),
    };
    if let Some(m) = mask {
        if m.labels().len() != features.rows() {
            return Err(Error::dims(format!("{} pixels", m.labels().len()), features.rows()));
        }
    }
    let pred = model.predict(&features.select_rows(&idx))?;
    let mut map = vec![0u16; features.rows()];
    for (&i, &l) in idx.iter().zip(&pred.labels) {
        map[i] = l;
    }
    Ok(map)
}

/// Confusion matrix and accuracies of a prediction map over the test pixels.
pub fn evaluate_split(
    predicted: &[u16],
    labels: &LabelRaster,
    split: &SampleSplit,
) -> Result<(ConfusionMatrix, Summary)> {
    if predicted.len() != labels.labels().len() {
        return Err(Error::dims(format!("{} pixels", labels.labels().len()), predicted.len()));
    }
    let cm = confusion(
        &labels_at(labels, &split.test_idx),
        &split.test_idx.iter().map(|&i| predicted[i]).collect::<Vec<_>>(),
        labels.num_classes(),
    )?;
    let summary = Summary::of(&cm)?;
    Ok((cm, summary))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads the configured inputs and runs [`run_with_data`].
pub fn run_full(config: &PipelineConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut timer = StageTimer::default();
    config.validate().map_err(|e| e.in_stage("config"))?;
    let (cube, labels) = timer.run("load", || load_inputs(config))?;
    run_stages(&cube, &labels, config, timer, start)
}

/// Runs every stage on in-memory data and writes the report, confusion CSV,
/// map and (when searching) the convergence trace to `config.output_dir`.
pub fn run_with_data(cube: &HyperCube, labels: &LabelRaster, config: &PipelineConfig) -> Result<RunReport> {
    let start = Instant::now();
    config.validate().map_err(|e| e.in_stage("config"))?;
    labels.check_matches(cube).map_err(|e| e.in_stage("load"))?;
    run_stages(cube, labels, config, StageTimer::default(), start)
}

fn run_stages(
    cube: &HyperCube,
    labels: &LabelRaster,
    config: &PipelineConfig,
    mut timer: StageTimer,
    start: Instant,
) -> Result<RunReport> {
    let cfg = config.seeded();
    let out_dir = cfg.output_dir.clone();
    let features = features_timed(cube, &cfg.mstv, &cfg.lbp, &mut timer)?;
    let split = timer.run("split", || split_for(labels, cfg.train_fraction, cfg.seed))?;

    let (hyper, tuned) = match cfg.fixed_hyperparams {
        Some(h) => (h, None),
        None => {
            let t = timer.run("tune", || tune_on_split(&features, labels, &split, &cfg.ssa, cfg.folds))?;
            (t.hyper, Some(t))
        }
    };
    info!("hyperparameters C = {:.6e}, gamma = {:.6e}", hyper.c, hyper.gamma);
    let model = timer.run("train", || train_on_split(&features, labels, &split, hyper))?;
    let predicted = timer.run("predict", || predict_map(&model, &features, Some(labels)))?;
    let (cm, summary) = timer.run("evaluate", || evaluate_split(&predicted, labels, &split))?;

    let trace_path = tuned
        .as_ref()
        .and_then(|t| t.search.as_ref())
        .map(|_| TRACE_FILE.to_string());
    timer.run("write", || {
        std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        if let Some(search) = tuned.as_ref().and_then(|t| t.search.as_ref()) {
            ssa::save_trace_csv(&search.trace, out_dir.join(TRACE_FILE))?;
        }
        cm.save_csv(out_dir.join(CONFUSION_FILE))?;
        save_map(&predicted, labels.height(), labels.width(), out_dir.join(MAP_FILE))
    })?;

    let mut report = RunReport {
        oa: summary.oa,
        aa: summary.aa,
        kappa: summary.kappa,
        train_time: timer.get("tune") + timer.get("train"),
        per_stage_times: timer.times,
        chosen_hyperparams: hyper,
        ssa_trace_path: trace_path,
        confusion_path: CONFUSION_FILE.to_string(),
        map_path: MAP_FILE.to_string(),
        seed: cfg.seed,
        train_samples: split.train_idx.len(),
        test_samples: split.test_idx.len(),
        folds_used: tuned.map(|t| t.folds),
        config_echo: config.clone(),
    };
    if cfg.canonical {
        report.train_time = 0.0;
        report.per_stage_times.values_mut().for_each(|t| *t = 0.0);
    }
    let report_path = out_dir.join(REPORT_FILE);
    write_file(&report_path, report.to_json()).map_err(|e| e.in_stage("write"))?;
    info!(
        "OA {:.4}, AA {:.4}, kappa {:.4} in {:.2} s",
        report.oa,
        report.aa,
        report.kappa,
        start.elapsed().as_secs_f64()
    );
    Ok(report)
}
