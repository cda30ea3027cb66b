use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use mlskelm::datacube::{self, save_cube, save_labels};
use mlskelm::kelm::{load_model, save_model};
use mlskelm::pipeline::{self, PipelineConfig};
use mlskelm::ssa::save_trace_csv;
use mlskelm::{Error, ErrorKind, FeatureMatrix, KelmHyperparams, LabelRaster, Result};

#[derive(Parser)]
#[command(name = "mlskelm", version, about = "Hyperspectral classification with multiscale features and a tuned kernel ELM")]
struct Cli {
    /// Log at debug level.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.train_fraction {
            cfg.train_fraction = f;
        }
        cfg.validate()?;
        Ok(cfg.seeded())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write report, confusion matrix, map and trace.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero timing fields in the report.
        #[arg(long)]
        canonical: bool,
    },
    /// Compute fused features for every pixel and save them as .npy.
    Features {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "features.npy")]
        out: PathBuf,
    },
    /// Search KELM hyperparameters on the training split.
    Tune {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        features: PathBuf,
        /// Directory for hyperparams.json and the convergence trace.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Train a KELM on the training split.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        features: PathBuf,
        /// Hyperparameter JSON; defaults to the config's fixedHyperparams.
        #[arg(long)]
        hyper: Option<PathBuf>,
        #[arg(long, default_value = "model.kelm")]
        out: PathBuf,
    },
    /// Classify pixels with a trained model.
    Predict {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Classify unlabeled pixels too.
        #[arg(long)]
        all: bool,
        /// Directory for predictions.json/.bin and map.ppm.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Score a prediction raster on the test split.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a synthetic striped scene with labels and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 40)]
        bands: usize,
        #[arg(long, default_value_t = 5)]
        classes: u16,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_features(path: &Path, labels: &LabelRaster) -> Result<FeatureMatrix> {
    let f = FeatureMatrix::load_npy(path)?;
    if f.rows() != labels.labels().len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pixel rows", labels.labels().len()),
            actual: f.rows().to_string(),
        });
    }
    Ok(f)
}

fn load_labels(cfg: &PipelineConfig) -> Result<LabelRaster> {
    match cfg.num_classes {
        Some(c) => datacube::load_labels(&cfg.label_path, c),
        None => datacube::load_labels_inferred(&cfg.label_path),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { cfg, out, canonical } => {
            let mut config = PipelineConfig::load(&cfg.config)?;
            if let Some(s) = cfg.seed {
                config.seed = s;
            }
            if let Some(f) = cfg.train_fraction {
                config.train_fraction = f;
            }
            if let Some(o) = out {
                config.output_dir = o;
            }
            config.canonical |= canonical;
            let report = pipeline::run_full(&config)?;
            print!("{}", report.to_json());
        }
        Command::Features { cfg, out } => {
            let cfg = cfg.load()?;
            let (cube, _) = pipeline::load_inputs(&cfg)?;
            let f = pipeline::extract_features(&cube, &cfg.mstv, &cfg.lbp)?;
            f.save_npy(&out)?;
            info!("wrote {}x{} features to {}", f.rows(), f.cols(), out.display());
        }
        Command::Tune { cfg, features, out } => {
            let cfg = cfg.load()?;
            let labels = load_labels(&cfg)?;
            let f = load_features(&features, &labels)?;
            let split = pipeline::split_for(&labels, cfg.train_fraction, cfg.seed)?;
            let outcome = pipeline::tune_on_split(&f, &labels, &split, &cfg.ssa, cfg.folds)?;
            create_dir(&out)?;
            if let Some(search) = &outcome.search {
                save_trace_csv(&search.trace, out.join(pipeline::TRACE_FILE))?;
            }
            let text = to_json(&outcome.hyper);
            write_text(&out.join("hyperparams.json"), text.clone())?;
            print!("{text}");
        }
        Command::Train {
            cfg,
            features,
            hyper,
            out,
        } => {
            let cfg = cfg.load()?;
            let hyper: KelmHyperparams = match (hyper, cfg.fixed_hyperparams) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                (None, Some(h)) => h,
                (None, None) => {
                    return Err(Error::Config(
                        "no hyperparameters: pass --hyper or set fixedHyperparams".into(),
                    ))
                }
            };
            let labels = load_labels(&cfg)?;
            let f = load_features(&features, &labels)?;
            let split = pipeline::split_for(&labels, cfg.train_fraction, cfg.seed)?;
            let model = pipeline::train_on_split(&f, &labels, &split, hyper)?;
            save_model(&model, &out)?;
            info!("trained on {} samples, model written to {}", split.train_idx.len(), out.display());
        }
        Command::Predict {
            cfg,
            features,
            model,
            all,
            out,
        } => {
            let cfg = cfg.load()?;
            let labels = load_labels(&cfg)?;
            let f = load_features(&features, &labels)?;
            let model = load_model(&model)?;
            let map = pipeline::predict_map(&model, &f, (!all).then_some(&labels))?;
            create_dir(&out)?;
            datacube::save_label_values(labels.height(), labels.width(), &map, out.join("predictions.json"))?;
            pipeline::save_map(&map, labels.height(), labels.width(), out.join(pipeline::MAP_FILE))?;
        }
        Command::Evaluate { cfg, predictions, out } => {
            let cfg = cfg.load()?;
            let labels = load_labels(&cfg)?;
            let (h, w, pred) = datacube::load_label_values(&predictions)?;
            if (h, w) != (labels.height(), labels.width()) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", labels.height(), labels.width()),
                    actual: format!("{h}x{w}"),
                });
            }
            let split = pipeline::split_for(&labels, cfg.train_fraction, cfg.seed)?;
            let (cm, summary) = pipeline::evaluate_split(&pred, &labels, &split)?;
            create_dir(&out)?;
            cm.save_csv(out.join(pipeline::CONFUSION_FILE))?;
            print!("{}", to_json(&summary));
        }
        Command::Synth {
            out,
            height,
            width,
            bands,
            classes,
            noise,
            seed,
        } => {
            let (cube, labels) = pipeline::make_synthetic_cube(height, width, bands, classes, noise, seed)?;
            create_dir(&out)?;
            save_cube(&cube, out.join("cube.json"))?;
            save_labels(&labels, out.join("labels.json"))?;
            let cfg = PipelineConfig {
                num_classes: Some(classes),
                seed,
                ..PipelineConfig::default()
            };
            cfg.save(out.join("config.json"))?;
            info!("wrote {height}x{width}x{bands} scene with {classes} classes to {}", out.display());
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
