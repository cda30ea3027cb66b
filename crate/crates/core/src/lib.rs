//! Hyperspectral image classification with fused multiscale features and a
//! kernel extreme learning machine tuned by sparrow search.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`mstv`]: spectral features. Bands are grouped and averaged, smoothed at
//!    several scales with relative total variation, and fused with landmark
//!    kernel PCA.
//! 2. [`lbp`]: spatial features, one 3×3 local binary pattern code per pixel
//!    and band of the grouped cube.
//! 3. [`pipeline::fuse`]: per-column min-max normalization and concatenation.
//! 4. [`ssa`]: the sparrow search algorithm picks the classifier's
//!    regularization coefficient and RBF width by cross-validated MSE.
//! 5. [`kelm`]: closed-form training, prediction, and [`metrics`] (OA, AA, kappa).
//!
//! [`pipeline::run_full`] runs all of it from a [`pipeline::PipelineConfig`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datacube;
pub mod error;
pub mod features;
pub mod kelm;
pub mod lbp;
pub mod linalg;
pub mod metrics;
pub mod mstv;
pub mod par;
pub mod pipeline;
pub mod ssa;

pub use datacube::{HyperCube, LabelRaster, SampleSplit};
pub use error::{Error, ErrorKind, Result};
pub use features::{FeatureMatrix, Image};
pub use kelm::{KelmHyperparams, KelmModel};
pub use metrics::ConfusionMatrix;
pub use pipeline::{PipelineConfig, RunReport};
pub use ssa::{Objective, SsaConfig};
