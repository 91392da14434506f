//! Unsupervised multi-view deraining toolkit.
//!
//! Reconstructs a rain-free radiance field from posed rainy images by jointly
//! optimizing a compact neural renderer and a latent-embedding rain predictor
//! under direction-sensitive gradient losses. Ships with a procedural
//! view-consistent rainy-dataset simulator for desk-scale validation.
//!
//! Pipeline overview:
//!
//! 1. [`rainsim`] generates a posed multi-view rainy scene (or load a real one
//!    with [`dataset`]).
//! 2. [`trainer`] warms up the radiance field ([`renderer`]) on the rainy
//!    images, then alternates network updates and Langevin latent updates of
//!    the rain embedding ([`rainpred`]) under the unsupervised [`losses`].
//! 3. [`evalpost`] scores renders (PSNR/SSIM) and fuses rain-free input
//!    regions back into the render using thresholded rain masks.
//!
//! All numerics are `f64` and every training path is deterministic under a
//! fixed seed.

pub mod config;
pub mod dataset;
pub mod dirgrad;
pub mod error;
pub mod evalpost;
pub mod image_io;
pub mod losses;
pub mod nn;
pub mod rainpred;
pub mod rainsim;
pub mod renderer;
pub mod trainer;

pub use dataset::{CameraRecord, PatchSample, Ray, SceneDataset};
pub use dirgrad::{DominantDirections, OrientationHistogram};
pub use error::{Error, Result};
pub use losses::{LossBreakdown, LossWeights};
pub use rainpred::{PredictorParams, RainEmbedding, RainMap};
pub use renderer::{EncodingConfig, RenderResult};
pub use trainer::{TrainConfig, TrainState};
