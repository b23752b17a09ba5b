//! Self-correcting autoencoder for linear hyperspectral unmixing.
//!
//! A two-layer network with exactly `2FK` weights jointly recovers endmember
//! spectra (the decoder rows) and simplex-constrained abundances (the encoder
//! outputs) from a pixel-by-band reflectance matrix. The decoder and encoder
//! are trained toward a bi-orthogonal pair, `E Ẽ = I`, so over-specifying the
//! number of endmembers leaves the surplus abundance columns at zero.
//!
//! Module map:
//!
//! - [`linalg`]: dense kernels, Jacobi eigensolver, tail energy, pseudo-inverse
//! - [`model`]: forward pass, loss terms, analytic gradients
//! - [`optim`]: AdaMax, initialization, training loop
//! - [`data`]: datasets, scaling, synthetic generation, noise/outliers, HSX files
//! - [`metrics`]: SAD/RMSE, endmember alignment, null members, evaluation reports
//! - [`commands`]: the file-level workflows behind the `sca` binary

pub mod commands;
pub mod data;
pub mod error;
pub mod export;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optim;

pub use data::{GroundTruth, HsiDataset, NoiseConfig, OutlierConfig, ScaleParams};
pub use error::{Result, ScaError};
pub use linalg::Matrix;
pub use metrics::EvalReport;
pub use model::{Gradients, LossBreakdown, ScaWeights};
pub use optim::{AdamaxState, TrainConfig, TrainHistory};
