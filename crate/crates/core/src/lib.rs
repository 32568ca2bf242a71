//! Evidential classification on precomputed feature vectors.
//!
//! The crate is layered bottom-up:
//!
//! - [`belief`]: mass functions, belief, plausibility, conflict, and
//!   Dempster's rule over frames of up to 16 hypotheses.
//! - [`enn`]: the prototype-based evidential classifier (affine reduction,
//!   distance-based prototype masses, closed-form Dempster fusion).
//! - [`training`]: supervised and consistency losses, hand-written gradients,
//!   optimizers and an early-stopping training loop.
//! - [`metrics`]: accuracy, F1, ROC and AUC.
//! - [`io`]: CSV datasets, JSON model files, prediction export.
//! - [`cli`]: the `enn` command-line front end.

pub mod belief;
pub mod cli;
pub mod enn;
pub mod io;
pub mod metrics;
pub mod training;

pub use belief::{Frame, MassFunction, SubsetMask};
pub use enn::{EvidentialModel, ModelConfig, OutputMass, Prototype};
pub use io::FeatureDataset;
pub use training::{LossMode, TrainConfig};
