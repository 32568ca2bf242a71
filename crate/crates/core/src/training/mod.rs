//! Losses, analytic gradients, and the semi-supervised training loop.
//!
//! Labeled instances contribute a supervised loss (evidential cross-entropy on
//! the singleton masses, or squared error on plausibilities). Unlabeled
//! instances contribute a consistency loss between the output for `x` and the
//! outputs for `T` Gaussian-perturbed copies of `x`. A penalty `λ Σ_i α_i`
//! discourages over-confident prototypes.

mod fit;
mod grad;
mod loss;
mod optim;
mod perturb;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enn::EnnError;
use crate::io::DataError;

pub use fit::{train, train_with_validator, DatasetValidator, EarlyStopping, EpochRecord, TrainHistory, Validator};
pub use grad::{grad_check, gradients, loss_and_gradients, GradientVector};
pub use loss::{cost_mse_pl, loss_consistency, loss_supervised_ce, total_loss};
pub use optim::{optimizer_step, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use perturb::perturb;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("batch has neither labeled nor unlabeled instances")]
    EmptyBatch,
    #[error("need at least one perturbed copy")]
    EmptyList,
    #[error("length mismatch: {0} outputs vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("gradient has a non-finite entry")]
    NonFiniteGradient,
    #[error("parameter/gradient shape mismatch: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("training set has no labeled instances")]
    NoLabeledData,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] EnnError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Squared error between output plausibilities and one-hot targets.
    MsePl,
    /// `−log m({ω_y})`, clamped at `log_eps`.
    EvidentialCe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss_mode: LossMode,
    pub lambda: f64,
    pub consistency_weight: f64,
    pub noise_sigma: f64,
    pub t_perturb: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub log_eps: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss_mode: LossMode::EvidentialCe,
            lambda: 0.01,
            consistency_weight: 1.0,
            noise_sigma: 0.1,
            t_perturb: 2,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 200,
            patience: 5,
            seed: 0,
            log_eps: 1e-12,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::InvalidConfig(what.to_string()));
        if !(self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !(self.consistency_weight >= 0.0) {
            return bad("consistency_weight must be >= 0");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be >= 0");
        }
        if self.t_perturb == 0 {
            return bad("t_perturb must be >= 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.patience == 0 {
            return bad("patience must be >= 1");
        }
        if !(self.log_eps > 0.0) {
            return bad("log_eps must be > 0");
        }
        Ok(())
    }
}

/// An unlabeled instance together with its perturbed copies.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledItem {
    pub x: Vec<f64>,
    pub perturbed: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    /// `(x, class index)`; class 0 is `ω_1`.
    pub labeled: Vec<(Vec<f64>, usize)>,
    pub unlabeled: Vec<UnlabeledItem>,
}

impl Batch {
    pub fn is_empty(&self) -> bool {
        self.labeled.is_empty() && self.unlabeled.is_empty()
    }
}
