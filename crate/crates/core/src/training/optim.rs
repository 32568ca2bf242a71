use super::{GradientVector, OptimizerKind, TrainConfig, TrainError};
use crate::enn::EvidentialModel;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Moment accumulators for the adaptive optimizer; empty for plain descent.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerKind,
    learning_rate: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64, parameter_count: usize) -> Self {
        let moments = if kind == OptimizerKind::Adam { parameter_count } else { 0 };
        Self {
            kind,
            learning_rate,
            first: vec![0.0; moments],
            second: vec![0.0; moments],
            steps: 0,
        }
    }

    pub fn for_model(model: &EvidentialModel, cfg: &TrainConfig) -> Self {
        Self::new(cfg.optimizer, cfg.learning_rate, model.config().parameter_count())
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One in-place update of `params` along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), TrainError> {
        if params.len() != grads.len() {
            return Err(TrainError::ShapeMismatch(params.len(), grads.len()));
        }
        self.steps += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                if self.first.len() != params.len() {
                    return Err(TrainError::ShapeMismatch(self.first.len(), params.len()));
                }
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.first.iter_mut().zip(self.second.iter_mut()))
                {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPSILON);
                }
            }
        }
        Ok(())
    }
}

pub fn optimizer_step(
    model: &mut EvidentialModel,
    grads: &GradientVector,
    state: &mut OptimizerState,
) -> Result<(), TrainError> {
    let mut params = model.parameters();
    state.step(&mut params, &grads.flatten())?;
    model.set_parameters(&params)?;
    Ok(())
}
