use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::optim::OptimizerState;
use super::perturb::perturb_with_rng;
use super::{loss_and_gradients, optimizer_step, Batch, TrainConfig, TrainError, UnlabeledItem};
use crate::enn::{EnnError, EvidentialModel};
use crate::io::{DataError, FeatureDataset};
use crate::metrics;

/// Scores a model after every epoch; higher is better.
pub trait Validator {
    fn score(&mut self, model: &EvidentialModel) -> Result<f64, TrainError>;
}

/// Accuracy on a fully labeled dataset.
#[derive(Debug)]
pub struct DatasetValidator<'a> {
    data: &'a FeatureDataset,
    truth: Vec<usize>,
}

impl<'a> DatasetValidator<'a> {
    pub fn new(data: &'a FeatureDataset) -> Result<Self, TrainError> {
        if data.is_empty() {
            return Err(TrainError::EmptyValidation);
        }
        let truth = data.dense_labels()?;
        Ok(Self { data, truth })
    }
}

impl Validator for DatasetValidator<'_> {
    fn score(&mut self, model: &EvidentialModel) -> Result<f64, TrainError> {
        let preds = self
            .data
            .features()
            .iter()
            .map(|x| model.predict(x))
            .collect::<Result<Vec<_>, EnnError>>()?;
        Ok(metrics::accuracy(&preds, &self.truth).expect("validation set is non-empty"))
    }
}

/// Patience-based stopping on a metric that should increase.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    /// Records the metric for `epoch`; returns `true` if it is a new best.
    pub fn observe(&mut self, epoch: usize, metric: f64) -> bool {
        match self.best {
            Some((_, best)) if metric <= best => {
                self.stale += 1;
                false
            }
            _ => {
                self.best = Some((epoch, metric));
                self.stale = 0;
                true
            }
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Validation score of the model before the first update.
    pub initial_val_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub stopped_early: bool,
}

pub fn train(
    model: EvidentialModel,
    train_set: &FeatureDataset,
    val_set: &FeatureDataset,
    cfg: &TrainConfig,
) -> Result<(EvidentialModel, TrainHistory), TrainError> {
    if val_set.d_in() != model.config().d_in {
        return Err(DataError::DimensionMismatch(format!(
            "validation data has {} features, model expects {}",
            val_set.d_in(),
            model.config().d_in
        ))
        .into());
    }
    let mut validator = DatasetValidator::new(val_set)?;
    train_with_validator(model, train_set, &mut validator, cfg)
}

/// Mini-batch training with early stopping; returns the parameters of the
/// best-scoring epoch.
pub fn train_with_validator<V: Validator + ?Sized>(
    mut model: EvidentialModel,
    train_set: &FeatureDataset,
    validator: &mut V,
    cfg: &TrainConfig,
) -> Result<(EvidentialModel, TrainHistory), TrainError> {
    cfg.validate()?;
    if train_set.d_in() != model.config().d_in {
        return Err(DataError::DimensionMismatch(format!(
            "training data has {} features, model expects {}",
            train_set.d_in(),
            model.config().d_in
        ))
        .into());
    }
    if let Some(&label) = train_set.labels().iter().flatten().find(|&&l| l >= model.config().k) {
        return Err(EnnError::LabelOutOfRange {
            label,
            k: model.config().k,
        }
        .into());
    }
    if train_set.labeled_count() == 0 {
        return Err(TrainError::NoLabeledData);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut optimizer = OptimizerState::for_model(&model, cfg);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let initial_val_accuracy = validator.score(&model)?;
    let mut best_model = model.clone();
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Batch::default();
            for &i in chunk {
                let x = train_set.row(i);
                match train_set.label(i) {
                    Some(y) => batch.labeled.push((x.to_vec(), y)),
                    None => batch.unlabeled.push(UnlabeledItem {
                        x: x.to_vec(),
                        perturbed: perturb_with_rng(x, cfg.noise_sigma, cfg.t_perturb, &mut rng),
                    }),
                }
            }
            let (loss, grads) = loss_and_gradients(&model, &batch, cfg)?;
            optimizer_step(&mut model, &grads, &mut optimizer)?;
            loss_sum += loss;
            batches += 1;
        }
        let val_accuracy = validator.score(&model)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches.max(1) as f64,
            val_accuracy,
        });
        if stopper.observe(epoch, val_accuracy) {
            best_model.clone_from(&model);
        }
        if stopper.should_stop() {
            break;
        }
    }

    let (best_epoch, best_val_accuracy) = stopper.best().unwrap_or((0, initial_val_accuracy));
    let history = TrainHistory {
        initial_val_accuracy,
        stopped_early: stopper.should_stop(),
        epochs,
        best_epoch,
        best_val_accuracy,
    };
    Ok((best_model, history))
}
