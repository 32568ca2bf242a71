use super::{Batch, LossMode, TrainConfig, TrainError};
use crate::enn::{EvidentialModel, OutputMass};

pub(crate) fn ce_from_singles(singles: &[f64], class: usize, eps: f64) -> f64 {
    -singles[class].max(eps).ln()
}

pub(crate) fn mse_from_pl(pl: &[f64], class: usize) -> f64 {
    pl.iter()
        .enumerate()
        .map(|(k, p)| {
            let y = if k == class { 1.0 } else { 0.0 };
            (p - y) * (p - y)
        })
        .sum()
}

pub(crate) fn squared_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `−log max(m({ω_class}), ε)`. With two classes and `class = 0` this is
/// `−y log m({ω_1}) − (1 − y) log m({ω_2})` at `y = 1`.
pub fn loss_supervised_ce(out: &OutputMass, class: usize, log_eps: f64) -> f64 {
    ce_from_singles(&singleton_masses(out), class, log_eps)
}

/// `Σ_t Σ_k (m({ω_k}) − m_t({ω_k}))²`.
pub fn loss_consistency(out: &OutputMass, perturbed: &[OutputMass]) -> Result<f64, TrainError> {
    if perturbed.is_empty() {
        return Err(TrainError::EmptyList);
    }
    let base = singleton_masses(out);
    Ok(perturbed
        .iter()
        .map(|o| squared_gap(&base, &singleton_masses(o)))
        .sum())
}

/// `Σ_n Σ_k (pl_nk − y_nk)² + λ Σ_i α_i` over instances `n`.
pub fn cost_mse_pl(
    outs: &[OutputMass],
    targets: &[Vec<f64>],
    lambda: f64,
    model: &EvidentialModel,
) -> Result<f64, TrainError> {
    if outs.len() != targets.len() {
        return Err(TrainError::LengthMismatch(outs.len(), targets.len()));
    }
    let mut cost = 0.0;
    for (o, y) in outs.iter().zip(targets) {
        if y.len() != o.pl().len() {
            return Err(TrainError::LengthMismatch(o.pl().len(), y.len()));
        }
        cost += squared_gap(o.pl(), y);
    }
    Ok(cost + lambda * model.alpha_sum())
}

fn singleton_masses(out: &OutputMass) -> Vec<f64> {
    (0..out.pl().len()).map(|k| out.singleton(k)).collect()
}

/// Mean supervised loss over labeled items, plus `consistency_weight` times the
/// mean consistency loss over unlabeled items, plus `λ Σ_i α_i`.
pub fn total_loss(model: &EvidentialModel, batch: &Batch, cfg: &TrainConfig) -> Result<f64, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let mut supervised = 0.0;
    for (x, class) in &batch.labeled {
        let t = model.checked_trace(x)?;
        supervised += match cfg.loss_mode {
            LossMode::EvidentialCe => ce_from_singles(&t.fused.singles, *class, cfg.log_eps),
            LossMode::MsePl => {
                let pl: Vec<f64> = t.fused.singles.iter().map(|m| m + t.fused.omega).collect();
                mse_from_pl(&pl, *class)
            }
        };
    }
    let mut consistency = 0.0;
    for item in &batch.unlabeled {
        if item.perturbed.is_empty() {
            return Err(TrainError::EmptyList);
        }
        let base = model.checked_trace(&item.x)?;
        for xt in &item.perturbed {
            let t = model.checked_trace(xt)?;
            consistency += squared_gap(&base.fused.singles, &t.fused.singles);
        }
    }
    let mut total = model.alpha_sum() * cfg.lambda;
    if !batch.labeled.is_empty() {
        total += supervised / batch.labeled.len() as f64;
    }
    if !batch.unlabeled.is_empty() {
        total += cfg.consistency_weight * consistency / batch.unlabeled.len() as f64;
    }
    Ok(total)
}
