//! Reverse-mode gradients of [`total_loss`](super::total_loss), written out by
//! hand through the fusion, activation and affine layers.

use super::loss::{ce_from_singles, mse_from_pl, squared_gap};
use super::{Batch, LossMode, TrainConfig, TrainError};
use crate::enn::{EvidentialModel, ModelConfig, Trace};

/// One block per parameter group, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    /// Row-major `h × d_in`.
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
    /// Row-major `r × h`.
    pub dcenters: Vec<f64>,
    /// Row-major `r × k`.
    pub dbeta: Vec<f64>,
    pub dxi: Vec<f64>,
    pub deta: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            dw: vec![0.0; cfg.h * cfg.d_in],
            db: vec![0.0; cfg.h],
            dcenters: vec![0.0; cfg.r * cfg.h],
            dbeta: vec![0.0; cfg.r * cfg.k],
            dxi: vec![0.0; cfg.r],
            deta: vec![0.0; cfg.r],
        }
    }

    /// Same order as [`EvidentialModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let r = self.dxi.len();
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.dw);
        out.extend_from_slice(&self.db);
        if r > 0 {
            let h = self.dcenters.len() / r;
            let k = self.dbeta.len() / r;
            for (c, b) in self.dcenters.chunks_exact(h).zip(self.dbeta.chunks_exact(k)) {
                out.extend_from_slice(c);
                out.extend_from_slice(b);
            }
        }
        out.extend_from_slice(&self.dxi);
        out.extend_from_slice(&self.deta);
        out
    }

    pub fn len(&self) -> usize {
        self.dw.len() + self.db.len() + self.dcenters.len() + self.dbeta.len() + self.dxi.len() + self.deta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn blocks(&self) -> [&[f64]; 6] {
        [&self.dw, &self.db, &self.dcenters, &self.dbeta, &self.dxi, &self.deta]
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `out[i] = Π_{j≠i} factors[j]`, without division.
fn excluded_products(factors: &[f64]) -> Vec<f64> {
    let n = factors.len();
    let mut out = vec![1.0; n];
    let mut acc = 1.0;
    for i in 0..n {
        out[i] = acc;
        acc *= factors[i];
    }
    acc = 1.0;
    for i in (0..n).rev() {
        out[i] *= acc;
        acc *= factors[i];
    }
    out
}

/// Accumulates `scale · ∂L/∂ψ` into `grads`, given the upstream gradients of
/// the loss with respect to the output masses `m({ω_k})` and `m(Ω)`.
fn backward(
    model: &EvidentialModel,
    x: &[f64],
    t: &Trace,
    g_single: &[f64],
    g_omega: f64,
    scale: f64,
    grads: &mut GradientVector,
) {
    let cfg = model.config();
    let (r, k, h, d) = (cfg.r, cfg.k, cfg.h, cfg.d_in);
    let f = &t.fused;

    // normalization m = μ / N
    let g_dot = g_single.iter().zip(&f.singles).map(|(g, m)| g * m).sum::<f64>() + g_omega * f.omega;
    let g_mu: Vec<f64> = g_single.iter().map(|g| scale * (g - g_dot) / f.normalizer).collect();
    let g_mu_omega = scale * (g_omega - g_dot) / f.normalizer;
    // μ_k = P_k − Q, μ_Ω = Q
    let g_q = g_mu_omega - g_mu.iter().sum::<f64>();

    let mut g_s = vec![0.0; r];
    let mut g_u = vec![0.0; r * k];
    let mut factors = vec![0.0; r];
    for (kk, &g_p) in g_mu.iter().enumerate() {
        for i in 0..r {
            factors[i] = t.u[i * k + kk] * t.s[i] + 1.0 - t.s[i];
        }
        for (i, excl) in excluded_products(&factors).into_iter().enumerate() {
            g_s[i] += g_p * excl * (t.u[i * k + kk] - 1.0);
            g_u[i * k + kk] += g_p * excl * t.s[i];
        }
    }
    for (i, s) in t.s.iter().enumerate() {
        factors[i] = 1.0 - s;
    }
    for (i, excl) in excluded_products(&factors).into_iter().enumerate() {
        g_s[i] -= g_q * excl;
    }

    let mut g_z = vec![0.0; h];
    for (i, p) in model.prototypes.iter().enumerate() {
        // s = α exp(−γ d²)
        let decay = (-t.gamma[i] * t.d2[i]).exp();
        let g_alpha = g_s[i] * decay;
        grads.dxi[i] += g_alpha * t.alpha[i] * (1.0 - t.alpha[i]);
        let g_gamma = -g_s[i] * t.s[i] * t.d2[i];
        grads.deta[i] += 2.0 * p.eta * g_gamma;
        let g_d2 = -g_s[i] * t.s[i] * t.gamma[i];
        for j in 0..h {
            let diff = t.z[j] - p.center[j];
            grads.dcenters[i * h + j] -= 2.0 * g_d2 * diff;
            g_z[j] += 2.0 * g_d2 * diff;
        }
        // u_k = β_k² / Σ β²
        let u = &t.u[i * k..(i + 1) * k];
        let gu = &g_u[i * k..(i + 1) * k];
        let beta_sq: f64 = p.beta.iter().map(|b| b * b).sum();
        let gu_dot: f64 = gu.iter().zip(u).map(|(g, u)| g * u).sum();
        for l in 0..k {
            grads.dbeta[i * k + l] += 2.0 * p.beta[l] / beta_sq * (gu[l] - gu_dot);
        }
    }

    for j in 0..h {
        grads.db[j] += g_z[j];
        for (gw, xc) in grads.dw[j * d..(j + 1) * d].iter_mut().zip(x) {
            *gw += g_z[j] * xc;
        }
    }
}

/// Value of [`total_loss`](super::total_loss) and its exact gradient.
pub fn loss_and_gradients(
    model: &EvidentialModel,
    batch: &Batch,
    cfg: &TrainConfig,
) -> Result<(f64, GradientVector), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let k = model.config().k;
    let mut grads = GradientVector::zeros(model.config());
    let mut total = 0.0;

    if !batch.labeled.is_empty() {
        let scale = 1.0 / batch.labeled.len() as f64;
        let mut g_single = vec![0.0; k];
        for (x, class) in &batch.labeled {
            let t = model.checked_trace(x)?;
            let singles = &t.fused.singles;
            g_single.iter_mut().for_each(|g| *g = 0.0);
            let g_omega;
            match cfg.loss_mode {
                LossMode::EvidentialCe => {
                    total += scale * ce_from_singles(singles, *class, cfg.log_eps);
                    if singles[*class] > cfg.log_eps {
                        g_single[*class] = -1.0 / singles[*class];
                    }
                    g_omega = 0.0;
                }
                LossMode::MsePl => {
                    let pl: Vec<f64> = singles.iter().map(|m| m + t.fused.omega).collect();
                    total += scale * mse_from_pl(&pl, *class);
                    for (kk, p) in pl.iter().enumerate() {
                        let y = if kk == *class { 1.0 } else { 0.0 };
                        g_single[kk] = 2.0 * (p - y);
                    }
                    g_omega = g_single.iter().sum();
                }
            }
            backward(model, x, &t, &g_single, g_omega, scale, &mut grads);
        }
    }

    if !batch.unlabeled.is_empty() && cfg.consistency_weight > 0.0 {
        let scale = cfg.consistency_weight / batch.unlabeled.len() as f64;
        for item in &batch.unlabeled {
            if item.perturbed.is_empty() {
                return Err(TrainError::EmptyList);
            }
            let base = model.checked_trace(&item.x)?;
            let mut g_base = vec![0.0; k];
            for xt in &item.perturbed {
                let t = model.checked_trace(xt)?;
                total += scale * squared_gap(&base.fused.singles, &t.fused.singles);
                let g_t: Vec<f64> = base
                    .fused
                    .singles
                    .iter()
                    .zip(&t.fused.singles)
                    .map(|(m, mt)| -2.0 * (m - mt))
                    .collect();
                for (gb, gt) in g_base.iter_mut().zip(&g_t) {
                    *gb -= gt;
                }
                backward(model, xt, &t, &g_t, 0.0, scale, &mut grads);
            }
            backward(model, &item.x, &base, &g_base, 0.0, scale, &mut grads);
        }
    } else {
        // still validate the unlabeled inputs
        for item in &batch.unlabeled {
            if item.perturbed.is_empty() {
                return Err(TrainError::EmptyList);
            }
            model.checked_trace(&item.x)?;
        }
    }

    total += cfg.lambda * model.alpha_sum();
    for (g, p) in grads.dxi.iter_mut().zip(&model.prototypes) {
        let a = p.alpha();
        *g += cfg.lambda * a * (1.0 - a);
    }

    if !grads.is_finite() {
        return Err(TrainError::NonFiniteGradient);
    }
    Ok((total, grads))
}

pub fn gradients(model: &EvidentialModel, batch: &Batch, cfg: &TrainConfig) -> Result<GradientVector, TrainError> {
    loss_and_gradients(model, batch, cfg).map(|(_, g)| g)
}

/// Largest relative disagreement between the analytic gradient and central
/// differences with the given step:
/// `max_j |a_j − n_j| / max(1e-8, |a_j| + |n_j|)`.
pub fn grad_check(model: &EvidentialModel, batch: &Batch, cfg: &TrainConfig, step: f64) -> Result<f64, TrainError> {
    let analytic = gradients(model, batch, cfg)?.flatten();
    let base = model.parameters();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst: f64 = 0.0;
    for (j, a) in analytic.iter().enumerate() {
        params[j] = base[j] + step;
        probe.set_parameters(&params)?;
        let up = super::total_loss(&probe, batch, cfg)?;
        params[j] = base[j] - step;
        probe.set_parameters(&params)?;
        let down = super::total_loss(&probe, batch, cfg)?;
        params[j] = base[j];
        let numeric = (up - down) / (2.0 * step);
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
