//! Evidential prototype classifier.
//!
//! An input `x` is mapped by a trainable affine layer to `z = Wx + b`. Each
//! prototype `i` then yields a simple mass function with
//! `m_i({ω_k}) = u_ik s_i` and `m_i(Ω) = 1 − s_i`, where
//! `s_i = α_i exp(−γ_i ‖z − p_i‖²)`. The `r` prototype masses are fused with
//! Dempster's rule, in closed form since every focal set is a singleton or Ω.
//!
//! The constrained quantities are driven by unconstrained parameters:
//! `α_i = sigmoid(ξ_i)`, `γ_i = η_i²`, `u_ik = β_ik² / Σ_l β_il²`.

mod kmeans;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::{BeliefError, Frame, MassFunction, SubsetMask};

pub use kmeans::{kmeans, kmeans_init, KMeans, MAX_ITERATIONS as KMEANS_MAX_ITERATIONS};
pub(crate) use kmeans::squared_distance;

/// Default reduced feature dimension.
pub const DEFAULT_HIDDEN: usize = 64;
/// Default number of prototypes.
pub const DEFAULT_PROTOTYPES: usize = 8;
/// Fusion normalizers at or below this value are reported as total conflict.
pub const MIN_NORMALIZER: f64 = 1e-300;

const MEMBERSHIP_FLOOR: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("prototype {0} has an all-zero membership vector")]
    ZeroBeta(usize),
    #[error("need at least one mass function to fuse")]
    EmptyList,
    #[error("total conflict during fusion (normalizer {0:e})")]
    TotalConflict(f64),
    #[error("mass function has a focal set {0} that is neither a singleton nor the frame")]
    UnsupportedFocalSet(SubsetMask),
    #[error("too few points: {n} rows for {r} clusters")]
    TooFewPoints { n: usize, r: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub d_in: usize,
    pub h: usize,
    pub r: usize,
    pub k: usize,
}

impl ModelConfig {
    pub fn new(d_in: usize, h: usize, r: usize, k: usize) -> Result<Self, EnnError> {
        let cfg = Self { d_in, h, r, k };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Binary model with the default hidden size and prototype count.
    pub fn with_input(d_in: usize) -> Self {
        Self {
            d_in,
            h: DEFAULT_HIDDEN,
            r: DEFAULT_PROTOTYPES,
            k: 2,
        }
    }

    pub fn validate(&self) -> Result<(), EnnError> {
        let bad = |what: &str| Err(EnnError::InvalidConfig(what.to_string()));
        if self.d_in == 0 {
            return bad("d_in must be >= 1");
        }
        if self.h == 0 {
            return bad("h must be >= 1");
        }
        if self.r == 0 {
            return bad("r must be >= 1");
        }
        if self.k < 2 || self.k > crate::belief::MAX_FRAME_SIZE {
            return bad("k must be between 2 and 16");
        }
        Ok(())
    }

    /// Number of scalar parameters in a model with this configuration.
    pub fn parameter_count(&self) -> usize {
        self.h * self.d_in + self.h + self.r * (self.h + self.k + 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub center: Vec<f64>,
    pub beta: Vec<f64>,
    pub xi: f64,
    pub eta: f64,
}

impl Prototype {
    pub fn alpha(&self) -> f64 {
        sigmoid(self.xi)
    }

    pub fn gamma(&self) -> f64 {
        self.eta * self.eta
    }

    /// Membership degrees `u_k`, a probability vector.
    pub fn memberships(&self) -> Option<Vec<f64>> {
        let total: f64 = self.beta.iter().map(|b| b * b).sum();
        if !(total > 0.0) {
            return None;
        }
        Some(self.beta.iter().map(|b| b * b / total).collect())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Output of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMass {
    mass: MassFunction,
    pl: Vec<f64>,
    activations: Vec<f64>,
}

impl OutputMass {
    pub fn mass(&self) -> &MassFunction {
        &self.mass
    }

    /// `pl_k = m({ω_k}) + m(Ω)`.
    pub fn pl(&self) -> &[f64] {
        &self.pl
    }

    /// Prototype activations `s_i`.
    pub fn activations(&self) -> &[f64] {
        &self.activations
    }

    pub fn singleton(&self, k: usize) -> f64 {
        self.mass.mass(self.mass.frame().singleton(k))
    }

    pub fn omega(&self) -> f64 {
        self.mass.mass(self.mass.frame().omega())
    }

    pub fn decide(&self) -> usize {
        decide(self)
    }
}

/// Closed-form Dempster fusion of simple prototype masses, before wrapping
/// into a [`MassFunction`].
#[derive(Debug, Clone)]
pub(crate) struct Fused {
    /// `m({ω_k})`
    pub singles: Vec<f64>,
    /// `m(Ω)`
    pub omega: f64,
    pub normalizer: f64,
}

/// `memberships` is row-major `r × k`.
pub(crate) fn fuse_raw(activations: &[f64], memberships: &[f64], k: usize) -> Result<Fused, EnnError> {
    if activations.is_empty() {
        return Err(EnnError::EmptyList);
    }
    let mut plaus_products = vec![1.0; k];
    let mut ignorance_product = 1.0;
    for (s, u) in activations.iter().zip(memberships.chunks_exact(k)) {
        let ign = 1.0 - s;
        for (p, uk) in plaus_products.iter_mut().zip(u) {
            *p *= uk * s + ign;
        }
        ignorance_product *= ign;
    }
    let unnormalized: Vec<f64> = plaus_products.iter().map(|p| p - ignorance_product).collect();
    let normalizer = unnormalized.iter().sum::<f64>() + ignorance_product;
    if !(normalizer > MIN_NORMALIZER) {
        return Err(EnnError::TotalConflict(normalizer));
    }
    Ok(Fused {
        singles: unnormalized.iter().map(|m| m / normalizer).collect(),
        omega: ignorance_product / normalizer,
        normalizer,
    })
}

impl Fused {
    fn to_mass(&self, frame: &Arc<Frame>) -> MassFunction {
        let mut masses = BTreeMap::new();
        for (k, &m) in self.singles.iter().enumerate() {
            masses.insert(frame.singleton(k), m);
        }
        masses.insert(frame.omega(), self.omega);
        MassFunction::from_normalized(frame.clone(), masses)
    }
}

/// Mass induced by one prototype at reduced input `z`. Returns the activation
/// `s = α exp(−γ d²)` and the simple mass function it defines.
pub fn prototype_activation(
    frame: &Arc<Frame>,
    z: &[f64],
    prototype: &Prototype,
) -> Result<(f64, MassFunction), EnnError> {
    if z.len() != prototype.center.len() {
        return Err(EnnError::DimensionMismatch {
            expected: prototype.center.len(),
            got: z.len(),
        });
    }
    if prototype.beta.len() != frame.len() {
        return Err(EnnError::DimensionMismatch {
            expected: frame.len(),
            got: prototype.beta.len(),
        });
    }
    let u = prototype.memberships().ok_or(EnnError::ZeroBeta(0))?;
    let s = prototype.alpha() * (-prototype.gamma() * squared_distance(z, &prototype.center)).exp();
    let mut masses = BTreeMap::new();
    for (k, uk) in u.iter().enumerate() {
        masses.insert(frame.singleton(k), uk * s);
    }
    masses.insert(frame.omega(), 1.0 - s);
    Ok((s, MassFunction::from_normalized(frame.clone(), masses)))
}

/// Dempster fusion of simple (singletons + Ω) mass functions in closed form:
/// `μ({ω_k}) = Π_i pl_i(ω_k) − Π_i m_i(Ω)`, `μ(Ω) = Π_i m_i(Ω)`, then
/// normalized. The activations and memberships are read off the masses
/// (`1 − s_i = m_i(Ω)`, `u_ik s_i = m_i({ω_k})`).
pub fn fuse_prototype_masses(masses: &[MassFunction]) -> Result<MassFunction, EnnError> {
    let first = masses.first().ok_or(EnnError::EmptyList)?;
    let frame = first.frame().clone();
    let k = frame.len();
    let omega = frame.omega();
    let mut activations = Vec::with_capacity(masses.len());
    let mut memberships = Vec::with_capacity(masses.len() * k);
    for m in masses {
        if m.frame() != &frame {
            return Err(BeliefError::FrameMismatch.into());
        }
        if let Some((a, _)) = m.focal_sets().find(|(a, _)| *a != omega && a.bits().count_ones() != 1) {
            return Err(EnnError::UnsupportedFocalSet(a));
        }
        let s = 1.0 - m.mass(omega);
        activations.push(s);
        for j in 0..k {
            memberships.push(if s > 0.0 { m.mass(frame.singleton(j)) / s } else { 0.0 });
        }
    }
    Ok(fuse_raw(&activations, &memberships, k)?.to_mass(&frame))
}

/// Maximum-plausibility decision; ties go to the lowest class index.
pub fn decide(out: &OutputMass) -> usize {
    argmax(out.pl())
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub z: Vec<f64>,
    pub d2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub s: Vec<f64>,
    /// Row-major `r × k`.
    pub u: Vec<f64>,
    pub fused: Fused,
}

/// Affine reduction layer plus `r` prototypes over a `K`-class frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialModel {
    frame: Arc<Frame>,
    config: ModelConfig,
    /// Row-major `h × d_in`.
    pub(crate) w: Vec<f64>,
    pub(crate) b: Vec<f64>,
    pub(crate) prototypes: Vec<Prototype>,
}

impl EvidentialModel {
    pub fn from_parts(
        frame: Arc<Frame>,
        config: ModelConfig,
        w: Vec<f64>,
        b: Vec<f64>,
        prototypes: Vec<Prototype>,
    ) -> Result<Self, EnnError> {
        config.validate()?;
        let dim = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(EnnError::DimensionMismatch { expected, got })
            }
        };
        dim(config.k, frame.len())?;
        dim(config.h * config.d_in, w.len())?;
        dim(config.h, b.len())?;
        dim(config.r, prototypes.len())?;
        for (i, p) in prototypes.iter().enumerate() {
            dim(config.h, p.center.len())?;
            dim(config.k, p.beta.len())?;
            if p.memberships().is_none() {
                return Err(EnnError::ZeroBeta(i));
            }
        }
        let all_finite = w
            .iter()
            .chain(&b)
            .chain(prototypes.iter().flat_map(|p| p.center.iter().chain(&p.beta)))
            .chain(prototypes.iter().flat_map(|p| [&p.xi, &p.eta]))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(EnnError::NonFiniteInput);
        }
        Ok(Self {
            frame,
            config,
            w,
            b,
            prototypes,
        })
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn prototypes(&self) -> &[Prototype] {
        &self.prototypes
    }

    /// `Σ_i α_i`, the quantity penalized by the regularizer.
    pub fn alpha_sum(&self) -> f64 {
        self.prototypes.iter().map(Prototype::alpha).sum()
    }

    pub fn linear_forward(&self, x: &[f64]) -> Result<Vec<f64>, EnnError> {
        self.check_input(x)?;
        Ok(self.reduce(x))
    }

    fn check_input(&self, x: &[f64]) -> Result<(), EnnError> {
        if x.len() != self.config.d_in {
            return Err(EnnError::DimensionMismatch {
                expected: self.config.d_in,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EnnError::NonFiniteInput);
        }
        Ok(())
    }

    fn reduce(&self, x: &[f64]) -> Vec<f64> {
        self.w
            .chunks_exact(self.config.d_in)
            .zip(&self.b)
            .map(|(row, bias)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias)
            .collect()
    }

    /// Forward pass on an input whose dimension has already been validated.
    pub(crate) fn trace(&self, x: &[f64]) -> Result<Trace, EnnError> {
        let z = self.reduce(x);
        let r = self.prototypes.len();
        let k = self.config.k;
        let mut d2 = Vec::with_capacity(r);
        let mut alpha = Vec::with_capacity(r);
        let mut gamma = Vec::with_capacity(r);
        let mut s = Vec::with_capacity(r);
        let mut u = Vec::with_capacity(r * k);
        for (i, p) in self.prototypes.iter().enumerate() {
            let dist = squared_distance(&z, &p.center);
            let (a, g) = (p.alpha(), p.gamma());
            d2.push(dist);
            alpha.push(a);
            gamma.push(g);
            s.push(a * (-g * dist).exp());
            u.extend(p.memberships().ok_or(EnnError::ZeroBeta(i))?);
        }
        let fused = fuse_raw(&s, &u, k)?;
        Ok(Trace {
            z,
            d2,
            alpha,
            gamma,
            s,
            u,
            fused,
        })
    }

    pub(crate) fn checked_trace(&self, x: &[f64]) -> Result<Trace, EnnError> {
        self.check_input(x)?;
        self.trace(x)
    }

    pub(crate) fn output_from_trace(&self, trace: &Trace) -> OutputMass {
        let mass = trace.fused.to_mass(&self.frame);
        let pl = trace.fused.singles.iter().map(|m| m + trace.fused.omega).collect();
        OutputMass {
            mass,
            pl,
            activations: trace.s.clone(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<OutputMass, EnnError> {
        self.check_input(x)?;
        let trace = self.trace(x)?;
        Ok(self.output_from_trace(&trace))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, EnnError> {
        self.forward(x).map(|out| decide(&out))
    }

    /// All parameters flattened in the order `w, b`, then per prototype
    /// `center, beta`, then all `xi`, then all `eta`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.config.parameter_count());
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.b);
        for p in &self.prototypes {
            out.extend_from_slice(&p.center);
            out.extend_from_slice(&p.beta);
        }
        out.extend(self.prototypes.iter().map(|p| p.xi));
        out.extend(self.prototypes.iter().map(|p| p.eta));
        out
    }

    /// Inverse of [`EvidentialModel::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), EnnError> {
        let expected = self.config.parameter_count();
        if params.len() != expected {
            return Err(EnnError::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        let (w, rest) = params.split_at(self.w.len());
        let (b, mut rest) = rest.split_at(self.b.len());
        self.w.copy_from_slice(w);
        self.b.copy_from_slice(b);
        for p in &mut self.prototypes {
            let (c, tail) = rest.split_at(p.center.len());
            let (beta, tail) = tail.split_at(p.beta.len());
            p.center.copy_from_slice(c);
            p.beta.copy_from_slice(beta);
            rest = tail;
        }
        let (xi, eta) = rest.split_at(self.prototypes.len());
        for ((p, &x), &e) in self.prototypes.iter_mut().zip(xi).zip(eta) {
            p.xi = x;
            p.eta = e;
        }
        Ok(())
    }
}

/// Builds an initial model from labeled data: random reduction weights, K-means
/// prototypes in the reduced space, memberships from cluster class proportions.
pub fn init_model(
    config: ModelConfig,
    frame: Arc<Frame>,
    features: &[Vec<f64>],
    labels: &[usize],
    seed: u64,
) -> Result<EvidentialModel, EnnError> {
    config.validate()?;
    if frame.len() != config.k {
        return Err(EnnError::DimensionMismatch {
            expected: config.k,
            got: frame.len(),
        });
    }
    if features.len() != labels.len() {
        return Err(EnnError::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    if features.len() < config.r {
        return Err(EnnError::TooFewPoints {
            n: features.len(),
            r: config.r,
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= config.k) {
        return Err(EnnError::LabelOutOfRange { label, k: config.k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / (config.d_in as f64).sqrt();
    let w: Vec<f64> = (0..config.h * config.d_in)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let b = vec![0.0; config.h];
    let placeholder = Prototype {
        center: vec![0.0; config.h],
        beta: vec![1.0; config.k],
        xi: 0.0,
        eta: 1.0,
    };
    let mut model = EvidentialModel::from_parts(frame, config, w, b, vec![placeholder; config.r])?;

    let mut reduced = Vec::with_capacity(features.len());
    for x in features {
        reduced.push(model.linear_forward(x)?);
    }
    let km = kmeans::kmeans_with_rng(&reduced, config.r, &mut rng)?;

    let mut counts = vec![vec![0usize; config.k]; config.r];
    let mut spread = vec![0.0; config.r];
    for ((z, &c), &label) in reduced.iter().zip(&km.assignments).zip(labels) {
        counts[c][label] += 1;
        spread[c] += squared_distance(z, &km.centers[c]);
    }
    for (i, (p, center)) in model.prototypes.iter_mut().zip(km.centers).enumerate() {
        let size: usize = counts[i].iter().sum();
        p.center = center;
        p.beta = counts[i]
            .iter()
            .map(|&c| {
                let share = if size > 0 { c as f64 / size as f64 } else { 1.0 / config.k as f64 };
                share.max(MEMBERSHIP_FLOOR).sqrt()
            })
            .collect();
        p.xi = 0.0;
        let msd = if size > 0 { spread[i] / size as f64 } else { 0.0 };
        p.eta = if msd > 0.0 && msd.is_finite() { (1.0 / msd).sqrt() } else { 1.0 };
    }
    Ok(model)
}
