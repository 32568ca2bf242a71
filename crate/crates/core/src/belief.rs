//! Dempster-Shafer algebra over small finite frames.
//!
//! Subsets of a frame with `K <= 16` hypotheses are encoded as bitmasks
//! ([`SubsetMask`]), so every operation here is exact enumeration over focal
//! sets. Mass functions are normalized (`m(∅) = 0`) and stored sparsely.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported frame cardinality.
pub const MAX_FRAME_SIZE: usize = 16;

/// Tolerance on `|Σ m(A) − 1|` accepted when building a mass function.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Conflict at or above `1 − TOTAL_CONFLICT_TOL` is treated as total conflict.
pub const TOTAL_CONFLICT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("frame must contain between 1 and {MAX_FRAME_SIZE} hypotheses, got {0}")]
    FrameSize(usize),
    #[error("frame labels must be non-empty and unique (offending label {0:?})")]
    BadLabel(String),
    #[error("subset mask {mask:#x} is not valid for a frame of size {k}")]
    InvalidMask { mask: u32, k: usize },
    #[error("negative or non-finite mass {mass} on subset {mask:#x}")]
    NegativeMass { mask: u32, mass: f64 },
    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("mass {0} assigned to the empty set")]
    EmptySetMass(f64),
    #[error("mass functions are defined on different frames")]
    FrameMismatch,
    #[error("total conflict between mass functions (kappa = {0})")]
    TotalConflict(f64),
    #[error("cannot combine an empty list of mass functions")]
    EmptyList,
}

/// Ordered set of mutually exclusive hypotheses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    labels: Vec<String>,
}

impl Frame {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, BeliefError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_FRAME_SIZE {
            return Err(BeliefError::FrameSize(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() || labels[..i].contains(label) {
                return Err(BeliefError::BadLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// The whole frame Ω.
    pub fn omega(&self) -> SubsetMask {
        SubsetMask(((1u32 << self.len()) - 1) as u16)
    }

    /// `{ω_k}` for a zero-based hypothesis index.
    pub fn singleton(&self, k: usize) -> SubsetMask {
        assert!(k < self.len(), "hypothesis index {k} out of range");
        SubsetMask(1 << k)
    }

    pub fn complement(&self, a: SubsetMask) -> SubsetMask {
        SubsetMask(!a.0 & self.omega().0)
    }

    pub fn check(&self, a: SubsetMask) -> Result<(), BeliefError> {
        if u32::from(a.0) >> self.len() != 0 {
            Err(BeliefError::InvalidMask {
                mask: a.0.into(),
                k: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Every subset of the frame, ∅ first.
    pub fn subsets(&self) -> impl Iterator<Item = SubsetMask> {
        (0..=self.omega().0).map(SubsetMask)
    }
}

/// A subset of a frame: bit `k` set iff `ω_k` belongs to the subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(pub u16);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersect(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & other.0)
    }

    pub fn union(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for k in 0..16 {
            if self.0 & (1 << k) != 0 {
                if !first {
                    write!(f, ",")?;
                }
                write!(f, "{k}")?;
                first = false;
            }
        }
        write!(f, "}}")
    }
}

/// Normalized basic belief assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Arc<Frame>,
    masses: BTreeMap<SubsetMask, f64>,
}

impl MassFunction {
    /// Builds a mass function from `(subset, mass)` pairs. Repeated subsets
    /// accumulate; zero masses are dropped.
    pub fn new(
        frame: Arc<Frame>,
        assignments: impl IntoIterator<Item = (SubsetMask, f64)>,
    ) -> Result<Self, BeliefError> {
        let mut masses = BTreeMap::new();
        for (mask, mass) in assignments {
            frame.check(mask)?;
            if !(mass >= 0.0) || !mass.is_finite() {
                return Err(BeliefError::NegativeMass {
                    mask: mask.0.into(),
                    mass,
                });
            }
            *masses.entry(mask).or_insert(0.0) += mass;
        }
        if let Some(&empty) = masses.get(&SubsetMask::EMPTY) {
            if empty > 0.0 {
                return Err(BeliefError::EmptySetMass(empty));
            }
        }
        let total: f64 = masses.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BeliefError::NotNormalized(total));
        }
        masses.retain(|_, m| *m > 0.0);
        Ok(Self { frame, masses })
    }

    /// Total ignorance: `m(Ω) = 1`.
    pub fn vacuous(frame: Arc<Frame>) -> Self {
        let omega = frame.omega();
        Self {
            frame,
            masses: BTreeMap::from([(omega, 1.0)]),
        }
    }

    /// Used for results of operations that preserve normalization by construction.
    pub(crate) fn from_normalized(frame: Arc<Frame>, mut masses: BTreeMap<SubsetMask, f64>) -> Self {
        masses.retain(|_, m| *m > 0.0);
        debug_assert!((masses.values().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOL);
        Self { frame, masses }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    /// `m(A)`; subsets that are not focal read as zero.
    pub fn mass(&self, a: SubsetMask) -> f64 {
        self.masses.get(&a).copied().unwrap_or(0.0)
    }

    /// Focal sets with their masses, in mask order.
    pub fn focal_sets(&self) -> impl Iterator<Item = (SubsetMask, f64)> + '_ {
        self.masses.iter().map(|(&a, &m)| (a, m))
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }

    /// `Bel(A) = Σ_{∅≠B⊆A} m(B)`.
    pub fn bel(&self, a: SubsetMask) -> Result<f64, BeliefError> {
        self.frame.check(a)?;
        Ok(self
            .focal_sets()
            .filter(|(b, _)| !b.is_empty() && b.is_subset_of(a))
            .map(|(_, m)| m)
            .sum())
    }

    /// `Pl(A) = Σ_{B∩A≠∅} m(B)`.
    pub fn pl(&self, a: SubsetMask) -> Result<f64, BeliefError> {
        self.frame.check(a)?;
        Ok(self
            .focal_sets()
            .filter(|(b, _)| !b.intersect(a).is_empty())
            .map(|(_, m)| m)
            .sum())
    }

    fn same_frame(&self, other: &MassFunction) -> Result<(), BeliefError> {
        if Arc::ptr_eq(&self.frame, &other.frame) || self.frame == other.frame {
            Ok(())
        } else {
            Err(BeliefError::FrameMismatch)
        }
    }

    /// Degree of conflict `κ = Σ_{B∩C=∅} m1(B) m2(C)`.
    pub fn conflict(&self, other: &MassFunction) -> Result<f64, BeliefError> {
        self.same_frame(other)?;
        let mut kappa = 0.0;
        for (b, mb) in self.focal_sets() {
            for (c, mc) in other.focal_sets() {
                if b.intersect(c).is_empty() {
                    kappa += mb * mc;
                }
            }
        }
        Ok(kappa)
    }

    /// Dempster's rule of combination.
    pub fn combine(&self, other: &MassFunction) -> Result<MassFunction, BeliefError> {
        self.same_frame(other)?;
        let mut joint: BTreeMap<SubsetMask, f64> = BTreeMap::new();
        let mut kappa = 0.0;
        for (b, mb) in self.focal_sets() {
            for (c, mc) in other.focal_sets() {
                let a = b.intersect(c);
                if a.is_empty() {
                    kappa += mb * mc;
                } else {
                    *joint.entry(a).or_insert(0.0) += mb * mc;
                }
            }
        }
        if kappa >= 1.0 - TOTAL_CONFLICT_TOL {
            return Err(BeliefError::TotalConflict(kappa));
        }
        // retained mass is 1 − κ
        let retained: f64 = joint.values().sum();
        for m in joint.values_mut() {
            *m /= retained;
        }
        Ok(MassFunction::from_normalized(self.frame.clone(), joint))
    }

    /// Left fold of [`MassFunction::combine`] over a non-empty list.
    pub fn combine_all<'a>(
        masses: impl IntoIterator<Item = &'a MassFunction>,
    ) -> Result<MassFunction, BeliefError> {
        let mut iter = masses.into_iter();
        let first = iter.next().ok_or(BeliefError::EmptyList)?.clone();
        iter.try_fold(first, |acc, m| acc.combine(m))
    }
}
