#![allow(dead_code)]

use std::sync::Arc;

use enn_core::belief::{Frame, MassFunction, SubsetMask};
use enn_core::enn::{EvidentialModel, ModelConfig, Prototype};
use enn_core::io::{default_class_names, FeatureDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frame(k: usize) -> Arc<Frame> {
    Arc::new(Frame::new((0..k).map(|i| format!("w{i}"))).unwrap())
}

pub fn binary_frame() -> Arc<Frame> {
    Arc::new(Frame::new(default_class_names()).unwrap())
}

/// Random normalized mass function with a few random focal sets.
pub fn random_mass(rng: &mut ChaCha8Rng, frame: &Arc<Frame>) -> MassFunction {
    let full = frame.omega().bits() as u32;
    let focal = rng.random_range(1..=4usize);
    let mut sets: Vec<(SubsetMask, f64)> = (0..focal)
        .map(|_| (SubsetMask(rng.random_range(1..=full) as u16), rng.random_range(0.05..1.0)))
        .collect();
    // keep Ω focal half of the time so total conflict is rare
    if rng.random_bool(0.5) {
        sets.push((frame.omega(), rng.random_range(0.05..1.0)));
    }
    let total: f64 = sets.iter().map(|(_, m)| m).sum();
    MassFunction::new(frame.clone(), sets.into_iter().map(|(a, m)| (a, m / total))).unwrap()
}

/// Dense mass vector indexed by subset bits.
pub fn dense(m: &MassFunction) -> Vec<f64> {
    let mut out = vec![0.0; 1 << m.frame().len()];
    for (a, v) in m.focal_sets() {
        out[a.bits() as usize] = v;
    }
    out
}

/// Dempster's rule by enumerating every pair of subsets, normalized by 1 − κ.
/// Returns `None` on total conflict.
pub fn brute_force_dempster(m1: &[f64], m2: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = m1.len();
    let mut joint = vec![0.0; n];
    let mut kappa = 0.0;
    for b in 0..n {
        for c in 0..n {
            let prod = m1[b] * m2[c];
            if b & c == 0 {
                kappa += prod;
            } else {
                joint[b & c] += prod;
            }
        }
    }
    if kappa >= 1.0 - 1e-12 {
        return None;
    }
    for v in &mut joint {
        *v /= 1.0 - kappa;
    }
    Some((joint, kappa))
}

/// Three-way conjunctive sum `Σ_{B∩C∩D=A} m1(B) m2(C) m3(D)`, normalized.
pub fn brute_force_triple(m1: &[f64], m2: &[f64], m3: &[f64]) -> Option<Vec<f64>> {
    let n = m1.len();
    let mut joint = vec![0.0; n];
    let mut kappa = 0.0;
    for b in 0..n {
        for c in 0..n {
            for d in 0..n {
                let prod = m1[b] * m2[c] * m3[d];
                let a = b & c & d;
                if a == 0 {
                    kappa += prod;
                } else {
                    joint[a] += prod;
                }
            }
        }
    }
    if kappa >= 1.0 - 1e-9 {
        return None;
    }
    Some(joint.into_iter().map(|v| v / (1.0 - kappa)).collect())
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random binary model with prototypes near the reduced images of inputs in
/// `[-1, 1]^d`, so no prototype is effectively switched off.
pub fn random_model(rng: &mut ChaCha8Rng, d: usize, h: usize, r: usize) -> EvidentialModel {
    let cfg = ModelConfig::new(d, h, r, 2).unwrap();
    let w = (0..h * d).map(|_| rng.random_range(-0.6..0.6)).collect();
    let b = (0..h).map(|_| rng.random_range(-0.2..0.2)).collect();
    let protos = (0..r)
        .map(|_| Prototype {
            center: (0..h).map(|_| rng.random_range(-0.5..0.5)).collect(),
            beta: (0..2).map(|_| rng.random_range(0.3..1.0)).collect(),
            xi: rng.random_range(-1.5..1.5),
            eta: rng.random_range(0.5..1.2),
        })
        .collect();
    EvidentialModel::from_parts(binary_frame(), cfg, w, b, protos).unwrap()
}

/// Model with arbitrary unconstrained parameters (wide ranges).
pub fn wild_model(rng: &mut ChaCha8Rng, d: usize, h: usize, r: usize) -> EvidentialModel {
    let cfg = ModelConfig::new(d, h, r, 2).unwrap();
    let w = (0..h * d).map(|_| 3.0 * normal(rng)).collect();
    let b = (0..h).map(|_| 3.0 * normal(rng)).collect();
    let protos = (0..r)
        .map(|_| {
            let mut beta: Vec<f64> = (0..2).map(|_| 5.0 * normal(rng)).collect();
            if beta.iter().all(|v| *v == 0.0) {
                beta[0] = 1.0;
            }
            Prototype {
                center: (0..h).map(|_| 4.0 * normal(rng)).collect(),
                beta,
                xi: 10.0 * normal(rng),
                eta: 2.0 * normal(rng),
            }
        })
        .collect();
    EvidentialModel::from_parts(binary_frame(), cfg, w, b, protos).unwrap()
}

/// Two isotropic 2-D Gaussian blobs (unit variance), lifted to `d_in`
/// dimensions by `embedding` (row-major `d_in × 2`). Class 0 ("positive") is
/// centered at `positive_mean`, class 1 at the origin. Rows alternate classes.
pub fn lifted_blobs(
    rng: &mut ChaCha8Rng,
    n: usize,
    positive_mean: [f64; 2],
    embedding: &[f64],
    labeled_fraction: f64,
) -> FeatureDataset {
    let d_in = embedding.len() / 2;
    let mut ds = FeatureDataset::new(d_in, default_class_names());
    for i in 0..n {
        let class = i % 2;
        let mean = if class == 0 { positive_mean } else { [0.0, 0.0] };
        let p = [mean[0] + normal(rng), mean[1] + normal(rng)];
        let x: Vec<f64> = embedding.chunks_exact(2).map(|e| e[0] * p[0] + e[1] * p[1]).collect();
        let label = if rng.random_bool(labeled_fraction) { Some(class) } else { None };
        ds.push(x, label).unwrap();
    }
    ds
}

/// Fixed random linear embedding from 2-D into `d_in` dimensions.
pub fn embedding(d_in: usize) -> Vec<f64> {
    let mut r = rng(20_240_601);
    (0..2 * d_in).map(|_| normal(&mut r) / (2.0f64).sqrt()).collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
