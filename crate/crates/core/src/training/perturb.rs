use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `t` copies of `x`, each with i.i.d. `N(0, sigma²)` noise per coordinate.
pub fn perturb(x: &[f64], sigma: f64, t: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb_with_rng(x, sigma, t, &mut rng)
}

pub(crate) fn perturb_with_rng<R: Rng + ?Sized>(x: &[f64], sigma: f64, t: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..t)
        .map(|_| {
            x.iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(rng);
                    v + sigma * e
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_copies() {
        let x = vec![1.0, -2.5, 3.25];
        let out = perturb(&x, 0.0, 4, 1);
        assert_eq!(out, vec![x; 4]);
    }

    #[test]
    fn noise_has_requested_spread() {
        let x = vec![0.5; 10_000];
        let out = perturb(&x, 1.0, 1, 99);
        let diffs: Vec<f64> = out[0].iter().zip(&x).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (diffs.len() - 1) as f64;
        assert!((var.sqrt() - 1.0).abs() < 0.05, "std {}", var.sqrt());
        assert!(mean.abs() < 0.05);
    }

    #[test]
    fn deterministic_per_seed() {
        let x = vec![0.0, 1.0];
        assert_eq!(perturb(&x, 0.3, 3, 5), perturb(&x, 0.3, 3, 5));
        assert_ne!(perturb(&x, 0.3, 3, 5), perturb(&x, 0.3, 3, 6));
    }
}
