//! Lloyd's K-means used to place the initial prototypes.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EnnError;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: Vec<Vec<f64>>,
    /// Cluster index of every input row.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

/// Cluster centers only; see [`kmeans`].
pub fn kmeans_init(features: &[Vec<f64>], r: usize, seed: u64) -> Result<Vec<Vec<f64>>, EnnError> {
    kmeans(features, r, seed).map(|km| km.centers)
}

pub fn kmeans(features: &[Vec<f64>], r: usize, seed: u64) -> Result<KMeans, EnnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeans_with_rng(features, r, &mut rng)
}

pub(crate) fn kmeans_with_rng<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    r: usize,
    rng: &mut R,
) -> Result<KMeans, EnnError> {
    let n = features.len();
    if r == 0 || n < r {
        return Err(EnnError::TooFewPoints { n, r });
    }
    let dim = features[0].len();
    for row in features {
        if row.len() != dim {
            return Err(EnnError::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EnnError::NonFiniteInput);
        }
    }

    let mut centers: Vec<Vec<f64>> = sample(rng, n, r)
        .into_iter()
        .map(|i| features[i].clone())
        .collect();
    let mut assignments = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        let changed = assign(features, &centers, &mut assignments, &mut dist);
        if !changed {
            converged = true;
            break;
        }
        iterations += 1;
        update_centers(features, &mut centers, &assignments, &dist);
    }
    if !converged {
        assign(features, &centers, &mut assignments, &mut dist);
    }

    Ok(KMeans {
        centers,
        assignments,
        iterations,
    })
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest-center assignment, ties to the lowest center index. Returns whether
/// any assignment changed.
fn assign(features: &[Vec<f64>], centers: &[Vec<f64>], assignments: &mut [usize], dist: &mut [f64]) -> bool {
    let mut changed = false;
    for (i, x) in features.iter().enumerate() {
        let (best, best_d) = centers
            .iter()
            .map(|c| squared_distance(x, c))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc });
        if assignments[i] != best {
            assignments[i] = best;
            changed = true;
        }
        dist[i] = best_d;
    }
    changed
}

fn update_centers(features: &[Vec<f64>], centers: &mut [Vec<f64>], assignments: &[usize], dist: &[f64]) {
    let dim = centers[0].len();
    let mut sums = vec![vec![0.0; dim]; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for (x, &c) in features.iter().zip(assignments) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(x) {
            *s += v;
        }
    }
    // Empty clusters take the points farthest from their own centers; each
    // point is used at most once.
    let mut taken = vec![false; features.len()];
    for (j, center) in centers.iter_mut().enumerate() {
        if counts[j] > 0 {
            let inv = 1.0 / counts[j] as f64;
            for (c, s) in center.iter_mut().zip(&sums[j]) {
                *c = s * inv;
            }
        } else {
            let far = (0..features.len())
                .filter(|&i| !taken[i])
                .fold(None, |acc: Option<usize>, i| match acc {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = far {
                taken[i] = true;
                center.clone_from(&features[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let c = if i % 2 == 0 { 0.0 } else { 10.0 };
            pts.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            labels.push(i % 2);
        }
        (pts, labels)
    }

    #[test]
    fn every_point_its_own_cluster() {
        let pts = vec![vec![0.0, 1.0], vec![5.0, 5.0], vec![-3.0, 2.0]];
        let mut centers = kmeans_init(&pts, 3, 11).unwrap();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = pts.clone();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, expected);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0], vec![2.0, 1.0]];
        let centers = kmeans_init(&pts, 1, 0).unwrap();
        assert!((centers[0][0] - 2.0).abs() < 1e-12);
        assert!((centers[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separated_blobs_are_recovered() {
        for seed in 0..10 {
            let (pts, labels) = blobs(seed);
            let mut means = vec![vec![0.0; 2]; 2];
            for (p, &l) in pts.iter().zip(&labels) {
                means[l][0] += p[0] / 50.0;
                means[l][1] += p[1] / 50.0;
            }
            let km = kmeans(&pts, 2, seed).unwrap();
            for m in &means {
                let nearest = km
                    .centers
                    .iter()
                    .map(|c| squared_distance(c, m).sqrt())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 0.2, "seed {seed}: nearest center {nearest}");
            }
            assert!(km.iterations < MAX_ITERATIONS);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (pts, _) = blobs(3);
        assert_eq!(kmeans(&pts, 5, 42).unwrap(), kmeans(&pts, 5, 42).unwrap());
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(matches!(kmeans_init(&pts, 3, 0), Err(EnnError::TooFewPoints { n: 2, r: 3 })));
        assert!(matches!(kmeans_init(&[], 1, 0), Err(EnnError::TooFewPoints { n: 0, r: 1 })));
    }

    #[test]
    fn duplicate_points_leave_no_cluster_empty() {
        // five identical rows, three clusters: empties repaired, never NaN
        let pts = vec![vec![1.0, 1.0]; 5];
        let km = kmeans(&pts, 3, 9).unwrap();
        assert!(km.centers.iter().flatten().all(|v| *v == 1.0));
    }
}
