//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

/// Geometry used for clustering binary descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMetric {
    /// Plain k-means over 0/1 embeddings.
    #[default]
    Euclidean,
    /// k-majority: centers are rounded to bits, distance is Hamming.
    Hamming,
}

impl std::str::FromStr for ClusterMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(ClusterMetric::Euclidean),
            "hamming" => Ok(ClusterMetric::Hamming),
            _ => Err(Error::InvalidConfig(format!(
                "unknown cluster metric `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// `n` centers, each of length `dim`.
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center, lowest index on ties.
pub fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn check_input(data: &[Vec<f64>], n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "cluster count must be >= 2, got {n}"
        )));
    }
    let dim = data
        .first()
        .map(Vec::len)
        .ok_or(Error::TooFewDescriptors { have: 0, need: n })?;
    if let Some(bad) = data.iter().find(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "descriptor contains non-finite values".into(),
        ));
    }
    let mut sorted: Vec<&Vec<f64>> = data.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted.dedup();
    if sorted.len() < n {
        return Err(Error::TooFewDescriptors {
            have: sorted.len(),
            need: n,
        });
    }
    Ok(dim)
}

fn kmeans_plus_plus(data: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![data[rng.random_range(0..data.len())].clone()];
    let mut d2: Vec<f64> = data
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < n {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            if acc > target {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave `target` just past the last positive weight
        let pick = pick.unwrap_or_else(|| {
            d2.iter()
                .rposition(|&w| w > 0.0)
                .expect("distinct points remain")
        });
        let c = data[pick].clone();
        for (slot, p) in d2.iter_mut().zip(data) {
            *slot = slot.min(squared_distance(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn binarize(center: &mut [f64]) {
    for v in center.iter_mut() {
        *v = if *v > 0.5 { 1.0 } else { 0.0 };
    }
}

/// Clusters `data` into `n` groups. Deterministic for a given seed.
///
/// Empty clusters, and clusters whose center duplicates an earlier one, are
/// re-seeded with the point farthest from its current center.
pub fn train_kmeans(
    data: &[Vec<f64>],
    n: usize,
    seed: u64,
    metric: ClusterMetric,
) -> Result<KMeansFit> {
    let dim = check_input(data, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_plus_plus(data, n, &mut rng);
    let mut assignments = vec![usize::MAX; data.len()];
    let mut inertia_history = Vec::new();
    let mut iterations = 0;

    loop {
        let mut changed = false;
        let mut dists = vec![0.0; data.len()];
        for (i, p) in data.iter().enumerate() {
            let (j, d) = nearest_center(p, &centers);
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
            dists[i] = d;
        }
        inertia_history.push(dists.iter().sum());
        iterations += 1;
        if !changed || iterations >= MAX_ITERATIONS {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; n];
        let mut counts = vec![0usize; n];
        for (p, &j) in data.iter().zip(&assignments) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..n {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
                if metric == ClusterMetric::Hamming {
                    binarize(&mut centers[j]);
                }
            }
        }
        let mut taken = vec![false; data.len()];
        for j in 0..n {
            let duplicate = centers[..j].iter().any(|c| *c == centers[j]);
            if counts[j] > 0 && !duplicate {
                continue;
            }
            // farthest point from its assigned center that is not already used
            let far = (0..data.len())
                .filter(|&i| !taken[i] && !centers.iter().any(|c| *c == data[i]))
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                taken[i] = true;
                centers[j] = data[i].clone();
                dists[i] = 0.0;
            }
        }
    }
    Ok(KMeansFit {
        centers,
        assignments,
        inertia_history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
        // two groups of 16-bit vectors far apart in Hamming distance
        let base_a = vec![0.0; 16];
        let base_b = vec![1.0; 16];
        let mut data = Vec::new();
        let mut truth = Vec::new();
        for k in 0..6 {
            let mut a = base_a.clone();
            a[k] = 1.0;
            data.push(a);
            truth.push(0);
            let mut b = base_b.clone();
            b[15 - k] = 0.0;
            data.push(b);
            truth.push(1);
        }
        (data, truth)
    }

    /// Exhaustive 2-means: best split over all bipartitions.
    fn brute_two_means(data: &[Vec<f64>]) -> f64 {
        let n = data.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<&Vec<f64>> = (0..n)
                    .filter(|&i| (mask >> i & 1 == 1) == side)
                    .map(|i| &data[i])
                    .collect();
                let dim = data[0].len();
                let mean: Vec<f64> = (0..dim)
                    .map(|d| members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64)
                    .collect();
                cost += members
                    .iter()
                    .map(|m| squared_distance(m, &mean))
                    .sum::<f64>();
            }
            best = best.min(cost);
        }
        best
    }

    #[test]
    fn two_blobs_are_recovered() {
        let (data, truth) = blobs();
        let fit = train_kmeans(&data, 2, 7, ClusterMetric::Euclidean).unwrap();
        let flip = fit.assignments[0] != truth[0];
        for (a, t) in fit.assignments.iter().zip(&truth) {
            assert_eq!((*a == 1) ^ flip, *t == 1);
        }
        assert!((fit.inertia() - brute_two_means(&data)).abs() < 1e-9);
    }

    #[test]
    fn one_center_per_point() {
        let (data, _) = blobs();
        let fit = train_kmeans(&data, data.len(), 1, ClusterMetric::Euclidean).unwrap();
        assert_eq!(fit.inertia(), 0.0);
        let mut used = fit.assignments.clone();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), data.len());
    }

    #[test]
    fn deterministic_for_seed() {
        let (data, _) = blobs();
        let a = train_kmeans(&data, 4, 99, ClusterMetric::Euclidean).unwrap();
        let b = train_kmeans(&data, 4, 99, ClusterMetric::Euclidean).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_points_or_distinct_points() {
        let (data, _) = blobs();
        assert!(matches!(
            train_kmeans(&data[..3], 4, 0, ClusterMetric::Euclidean),
            Err(Error::TooFewDescriptors { .. })
        ));
        let dup = vec![vec![1.0, 0.0]; 10];
        assert!(train_kmeans(&dup, 2, 0, ClusterMetric::Euclidean).is_err());
        assert!(train_kmeans(&data, 1, 0, ClusterMetric::Euclidean).is_err());
    }

    #[test]
    fn hamming_centers_are_bits() {
        let (data, _) = blobs();
        let fit = train_kmeans(&data, 3, 5, ClusterMetric::Hamming).unwrap();
        assert!(fit.centers.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
        for (i, c) in fit.centers.iter().enumerate() {
            assert!(fit.centers[..i].iter().all(|d| d != c));
        }
    }
}
