//! Cloud cleanup before rasterization: statistical outlier removal, voxel
//! downsampling, normalization to a unit bounding box, and the synthetic
//! noise used by the robustness experiment.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::knn::KdTree;

/// Fraction of points the outlier filter may drop before it refuses.
pub const MAX_OUTLIER_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub remove_outliers: bool,
    /// Voxel edge in meters; 0 disables downsampling.
    pub voxel_size: f64,
    pub outlier_neighbors_k: usize,
    pub outlier_std_ratio_base: f64,
    /// Average window height above ground in meters. Higher windows are
    /// scanned more sparsely, so the filter relaxes with height.
    pub reference_height: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            remove_outliers: true,
            voxel_size: 0.0,
            outlier_neighbors_k: 8,
            outlier_std_ratio_base: 2.0,
            reference_height: 0.0,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.voxel_size >= 0.0 && self.voxel_size.is_finite()) {
            return bad(format!("voxel_size must be >= 0, got {}", self.voxel_size));
        }
        if self.outlier_neighbors_k < 1 {
            return bad("outlier_neighbors_k must be >= 1".into());
        }
        if !(self.outlier_std_ratio_base > 0.0 && self.outlier_std_ratio_base.is_finite()) {
            return bad(format!(
                "outlier_std_ratio_base must be > 0, got {}",
                self.outlier_std_ratio_base
            ));
        }
        if !(self.reference_height >= 0.0 && self.reference_height.is_finite()) {
            return bad(format!(
                "reference_height must be >= 0, got {}",
                self.reference_height
            ));
        }
        Ok(())
    }

    /// Std-dev multiplier after the height relaxation: `base * (1 + h / 10 m)`.
    pub fn std_ratio(&self) -> f64 {
        self.outlier_std_ratio_base * (1.0 + self.reference_height / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation as a fraction of the bounding-box diagonal.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma: 0.0,
            seed: 0,
        }
    }
}

/// Drops points whose mean distance to their `k` nearest neighbours exceeds
/// `mean + r * std` of that statistic over the cloud.
pub fn remove_outliers(cloud: &PointCloud, cfg: &PrepConfig) -> Result<PointCloud> {
    cfg.validate()?;
    let k = cfg.outlier_neighbors_k;
    if cloud.len() < k + 1 {
        return Err(Error::TooFewPoints {
            have: cloud.len(),
            need: k + 1,
        });
    }
    let mean_dists = mean_knn_distances(&cloud.points, k);
    let n = mean_dists.len() as f64;
    let mean = mean_dists.iter().sum::<f64>() / n;
    let var = mean_dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + cfg.std_ratio() * var.sqrt();

    let kept: Vec<Point> = cloud
        .points
        .iter()
        .zip(&mean_dists)
        .filter(|(_, &d)| d <= threshold)
        .map(|(p, _)| *p)
        .collect();
    let dropped = cloud.len() - kept.len();
    if kept.is_empty() || dropped as f64 > MAX_OUTLIER_FRACTION * cloud.len() as f64 {
        return Err(Error::OutlierFilterTooAggressive {
            dropped,
            total: cloud.len(),
        });
    }
    Ok(PointCloud {
        points: kept,
        label: cloud.label.clone(),
    })
}

pub(crate) fn mean_knn_distances(points: &[Point], k: usize) -> Vec<f64> {
    let tree = KdTree::build(points);
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let nn = tree.nearest(p, k, Some(i));
            nn.iter().map(|(d2, _)| d2.sqrt()).sum::<f64>() / nn.len().max(1) as f64
        })
        .collect()
}

/// Replaces the points of every occupied voxel by their centroid.
/// Output order follows the voxel index, which makes it deterministic.
pub fn downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PointCloud> {
    if !(voxel_size >= 0.0 && voxel_size.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "voxel_size must be >= 0, got {voxel_size}"
        )));
    }
    if voxel_size == 0.0 || cloud.is_empty() {
        return Ok(cloud.clone());
    }
    let (lo, _) = cloud.bounding_box().expect("non-empty");
    let mut voxels: BTreeMap<[i64; 3], (nalgebra::Vector3<f64>, usize)> = BTreeMap::new();
    for p in &cloud.points {
        let key = [0, 1, 2].map(|a| ((p[a] - lo[a]) / voxel_size).floor() as i64);
        let slot = voxels.entry(key).or_insert((nalgebra::Vector3::zeros(), 0));
        slot.0 += p.coords;
        slot.1 += 1;
    }
    let points = voxels
        .into_values()
        .map(|(sum, n)| Point::from(sum / n as f64))
        .collect();
    Ok(PointCloud {
        points,
        label: cloud.label.clone(),
    })
}

/// Centers on the centroid and scales so the longest bounding-box edge is 1.
pub fn normalize(cloud: &PointCloud) -> Result<PointCloud> {
    let (lo, hi) = cloud
        .bounding_box()
        .ok_or(Error::DegenerateCloud("empty cloud"))?;
    let longest = (hi - lo).amax();
    if longest.is_nan() || longest <= 0.0 || !longest.is_finite() {
        return Err(Error::DegenerateCloud("all points identical"));
    }
    let c = cloud.centroid().expect("non-empty").coords;
    let points = cloud
        .points
        .iter()
        .map(|p| Point::from((p.coords - c) / longest))
        .collect();
    Ok(PointCloud {
        points,
        label: cloud.label.clone(),
    })
}

/// Adds isotropic Gaussian noise with std `sigma * bbox_diagonal` per axis.
pub fn add_noise(cloud: &PointCloud, cfg: &NoiseConfig) -> Result<PointCloud> {
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be >= 0, got {}",
            cfg.sigma
        )));
    }
    if cloud.is_empty() {
        return Err(Error::DegenerateCloud("empty cloud"));
    }
    if cfg.sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let std = cfg.sigma * cloud.bbox_diagonal();
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points = cloud
        .points
        .iter()
        .map(|p| {
            Point::new(
                p.x + normal.sample(&mut rng),
                p.y + normal.sample(&mut rng),
                p.z + normal.sample(&mut rng),
            )
        })
        .collect();
    Ok(PointCloud {
        points,
        label: cloud.label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn plane_with_far_point() -> PointCloud {
        let mut pts: Vec<Point> = (0..1000)
            .map(|i| Point::new((i % 40) as f64 * 0.01, (i / 40) as f64 * 0.01, 0.0))
            .collect();
        pts.push(Point::new(0.2, 0.1, 10.0));
        PointCloud::new(pts)
    }

    fn cfg(k: usize, base: f64, height: f64) -> PrepConfig {
        PrepConfig {
            outlier_neighbors_k: k,
            outlier_std_ratio_base: base,
            reference_height: height,
            ..PrepConfig::default()
        }
    }

    fn noisy_cloud(seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..2000)
            .map(|_| {
                let r: f64 = rng.random::<f64>().powi(3) * 2.0;
                Point::new(rng.random::<f64>(), rng.random::<f64>(), r)
            })
            .collect();
        PointCloud::new(pts)
    }

    #[test]
    fn far_point_is_removed() {
        let cloud = plane_with_far_point();
        let out = remove_outliers(&cloud, &cfg(8, 2.0, 0.0)).unwrap();
        assert!(out.len() >= 999 && out.len() <= 1000);
        assert!(out.points.iter().all(|p| p.z == 0.0));
        // the brute-force statistic agrees with the tree-based one
        let stats = mean_knn_distances(&cloud.points, 8);
        let far = cloud.points.len() - 1;
        let mut d: Vec<f64> = (0..far)
            .map(|j| (cloud.points[j] - cloud.points[far]).norm())
            .collect();
        d.sort_by(f64::total_cmp);
        let brute = d[..8].iter().sum::<f64>() / 8.0;
        assert!((stats[far] - brute).abs() < 1e-12);
    }

    #[test]
    fn uniform_grid_keeps_everything() {
        let cloud = PointCloud::new((0..10).map(|i| Point::new(i as f64, 0.0, 0.0)).collect());
        // interior points have equal statistics but the ends differ; use k=1
        let out = remove_outliers(&cloud, &cfg(1, 0.5, 0.0)).unwrap();
        assert_eq!(out, cloud);
        let stacked = PointCloud::new(vec![Point::new(0.3, 0.2, 0.1); 10]);
        for k in 1..=9 {
            assert_eq!(
                remove_outliers(&stacked, &cfg(k, 0.1, 3.0)).unwrap(),
                stacked
            );
        }
    }

    #[test]
    fn higher_reference_height_keeps_at_least_as_many() {
        let cloud = noisy_cloud(5);
        let low = remove_outliers(&cloud, &cfg(8, 1.0, 0.0)).unwrap();
        let high = remove_outliers(&cloud, &cfg(8, 1.0, 20.0)).unwrap();
        assert!(high.len() >= low.len());
        assert!(low.len() < cloud.len());
    }

    #[test]
    fn outlier_filter_requires_enough_points() {
        let cloud = PointCloud::new(vec![Point::origin(); 3]);
        assert!(matches!(
            remove_outliers(&cloud, &cfg(8, 2.0, 0.0)),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn downsample_cases() {
        let corners: Vec<Point> = (0..8)
            .map(|i| Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        let cloud = PointCloud::new(corners);
        assert_eq!(downsample(&cloud, 0.0).unwrap(), cloud);
        let one = downsample(&cloud, 2.0).unwrap();
        assert_eq!(one.points, vec![Point::new(0.5, 0.5, 0.5)]);
        assert_eq!(downsample(&cloud, 0.5).unwrap().len(), 8);
    }

    #[test]
    fn normalize_cases() {
        let cloud = PointCloud::new(vec![Point::origin(), Point::new(2.0, 0.0, 0.0)]);
        let out = normalize(&cloud).unwrap();
        assert_eq!(
            out.points,
            vec![Point::new(-0.5, 0.0, 0.0), Point::new(0.5, 0.0, 0.0)]
        );
        let again = normalize(&out).unwrap();
        for (a, b) in out.points.iter().zip(&again.points) {
            assert!((a - b).norm() < 1e-12);
        }
        let same = PointCloud::new(vec![Point::new(1.0, 1.0, 1.0); 4]);
        assert!(matches!(normalize(&same), Err(Error::DegenerateCloud(_))));
    }

    #[test]
    fn normalize_unit_longest_edge() {
        let out = normalize(&noisy_cloud(2)).unwrap();
        let (lo, hi) = out.bounding_box().unwrap();
        assert!(((hi - lo).amax() - 1.0).abs() < 1e-12);
        assert!(out.centroid().unwrap().coords.norm() < 1e-12);
    }

    #[test]
    fn noise_statistics() {
        let cloud = PointCloud::new(
            (0..10_000)
                .map(|i| Point::new((i % 100) as f64, (i / 100) as f64, 0.0))
                .collect(),
        );
        let ncfg = NoiseConfig {
            sigma: 0.01,
            seed: 4,
        };
        let out = add_noise(&cloud, &ncfg).unwrap();
        assert_eq!(out.len(), cloud.len());
        let expected = 0.01 * cloud.bbox_diagonal();
        for axis in 0..3 {
            let d: Vec<f64> = out
                .points
                .iter()
                .zip(&cloud.points)
                .map(|(a, b)| a[axis] - b[axis])
                .collect();
            let m = d.iter().sum::<f64>() / d.len() as f64;
            let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
            assert!(
                (sd / expected - 1.0).abs() < 0.05,
                "axis {axis}: {sd} vs {expected}"
            );
        }
        assert_eq!(add_noise(&cloud, &ncfg).unwrap(), out);
        assert_eq!(
            add_noise(
                &cloud,
                &NoiseConfig {
                    sigma: 0.0,
                    seed: 4
                }
            )
            .unwrap(),
            cloud
        );
    }
}
