use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

use super::{BinaryImage, RasterConfig};

/// Second eigenvalue below this fraction of the first counts as rank < 2.
const RANK_TOLERANCE: f64 = 1e-10;

/// Principal axes of `cloud` sorted by decreasing variance, each with a sign
/// fixed by the third moment so the result does not depend on the input
/// orientation. Returns `(axes, variances)`.
pub fn principal_axes(cloud: &PointCloud) -> Result<([Vector3<f64>; 3], [f64; 3])> {
    let centroid = cloud
        .centroid()
        .ok_or(Error::DegenerateCloud("empty cloud"))?;
    let n = cloud.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in &cloud.points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    // ties keep the lower axis index first (stable sort)
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut axes = [Vector3::zeros(); 3];
    let mut variances = [0.0; 3];
    for (slot, &col) in order.iter().enumerate() {
        let mut axis: Vector3<f64> = eig.eigenvectors.column(col).into_owned();
        let (mut m2, mut m3) = (0.0, 0.0);
        for p in &cloud.points {
            let t = (p - centroid).dot(&axis);
            m2 += t * t;
            m3 += t * t * t;
        }
        let skew = m3 / n;
        let scale = (m2 / n).powf(1.5);
        let flip = if skew.abs() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            skew < 0.0
        } else {
            // symmetric along this axis: fall back to the first significant component
            axis.iter()
                .find(|c| c.abs() > 1e-12)
                .is_some_and(|c| *c < 0.0)
        };
        if flip {
            axis = -axis;
        }
        axes[slot] = axis;
        variances[slot] = eig.eigenvalues[col].max(0.0);
    }
    Ok((axes, variances))
}

/// Orthographic projection onto the plane of the two largest principal axes.
///
/// The axis with the larger projected extent runs vertically (rows grow
/// downward, positive axis direction up); the image is `image_long_side`
/// pixels tall and as wide as the aspect ratio requires.
pub fn project_frontal(cloud: &PointCloud, cfg: &RasterConfig) -> Result<BinaryImage> {
    cfg.validate()?;
    project_with_long_side(cloud, cfg.image_long_side)
}

pub(crate) fn project_with_long_side(cloud: &PointCloud, long: usize) -> Result<BinaryImage> {
    cloud.check_finite()?;
    let (axes, variances) = principal_axes(cloud)?;
    if variances.iter().any(|v| v.is_nan())
        || variances[1] <= RANK_TOLERANCE * variances[0]
        || variances[0] <= 0.0
    {
        return Err(Error::DegenerateCloud("points are collinear"));
    }

    let coords: Vec<[f64; 2]> = cloud
        .points
        .iter()
        .map(|p| [p.coords.dot(&axes[0]), p.coords.dot(&axes[1])])
        .collect();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in &coords {
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let extent = [hi[0] - lo[0], hi[1] - lo[1]];
    let (v, u) = if extent[1] > extent[0] {
        (1, 0)
    } else {
        (0, 1)
    };

    let scale = long as f64 / extent[v];
    let width = ((extent[u] * scale).ceil() as usize).clamp(1, long);
    let mut img = BinaryImage::new(width, long);
    img.pixel_size = 1.0 / scale;
    for c in &coords {
        let row = (((hi[v] - c[v]) * scale).floor() as usize).min(long - 1);
        let col = (((c[u] - lo[u]) * scale).floor() as usize).min(width - 1);
        img.set(col, row, true);
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Point;
    use nalgebra::Rotation3;

    fn cfg(long: usize) -> RasterConfig {
        RasterConfig {
            image_long_side: long,
            ..RasterConfig::default()
        }
    }

    #[test]
    fn unit_square_corners_fill_two_by_two() {
        let cloud = PointCloud::new(vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
        ]);
        let (axes, _) = principal_axes(&cloud).unwrap();
        assert!(axes[2].z.abs() > 0.999);
        let img = project_with_long_side(&cloud, 2).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.count_set(), 4);
    }

    /// An asymmetric planar "L" made of points on a 0.01 lattice.
    fn l_shape() -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        for i in 0..=60 {
            for j in 0..=4 {
                pts.push([j as f64 * 0.01, i as f64 * 0.01]);
            }
        }
        for i in 5..=30 {
            for j in 0..=4 {
                pts.push([i as f64 * 0.01, j as f64 * 0.01]);
            }
        }
        pts
    }

    #[test]
    fn xz_plane_equals_xy_plane() {
        let xy = PointCloud::new(
            l_shape()
                .iter()
                .map(|p| Point::new(p[0], p[1], 0.0))
                .collect(),
        );
        let xz = PointCloud::new(
            l_shape()
                .iter()
                .map(|p| Point::new(p[0], 0.0, p[1]))
                .collect(),
        );
        let a = project_frontal(&xy, &cfg(64)).unwrap();
        let b = project_frontal(&xz, &cfg(64)).unwrap();
        assert_eq!((a.width(), a.height()), (b.width(), b.height()));
        assert!(a.pixels() == b.pixels(), "projections differ");
        assert!((a.pixel_size - b.pixel_size).abs() < 1e-15);
        assert!(a.height() > a.width());
    }

    #[test]
    fn invariant_under_rigid_rotation() {
        let xy = PointCloud::new(
            l_shape()
                .iter()
                .map(|p| Point::new(p[0], p[1], 0.0))
                .collect(),
        );
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let rotated = PointCloud::new(
            xy.points
                .iter()
                .map(|p| rot * p + Vector3::new(5.0, -2.0, 1.0))
                .collect(),
        );
        let a = project_frontal(&xy, &cfg(48)).unwrap();
        let b = project_frontal(&rotated, &cfg(48)).unwrap();
        let differing = a
            .pixels()
            .iter()
            .zip(b.pixels())
            .filter(|(x, y)| x != y)
            .count();
        assert_eq!((a.width(), a.height()), (b.width(), b.height()));
        assert!(differing <= 2, "{differing} pixels differ");
    }

    #[test]
    fn collinear_cloud_fails() {
        let line = PointCloud::new(
            (0..20)
                .map(|i| Point::new(i as f64, 2.0 * i as f64, 0.0))
                .collect(),
        );
        assert!(matches!(
            project_frontal(&line, &cfg(32)),
            Err(Error::DegenerateCloud(_))
        ));
    }
}
