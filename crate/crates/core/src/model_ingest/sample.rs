use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};

use super::mesh::TriangleMesh;

/// Faces with less area than this are skipped during sampling.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Point-count window targeted when no explicit sampling distance is set.
pub const AUTO_POINT_RANGE: (f64, f64) = (5_000.0, 50_000.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Mean spacing between samples in meters. `None` derives it from the
    /// mesh (bounding-box diagonal / 200, clamped to 5k..50k points).
    pub sampling_distance: Option<f64>,
    /// Case-insensitive substrings; faces whose material contains one are dropped.
    pub excluded_materials: Vec<String>,
    /// Not read from config files; the pipeline derives it from the master seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            sampling_distance: None,
            excluded_materials: vec!["glass".to_string()],
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        match self.sampling_distance {
            Some(d) if !(d > 0.0 && d.is_finite()) => Err(Error::InvalidConfig(format!(
                "sampling distance must be > 0, got {d}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCloud {
    pub cloud: PointCloud,
    /// Index of the source face for every point.
    pub source_faces: Vec<usize>,
    pub degenerate_faces: usize,
    pub sampling_distance: f64,
}

/// Sampling distance used for `mesh` under `cfg`.
pub fn effective_distance(mesh: &TriangleMesh, cfg: &SamplingConfig) -> f64 {
    if let Some(d) = cfg.sampling_distance {
        return d;
    }
    let area = mesh.total_area();
    let d0 = mesh.bbox_diagonal() / 200.0;
    let count = (area / (d0 * d0)).clamp(AUTO_POINT_RANGE.0, AUTO_POINT_RANGE.1);
    (area / count).sqrt()
}

/// Area-weighted uniform sampling at a density of `1 / d²` points per m².
pub fn sample_surface(mesh: &TriangleMesh, cfg: &SamplingConfig) -> Result<SampledCloud> {
    cfg.validate()?;
    let d = effective_distance(mesh, cfg);

    let mut cdf = Vec::with_capacity(mesh.faces.len());
    let mut faces = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    let mut degenerate = 0;
    for f in 0..mesh.faces.len() {
        let area = mesh.face_area(f);
        if area.is_nan() || area < DEGENERATE_AREA {
            degenerate += 1;
            continue;
        }
        total += area;
        cdf.push(total);
        faces.push(f);
    }
    if faces.is_empty() {
        return Err(Error::DegenerateCloud("every face has zero area"));
    }
    if degenerate > 0 {
        log::warn!("skipped {degenerate} degenerate faces while sampling");
    }

    let count = ((total / (d * d)).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(count);
    let mut source_faces = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random::<f64>() * total;
        let slot = cdf.partition_point(|&c| c <= target).min(faces.len() - 1);
        let face = faces[slot];
        let [a, b, c] = mesh.triangle(face);
        let s = rng.random::<f64>().sqrt();
        let t = rng.random::<f64>();
        let p = a.coords * (1.0 - s) + b.coords * (s * (1.0 - t)) + c.coords * (s * t);
        points.push(Point::from(p));
        source_faces.push(face);
    }
    Ok(SampledCloud {
        cloud: PointCloud::new(points),
        source_faces,
        degenerate_faces: degenerate,
        sampling_distance: d,
    })
}
