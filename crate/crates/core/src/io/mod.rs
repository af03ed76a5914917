//! Point cloud files: ASCII XYZ and PLY.

pub mod ply;
pub mod xyz;

use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Loads a cloud, picking the reader from the file extension (`.ply`, else XYZ).
/// The cloud label is left unset.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    let parsed = if is_ply {
        ply::read_ply(&bytes)
    } else {
        String::from_utf8(bytes)
            .map_err(|_| Error::parse(0, "file is not utf-8"))
            .and_then(|text| xyz::parse_xyz(&text))
    };
    parsed.map_err(|e| e.context(path.display().to_string()))
}

pub fn save_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    let bytes = if is_ply {
        ply::write_ply(cloud)
    } else {
        xyz::to_xyz_string(cloud).into_bytes()
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
