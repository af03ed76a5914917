use crate::cloud::Point;
use crate::error::{Error, Result};

pub const DEFAULT_MATERIAL: &str = "default";

/// Indexed triangle mesh with one material tag per face.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
    pub face_material: Vec<String>,
}

impl TriangleMesh {
    /// Validates indices and tag count.
    pub fn new(
        vertices: Vec<Point>,
        faces: Vec<[usize; 3]>,
        face_material: Vec<String>,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if face_material.len() != faces.len() {
            return Err(Error::InvalidConfig(format!(
                "{} faces but {} material tags",
                faces.len(),
                face_material.len()
            )));
        }
        if let Some(bad) = faces.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(Error::InvalidConfig(format!(
                "face index {bad} out of range for {} vertices",
                vertices.len()
            )));
        }
        Ok(TriangleMesh {
            vertices,
            faces,
            face_material,
        })
    }

    pub fn triangle(&self, face: usize) -> [Point; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in self.faces.iter().flatten().map(|&i| self.vertices[i]) {
            lo = lo.inf(&v);
            hi = hi.sup(&v);
        }
        (hi - lo).norm()
    }
}

/// True when `material` contains any of `excluded` as a case-insensitive substring.
pub fn material_excluded(material: &str, excluded: &[String]) -> bool {
    let material = material.to_lowercase();
    excluded
        .iter()
        .any(|e| !e.is_empty() && material.contains(&e.to_lowercase()))
}

/// Drops every face whose material matches `excluded` and compacts the
/// vertex list to the vertices still referenced, preserving their order.
pub fn remove_materials(mesh: &TriangleMesh, excluded: &[String]) -> Result<TriangleMesh> {
    let keep: Vec<usize> = (0..mesh.faces.len())
        .filter(|&f| !material_excluded(&mesh.face_material[f], excluded))
        .collect();
    if keep.is_empty() {
        return Err(Error::AllGeometryExcluded);
    }

    let mut remap = vec![usize::MAX; mesh.vertices.len()];
    for &f in &keep {
        for &v in &mesh.faces[f] {
            remap[v] = 0;
        }
    }
    let mut vertices = Vec::new();
    for (old, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = vertices.len();
            vertices.push(mesh.vertices[old]);
        }
    }
    let faces = keep
        .iter()
        .map(|&f| mesh.faces[f].map(|v| remap[v]))
        .collect();
    let face_material = keep
        .iter()
        .map(|&f| mesh.face_material[f].clone())
        .collect();
    Ok(TriangleMesh {
        vertices,
        faces,
        face_material,
    })
}
