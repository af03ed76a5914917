//! Wavefront OBJ reader.
//!
//! Supports `v`, `f` (all `v`, `v/vt`, `v//vn`, `v/vt/vn` forms, negative
//! indices, polygons fan-triangulated) and `usemtl`. Faces before any
//! `usemtl` are tagged [`DEFAULT_MATERIAL`]. Other statements are ignored.

use std::path::Path;

use crate::cloud::Point;
use crate::error::{Error, Result};

use super::mesh::{TriangleMesh, DEFAULT_MATERIAL};

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    parse_obj(&text).map_err(|e| e.context(path.display().to_string()))
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces = Vec::new();
    let mut face_material = Vec::new();
    let mut material = DEFAULT_MATERIAL.to_string();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for slot in &mut xyz {
                    let field = tok
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "vertex needs 3 coordinates"))?;
                    *slot = field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            Error::parse(line_no, format!("bad coordinate `{field}`"))
                        })?;
                }
                vertices.push(Point::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let corners = tok
                    .map(|t| resolve_index(t, vertices.len(), line_no))
                    .collect::<Result<Vec<_>>>()?;
                if corners.len() < 3 {
                    return Err(Error::parse(line_no, "face needs at least 3 vertices"));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                    face_material.push(material.clone());
                }
            }
            Some("usemtl") => {
                let name = line["usemtl".len()..].trim();
                if name.is_empty() {
                    return Err(Error::parse(line_no, "usemtl without a name"));
                }
                material = name.to_string();
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces, face_material)
}

/// Writes `mesh` as OBJ, emitting `usemtl` whenever the material changes.
pub fn to_obj_string(mesh: &TriangleMesh) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    let mut current: Option<&str> = None;
    for (f, mat) in mesh.faces.iter().zip(&mesh.face_material) {
        if current != Some(mat.as_str()) {
            let _ = writeln!(s, "usemtl {mat}");
            current = Some(mat);
        }
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

fn resolve_index(token: &str, vertex_count: usize, line_no: usize) -> Result<usize> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad face index `{token}`")))?;
    let resolved = match raw {
        0 => None,
        r if r > 0 => Some(r as u64 - 1),
        r => (vertex_count as u64).checked_sub(r.unsigned_abs()),
    };
    match resolved {
        Some(i) if (i as usize) < vertex_count => Ok(i as usize),
        _ => Err(Error::parse(
            line_no,
            format!("face index {raw} out of range ({vertex_count} vertices defined)"),
        )),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn cube_obj() -> String {
        let mut s = String::from("# unit cube\no cube\n");
        for z in [0, 1] {
            for y in [0, 1] {
                for x in [0, 1] {
                    s.push_str(&format!("v {x} {y} {z}\n"));
                }
            }
        }
        // quads, one per side, vertex index = 1 + x + 2y + 4z
        for quad in [
            [1, 3, 4, 2],
            [5, 6, 8, 7],
            [1, 2, 6, 5],
            [3, 7, 8, 4],
            [1, 5, 7, 3],
            [2, 4, 8, 6],
        ] {
            s.push_str(&format!(
                "f {} {} {} {}\n",
                quad[0], quad[1], quad[2], quad[3]
            ));
        }
        s
    }

    #[test]
    fn writer_round_trips() {
        let mut mesh = parse_obj(&cube_obj()).unwrap();
        mesh.face_material[3] = "Glass".into();
        mesh.vertices[2].x = 0.1 + 0.2;
        let back = parse_obj(&to_obj_string(&mesh)).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn unit_cube_has_12_faces_8_vertices() {
        let mesh = parse_obj(&cube_obj()).unwrap();
        assert_eq!(mesh.faces.len(), 12);
        assert_eq!(mesh.vertices.len(), 8);
        assert!(mesh.face_material.iter().all(|m| m == DEFAULT_MATERIAL));
        assert!((mesh.total_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn usemtl_tags_following_faces() {
        let text = "mtllib win.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\n\
                    usemtl Frame\nf 1/1/1 2/2/1 3/3/1\n\
                    usemtl Glass\nf 2//1 4//1 3//1\nf -3 -2 -1\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.face_material, vec!["Frame", "Glass", "Glass"]);
        assert_eq!(mesh.faces[2], [1, 2, 3]);
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = cube_obj();
        let cut = &text[..text.find("v 1 1 1").unwrap() + 5];
        match parse_obj(cut) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_and_missing_faces() {
        assert!(matches!(
            parse_obj("v 0 0 0\nf 1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_obj("v 0 0 0\n"), Err(Error::EmptyMesh)));
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -4 1 2\n").is_err());
    }
}
