//! ASCII XYZ clouds: one `x y z` triple per line.
//!
//! Blank lines and lines starting with `#` or `//` are skipped. Extra columns
//! (intensity, color, ...) after the first three are ignored.

use std::fmt::Write as _;

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};

pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
            continue;
        }
        let mut fields = line
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|s| !s.is_empty());
        let mut xyz = [0.0f64; 3];
        for (axis, slot) in xyz.iter_mut().enumerate() {
            let field = fields
                .next()
                .ok_or_else(|| Error::parse(idx + 1, format!("missing coordinate {axis}")))?;
            *slot = field
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("bad number `{field}`")))?;
            if !slot.is_finite() {
                return Err(Error::parse(idx + 1, "non-finite coordinate"));
            }
        }
        points.push(Point::new(xyz[0], xyz[1], xyz[2]));
    }
    if points.is_empty() {
        return Err(Error::parse(0, "no points"));
    }
    Ok(PointCloud::new(points))
}

/// Writes with 17 significant digits so a parse round-trip is exact.
pub fn to_xyz_string(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 72);
    for p in &cloud.points {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_extra_columns() {
        let cloud = parse_xyz("# header\n1 2 3\n\n4.5,5,6 255 0 0\n").unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points[1], Point::new(4.5, 5.0, 6.0));
    }

    #[test]
    fn reports_line_of_bad_number() {
        match parse_xyz("1 2 3\n1 two 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_short_rows_and_empty_files() {
        assert!(parse_xyz("1 2\n").is_err());
        assert!(parse_xyz("# nothing\n").is_err());
        assert!(parse_xyz("nan 0 0\n").is_err());
    }

    #[test]
    fn write_then_parse_is_exact() {
        let cloud = PointCloud::new(vec![
            Point::new(0.1, -1e-300, 1.0 / 3.0),
            Point::new(f64::MAX, 2.5, -7.0),
        ]);
        assert_eq!(parse_xyz(&to_xyz_string(&cloud)).unwrap(), cloud);
    }
}
