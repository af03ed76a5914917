//! PLY point clouds.
//!
//! Output is always `binary_little_endian` with `double` x/y/z. Input accepts
//! ascii and both binary encodings, any scalar property types, and extra
//! per-vertex properties (skipped). Elements preceding `vertex` must have
//! fixed-size properties so their payload can be skipped.

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, bytes: &[u8], enc: Encoding) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut buf = [0u8; $n];
                buf.copy_from_slice(&bytes[..$n]);
                if enc == Encoding::BinaryBe {
                    <$t>::from_be_bytes(buf) as f64
                } else {
                    <$t>::from_le_bytes(buf) as f64
                }
            }};
        }
        match self {
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<(String, Option<Scalar>)>, // None = list property
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(data: &[u8]) -> Result<Header> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut next_line = |pos: &mut usize| -> Result<String> {
        line_no += 1;
        let rest = &data[*pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(line_no, "unterminated header"))?;
        *pos += end + 1;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::parse(line_no, "header is not utf-8"))?;
        Ok(line.trim_end_matches('\r').to_string())
    };

    if next_line(&mut pos)?.trim() != "ply" {
        return Err(Error::parse(1, "missing `ply` magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut line_idx = 1;
    loop {
        let line = next_line(&mut pos)?;
        line_idx += 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    Some("binary_big_endian") => Encoding::BinaryBe,
                    other => {
                        return Err(Error::parse(line_idx, format!("unknown format {other:?}")))
                    }
                });
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::parse(line_idx, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::parse(line_idx, "element without count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_idx, "property before element"))?;
                match tok.next() {
                    Some("list") => {
                        let _ = (tok.next(), tok.next());
                        let name = tok
                            .next()
                            .ok_or_else(|| Error::parse(line_idx, "list without name"))?;
                        elem.props.push((name.to_string(), None));
                    }
                    Some(ty) => {
                        let scalar = Scalar::from_name(ty).ok_or_else(|| {
                            Error::parse(line_idx, format!("unknown property type `{ty}`"))
                        })?;
                        let name = tok
                            .next()
                            .ok_or_else(|| Error::parse(line_idx, "property without name"))?;
                        elem.props.push((name.to_string(), Some(scalar)));
                    }
                    None => return Err(Error::parse(line_idx, "empty property")),
                }
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::parse(
                    line_idx,
                    format!("unexpected keyword `{other}`"),
                ))
            }
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse(line_idx, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: pos,
    })
}

pub fn read_ply(data: &[u8]) -> Result<PointCloud> {
    let header = parse_header(data)?;
    let vertex_idx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(0, "no vertex element"))?;
    let vertex = &header.elements[vertex_idx];
    let column = |name: &str| {
        vertex
            .props
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::parse(0, format!("vertex has no `{name}` property")))
    };
    let cols = [column("x")?, column("y")?, column("z")?];
    if vertex.count == 0 {
        return Err(Error::parse(0, "vertex element is empty"));
    }
    let body = &data[header.body_offset..];

    let points = match header.encoding {
        Encoding::Ascii => read_ascii(body, &header, vertex_idx, cols)?,
        enc => read_binary(body, enc, &header, vertex_idx, cols)?,
    };
    let cloud = PointCloud::new(points);
    cloud
        .check_finite()
        .map_err(|_| Error::parse(0, "non-finite vertex coordinate"))?;
    Ok(cloud)
}

fn read_ascii(
    body: &[u8],
    header: &Header,
    vertex_idx: usize,
    cols: [usize; 3],
) -> Result<Vec<Point>> {
    let text = std::str::from_utf8(body).map_err(|_| Error::parse(0, "body is not utf-8"))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let skip: usize = header.elements[..vertex_idx].iter().map(|e| e.count).sum();
    for _ in 0..skip {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, "truncated body"))?;
    }
    let vertex = &header.elements[vertex_idx];
    let mut points = Vec::with_capacity(vertex.count.min(body.len() / 6 + 1));
    for _ in 0..vertex.count {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "truncated vertex data"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let get = |c: usize| -> Result<f64> {
            fields
                .get(c)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::parse(idx + 1, "bad vertex row"))
        };
        points.push(Point::new(get(cols[0])?, get(cols[1])?, get(cols[2])?));
    }
    Ok(points)
}

fn read_binary(
    body: &[u8],
    enc: Encoding,
    header: &Header,
    vertex_idx: usize,
    cols: [usize; 3],
) -> Result<Vec<Point>> {
    let mut offset = 0usize;
    for elem in &header.elements[..vertex_idx] {
        let stride = fixed_stride(elem)?;
        offset = stride
            .checked_mul(elem.count)
            .and_then(|n| n.checked_add(offset))
            .ok_or_else(|| Error::parse(0, "element size overflow"))?;
    }
    let vertex = &header.elements[vertex_idx];
    let stride = fixed_stride(vertex)?;
    let needed = stride
        .checked_mul(vertex.count)
        .and_then(|n| n.checked_add(offset))
        .ok_or_else(|| Error::parse(0, "vertex size overflow"))?;
    if body.len() < needed {
        return Err(Error::parse(0, "truncated vertex data"));
    }
    let mut col_offsets = [0usize; 3];
    let mut col_types = [Scalar::F64; 3];
    for (slot, &c) in cols.iter().enumerate() {
        col_offsets[slot] = vertex.props[..c]
            .iter()
            .map(|(_, s)| s.map_or(0, Scalar::size))
            .sum();
        col_types[slot] = vertex.props[c].1.expect("fixed_stride rejects lists");
    }
    let points = body[offset..needed]
        .chunks_exact(stride)
        .map(|row| {
            let v = |i: usize| col_types[i].decode(&row[col_offsets[i]..], enc);
            Point::new(v(0), v(1), v(2))
        })
        .collect();
    Ok(points)
}

fn fixed_stride(elem: &Element) -> Result<usize> {
    elem.props
        .iter()
        .map(|(name, s)| {
            s.map(Scalar::size).ok_or_else(|| {
                Error::parse(
                    0,
                    format!(
                        "list property `{name}` in element `{}` is not supported",
                        elem.name
                    ),
                )
            })
        })
        .sum()
}

pub fn write_ply(cloud: &PointCloud) -> Vec<u8> {
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.len()
    );
    let mut out = Vec::with_capacity(header.len() + cloud.len() * 24);
    out.extend_from_slice(header.as_bytes());
    for p in &cloud.points {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}
