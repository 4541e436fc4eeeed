//! PLY point clouds and triangle meshes (ASCII and binary little-endian).
//!
//! Vertices need `x`, `y`, `z`; an optional integer `component` property
//! (0 = palm … 5 = pinky) carries labels. Faces come from a
//! `vertex_indices` (or `vertex_index`) list; polygons are fan-triangulated.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud};
use crate::templates::TriangleMesh;

/// Encoding used by [`write_ply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyFormat {
    #[default]
    Ascii,
    BinaryLittleEndian,
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
    fn parse(name: &str) -> Option<Self> {
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

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

/// Contents of a PLY file: vertices (with optional labels) and triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyData {
    pub cloud: PointCloud,
    pub faces: Vec<[usize; 3]>,
}

impl PlyData {
    pub fn into_mesh(self) -> Result<TriangleMesh> {
        let (points, labels) = self.cloud.into_parts();
        TriangleMesh::new(points, self.faces, labels)
    }
}

pub fn read_ply(path: &Path) -> Result<PlyData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ply(std::io::BufReader::new(file), path)
}

/// Reads a PLY file as a point cloud, ignoring faces.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    Ok(read_ply(path)?.cloud)
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    read_ply(path)?.into_mesh()
}

/// Parses PLY data from a reader; `path` is only used in error messages.
pub fn parse_ply(mut reader: impl BufRead, path: &Path) -> Result<PlyData> {
    let err = |location: String, message: &str| Error::parse(path, location, message);
    let mut line = String::new();
    let next_line = |reader: &mut dyn BufRead, line: &mut String| -> Result<bool> {
        line.clear();
        let n = reader.read_line(line).map_err(|e| Error::io(path, e))?;
        Ok(n > 0)
    };

    if !next_line(&mut reader, &mut line)? || line.trim_end() != "ply" {
        return Err(err("line 1".into(), "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut header_lines = 1;
    loop {
        if !next_line(&mut reader, &mut line)? {
            return Err(err(format!("line {}", header_lines + 1), "header ended without end_header"));
        }
        header_lines += 1;
        let loc = format!("line {header_lines}");
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["format", fmt, version] => {
                if *version != "1.0" {
                    return Err(err(loc, "unsupported PLY version"));
                }
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    _ => return Err(err(loc, "unsupported PLY format (only ascii and binary_little_endian)")),
                });
            }
            ["element", name, count] => {
                let count = count.parse().map_err(|_| err(loc.clone(), "invalid element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let element = elements.last_mut().ok_or_else(|| err(loc.clone(), "property before element"))?;
                let (Some(count), Some(item)) = (Scalar::parse(count), Scalar::parse(item)) else {
                    return Err(err(loc, "unknown list property type"));
                };
                element.properties.push(Property::List {
                    name: name.to_string(),
                    count,
                    item,
                });
            }
            ["property", ty, name] => {
                let element = elements.last_mut().ok_or_else(|| err(loc.clone(), "property before element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| err(loc.clone(), "unknown property type"))?;
                element.properties.push(Property::Scalar { name: name.to_string(), ty });
            }
            _ => return Err(err(loc, "unrecognized header line")),
        }
    }
    let encoding = encoding.ok_or_else(|| err("header".into(), "missing format line"))?;

    let mut points = Vec::new();
    let mut labels: Option<Vec<ComponentId>> = None;
    let mut faces = Vec::new();
    let mut body = Body::new(reader, encoding, header_lines);
    let mut seen_vertex = false;
    for element in &elements {
        let is_vertex = element.name == "vertex";
        let is_face = element.name == "face";
        let (xi, yi, zi, ci, fi) = if is_vertex {
            seen_vertex = true;
            let find = |n: &str| element.properties.iter().position(|p| p.name() == n && matches!(p, Property::Scalar { .. }));
            let (Some(x), Some(y), Some(z)) = (find("x"), find("y"), find("z")) else {
                return Err(err("header".into(), "vertex element needs x, y and z"));
            };
            (Some(x), Some(y), Some(z), find("component"), None)
        } else if is_face {
            let fi = element
                .properties
                .iter()
                .position(|p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"));
            (None, None, None, None, fi)
        } else {
            (None, None, None, None, None)
        };
        if ci.is_some() {
            labels = Some(Vec::with_capacity(element.count));
        }
        for row in 0..element.count {
            let values = body.row(&element.properties).map_err(|m| err(body.location(&element.name, row), &m))?;
            if is_vertex {
                let p = Point3::new(values[xi.unwrap()][0], values[yi.unwrap()][0], values[zi.unwrap()][0]);
                if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                    return Err(err(body.location(&element.name, row), "non-finite coordinate"));
                }
                points.push(p);
                if let (Some(ci), Some(labels)) = (ci, labels.as_mut()) {
                    let v = values[ci][0];
                    let c = (v.fract() == 0.0 && v >= 0.0)
                        .then(|| ComponentId::from_index(v as usize))
                        .flatten()
                        .ok_or_else(|| err(body.location(&element.name, row), "component label outside 0..=5"))?;
                    labels.push(c);
                }
            } else if let Some(fi) = fi {
                let idx = &values[fi];
                if idx.len() < 3 {
                    return Err(err(body.location(&element.name, row), "face with fewer than 3 vertices"));
                }
                if idx.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || v as usize >= points.len()) {
                    return Err(err(body.location(&element.name, row), "face index out of range"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0] as usize, idx[k] as usize, idx[k + 1] as usize]);
                }
            }
        }
    }
    if !seen_vertex {
        return Err(err("header".into(), "no vertex element"));
    }
    let cloud = match labels {
        Some(l) => PointCloud::with_labels(points, l)?,
        None => PointCloud::new(points)?,
    };
    Ok(PlyData { cloud, faces })
}

struct Body<R> {
    reader: R,
    encoding: Encoding,
    line: usize,
    buf: String,
}

impl<R: BufRead> Body<R> {
    fn new(reader: R, encoding: Encoding, header_lines: usize) -> Self {
        Body {
            reader,
            encoding,
            line: header_lines,
            buf: String::new(),
        }
    }

    fn location(&self, element: &str, row: usize) -> String {
        match self.encoding {
            Encoding::Ascii => format!("line {}", self.line),
            Encoding::BinaryLe => format!("{element} {row}"),
        }
    }

    /// Values of one element row; scalars are one-element vectors.
    fn row(&mut self, properties: &[Property]) -> std::result::Result<Vec<Vec<f64>>, String> {
        match self.encoding {
            Encoding::Ascii => {
                self.buf.clear();
                self.line += 1;
                let n = self.reader.read_line(&mut self.buf).map_err(|e| e.to_string())?;
                if n == 0 {
                    return Err("unexpected end of file".into());
                }
                let mut tokens = self.buf.split_whitespace();
                let mut next = || -> std::result::Result<f64, String> {
                    let t = tokens.next().ok_or("too few values")?;
                    t.parse::<f64>().map_err(|_| format!("invalid number '{t}'"))
                };
                let mut out = Vec::with_capacity(properties.len());
                for p in properties {
                    match p {
                        Property::Scalar { .. } => out.push(vec![next()?]),
                        Property::List { .. } => {
                            let n = next()?;
                            if n < 0.0 || n.fract() != 0.0 {
                                return Err("invalid list length".into());
                            }
                            out.push((0..n as usize).map(|_| next()).collect::<std::result::Result<_, _>>()?);
                        }
                    }
                }
                Ok(out)
            }
            Encoding::BinaryLe => {
                let mut out = Vec::with_capacity(properties.len());
                for p in properties {
                    match *p {
                        Property::Scalar { ty, .. } => out.push(vec![self.scalar(ty)?]),
                        Property::List { count, item, .. } => {
                            let n = self.scalar(count)?;
                            if n < 0.0 {
                                return Err("invalid list length".into());
                            }
                            out.push((0..n as usize).map(|_| self.scalar(item)).collect::<std::result::Result<_, _>>()?);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    fn scalar(&mut self, ty: Scalar) -> std::result::Result<f64, String> {
        let mut b = [0u8; 8];
        self.reader
            .read_exact(&mut b[..ty.size()])
            .map_err(|_| "unexpected end of file".to_string())?;
        Ok(ty.read_le(&b))
    }
}

/// Writes vertices as doubles, a `component` uchar when labeled, and faces.
pub fn write_ply_to(out: &mut impl Write, cloud: &PointCloud, faces: &[[usize; 3]], format: PlyFormat) -> std::io::Result<()> {
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply\nformat {fmt} 1.0\ncomment handcloud")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    let labels = cloud.labels();
    if labels.is_some() {
        writeln!(out, "property uchar component")?;
    }
    if !faces.is_empty() {
        writeln!(out, "element face {}\nproperty list uchar int vertex_indices", faces.len())?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        match format {
            PlyFormat::Ascii => {
                write!(out, "{} {} {}", p.x, p.y, p.z)?;
                if let Some(l) = labels {
                    write!(out, " {}", l[i].index())?;
                }
                writeln!(out)?;
            }
            PlyFormat::BinaryLittleEndian => {
                for c in [p.x, p.y, p.z] {
                    out.write_all(&c.to_le_bytes())?;
                }
                if let Some(l) = labels {
                    out.write_all(&[l[i].index() as u8])?;
                }
            }
        }
    }
    for f in faces {
        match format {
            PlyFormat::Ascii => writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?,
            PlyFormat::BinaryLittleEndian => {
                out.write_all(&[3])?;
                for &v in f {
                    out.write_all(&(v as i32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_ply(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    write_file(path, |w| write_ply_to(w, cloud, &[], format))
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh, format: PlyFormat) -> Result<()> {
    let cloud = match mesh.labels() {
        Some(l) => PointCloud::with_labels(mesh.vertices().to_vec(), l.to_vec())?,
        None => PointCloud::new(mesh.vertices().to_vec())?,
    };
    write_file(path, |w| write_ply_to(w, &cloud, mesh.faces(), format))
}

pub(crate) fn write_file(path: &Path, body: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::{SyntheticHand, SyntheticHandSpec};

    fn parse(text: &[u8]) -> Result<PlyData> {
        parse_ply(std::io::Cursor::new(text), Path::new("mem.ply"))
    }

    fn sample() -> PointCloud {
        PointCloud::with_labels(
            vec![Point3::new(0.1, -2.5, 1e-17), Point3::new(1.0 / 3.0, 4.0, 5.0), Point3::new(-7.0, 8.0, 9.25)],
            vec![ComponentId::Palm, ComponentId::Ring, ComponentId::Pinky],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_both_encodings() {
        for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let mut buf = Vec::new();
            write_ply_to(&mut buf, &sample(), &[[0, 1, 2]], format).unwrap();
            let back = parse(&buf).unwrap();
            assert_eq!(back.cloud, sample(), "{format:?}");
            assert_eq!(back.faces, vec![[0, 1, 2]]);
        }
    }

    #[test]
    fn mesh_round_trip() {
        let mesh = SyntheticHand::new(SyntheticHandSpec::default()).unwrap().mesh();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hand.ply");
        write_mesh(&path, &mesh, PlyFormat::BinaryLittleEndian).unwrap();
        assert_eq!(read_mesh(&path).unwrap(), mesh);
    }

    #[test]
    fn reads_foreign_layouts() {
        let text = b"ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar uint vertex_index\nelement edge 1\nproperty int a\nproperty int b\nend_header\n0 0 0 255\n1 0 0 0\n1 1 0 0\n0 1 0 0\n4 0 1 2 3\n0 1\n";
        let data = parse(text).unwrap();
        assert_eq!(data.cloud.len(), 4);
        assert!(data.cloud.labels().is_none());
        assert_eq!(data.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn malformed_files_report_location() {
        let cases: [&[u8]; 5] = [
            b"plx\n",
            b"ply\nformat binary_big_endian 1.0\nend_header\n",
            b"ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nend_header\n1 2 3\n4 5\n",
            b"ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nend_header\n1 2\n",
            b"ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nproperty uchar component\nend_header\n1 2 3 9\n",
        ];
        for case in cases {
            match parse(case) {
                Err(Error::Parse { location, .. }) => assert!(!location.is_empty()),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
        match parse(cases[2]) {
            Err(e) => assert!(e.to_string().contains("line 9"), "{e}"),
            Ok(_) => unreachable!(),
        }
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let mut buf = Vec::new();
        write_ply_to(&mut buf, &sample(), &[], PlyFormat::BinaryLittleEndian).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(parse(&buf), Err(Error::Parse { .. })));
    }
}
