//! STL reading and writing (ASCII and little-endian binary).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{triangle_area, GeometryError, Point3, TriMesh, MERGE_TOLERANCE, MIN_TRIANGLE_AREA};

/// Loads an STL file, detecting ASCII or binary from its content.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh, GeometryError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".to_string());
    parse_stl(&bytes, &name)
}

/// Parses STL bytes. Vertices within [`MERGE_TOLERANCE`] are merged in order
/// of first occurrence; zero-area facets are dropped.
pub fn parse_stl(bytes: &[u8], name: &str) -> Result<TriMesh, GeometryError> {
    if bytes.is_empty() {
        return Err(GeometryError::MalformedStl("empty file".into()));
    }
    let triangles = if looks_binary(bytes) {
        parse_binary(bytes)?
    } else {
        parse_ascii(bytes)?
    };
    if triangles.is_empty() {
        return Err(GeometryError::MalformedStl("no facets".into()));
    }
    let mut welder = Welder::default();
    let mut faces = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        if triangle_area(&tri[0], &tri[1], &tri[2]) <= MIN_TRIANGLE_AREA {
            continue;
        }
        let f = [welder.insert(tri[0]), welder.insert(tri[1]), welder.insert(tri[2])];
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            continue;
        }
        faces.push(f);
    }
    if faces.is_empty() {
        return Err(GeometryError::DegenerateMesh);
    }
    TriMesh::new(name, welder.vertices, faces)
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if 84 + count * 50 == bytes.len() {
            return true;
        }
    }
    let head = &bytes[..bytes.len().min(5)];
    !head.eq_ignore_ascii_case(b"solid")
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<[Point3; 3]>, GeometryError> {
    if bytes.len() < 84 {
        return Err(GeometryError::MalformedStl("binary header truncated".into()));
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    if bytes.len() < 84 + count * 50 {
        return Err(GeometryError::MalformedStl(format!(
            "binary STL declares {count} facets but has {} bytes",
            bytes.len()
        )));
    }
    let read_f32 = |at: usize| f32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]) as f64;
    Ok((0..count)
        .map(|i| {
            let base = 84 + i * 50 + 12;
            let v = |k: usize| {
                let at = base + k * 12;
                Point3::new(read_f32(at), read_f32(at + 4), read_f32(at + 8))
            };
            [v(0), v(1), v(2)]
        })
        .collect())
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<[Point3; 3]>, GeometryError> {
    let text = std::str::from_utf8(bytes).map_err(|_| GeometryError::MalformedStl("not UTF-8 text".into()))?;
    let mut triangles = Vec::new();
    let mut current: Vec<Point3> = Vec::with_capacity(3);
    let mut in_facet = false;
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("facet") => {
                if in_facet {
                    return Err(malformed(lineno, "nested facet"));
                }
                in_facet = true;
                current.clear();
            }
            Some("vertex") => {
                if !in_facet {
                    return Err(malformed(lineno, "vertex outside facet"));
                }
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>().map_err(|_| malformed(lineno, "bad number")))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(malformed(lineno, "vertex needs three coordinates"));
                }
                current.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(malformed(lineno, "facet must have three vertices"));
                }
                triangles.push([current[0], current[1], current[2]]);
                in_facet = false;
            }
            Some("solid") | Some("endsolid") | Some("outer") | Some("endloop") | None => {}
            Some(other) => return Err(malformed(lineno, &format!("unexpected keyword '{other}'"))),
        }
    }
    if in_facet {
        return Err(GeometryError::MalformedStl("unterminated facet".into()));
    }
    Ok(triangles)
}

fn malformed(lineno: usize, msg: &str) -> GeometryError {
    GeometryError::MalformedStl(format!("line {}: {msg}", lineno + 1))
}

#[derive(Default)]
struct Welder {
    vertices: Vec<Point3>,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl Welder {
    fn key(p: &Point3) -> [i64; 3] {
        [
            (p.x / MERGE_TOLERANCE).floor() as i64,
            (p.y / MERGE_TOLERANCE).floor() as i64,
            (p.z / MERGE_TOLERANCE).floor() as i64,
        ]
    }

    fn insert(&mut self, p: Point3) -> usize {
        let k = Self::key(&p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &id in ids {
                            if (self.vertices[id] - p).norm() <= MERGE_TOLERANCE
                                && best.is_none_or(|b| id < b)
                            {
                                best = Some(id);
                            }
                        }
                    }
                }
            }
        }
        if let Some(id) = best {
            return id;
        }
        let id = self.vertices.len();
        self.vertices.push(p);
        self.cells.entry(k).or_default().push(id);
        id
    }
}

pub fn write_stl_ascii(mesh: &TriMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "solid {}", mesh.name);
    for f in 0..mesh.faces().len() {
        let n = mesh.face_normal(f);
        let _ = writeln!(out, "  facet normal {:e} {:e} {:e}", n.x, n.y, n.z);
        let _ = writeln!(out, "    outer loop");
        for v in mesh.triangle(f) {
            let _ = writeln!(out, "      vertex {:e} {:e} {:e}", v.x, v.y, v.z);
        }
        let _ = writeln!(out, "    endloop");
        let _ = writeln!(out, "  endfacet");
    }
    let _ = writeln!(out, "endsolid {}", mesh.name);
    out
}

pub fn write_stl_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + mesh.faces().len() * 50);
    let mut header = [0u8; 80];
    let tag = format!("binary {}", mesh.name);
    let len = tag.len().min(80);
    header[..len].copy_from_slice(&tag.as_bytes()[..len]);
    // avoid a header that starts with "solid"
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.faces().len() as u32).to_le_bytes());
    for f in 0..mesh.faces().len() {
        let n = mesh.face_normal(f);
        for c in [n.x, n.y, n.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for v in mesh.triangle(f) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}
