//! Scan files: ASCII PLY and whitespace-separated XYZ, each optionally
//! carrying per-point normals.

use std::fmt::Write as _;
use std::path::Path;

use super::{MetrologyError, PointCloud};
use crate::geometry::{Point3, Vec3};

fn parse_err(line: usize, message: impl Into<String>) -> MetrologyError {
    MetrologyError::Parse {
        line,
        message: message.into(),
    }
}

fn numbers(line_no: usize, line: &str) -> Result<Vec<f64>, MetrologyError> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(line_no, format!("not a number: {t:?}"))))
        .collect()
}

fn assemble(points: Vec<Point3>, normals: Vec<Vec3>) -> Result<PointCloud, MetrologyError> {
    if normals.is_empty() {
        Ok(PointCloud::new(points))
    } else {
        PointCloud::with_normals(points, normals)
    }
}

/// `x y z` or `x y z nx ny nz` per line; `#` starts a comment. All rows must
/// agree on whether normals are present.
pub fn parse_xyz(text: &str) -> Result<PointCloud, MetrologyError> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut columns = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = numbers(i + 1, line)?;
        if v.len() != 3 && v.len() != 6 {
            return Err(parse_err(i + 1, format!("expected 3 or 6 values, found {}", v.len())));
        }
        if *columns.get_or_insert(v.len()) != v.len() {
            return Err(parse_err(i + 1, "rows disagree on normals"));
        }
        points.push(Point3::new(v[0], v[1], v[2]));
        if v.len() == 6 {
            normals.push(Vec3::new(v[3], v[4], v[5]));
        }
    }
    assemble(points, normals)
}

/// ASCII PLY with a `vertex` element; `x y z` required, `nx ny nz` used when
/// all three are declared. Other elements are skipped.
pub fn parse_ply_ascii(text: &str) -> Result<PointCloud, MetrologyError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(1, "missing 'ply' magic")),
    }
    // (name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut body_start = None;
    for (i, raw) in lines.by_ref() {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(parse_err(i + 1, format!("unsupported PLY format {other}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| parse_err(i + 1, "bad element count"))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", "list", _, _, name] | ["property", _, name] => {
                let element = elements.last_mut().ok_or_else(|| parse_err(i + 1, "property before element"))?;
                element.2.push(name.to_string());
            }
            ["end_header"] => {
                body_start = Some(i + 1);
                break;
            }
            _ => return Err(parse_err(i + 1, format!("unexpected header line {raw:?}"))),
        }
    }
    let body_start = body_start.ok_or_else(|| parse_err(0, "missing end_header"))?;

    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut rows = text.lines().enumerate().skip(body_start).filter(|(_, l)| !l.trim().is_empty());
    for (name, count, props) in &elements {
        if name != "vertex" {
            for _ in 0..*count {
                rows.next().ok_or_else(|| parse_err(0, format!("truncated {name} element")))?;
            }
            continue;
        }
        let col = |p: &str| props.iter().position(|q| q == p);
        let (x, y, z) = match (col("x"), col("y"), col("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(parse_err(0, "vertex element lacks x/y/z")),
        };
        let normal_cols = match (col("nx"), col("ny"), col("nz")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        for _ in 0..*count {
            let (i, line) = rows.next().ok_or_else(|| parse_err(0, "truncated vertex element"))?;
            let v = numbers(i + 1, line)?;
            if v.len() < props.len() {
                return Err(parse_err(i + 1, format!("expected {} values, found {}", props.len(), v.len())));
            }
            points.push(Point3::new(v[x], v[y], v[z]));
            if let Some((a, b, c)) = normal_cols {
                normals.push(Vec3::new(v[a], v[b], v[c]));
            }
        }
    }
    assemble(points, normals)
}

/// Reads `.ply` or anything else as XYZ.
pub fn read_scan(path: &Path) -> Result<PointCloud, MetrologyError> {
    let text = std::fs::read_to_string(path).map_err(|e| MetrologyError::Io(format!("{}: {e}", path.display())))?;
    let is_ply = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        parse_ply_ascii(&text)
    } else {
        parse_xyz(&text)
    }
}

/// XYZ text with full-precision coordinates (and normals when present).
pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut s = String::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
        if let Some(ns) = &cloud.normals {
            let n = ns[i];
            let _ = write!(s, " {} {} {}", n.x, n.y, n.z);
        }
        s.push('\n');
    }
    s
}
