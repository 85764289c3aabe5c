//! Plain-text slice-plan files and PLY point export.
//!
//! ```text
//! SLICEPLAN h=1 spacing=0.5 source=wall layers=51
//! L 0 S 0 open
//! x y z tx ty tz nx ny nz ax ay az lambda
//! ...
//! ```
//!
//! Numbers use the shortest representation that reads back to the same
//! `f64`, so a write/read cycle is exact.

use std::fmt::Write as _;

use super::{Layer, LayerPoint, SliceError, SlicePlan};
use crate::geometry::Vec3;

pub fn write_plan(plan: &SlicePlan) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "SLICEPLAN h={} spacing={} source={} layers={}",
        plan.h,
        plan.sampling,
        plan.source.replace(char::is_whitespace, "_"),
        plan.layers.len()
    );
    for layer in &plan.layers {
        let kind = if layer.closed { "closed" } else { "open" };
        let flag = if layer.touches_boundary { " boundary" } else { "" };
        for (s, seg) in layer.segments.iter().enumerate() {
            let _ = writeln!(out, "L {} S {} {kind}{flag}", layer.index, s);
            for p in seg {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {} {} {} {} {} {} {} {} {}",
                    p.p.x, p.p.y, p.p.z, p.t.x, p.t.y, p.t.z, p.n.x, p.n.y, p.n.z, p.a.x, p.a.y, p.a.z, p.lambda
                );
            }
        }
        if layer.segments.is_empty() {
            let _ = writeln!(out, "L {} empty", layer.index);
        }
    }
    out
}

pub fn read_plan(text: &str) -> Result<SlicePlan, SliceError> {
    let err = |line: usize, message: &str| SliceError::Parse {
        line: line + 1,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(0, "empty plan file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("SLICEPLAN") {
        return Err(err(0, "missing SLICEPLAN header"));
    }
    let (mut h, mut spacing, mut source, mut expected) = (None, None, String::new(), None);
    for f in fields {
        let (key, value) = f.split_once('=').ok_or_else(|| err(0, "expected key=value"))?;
        match key {
            "h" => h = value.parse::<f64>().ok(),
            "spacing" => spacing = value.parse::<f64>().ok(),
            "source" => source = value.to_string(),
            "layers" => expected = value.parse::<usize>().ok(),
            _ => return Err(err(0, &format!("unknown header field '{key}'"))),
        }
    }
    let h = h.ok_or_else(|| err(0, "missing or bad h"))?;
    let sampling = spacing.ok_or_else(|| err(0, "missing or bad spacing"))?;

    let mut layers: Vec<Layer> = Vec::new();
    let mut current: Option<Vec<LayerPoint>> = None;
    for (no, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens[0] == "L" {
            if let Some(seg) = current.take() {
                layers.last_mut().expect("segment follows a layer").segments.push(seg);
            }
            let index: usize = tokens
                .get(1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(no, "bad layer index"))?;
            let is_new = layers.last().is_none_or(|l| l.index != index);
            if is_new {
                if index != layers.len() {
                    return Err(err(no, "layers out of order"));
                }
                layers.push(Layer::new(index, Vec::new(), false));
            }
            if tokens.get(2) == Some(&"empty") {
                continue;
            }
            if tokens.get(2) != Some(&"S") || tokens.len() < 5 {
                return Err(err(no, "expected 'L <i> S <seg> open|closed'"));
            }
            let layer = layers.last_mut().unwrap();
            layer.closed = match tokens[4] {
                "closed" => true,
                "open" => false,
                _ => return Err(err(no, "expected open or closed")),
            };
            layer.touches_boundary = tokens.get(5) == Some(&"boundary");
            current = Some(Vec::new());
            continue;
        }
        let seg = current.as_mut().ok_or_else(|| err(no, "point before any layer header"))?;
        let v: Vec<f64> = tokens
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err(no, "bad number"))?;
        if v.len() != 13 {
            return Err(err(no, &format!("expected 13 numbers, found {}", v.len())));
        }
        seg.push(LayerPoint {
            p: Vec3::new(v[0], v[1], v[2]),
            t: Vec3::new(v[3], v[4], v[5]),
            n: Vec3::new(v[6], v[7], v[8]),
            a: Vec3::new(v[9], v[10], v[11]),
            lambda: v[12],
        });
    }
    if let Some(seg) = current.take() {
        layers.last_mut().expect("segment follows a layer").segments.push(seg);
    }
    for layer in &mut layers {
        let rebuilt = Layer::new(layer.index, std::mem::take(&mut layer.segments), layer.closed);
        layer.segments = rebuilt.segments;
        layer.total_length = rebuilt.total_length;
    }
    if let Some(n) = expected {
        if n != layers.len() {
            return Err(err(0, &format!("header declares {n} layers, found {}", layers.len())));
        }
    }
    Ok(SlicePlan {
        layers,
        h,
        source,
        sampling,
    })
}

/// ASCII PLY of every plan point with its normal and layer index.
pub fn write_plan_ply(plan: &SlicePlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", plan.point_count());
    for prop in ["float x", "float y", "float z", "float nx", "float ny", "float nz", "int layer"] {
        let _ = writeln!(out, "property {prop}");
    }
    let _ = writeln!(out, "end_header");
    for layer in &plan.layers {
        for p in layer.points() {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                p.p.x, p.p.y, p.p.z, p.n.x, p.n.y, p.n.z, layer.index
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slicer::{slice_axisymmetric, warp_layers};

    #[test]
    fn text_round_trip_is_exact() {
        let plan = warp_layers(&slice_axisymmetric(&[(10.0, 0.0), (7.0, 4.0)], 0.7, 0.5).unwrap());
        let back = read_plan(&write_plan(&plan)).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "SLICEPLAN h=1 spacing=0.5 source=x layers=1\nL 0 S 0 open\n1 2 3\n";
        assert_eq!(
            read_plan(text).unwrap_err(),
            SliceError::Parse {
                line: 3,
                message: "expected 13 numbers, found 3".into()
            }
        );
        assert!(read_plan("").is_err());
        assert!(read_plan("PLAN h=1").is_err());
    }

    #[test]
    fn ply_header_counts_points() {
        let plan = slice_axisymmetric(&[(10.0, 0.0), (10.0, 2.0)], 1.0, 0.5).unwrap();
        let ply = write_plan_ply(&plan);
        assert!(ply.contains(&format!("element vertex {}", plan.point_count())));
        let body = ply.split("end_header\n").nth(1).unwrap();
        assert_eq!(body.lines().count(), plan.point_count());
    }
}
