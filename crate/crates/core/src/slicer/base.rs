//! Layer 0: intersection of the mesh with the build-plate plane.

use std::collections::HashMap;

use super::{finish_segment, Layer, SliceError};
use crate::geometry::{Plane, Point3, TriMesh, Vec3};

const SIDE_EPS: f64 = 1e-9;
const WELD: f64 = 1e-7;

/// Cuts `mesh` with `plane` and samples the cut every `spacing` mm. Curves
/// run so that `t × n` points along the plane normal.
pub fn sample_base_layer(mesh: &TriMesh, plane: &Plane, spacing: f64) -> Result<Layer, SliceError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(SliceError::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let cuts = cut_segments(mesh, plane);
    if cuts.is_empty() {
        return Err(SliceError::NoIntersection);
    }
    let chains = chain(&cuts);
    let mut segments = Vec::new();
    let mut all_closed = true;
    for c in &chains {
        let (mut pos, mut nrm, closed) = (c.points.clone(), c.normals.clone(), c.closed);
        // orient so the build direction points away from the plate
        let mut score = 0.0;
        for k in 0..pos.len().saturating_sub(1) {
            score += (pos[k + 1] - pos[k]).cross(&nrm[k]).dot(&plane.normal);
        }
        if closed && pos.len() > 1 {
            score += (pos[0] - pos[pos.len() - 1]).cross(&nrm[pos.len() - 1]).dot(&plane.normal);
        }
        if score < 0.0 {
            pos.reverse();
            nrm.reverse();
            if closed {
                pos.rotate_right(1);
                nrm.rotate_right(1);
            }
        }
        if let Some(points) = finish_segment(&pos, &nrm, closed, spacing) {
            all_closed &= closed;
            segments.push(points);
        }
    }
    if segments.is_empty() {
        return Err(SliceError::NoIntersection);
    }
    let closed = all_closed && segments.len() == 1;
    Ok(Layer::new(0, segments, closed))
}

struct Cut {
    ends: [Point3; 2],
    normal: Vec3,
}

fn cut_segments(mesh: &TriMesh, plane: &Plane) -> Vec<Cut> {
    let mut cuts = Vec::new();
    let mut seen: HashMap<[[i64; 3]; 2], ()> = HashMap::new();
    for f in 0..mesh.faces().len() {
        let tri = mesh.triangle(f);
        let d = tri.map(|v| plane.signed_distance(&v));
        let side = d.map(|x| if x > SIDE_EPS { 1 } else if x < -SIDE_EPS { -1 } else { 0 });
        let zeros: Vec<usize> = (0..3).filter(|&k| side[k] == 0).collect();
        let ends = match zeros.len() {
            3 => continue,
            2 => [tri[zeros[0]], tri[zeros[1]]],
            1 => {
                let z = zeros[0];
                let (i, j) = ((z + 1) % 3, (z + 2) % 3);
                if side[i] == side[j] {
                    continue;
                }
                [tri[z], crossing(&tri[i], &tri[j], d[i], d[j])]
            }
            _ => {
                if side[0] == side[1] && side[1] == side[2] {
                    continue;
                }
                let mut pts = Vec::with_capacity(2);
                for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                    if side[i] != side[j] {
                        pts.push(crossing(&tri[i], &tri[j], d[i], d[j]));
                    }
                }
                [pts[0], pts[1]]
            }
        };
        if (ends[0] - ends[1]).norm() <= WELD {
            continue;
        }
        let mut key = [grid_key(&ends[0]), grid_key(&ends[1])];
        key.sort();
        if seen.insert(key, ()).is_some() {
            continue;
        }
        cuts.push(Cut {
            ends,
            normal: mesh.face_normal(f),
        });
    }
    cuts
}

fn crossing(a: &Point3, b: &Point3, da: f64, db: f64) -> Point3 {
    let t = da / (da - db);
    a + (b - a) * t
}

fn grid_key(p: &Point3) -> [i64; 3] {
    [
        (p.x / WELD).round() as i64,
        (p.y / WELD).round() as i64,
        (p.z / WELD).round() as i64,
    ]
}

struct Chain {
    points: Vec<Point3>,
    /// Normal at each point, averaged from adjacent cut faces.
    normals: Vec<Vec3>,
    closed: bool,
}

/// Joins cut segments sharing endpoints into polylines and loops.
fn chain(cuts: &[Cut]) -> Vec<Chain> {
    let mut node_of: HashMap<[i64; 3], usize> = HashMap::new();
    let mut nodes: Vec<Point3> = Vec::new();
    let mut node = |p: &Point3| {
        *node_of.entry(grid_key(p)).or_insert_with(|| {
            nodes.push(*p);
            nodes.len() - 1
        })
    };
    let edges: Vec<[usize; 2]> = cuts.iter().map(|c| [node(&c.ends[0]), node(&c.ends[1])]).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (e, [a, b]) in edges.iter().enumerate() {
        adjacency[*a].push(e);
        adjacency[*b].push(e);
    }
    let mut used = vec![false; edges.len()];
    let mut chains = Vec::new();

    // open chains start at nodes of odd degree, loops anywhere
    let mut starts: Vec<usize> = (0..nodes.len()).filter(|&n| adjacency[n].len() % 2 == 1).collect();
    starts.extend(0..nodes.len());
    for start in starts {
        while let Some(&first) = adjacency[start].iter().find(|&&e| !used[e]) {
            let mut order = vec![start];
            let mut normals: Vec<Vec3> = Vec::new();
            let mut current = start;
            let mut edge = first;
            loop {
                used[edge] = true;
                let [a, b] = edges[edge];
                let next = if a == current { b } else { a };
                normals.push(cuts[edge].normal);
                order.push(next);
                current = next;
                match adjacency[current].iter().find(|&&e| !used[e]) {
                    Some(&e) => edge = e,
                    None => break,
                }
            }
            let closed = order.len() > 3 && order[0] == *order.last().unwrap();
            if closed {
                order.pop();
            }
            let count = order.len();
            let point_normals = (0..count)
                .map(|k| {
                    let before = if k > 0 {
                        Some(normals[k - 1])
                    } else if closed {
                        normals.last().copied()
                    } else {
                        None
                    };
                    let after = normals.get(k).copied();
                    let sum = before.unwrap_or_else(Vec3::zeros) + after.unwrap_or_else(Vec3::zeros);
                    sum.try_normalize(1e-12)
                        .unwrap_or_else(|| after.or(before).unwrap_or_else(Vec3::z))
                })
                .collect();
            chains.push(Chain {
                points: order.iter().map(|&n| nodes[n]).collect(),
                normals: point_normals,
                closed,
            });
        }
    }
    chains
}
