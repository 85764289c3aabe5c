//! Parametric test surfaces: walls, cylinders, spheres, blades.
//!
//! Every generator winds faces so the right-hand normal points outward
//! (away from the axis for surfaces of revolution).

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::geometry::{Point3, TriMesh};

/// Grid surface over `(u, v)` with `nu × nv` cells. With `wrap_u` the last
/// column joins the first. The normal is `∂p/∂u × ∂p/∂v`.
pub fn grid_surface(
    name: &str,
    nu: usize,
    nv: usize,
    wrap_u: bool,
    f: impl Fn(usize, usize) -> Point3,
) -> TriMesh {
    let cols = if wrap_u { nu } else { nu + 1 };
    let mut vertices = Vec::with_capacity(cols * (nv + 1));
    for j in 0..=nv {
        for i in 0..cols {
            vertices.push(f(i, j));
        }
    }
    let id = |i: usize, j: usize| j * cols + (i % cols);
    let mut faces = Vec::with_capacity(nu * nv * 2);
    for j in 0..nv {
        for i in 0..nu {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(name, vertices, faces).expect("grid surface is a valid mesh")
}

/// Vertical planar wall in the `y = 0` plane spanning `x ∈ [0, length]`,
/// `z ∈ [0, height]`.
pub fn wall(length: f64, height: f64, resolution: f64) -> TriMesh {
    let nu = (length / resolution).ceil().max(1.0) as usize;
    let nv = (height / resolution).ceil().max(1.0) as usize;
    grid_surface("wall", nu, nv, false, |i, j| {
        Point3::new(length * i as f64 / nu as f64, 0.0, height * j as f64 / nv as f64)
    })
}

/// Plane `z = x·tan(tilt)` over `[0, width] × [0, depth]`.
pub fn tilted_plane(width: f64, depth: f64, resolution: f64, tilt: f64) -> TriMesh {
    let nu = (width / resolution).ceil().max(1.0) as usize;
    let nv = (depth / resolution).ceil().max(1.0) as usize;
    grid_surface("plane", nu, nv, false, |i, j| {
        let x = width * i as f64 / nu as f64;
        Point3::new(x, depth * j as f64 / nv as f64, x * tilt.tan())
    })
}

/// Doubly curved patch `z = 3·sin(x/8)·cos(y/11)` over `[0, size]²`. Unlike
/// walls, cylinders and spheres it has no rigid motion that slides it along
/// itself.
pub fn bumpy_patch(size: f64, resolution: f64) -> TriMesh {
    let n = (size / resolution).ceil().max(1.0) as usize;
    grid_surface("bumpy", n, n, false, |i, j| {
        let (x, y) = (size * i as f64 / n as f64, size * j as f64 / n as f64);
        Point3::new(x, y, 3.0 * (x / 8.0).sin() * (y / 11.0).cos())
    })
}

/// Open cylinder band around the z axis, base at `z = 0`.
pub fn cylinder(radius: f64, height: f64, segments: usize, rows: usize) -> TriMesh {
    revolve("cylinder", &[(radius, 0.0), (radius, height)], segments, rows)
}

/// Surface of revolution of an `(r, z)` profile polyline about the z axis.
/// Each profile span is split into `rows_per_span` rows.
pub fn revolve(name: &str, profile: &[(f64, f64)], segments: usize, rows_per_span: usize) -> TriMesh {
    let mut samples = Vec::new();
    for w in profile.windows(2) {
        for k in 0..rows_per_span {
            let t = k as f64 / rows_per_span as f64;
            samples.push((w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1)));
        }
    }
    samples.push(*profile.last().expect("profile needs points"));
    let nv = samples.len() - 1;
    grid_surface(name, segments, nv, true, |i, j| {
        let theta = 2.0 * PI * i as f64 / segments as f64;
        let (r, z) = samples[j];
        Point3::new(r * theta.cos(), r * theta.sin(), z)
    })
}

/// Spherical band from the equator (`z = 0`) up to `z_top`, centered at the
/// origin.
pub fn sphere_zone(radius: f64, z_top: f64, resolution: f64) -> TriMesh {
    let top = (z_top / radius).clamp(-1.0, 1.0).asin();
    let nv = ((radius * top) / resolution).ceil().max(1.0) as usize;
    let nu = ((2.0 * PI * radius) / resolution).ceil().max(3.0) as usize;
    grid_surface("sphere_zone", nu, nv, true, |i, j| {
        let lon = 2.0 * PI * i as f64 / nu as f64;
        let lat = top * j as f64 / nv as f64;
        radius * Point3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
    })
}

/// Geodesic sphere (subdivided icosahedron) with edges near `resolution`.
pub fn sphere(radius: f64, resolution: f64) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    // unit icosahedron edge ≈ 1.0515
    let mut edge = 1.0515 * radius;
    while edge > resolution {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point3>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
        edge /= 2.0;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriMesh::new("sphere", vertices, faces).expect("icosphere is a valid mesh")
}

/// Blade-like test surface: a cambered wall that twists and leans as it rises.
#[derive(Debug, Clone, Copy)]
pub struct BladeParams {
    pub chord: f64,
    pub height: f64,
    pub camber: f64,
    /// Total twist at the top (rad).
    pub twist: f64,
    /// Sideways offset at the top (mm); the lean grows quadratically.
    pub lean: f64,
    pub resolution: f64,
}

impl Default for BladeParams {
    fn default() -> Self {
        BladeParams {
            chord: 60.0,
            height: 40.0,
            camber: 4.0,
            twist: 0.3,
            lean: 12.0,
            resolution: 1.0,
        }
    }
}

pub fn blade(params: &BladeParams) -> TriMesh {
    let nu = (params.chord / params.resolution).ceil() as usize;
    let nv = (params.height / params.resolution).ceil() as usize;
    grid_surface("blade", nu, nv, false, |i, j| {
        let u = params.chord * i as f64 / nu as f64;
        let v = params.height * j as f64 / nv as f64;
        let x0 = u - params.chord / 2.0;
        let y0 = params.camber * (PI * u / params.chord).sin();
        let tau = params.twist * v / params.height;
        Point3::new(
            x0 * tau.cos() - y0 * tau.sin(),
            x0 * tau.sin() + y0 * tau.cos() + params.lean * (v / params.height).powi(2),
            v,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outward(mesh: &TriMesh, center: impl Fn(&Point3) -> Point3) -> bool {
        (0..mesh.faces().len()).all(|f| {
            let [a, b, c] = mesh.triangle(f);
            let g = (a + b + c) / 3.0;
            mesh.face_normal(f).dot(&(g - center(&g))) > 0.0
        })
    }

    #[test]
    fn closed_shapes_face_outward() {
        assert!(outward(&sphere(10.0, 2.0), |_| Point3::zeros()));
        assert!(outward(&cylinder(5.0, 3.0, 24, 3), |g| Point3::new(0.0, 0.0, g.z)));
        assert!(outward(&sphere_zone(50.0, 30.0, 2.0), |_| Point3::zeros()));
    }

    #[test]
    fn wall_dimensions() {
        let w = wall(100.0, 50.0, 1.0);
        assert_eq!(w.vertices().len(), 101 * 51);
        let (lo, hi) = w.bounds();
        assert_eq!((lo.x, hi.x, lo.z, hi.z), (0.0, 100.0, 0.0, 50.0));
    }

    #[test]
    fn sphere_resolution() {
        let s = sphere(50.0, 1.0);
        let longest = (0..s.faces().len())
            .map(|f| {
                let [a, b, _] = s.triangle(f);
                (a - b).norm()
            })
            .fold(0.0, f64::max);
        assert!(longest <= 1.2, "edge {longest}");
    }
}
