//! Mesh and point primitives used by the slicer and the metrology code.
//!
//! The central operation is [`project_to_surface`]: a point is pulled onto the
//! surface by fitting a plane to its `n` nearest mesh vertices, projecting
//! orthogonally, and rejecting the result when it leaves the convex hull of
//! those vertices (measured in the plane's own 2-D coordinates).

mod closest;
mod hull;
mod kdtree;
pub mod stl;

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen, Unit, Vector3};
use thiserror::Error;

pub use closest::{closest_point_on_triangle, SurfaceHit, SurfaceLocator};
pub use hull::{convex_hull_2d, ConvexPolygon, Point2, CONTAINMENT_TOLERANCE};
pub use kdtree::KdTree;
pub use stl::{load_mesh, parse_stl, write_stl_ascii, write_stl_binary};

/// Position in millimeters.
pub type Point3 = Vector3<f64>;
/// Direction or displacement.
pub type Vec3 = Vector3<f64>;
pub type Rotation3 = nalgebra::Rotation3<f64>;

/// Neighbor count used by the projection when none is configured.
pub const DEFAULT_NEIGHBORS: usize = 50;
/// Minimum triangle area (mm²) accepted into a mesh.
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;
/// Vertices closer than this (mm) are merged on load.
pub const MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cannot read mesh file: {0}")]
    Io(String),
    #[error("malformed STL: {0}")]
    MalformedStl(String),
    #[error("mesh has no non-degenerate triangles")]
    DegenerateMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("requested {requested} neighbors but mesh has {available} vertices")]
    NeighborCount { requested: usize, available: usize },
    #[error("points are collinear or coincident; no unique plane")]
    DegeneratePlane,
    #[error("points are collinear; convex hull is degenerate")]
    DegenerateHull,
}

/// Rotation about a unit axis, `exp(q [axis]×)`.
pub fn axis_rotation(axis: &Vec3, angle: f64) -> Rotation3 {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle)
}

/// Indexed triangle surface.
#[derive(Debug)]
pub struct TriMesh {
    pub name: String,
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    index: OnceLock<KdTree>,
    vertex_normals: OnceLock<Vec<Vec3>>,
}

impl Clone for TriMesh {
    fn clone(&self) -> Self {
        TriMesh {
            name: self.name.clone(),
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            index: OnceLock::new(),
            vertex_normals: OnceLock::new(),
        }
    }
}

impl TriMesh {
    /// Builds a mesh, checking index bounds, triangle areas and that no edge
    /// is shared by more than two faces.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Point3>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, GeometryError> {
        if faces.is_empty() {
            return Err(GeometryError::DegenerateMesh);
        }
        let mut edge_use: HashMap<(usize, usize), u32> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= vertices.len()) {
                return Err(GeometryError::InvalidMesh(format!(
                    "face {fi} references a vertex out of range"
                )));
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if area <= MIN_TRIANGLE_AREA {
                return Err(GeometryError::InvalidMesh(format!(
                    "face {fi} has area {area:e} mm²"
                )));
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let count = edge_use.entry(key).or_insert(0);
                *count += 1;
                if *count > 2 {
                    return Err(GeometryError::InvalidMesh(format!(
                        "edge ({}, {}) is shared by more than two faces",
                        key.0, key.1
                    )));
                }
            }
        }
        Ok(TriMesh {
            name: name.into(),
            vertices,
            faces,
            index: OnceLock::new(),
            vertex_normals: OnceLock::new(),
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    /// Unit normal following the right-hand rule on the face winding.
    pub fn face_normal(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        triangle_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Lazily built vertex index; read-only after construction.
    pub fn spatial_index(&self) -> &KdTree {
        self.index.get_or_init(|| KdTree::new(&self.vertices))
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> &[Vec3] {
        self.vertex_normals.get_or_init(|| {
            let mut acc = vec![Vec3::zeros(); self.vertices.len()];
            for f in &self.faces {
                let [a, b, c] = [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]];
                let weighted = (b - a).cross(&(c - a));
                for &i in f {
                    acc[i] += weighted;
                }
            }
            acc.into_iter()
                .map(|n| n.try_normalize(0.0).unwrap_or_else(Vec3::zeros))
                .collect()
        })
    }

    pub fn bounds(&self) -> (Point3, Point3) {
        let mut lo = Point3::repeat(f64::INFINITY);
        let mut hi = Point3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

pub fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Least-squares plane through a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub centroid: Point3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(centroid: Point3, normal: Vec3) -> Self {
        Plane {
            centroid,
            normal: normal.normalize(),
        }
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        (p - self.centroid).dot(&self.normal)
    }

    pub fn project(&self, p: &Point3) -> Point3 {
        p - self.signed_distance(p) * self.normal
    }

    /// Orthonormal in-plane axes `(u, v)` with `u × v = normal`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let n = self.normal;
        let seed = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let u = (seed - seed.dot(&n) * n).normalize();
        (u, n.cross(&u))
    }

    pub fn to_local(&self, p: &Point3, basis: &(Vec3, Vec3)) -> Point2 {
        let d = p - self.centroid;
        Point2::new(d.dot(&basis.0), d.dot(&basis.1))
    }
}

/// Indices of the `n` vertices nearest to `p`, nearest first, ties broken by
/// the lower index.
pub fn k_nearest_vertices(
    mesh: &TriMesh,
    p: &Point3,
    n: usize,
) -> Result<Vec<usize>, GeometryError> {
    if n == 0 || n > mesh.vertices.len() {
        return Err(GeometryError::NeighborCount {
            requested: n,
            available: mesh.vertices.len(),
        });
    }
    Ok(mesh
        .spatial_index()
        .nearest(p, n)
        .into_iter()
        .map(|(i, _)| i)
        .collect())
}

/// Fits a plane by principal component analysis.
///
/// The normal sign makes a non-negative dot product with `orientation` when
/// one is supplied; otherwise the normal's z is made positive, falling back
/// to x and then y when z vanishes.
pub fn fit_plane(points: &[Point3], orientation: Option<&Vec3>) -> Result<Plane, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegeneratePlane);
    }
    let centroid = points.iter().sum::<Point3>() / points.len() as f64;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sigma_mid = eig.eigenvalues[order[1]].max(0.0).sqrt();
    let sigma_max = eig.eigenvalues[order[2]].max(0.0).sqrt();
    if sigma_mid <= 1e-12 * sigma_max.max(1.0) {
        return Err(GeometryError::DegeneratePlane);
    }
    let mut normal: Vec3 = eig.eigenvectors.column(order[0]).normalize();
    if orient_flip(&normal, orientation) {
        normal = -normal;
    }
    Ok(Plane { centroid, normal })
}

fn orient_flip(normal: &Vec3, orientation: Option<&Vec3>) -> bool {
    const EPS: f64 = 1e-12;
    if let Some(o) = orientation {
        let d = normal.dot(o);
        if d.abs() > EPS {
            return d < 0.0;
        }
    }
    for c in [normal.z, normal.x, normal.y] {
        if c.abs() > EPS {
            return c < 0.0;
        }
    }
    false
}

/// Projects `p` onto the surface, or `None` when the projection leaves the
/// neighborhood hull.
pub fn project_to_surface(
    mesh: &TriMesh,
    p: &Point3,
    n: usize,
) -> Result<Option<Point3>, GeometryError> {
    Ok(project_with_normal(mesh, p, n)?.map(|(q, _)| q))
}

/// Like [`project_to_surface`] but also returns the fitted plane normal,
/// oriented along the mean vertex normal of the neighborhood.
pub fn project_with_normal(
    mesh: &TriMesh,
    p: &Point3,
    n: usize,
) -> Result<Option<(Point3, Vec3)>, GeometryError> {
    if n < 3 {
        return Err(GeometryError::NeighborCount {
            requested: n,
            available: mesh.vertices.len(),
        });
    }
    let neighbors = k_nearest_vertices(mesh, p, n)?;
    let pts: Vec<Point3> = neighbors.iter().map(|&i| mesh.vertices[i]).collect();
    let normals = mesh.vertex_normals();
    let mean_normal: Vec3 = neighbors.iter().map(|&i| normals[i]).sum();
    let plane = fit_plane(&pts, Some(&mean_normal))?;
    let projected = plane.project(p);

    let basis = plane.basis();
    let local: Vec<Point2> = pts.iter().map(|v| plane.to_local(v, &basis)).collect();
    let hull = convex_hull_2d(&local)?;
    if hull.contains(&plane.to_local(&projected, &basis)) {
        Ok(Some((projected, plane.normal)))
    } else {
        Ok(None)
    }
}
