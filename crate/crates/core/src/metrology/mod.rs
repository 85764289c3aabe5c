//! Scan-versus-CAD evaluation: rigid alignment by trimmed point-to-point
//! ICP, separation of the bead's two edges about the mid-surface, width
//! measured perpendicular to the surface, and the deviation/width report.

mod icp;
mod report;
mod scan_io;
mod width;

use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Point3, Rotation3, TriMesh, Vec3};

pub use icp::{icp_register, icp_register_to, CloudTarget, IcpConfig, IcpResult, IcpTarget, MeshTarget};
pub use report::{evaluate, EvalConfig, EvalReport, WidthStats};
pub use scan_io::{parse_ply_ascii, parse_xyz, read_scan, write_xyz};
pub use width::{measure_width, split_edges, EdgeSplit, WidthConfig, WidthMeasurement};

/// Smallest cloud accepted by [`evaluate`].
pub const MIN_EVAL_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh has zero area")]
    ZeroArea,
    #[error("point cloud has {found} points, need at least {needed}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("edge split left the {0} side empty")]
    EmptySide(&'static str),
    #[error("width measurement skipped {skipped} of {total} samples")]
    InsufficientCoverage { skipped: usize, total: usize },
    #[error("normals are required for {0}")]
    MissingNormals(&'static str),
    #[error("scan file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud { points, normals: None }
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<Vec3>) -> Result<Self, MetrologyError> {
        if points.len() != normals.len() {
            return Err(MetrologyError::InvalidParameter(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        Ok(PointCloud {
            points,
            normals: Some(normals),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Moves points and turns normals.
    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            normals: self.normals.as_ref().map(|ns| ns.iter().map(|n| t.rotation * n).collect()),
        }
    }

    pub(crate) fn require(&self, needed: usize) -> Result<(), MetrologyError> {
        if self.points.len() < needed {
            return Err(MetrologyError::TooFewPoints {
                needed,
                found: self.points.len(),
            });
        }
        Ok(())
    }
}

/// `p ↦ rotation·p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3, translation: Vec3) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r = self.rotation.inverse();
        RigidTransform {
            rotation: r,
            translation: -(r * self.translation),
        }
    }

    /// Rotation angle (rad), accurate near zero.
    pub fn rotation_angle(&self) -> f64 {
        UnitQuaternion::from_rotation_matrix(&self.rotation).angle()
    }

    /// Rotation angle and translation norm of `self⁻¹ ∘ other`.
    pub fn difference(&self, other: &RigidTransform) -> (f64, f64) {
        let d = self.inverse().compose(other);
        (d.rotation_angle(), d.translation.norm())
    }
}

/// Area-weighted uniform samples on the mesh; `round(area·density)` points,
/// each carrying its face normal. The same seed gives the same cloud.
pub fn sample_mesh(mesh: &TriMesh, density: f64, seed: u64) -> Result<PointCloud, MetrologyError> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(MetrologyError::InvalidParameter("density must be positive".into()));
    }
    let areas: Vec<f64> = (0..mesh.faces().len()).map(|f| mesh.face_area(f)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(MetrologyError::ZeroArea);
    }
    let count = (total * density).round() as usize;
    let mut cumulative = Vec::with_capacity(areas.len());
    let mut acc = 0.0;
    for a in &areas {
        acc += a;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random::<f64>() * total;
        let f = cumulative.partition_point(|&c| c <= x).min(areas.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        points.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
        normals.push(mesh.face_normal(f));
    }
    PointCloud::with_normals(points, normals)
}
