//! Edge separation about the mid-surface and perpendicular bead width.

use rayon::prelude::*;

use super::{MetrologyError, PointCloud};
use crate::geometry::{KdTree, Point3, SurfaceLocator, TriMesh, Vec3};

/// Points this close to the mid-surface (mm) belong to neither edge.
pub const AMBIGUOUS_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    /// Negative side of the surface normal (inner edge).
    pub left: PointCloud,
    /// Positive side (outer edge).
    pub right: PointCloud,
    pub ambiguous: usize,
}

/// Classifies each point by the sign of its signed distance to `mid`.
pub fn split_edges(cloud: &PointCloud, mid: &TriMesh) -> Result<EdgeSplit, MetrologyError> {
    let locator = SurfaceLocator::new(mid);
    let sides: Vec<f64> = cloud.points.par_iter().map(|p| locator.closest(p).signed_distance).collect();
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut ambiguous = 0;
    for (p, d) in cloud.points.iter().zip(&sides) {
        if d.abs() <= AMBIGUOUS_BAND {
            ambiguous += 1;
        } else if *d > 0.0 {
            right.push(*p);
        } else {
            left.push(*p);
        }
    }
    if left.is_empty() {
        return Err(MetrologyError::EmptySide("left"));
    }
    if right.is_empty() {
        return Err(MetrologyError::EmptySide("right"));
    }
    Ok(EdgeSplit {
        left: PointCloud::new(left),
        right: PointCloud::new(right),
        ambiguous,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthConfig {
    /// Half-angle of the search cone about the normal (rad).
    pub cone_half_angle: f64,
    pub search_radius: f64,
    /// Largest tolerated fraction of samples without a hit on both sides.
    pub max_skipped_fraction: f64,
}

impl Default for WidthConfig {
    fn default() -> Self {
        WidthConfig {
            cone_half_angle: 30f64.to_radians(),
            search_radius: 5.0,
            max_skipped_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthMeasurement {
    pub widths: Vec<f64>,
    pub skipped: usize,
    pub samples: usize,
}

impl WidthMeasurement {
    pub fn mean(&self) -> f64 {
        self.widths.iter().sum::<f64>() / self.widths.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.widths.iter().map(|w| (w - m) * (w - m)).sum::<f64>() / self.widths.len() as f64).sqrt()
    }
}

/// For each mid-surface sample with unit normal n̂, width is the distance
/// along +n̂ to the nearest right point plus the distance along −n̂ to the
/// nearest left point, where "nearest" ranges over the cone about ±n̂.
pub fn measure_width(
    samples: &PointCloud,
    left: &PointCloud,
    right: &PointCloud,
    config: &WidthConfig,
) -> Result<WidthMeasurement, MetrologyError> {
    let normals = samples.normals.as_ref().ok_or(MetrologyError::MissingNormals("width samples"))?;
    if samples.is_empty() {
        return Err(MetrologyError::TooFewPoints { needed: 1, found: 0 });
    }
    if !(config.search_radius > 0.0) || !(config.cone_half_angle > 0.0 && config.cone_half_angle < std::f64::consts::FRAC_PI_2) {
        return Err(MetrologyError::InvalidParameter("cone angle must be in (0, 90°) and radius positive".into()));
    }
    let left_tree = KdTree::new(&left.points);
    let right_tree = KdTree::new(&right.points);
    let cos_cone = config.cone_half_angle.cos();
    let probe = |tree: &KdTree, points: &[Point3], s: &Point3, dir: &Vec3| -> Option<f64> {
        tree.within_radius(s, config.search_radius).into_iter().find_map(|(i, _)| {
            let d = points[i] - s;
            let along = d.dot(dir);
            (along > 0.0 && along >= d.norm() * cos_cone).then_some(along)
        })
    };
    let found: Vec<Option<f64>> = samples
        .points
        .par_iter()
        .zip(normals.par_iter())
        .map(|(s, n)| {
            let n = n.normalize();
            let r = probe(&right_tree, &right.points, s, &n)?;
            let l = probe(&left_tree, &left.points, s, &-n)?;
            Some(r + l)
        })
        .collect();
    let widths: Vec<f64> = found.iter().flatten().copied().collect();
    let skipped = found.len() - widths.len();
    if skipped as f64 > config.max_skipped_fraction * found.len() as f64 || widths.is_empty() {
        return Err(MetrologyError::InsufficientCoverage {
            skipped,
            total: found.len(),
        });
    }
    Ok(WidthMeasurement {
        widths,
        skipped,
        samples: found.len(),
    })
}
