//! Slicing of surfaces of revolution given by an `(r, z)` profile.
//!
//! Every layer is a circle, so stepping happens in the meridian plane: the
//! current profile point moves `h` along the profile tangent and is projected
//! back onto the profile polyline, searching only forward.

use std::f64::consts::PI;

use nalgebra::Vector2;

use super::{Layer, LayerPoint, SliceError, SlicePlan};
use crate::geometry::{Point3, Vec3};

const END_TOLERANCE: f64 = 1e-9;

/// Slices the revolution of `profile` about the z axis. The profile runs
/// from the build plate upward; all radii must be positive.
pub fn slice_axisymmetric(profile: &[(f64, f64)], h: f64, spacing: f64) -> Result<SlicePlan, SliceError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SliceError::InvalidParameter(format!("h must be positive, got {h}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(SliceError::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    if profile.len() < 2 {
        return Err(SliceError::InvalidProfile("need at least two points".into()));
    }
    let pts: Vec<Vector2<f64>> = profile.iter().map(|&(r, z)| Vector2::new(r, z)).collect();
    if let Some(k) = pts.iter().position(|p| !(p.x > 0.0) || !p.y.is_finite()) {
        return Err(SliceError::InvalidProfile(format!("point {k} has non-positive radius")));
    }
    if let Some(k) = pts.windows(2).position(|w| (w[1] - w[0]).norm() <= 1e-12) {
        return Err(SliceError::InvalidProfile(format!("points {k} and {} coincide", k + 1)));
    }

    let mut layers = Vec::new();
    let mut seg = 0;
    let mut param = 0.0;
    loop {
        let here = pts[seg] + (pts[seg + 1] - pts[seg]) * param;
        let dir = (pts[seg + 1] - pts[seg]).normalize();
        layers.push(circle_layer(layers.len(), here, dir, spacing));
        if layers.len() > super::MAX_LAYERS {
            return Err(SliceError::Runaway(super::MAX_LAYERS));
        }
        let target = here + dir * h;
        match project_forward(&pts, seg, param, &target) {
            Some((s, t)) if (s, t) > (seg, param + 1e-12) => {
                seg = s;
                param = t;
            }
            _ => break,
        }
    }
    Ok(SlicePlan {
        layers,
        h,
        source: "profile".into(),
        sampling: spacing,
    })
}

/// Closest point on the profile at or after `(seg, param)`; `None` when the
/// target lies past the end of the profile.
fn project_forward(
    pts: &[Vector2<f64>],
    seg: usize,
    param: f64,
    target: &Vector2<f64>,
) -> Option<(usize, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    for k in seg..pts.len() - 1 {
        let d = pts[k + 1] - pts[k];
        let raw = (target - pts[k]).dot(&d) / d.norm_squared();
        let lo = if k == seg { param } else { 0.0 };
        let t = raw.clamp(lo, 1.0);
        let dist = (pts[k] + d * t - target).norm();
        if best.is_none_or(|(b, _, _)| dist < b - 1e-12) {
            best = Some((dist, k, t));
        }
    }
    let (_, k, t) = best?;
    let last = pts.len() - 2;
    if k == last && t >= 1.0 {
        let d = pts[last + 1] - pts[last];
        let raw = (target - pts[last]).dot(&d) / d.norm_squared();
        if (raw - 1.0) * d.norm() > END_TOLERANCE {
            return None;
        }
    }
    Some((k, t))
}

/// Circle of radius `rz.x` at height `rz.y`, traversed clockwise seen from
/// above, with `dir` the profile tangent in the meridian plane.
fn circle_layer(index: usize, rz: Vector2<f64>, dir: Vector2<f64>, spacing: f64) -> Layer {
    let (r, z) = (rz.x, rz.y);
    let count = ((2.0 * PI * r / spacing - 1e-6).ceil() as usize).max(3);
    let mut points: Vec<LayerPoint> = Vec::with_capacity(count);
    let mut lambda = 0.0;
    for j in 0..count {
        let theta = -2.0 * PI * j as f64 / count as f64;
        let (s, c) = theta.sin_cos();
        let p = Point3::new(r * c, r * s, z);
        let a = Vec3::new(dir.x * c, dir.x * s, dir.y);
        let n = Vec3::new(dir.y * c, dir.y * s, -dir.x);
        if let Some(prev) = points.last() {
            lambda += (p - prev.p).norm();
        }
        points.push(LayerPoint {
            p,
            t: n.cross(&a),
            n,
            a,
            lambda,
        });
    }
    Layer::new(index, vec![points], true)
}
