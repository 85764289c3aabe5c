//! Uniform non-planar slicing.
//!
//! Layer 0 is the intersection of the surface with the build plate. Every
//! following layer is produced point by point: each point is pushed a height
//! `h` along its increment direction `a = t × n` and projected back onto the
//! surface. Points whose projection fails split the layer into segments, and
//! segment ends are then walked outward along the curve tangent until the
//! surface edge is reached. Slicing stops at the first empty layer.

mod axisym;
mod base;
mod io;
mod warp;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    project_with_normal, GeometryError, Plane, Point3, TriMesh, Vec3, DEFAULT_NEIGHBORS,
};

pub use axisym::slice_axisymmetric;
pub use base::sample_base_layer;
pub use io::{read_plan, write_plan, write_plan_ply};
pub use warp::warp_layers;

/// Layer count beyond which slicing is treated as non-terminating.
pub const MAX_LAYERS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SliceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("base plane does not intersect the mesh")]
    NoIntersection,
    #[error("slicing did not terminate within {0} layers")]
    Runaway(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("plan file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One sample on a layer curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPoint {
    pub p: Point3,
    /// Path tangent.
    pub t: Vec3,
    /// Outward surface normal, orthogonal to `t`.
    pub n: Vec3,
    /// Increment direction `t × n`.
    pub a: Vec3,
    /// Path length from the start of the segment (mm).
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub index: usize,
    pub segments: Vec<Vec<LayerPoint>>,
    /// Single segment whose last point connects back to its first.
    pub closed: bool,
    /// Sum of segment path lengths (mm).
    pub total_length: f64,
    /// Some projection from the previous layer fell off the surface.
    pub touches_boundary: bool,
}

impl Layer {
    pub fn new(index: usize, segments: Vec<Vec<LayerPoint>>, closed: bool) -> Self {
        let total_length = segments
            .iter()
            .filter_map(|s| s.last().map(|p| p.lambda))
            .sum();
        Layer {
            index,
            segments,
            closed,
            total_length,
            touches_boundary: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = &LayerPoint> {
        self.segments.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicePlan {
    pub layers: Vec<Layer>,
    /// Height increment between layers (mm).
    pub h: f64,
    pub source: String,
    /// Point spacing along each layer (mm).
    pub sampling: f64,
}

impl SlicePlan {
    pub fn point_count(&self) -> usize {
        self.layers.iter().map(Layer::point_count).sum()
    }
}

/// Parameters of [`slice_surface`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceConfig {
    pub h: f64,
    pub spacing: f64,
    pub neighbors: usize,
    pub max_layers: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            h: 1.0,
            spacing: 0.5,
            neighbors: DEFAULT_NEIGHBORS,
            max_layers: MAX_LAYERS,
        }
    }
}

impl SliceConfig {
    fn validate(&self) -> Result<(), SliceError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SliceError::InvalidParameter(format!("h must be positive, got {}", self.h)));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(SliceError::InvalidParameter(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if self.neighbors < 3 {
            return Err(SliceError::InvalidParameter("need at least 3 neighbors".into()));
        }
        Ok(())
    }
}

/// Slices `mesh` from its lowest z upward.
pub fn slice_surface(mesh: &TriMesh, config: &SliceConfig) -> Result<SlicePlan, SliceError> {
    config.validate()?;
    let (lo, _) = mesh.bounds();
    let plate = Plane::new(lo, Vec3::z());
    let mut layer = sample_base_layer(mesh, &plate, config.spacing)?;
    let mut layers = Vec::new();
    while !layer.is_empty() {
        if layers.len() >= config.max_layers {
            return Err(SliceError::Runaway(config.max_layers));
        }
        let next = next_layer(mesh, &layer, config)?;
        layers.push(layer);
        layer = next;
    }
    log::debug!("sliced {} into {} layers", mesh.name, layers.len());
    Ok(SlicePlan {
        layers,
        h: config.h,
        source: mesh.name.clone(),
        sampling: config.spacing,
    })
}

/// Advances `layer` by `config.h`; an empty result means the surface ended.
pub fn next_layer(mesh: &TriMesh, layer: &Layer, config: &SliceConfig) -> Result<Layer, SliceError> {
    config.validate()?;
    let mut segments = Vec::new();
    let mut closed = false;
    let mut touches_boundary = false;
    for seg in &layer.segments {
        let projected: Vec<Option<(Point3, Vec3)>> = seg
            .par_iter()
            .map(|lp| project_with_normal(mesh, &(lp.p + config.h * lp.a), config.neighbors))
            .collect::<Result<_, _>>()?;

        if layer.closed && projected.iter().all(Option::is_some) {
            let (pos, nrm): (Vec<Point3>, Vec<Vec3>) = projected.into_iter().flatten().unzip();
            if let Some(points) = finish_segment(&pos, &nrm, true, config.spacing) {
                segments.push(points);
                closed = true;
            }
            continue;
        }
        touches_boundary |= projected.iter().any(Option::is_none);

        for run in split_runs(&projected, layer.closed) {
            let mut pos: Vec<Point3> = run.iter().map(|x| x.0).collect();
            let mut nrm: Vec<Vec3> = run.iter().map(|x| x.1).collect();
            extend_run(mesh, &mut pos, &mut nrm, config)?;
            if pos.len() < 2 {
                continue;
            }
            if let Some(points) = finish_segment(&pos, &nrm, false, config.spacing) {
                segments.push(points);
            }
        }
    }
    let mut next = Layer::new(layer.index + 1, segments, closed);
    next.touches_boundary = touches_boundary;
    Ok(next)
}

/// Maximal runs of successful projections. On a closed curve a run may wrap
/// past the end.
fn split_runs(projected: &[Option<(Point3, Vec3)>], closed: bool) -> Vec<Vec<(Point3, Vec3)>> {
    let n = projected.len();
    let start = if closed {
        match projected.iter().position(Option::is_none) {
            Some(k) => k + 1,
            None => 0,
        }
    } else {
        0
    };
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for k in 0..n {
        match projected[(start + k) % n] {
            Some(x) => current.push(x),
            None => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

/// Walks both ends of an open run along the curve tangent, one spacing at a
/// time, until two consecutive projections fail.
fn extend_run(
    mesh: &TriMesh,
    pos: &mut Vec<Point3>,
    nrm: &mut Vec<Vec3>,
    config: &SliceConfig,
) -> Result<(), SliceError> {
    if pos.len() < 2 {
        return Ok(());
    }
    let (lo, hi) = mesh.bounds();
    let max_steps = ((hi - lo).norm() / config.spacing).ceil() as usize + 1;
    for forward in [true, false] {
        if !forward {
            pos.reverse();
            nrm.reverse();
        }
        let mut misses = 0;
        let mut steps = 0;
        while misses < 2 && steps < max_steps {
            steps += 1;
            let last = pos[pos.len() - 1];
            let dir = match (last - pos[pos.len() - 2]).try_normalize(1e-12) {
                Some(d) => d,
                None => break,
            };
            let candidate = last + dir * config.spacing * (misses + 1) as f64;
            match project_with_normal(mesh, &candidate, config.neighbors)? {
                Some((q, n)) if (q - last).norm() > 1e-9 => {
                    pos.push(q);
                    nrm.push(n);
                    misses = 0;
                }
                _ => misses += 1,
            }
        }
        if !forward {
            pos.reverse();
            nrm.reverse();
        }
    }
    Ok(())
}

/// Resamples a polyline and rebuilds its frames. `None` when the curve is too
/// short to carry two samples.
pub(crate) fn finish_segment(
    pos: &[Point3],
    nrm: &[Vec3],
    closed: bool,
    spacing: f64,
) -> Option<Vec<LayerPoint>> {
    let (p, n) = resample(pos, nrm, closed, spacing)?;
    Some(build_points(&p, &n, closed))
}

/// Uniform arc-length resampling. Point spacing never exceeds `spacing`.
/// Open curves keep both endpoints; closed curves start at the first point
/// and stop one step short of it.
pub(crate) fn resample(
    pos: &[Point3],
    nrm: &[Vec3],
    closed: bool,
    spacing: f64,
) -> Option<(Vec<Point3>, Vec<Vec3>)> {
    if pos.len() < 2 {
        return None;
    }
    let mut verts: Vec<Point3> = pos.to_vec();
    let mut norms: Vec<Vec3> = nrm.to_vec();
    if closed {
        verts.push(pos[0]);
        norms.push(nrm[0]);
    }
    let mut cum = vec![0.0; verts.len()];
    for k in 1..verts.len() {
        cum[k] = cum[k - 1] + (verts[k] - verts[k - 1]).norm();
    }
    let length = cum[cum.len() - 1];
    if length < 0.25 * spacing {
        return None;
    }
    let intervals = ((length / spacing) - 1e-6).ceil().max(1.0) as usize;
    let count = if closed { intervals.max(3) } else { intervals + 1 };
    let step = length / if closed { count } else { intervals } as f64;
    let mut out_p = Vec::with_capacity(count);
    let mut out_n = Vec::with_capacity(count);
    let mut k = 0;
    for i in 0..count {
        let s = if !closed && i == count - 1 { length } else { i as f64 * step };
        while k + 2 < verts.len() && cum[k + 1] < s {
            k += 1;
        }
        let span = cum[k + 1] - cum[k];
        let t = if span > 0.0 { ((s - cum[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out_p.push(verts[k] + (verts[k + 1] - verts[k]) * t);
        let n = norms[k] * (1.0 - t) + norms[k + 1] * t;
        out_n.push(n.try_normalize(1e-12).unwrap_or(norms[k]));
    }
    Some((out_p, out_n))
}

/// Tangents by central differences (one-sided at open ends), normals
/// re-orthogonalized against the tangent, `a = t × n`, cumulative length.
pub(crate) fn build_points(pos: &[Point3], nrm: &[Vec3], closed: bool) -> Vec<LayerPoint> {
    let n = pos.len();
    let mut out = Vec::with_capacity(n);
    let mut lambda = 0.0;
    for j in 0..n {
        let (prev, next) = if closed {
            (pos[(j + n - 1) % n], pos[(j + 1) % n])
        } else if j == 0 {
            (pos[0], pos[1.min(n - 1)])
        } else if j == n - 1 {
            (pos[n - 2], pos[n - 1])
        } else {
            (pos[j - 1], pos[j + 1])
        };
        let t = (next - prev).normalize();
        let raw = nrm[j] - nrm[j].dot(&t) * t;
        let normal = raw.try_normalize(1e-12).unwrap_or_else(|| any_perpendicular(&t));
        let a = t.cross(&normal).normalize();
        if j > 0 {
            lambda += (pos[j] - pos[j - 1]).norm();
        }
        out.push(LayerPoint {
            p: pos[j],
            t,
            n: normal,
            a,
            lambda,
        });
    }
    out
}

fn any_perpendicular(t: &Vec3) -> Vec3 {
    let seed = if t.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    (seed - seed.dot(t) * t).normalize()
}
