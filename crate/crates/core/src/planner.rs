//! Motion planning: resample layer paths into evenly spaced torch waypoints,
//! attach positioner states, and give every segment the torch speed that
//! keeps the relative deposition speed constant.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{Point3, Rotation3, Vec3};
use crate::positioner::{align_directions, base_orientation, AlignConfig, PositionerError, PositionerState, PositionerTrajectory};
use crate::slicer::{LayerPoint, SlicePlan};

/// Default waypoint spacing along the path (mm).
pub const DEFAULT_WAYPOINT_SPACING: f64 = 5.0;

/// Built-in material table.
pub const BUILTIN_MATERIALS: &str = include_str!("../config/materials.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan has no points")]
    EmptyPlan,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectory has {found} states, expected {expected}")]
    TrajectoryMismatch { expected: usize, found: usize },
    #[error("spiral printing needs one segment per layer; layer {0} has several")]
    NotSpiral(usize),
    #[error("material table: {0}")]
    Material(String),
    #[error(transparent)]
    Positioner(#[from] PositionerError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevicePose {
    pub position: Point3,
    pub orientation: Rotation3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    /// Torch tool frame in the positioner-plate frame; its z axis points into
    /// the deposit.
    pub torch: DevicePose,
    pub positioner: PositionerState,
    /// Deposit while moving to this waypoint.
    pub arc_on: bool,
    /// Build direction at the waypoint, plate frame.
    pub direction: Vec3,
    /// Deposition path this waypoint belongs to.
    pub path: usize,
}

impl Waypoint {
    /// Torch position in the world frame after the positioner has moved.
    pub fn world_position(&self) -> Point3 {
        base_orientation(&self.positioner) * self.torch.position
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    MoveL,
    MoveC,
    MoveJ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSegment {
    pub primitive: Primitive,
    pub target: Waypoint,
    /// Intermediate pose of a circular move.
    pub via: Option<DevicePose>,
    /// Torch path speed (mm/s).
    pub speed: f64,
    /// World-frame torch travel of this segment (mm).
    pub world_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionProgram {
    pub name: String,
    pub segments: Vec<MotionSegment>,
    pub d_r: f64,
    pub v_r: f64,
    pub material: String,
    pub feed_ipm: f64,
}

impl MotionProgram {
    /// Number of continuous deposition spans.
    pub fn arc_spans(&self) -> usize {
        let mut spans = 0;
        let mut on = false;
        for s in &self.segments {
            if s.target.arc_on && !on {
                spans += 1;
            }
            on = s.target.arc_on;
        }
        spans
    }

    /// Total time summed over torch segments and over positioner segments.
    /// Every segment lasts `d_r / v_r`, so the two agree.
    pub fn durations(&self) -> (f64, f64) {
        let nominal = self.d_r / self.v_r;
        let torch = self
            .segments
            .iter()
            .map(|s| if s.world_distance > 0.0 { s.world_distance / s.speed } else { nominal })
            .sum();
        (torch, nominal * self.segments.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MaterialParams {
    #[serde(skip)]
    pub name: String,
    pub wire: String,
    /// mm
    pub wire_diameter: f64,
    /// Torch travel speed (mm/s).
    pub speed: f64,
    /// Wire feed (in/min).
    pub feed_ipm: f64,
    /// Deposit height per layer (mm).
    pub layer_height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    materials: BTreeMap<String, MaterialParams>,
}

impl MaterialTable {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_MATERIALS).expect("built-in material table parses")
    }

    /// One `[name]` table per material.
    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let raw: BTreeMap<String, MaterialParams> =
            toml::from_str(text).map_err(|e| PlanError::Material(e.to_string()))?;
        let mut materials = BTreeMap::new();
        for (name, mut m) in raw {
            for (field, v) in [
                ("wire_diameter", m.wire_diameter),
                ("speed", m.speed),
                ("feed_ipm", m.feed_ipm),
                ("layer_height", m.layer_height),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(PlanError::Material(format!("{name}.{field} must be positive")));
                }
            }
            m.name = name.clone();
            materials.insert(name, m);
        }
        Ok(MaterialTable { materials })
    }

    pub fn get(&self, name: &str) -> Result<&MaterialParams, PlanError> {
        self.materials
            .get(name)
            .ok_or_else(|| PlanError::Material(format!("unknown material '{name}'")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }
}

/// How layer curves become deposition paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub d_r: f64,
    /// Chain all layers into one path (for warped plans).
    pub spiral: bool,
    /// Repeat the first waypoint at the end of closed layers.
    pub close_loops: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            d_r: DEFAULT_WAYPOINT_SPACING,
            spiral: false,
            close_loops: false,
        }
    }
}

/// A resampled point on a deposition path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub p: Point3,
    pub t: Vec3,
    pub n: Vec3,
    pub a: Vec3,
    pub path: usize,
}

/// Resamples every deposition path at spacing close to (never above) `d_r`.
/// Open paths keep both ends; closed layers give evenly spaced points
/// around the loop.
pub fn sample_paths(plan: &SlicePlan, options: &PathOptions) -> Result<Vec<PathSample>, PlanError> {
    if !(options.d_r > 0.0 && options.d_r.is_finite()) {
        return Err(PlanError::InvalidParameter(format!("d_r must be positive, got {}", options.d_r)));
    }
    let mut paths: Vec<(Vec<LayerPoint>, bool)> = Vec::new();
    if options.spiral {
        let mut chained = Vec::new();
        for layer in &plan.layers {
            if layer.segments.len() > 1 {
                return Err(PlanError::NotSpiral(layer.index));
            }
            chained.extend(layer.segments.iter().flatten().copied());
        }
        paths.push((chained, false));
    } else {
        for layer in &plan.layers {
            for seg in &layer.segments {
                paths.push((seg.clone(), layer.closed));
            }
        }
    }
    let mut out = Vec::new();
    for (points, closed) in paths.iter().filter(|(p, _)| p.len() >= 2) {
        let index = out.last().map_or(0, |s: &PathSample| s.path + 1);
        let mut samples = resample_frames(points, *closed, options.d_r, index);
        if *closed && options.close_loops {
            samples.push(samples[0]);
        }
        out.extend(samples);
    }
    if out.is_empty() {
        return Err(PlanError::EmptyPlan);
    }
    Ok(out)
}

fn resample_frames(points: &[LayerPoint], closed: bool, d_r: f64, path: usize) -> Vec<PathSample> {
    let mut verts: Vec<LayerPoint> = points.to_vec();
    if closed {
        verts.push(points[0]);
    }
    let mut cum = vec![0.0; verts.len()];
    for k in 1..verts.len() {
        cum[k] = cum[k - 1] + (verts[k].p - verts[k - 1].p).norm();
    }
    let length = cum[cum.len() - 1];
    let intervals = ((length / d_r) - 1e-6).ceil().max(1.0) as usize;
    let count = if closed { intervals.max(3) } else { intervals + 1 };
    let step = length / if closed { count } else { intervals } as f64;
    let mut k = 0;
    (0..count)
        .map(|i| {
            let s = if !closed && i == count - 1 { length } else { i as f64 * step };
            while k + 2 < verts.len() && cum[k + 1] < s {
                k += 1;
            }
            let span = cum[k + 1] - cum[k];
            let u = if span > 0.0 { ((s - cum[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
            let (v0, v1) = (&verts[k], &verts[k + 1]);
            let a = (v0.a * (1.0 - u) + v1.a * u).try_normalize(1e-12).unwrap_or(v0.a);
            let n_raw = v0.n * (1.0 - u) + v1.n * u;
            let n = (n_raw - n_raw.dot(&a) * a).try_normalize(1e-12).unwrap_or(v0.n);
            PathSample {
                p: v0.p + (v1.p - v0.p) * u,
                t: n.cross(&a),
                n,
                a,
                path,
            }
        })
        .collect()
}

/// Torch frame: z along `−a`, x along the path tangent.
pub fn torch_orientation(t: &Vec3, a: &Vec3) -> Rotation3 {
    let z = -a.normalize();
    let x = (t - t.dot(&z) * z).normalize();
    let y = z.cross(&x);
    Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]))
}

/// Builds waypoints from the resampled paths and a trajectory with one state
/// per sample. The first waypoint of each path is the travel move to its
/// start and carries `arc_on = false`.
pub fn discretize(
    plan: &SlicePlan,
    traj: &PositionerTrajectory,
    options: &PathOptions,
) -> Result<Vec<Waypoint>, PlanError> {
    let samples = sample_paths(plan, options)?;
    if samples.len() != traj.len() {
        return Err(PlanError::TrajectoryMismatch {
            expected: samples.len(),
            found: traj.len(),
        });
    }
    Ok(waypoints_from(&samples, traj))
}

fn waypoints_from(samples: &[PathSample], traj: &PositionerTrajectory) -> Vec<Waypoint> {
    samples
        .iter()
        .zip(&traj.states)
        .enumerate()
        .map(|(k, (s, q))| Waypoint {
            torch: DevicePose {
                position: s.p,
                orientation: torch_orientation(&s.t, &s.a),
            },
            positioner: *q,
            arc_on: k > 0 && samples[k - 1].path == s.path,
            direction: s.a,
            path: s.path,
        })
        .collect()
}

/// One linear move per waypoint. Speed `v1 = d1 / (d_r / v_r)` where `d1` is
/// the world-frame torch travel; a stationary torch moves at `v_r`.
pub fn coordinate_speeds(waypoints: &[Waypoint], d_r: f64, v_r: f64) -> Result<Vec<MotionSegment>, PlanError> {
    if !(v_r > 0.0 && v_r.is_finite()) {
        return Err(PlanError::InvalidParameter(format!("v_r must be positive, got {v_r}")));
    }
    if !(d_r > 0.0 && d_r.is_finite()) {
        return Err(PlanError::InvalidParameter(format!("d_r must be positive, got {d_r}")));
    }
    let mut previous: Option<Point3> = None;
    Ok(waypoints
        .iter()
        .map(|w| {
            let world = w.world_position();
            let d1 = previous.map_or(0.0, |p| (world - p).norm());
            previous = Some(world);
            MotionSegment {
                primitive: Primitive::MoveL,
                target: *w,
                via: None,
                speed: segment_speed(d1, d_r, v_r),
                world_distance: d1,
            }
        })
        .collect())
}

/// `d1 / (d_r / v_r)`, or `v_r` when the torch does not move.
pub fn segment_speed(d1: f64, d_r: f64, v_r: f64) -> f64 {
    if d1 > 0.0 {
        d1 / (d_r / v_r)
    } else {
        v_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub name: String,
    pub d_r: f64,
    pub spiral: bool,
    pub align: AlignConfig,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            name: "print".into(),
            d_r: DEFAULT_WAYPOINT_SPACING,
            spiral: false,
            align: AlignConfig::default(),
        }
    }
}

/// Full planning pass: resample, align the positioner, build waypoints and
/// coordinate speeds. Relative speed comes from the material.
pub fn plan_print(
    plan: &SlicePlan,
    material: &MaterialParams,
    options: &PlanOptions,
) -> Result<(MotionProgram, PositionerTrajectory), PlanError> {
    let path_options = PathOptions {
        d_r: options.d_r,
        spiral: options.spiral,
        close_loops: !options.spiral,
    };
    let samples = sample_paths(plan, &path_options)?;
    let directions: Vec<Vec3> = samples.iter().map(|s| s.a).collect();
    let traj = align_directions(&directions, &options.align)?;
    let waypoints = waypoints_from(&samples, &traj);
    let segments = coordinate_speeds(&waypoints, options.d_r, material.speed)?;
    log::info!(
        "planned {} waypoints over {} paths for {}",
        segments.len(),
        samples.last().map_or(0, |s| s.path + 1),
        material.name
    );
    Ok((
        MotionProgram {
            name: options.name.clone(),
            segments,
            d_r: options.d_r,
            v_r: material.speed,
            material: material.name.clone(),
            feed_ipm: material.feed_ipm,
        },
        traj,
    ))
}
