//! Two-axis positioner: tilt (q1, about −y) then turn (q2, about −z) so the
//! local build direction of the part points straight up.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{axis_rotation, Rotation3, Vec3};

/// Default tilt range (rad).
pub const Q1_LIMIT: f64 = 95.0 * PI / 180.0;
/// Default |q1| below which q2 is considered indeterminate (rad).
pub const SINGULAR_THRESHOLD: f64 = 3.0 * PI / 180.0;
pub const SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PositionerError {
    #[error("direction is not a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("no solution within tilt limits at waypoint {index} (q1 = {q1_deg:.3}°)")]
    LimitViolation { index: usize, q1_deg: f64 },
    #[error("smoothing window must be odd and at least 3, got {0}")]
    InvalidWindow(usize),
    #[error("singularity threshold must be positive")]
    InvalidThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PositionerState {
    /// Tilt (rad).
    pub q1: f64,
    /// Turn (rad), continuous without wrapping.
    pub q2: f64,
}

impl PositionerState {
    pub fn new(q1: f64, q2: f64) -> Self {
        PositionerState { q1, q2 }
    }

    pub fn from_degrees(q1: f64, q2: f64) -> Self {
        PositionerState::new(q1.to_radians(), q2.to_radians())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub q1_min: f64,
    pub q1_max: f64,
}

impl Default for JointLimits {
    fn default() -> Self {
        JointLimits {
            q1_min: -Q1_LIMIT,
            q1_max: Q1_LIMIT,
        }
    }
}

impl JointLimits {
    pub fn allows(&self, q: &PositionerState) -> bool {
        q.q1 >= self.q1_min - 1e-12 && q.q1 <= self.q1_max + 1e-12
    }
}

/// Which of the two tilt branches to prefer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchPolicy {
    #[default]
    NegativeTilt,
    PositiveTilt,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PositionerTrajectory {
    pub states: Vec<PositionerState>,
    /// q2 was held because |q1| fell below the singularity threshold.
    pub singular_flags: Vec<bool>,
    /// The state was changed by the averaging filter.
    pub smoothed: Vec<bool>,
}

impl PositionerTrajectory {
    pub fn new(states: Vec<PositionerState>) -> Self {
        let n = states.len();
        PositionerTrajectory {
            states,
            singular_flags: vec![false; n],
            smoothed: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The state still aligns its direction exactly: neither held nor
    /// filtered.
    pub fn is_exact(&self, k: usize) -> bool {
        !self.singular_flags[k] && !self.smoothed[k]
    }

    pub fn max_q2_step(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| (w[1].q2 - w[0].q2).abs())
            .fold(0.0, f64::max)
    }

    /// `index,q1_deg,q2_deg,singular` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,q1_deg,q2_deg,singular\n");
        for (k, q) in self.states.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{:.6},{:.6},{}",
                q.q1.to_degrees(),
                q.q2.to_degrees(),
                u8::from(self.singular_flags[k])
            );
        }
        out
    }
}

/// Plate orientation in the world frame: `R(−y, q1)·R(−z, q2)`.
pub fn base_orientation(q: &PositionerState) -> Rotation3 {
    axis_rotation(&-Vec3::y(), q.q1) * axis_rotation(&-Vec3::z(), q.q2)
}

/// Both states that bring plate-frame direction `a` to world up.
pub fn gravity_align(a: &Vec3) -> Result<[PositionerState; 2], PositionerError> {
    let norm = a.norm();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(PositionerError::NonUnitDirection(norm));
    }
    let tilt = (a.x * a.x + a.y * a.y).sqrt().atan2(a.z);
    let turn = if a.x == 0.0 && a.y == 0.0 { 0.0 } else { a.y.atan2(a.x) };
    Ok([PositionerState::new(tilt, turn), PositionerState::new(-tilt, turn + PI)])
}

/// `angle` shifted by whole turns to lie nearest `reference`.
pub fn unwrap_near(angle: f64, reference: f64) -> f64 {
    angle + 2.0 * PI * ((reference - angle) / (2.0 * PI)).round()
}

/// Picks a branch by `policy`, falling back to the other branch when the
/// preferred one is outside `limits`. q2 is unwrapped toward `previous_q2`.
pub fn select_solution(
    solutions: &[PositionerState; 2],
    policy: BranchPolicy,
    previous_q2: Option<f64>,
    limits: &JointLimits,
) -> Result<PositionerState, PositionerError> {
    let negative_first = solutions[0].q1 > solutions[1].q1;
    let (neg, pos) = if negative_first {
        (solutions[1], solutions[0])
    } else {
        (solutions[0], solutions[1])
    };
    let order = match policy {
        BranchPolicy::NegativeTilt => [neg, pos],
        BranchPolicy::PositiveTilt => [pos, neg],
    };
    let chosen = order
        .into_iter()
        .find(|q| limits.allows(q))
        .ok_or(PositionerError::LimitViolation {
            index: 0,
            q1_deg: order[0].q1.to_degrees(),
        })?;
    Ok(PositionerState {
        q1: chosen.q1,
        q2: previous_q2.map_or(chosen.q2, |p| unwrap_near(chosen.q2, p)),
    })
}

/// Holds q2 at its last value before every run of states with
/// `|q1| < threshold`; a run at the very start holds the first state's q2.
/// States after a run are re-unwrapped against the held value.
pub fn handle_singularity(traj: &PositionerTrajectory, threshold: f64) -> PositionerTrajectory {
    let mut out = traj.clone();
    let n = out.states.len();
    for k in 0..n {
        let singular = out.states[k].q1.abs() < threshold;
        out.singular_flags[k] = singular;
        if singular {
            out.states[k].q2 = if k == 0 { traj.states[0].q2 } else { out.states[k - 1].q2 };
        } else if k > 0 {
            out.states[k].q2 = unwrap_near(out.states[k].q2, out.states[k - 1].q2);
        }
    }
    out
}

/// Moving average of q1 and q2 over states within `2·window` of a held
/// state. The averaging radius shrinks toward the ends of each filtered run
/// so the run joins its unfiltered neighbors without a step.
pub fn smooth_trajectory(
    traj: &PositionerTrajectory,
    window: usize,
    limits: &JointLimits,
) -> Result<PositionerTrajectory, PositionerError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(PositionerError::InvalidWindow(window));
    }
    let n = traj.states.len();
    let reach = 2 * window;
    let mut in_scope = vec![false; n];
    for (k, _) in traj.singular_flags.iter().enumerate().filter(|(_, &f)| f) {
        for s in in_scope.iter_mut().take((k + reach + 1).min(n)).skip(k.saturating_sub(reach)) {
            *s = true;
        }
    }
    let mut out = traj.clone();
    let half = window / 2;
    let mut k = 0;
    while k < n {
        if !in_scope[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && in_scope[k] {
            k += 1;
        }
        let end = k - 1;
        for i in start..=end {
            let r = half.min(i - start).min(end - i);
            if r == 0 {
                continue;
            }
            let span = &traj.states[i - r..=i + r];
            let count = span.len() as f64;
            let center = traj.states[i];
            let q1 = center.q1 + span.iter().map(|q| q.q1 - center.q1).sum::<f64>() / count;
            let q2 = center.q2 + span.iter().map(|q| q.q2 - center.q2).sum::<f64>() / count;
            let changed = q1 != traj.states[i].q1 || q2 != traj.states[i].q2;
            out.states[i] = PositionerState { q1, q2 };
            out.smoothed[i] = changed;
            if !limits.allows(&out.states[i]) {
                return Err(PositionerError::LimitViolation {
                    index: i,
                    q1_deg: q1.to_degrees(),
                });
            }
        }
    }
    Ok(out)
}

/// Options for [`align_directions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    pub policy: BranchPolicy,
    pub limits: JointLimits,
    pub singular_threshold: f64,
    pub window: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            policy: BranchPolicy::default(),
            limits: JointLimits::default(),
            singular_threshold: SINGULAR_THRESHOLD,
            window: SMOOTHING_WINDOW,
        }
    }
}

/// Solves, selects, holds and smooths a positioner trajectory for a
/// sequence of build directions.
pub fn align_directions(directions: &[Vec3], config: &AlignConfig) -> Result<PositionerTrajectory, PositionerError> {
    if !(config.singular_threshold > 0.0) {
        return Err(PositionerError::InvalidThreshold);
    }
    let mut states = Vec::with_capacity(directions.len());
    let mut previous = None;
    for (index, a) in directions.iter().enumerate() {
        let pair = gravity_align(a)?;
        let q = select_solution(&pair, config.policy, previous, &config.limits).map_err(|e| match e {
            PositionerError::LimitViolation { q1_deg, .. } => PositionerError::LimitViolation { index, q1_deg },
            other => other,
        })?;
        previous = Some(q.q2);
        states.push(q);
    }
    let held = handle_singularity(&PositionerTrajectory::new(states), config.singular_threshold);
    smooth_trajectory(&held, config.window, &config.limits)
}
