//! Trimmed point-to-point ICP with a closed-form (SVD) rigid update.

use nalgebra::{Matrix3, UnitQuaternion, Vector3, Vector6};
use rayon::prelude::*;

use super::{MetrologyError, PointCloud, RigidTransform};
use crate::geometry::{KdTree, Point3, SurfaceLocator, TriMesh};

/// Anything that can answer "closest point to p".
pub trait IcpTarget: Sync {
    fn closest(&self, p: &Point3) -> Point3;
}

pub struct CloudTarget {
    points: Vec<Point3>,
    tree: KdTree,
}

impl CloudTarget {
    pub fn new(cloud: &PointCloud) -> Self {
        CloudTarget {
            points: cloud.points.clone(),
            tree: KdTree::new(&cloud.points),
        }
    }
}

impl IcpTarget for CloudTarget {
    fn closest(&self, p: &Point3) -> Point3 {
        self.points[self.tree.nearest(p, 1)[0].0]
    }
}

/// Closest point on the triangles themselves rather than on samples of them.
pub struct MeshTarget<'a> {
    locator: SurfaceLocator<'a>,
}

impl<'a> MeshTarget<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        MeshTarget {
            locator: SurfaceLocator::new(mesh),
        }
    }
}

impl IcpTarget for MeshTarget<'_> {
    fn closest(&self, p: &Point3) -> Point3 {
        self.locator.closest(p).point
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpConfig {
    pub max_iter: usize,
    /// Stop once the mean correspondence distance improves by less (mm).
    pub tol: f64,
    /// Fraction of worst correspondences ignored in each update.
    pub trim: f64,
    /// Consecutive growths of the mean distance treated as divergence.
    pub divergence_run: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig {
            max_iter: 100,
            tol: 1e-6,
            trim: 0.2,
            divergence_run: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps the source into the target frame.
    pub transform: RigidTransform,
    /// Trimmed mean correspondence distance at `transform` (mm).
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the distance grew for `divergence_run` iterations in a row;
    /// `transform` is then the best one seen.
    pub diverged: bool,
    /// Mean distance of every accepted (improving) iterate, in order.
    pub history: Vec<f64>,
}

/// Registers `source` onto the point cloud `target`.
pub fn icp_register(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    config: &IcpConfig,
) -> Result<IcpResult, MetrologyError> {
    if target.is_empty() {
        return Err(MetrologyError::TooFewPoints { needed: 1, found: 0 });
    }
    icp_register_to(source, &CloudTarget::new(target), init, config)
}

pub fn icp_register_to(
    source: &PointCloud,
    target: &impl IcpTarget,
    init: &RigidTransform,
    config: &IcpConfig,
) -> Result<IcpResult, MetrologyError> {
    source.require(1)?;
    if config.max_iter == 0 || !(config.tol >= 0.0) || !(0.0..1.0).contains(&config.trim) {
        return Err(MetrologyError::InvalidParameter(
            "ICP needs max_iter > 0, tol >= 0 and trim in [0, 1)".into(),
        ));
    }
    let n = source.len();
    let keep = (n - (n as f64 * config.trim).floor() as usize).max(1);

    let mut current = *init;
    let mut best = (current, f64::INFINITY);
    let mut previous = f64::INFINITY;
    let mut growth = 0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    // plain iterate to fall back to if an extrapolated one does not improve
    let mut fallback: Option<RigidTransform> = None;
    let mut last_step: Option<Vector6<f64>> = None;

    while iterations < config.max_iter {
        iterations += 1;
        let mut pairs: Vec<(usize, Point3, Point3, f64)> = source
            .points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let moved = current.apply(p);
                let q = target.closest(&moved);
                (i, moved, q, (moved - q).norm())
            })
            .collect();
        pairs.sort_by(|a, b| a.3.total_cmp(&b.3).then(a.0.cmp(&b.0)));
        pairs.truncate(keep);
        let mean = pairs.iter().map(|c| c.3).sum::<f64>() / keep as f64;

        if let Some(plain) = fallback.take() {
            if mean >= previous {
                current = plain;
                last_step = None;
                continue;
            }
        }
        if mean < best.1 {
            best = (current, mean);
            history.push(mean);
        }
        if (previous - mean).abs() < config.tol || mean == 0.0 {
            converged = true;
            break;
        }
        if mean > previous {
            growth += 1;
            if growth >= config.divergence_run {
                diverged = true;
                log::warn!("ICP diverging after {iterations} iterations; keeping best residual {:.6}", best.1);
                break;
            }
        } else {
            growth = 0;
        }
        previous = mean;

        let next = kabsch(pairs.iter().map(|c| (c.1, c.2))).compose(&current);
        let step = params(&next) - params(&current);
        current = next;
        // On smooth targets successive steps keep their direction and shrink
        // geometrically; jump ahead by the rest of the geometric series.
        if let Some(prev) = last_step {
            let (a, b) = (step.norm(), prev.norm());
            if a > 0.0 && b > a && step.dot(&prev) > EXTRAPOLATION_COS * a * b {
                let ratio = a / b;
                let gain = (ratio / (1.0 - ratio)).min(MAX_EXTRAPOLATION);
                fallback = Some(next);
                current = from_params(&(params(&next) + step * gain));
            }
        }
        last_step = Some(step);
    }

    Ok(IcpResult {
        transform: best.0,
        residual: best.1,
        iterations,
        converged,
        diverged,
        history,
    })
}

const EXTRAPOLATION_COS: f64 = 0.9;
const MAX_EXTRAPOLATION: f64 = 100.0;

fn params(t: &RigidTransform) -> Vector6<f64> {
    let r = t.rotation.scaled_axis();
    Vector6::new(r.x, r.y, r.z, t.translation.x, t.translation.y, t.translation.z)
}

fn from_params(v: &Vector6<f64>) -> RigidTransform {
    RigidTransform::new(
        nalgebra::Rotation3::from_scaled_axis(Vector3::new(v[0], v[1], v[2])),
        Vector3::new(v[3], v[4], v[5]),
    )
}

/// Least-squares rigid motion taking each `p` onto its `q`.
pub(crate) fn kabsch(pairs: impl Iterator<Item = (Point3, Point3)> + Clone) -> RigidTransform {
    let mut count = 0.0;
    let (mut cp, mut cq) = (Point3::zeros(), Point3::zeros());
    for (p, q) in pairs.clone() {
        cp += p;
        cq += q;
        count += 1.0;
    }
    if count == 0.0 {
        return RigidTransform::identity();
    }
    cp /= count;
    cq /= count;
    let mut h = Matrix3::zeros();
    for (p, q) in pairs {
        h += (p - cp) * (q - cq).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let rotation = UnitQuaternion::from_matrix(&r).to_rotation_matrix();
    RigidTransform::new(rotation, cq - rotation * cp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{axis_rotation, Vec3};
    use crate::metrology::sample_mesh;
    use crate::shapes::{blade, bumpy_patch, BladeParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blade_cloud(seed: u64) -> PointCloud {
        sample_mesh(&blade(&BladeParams::default()), 1.0, seed).unwrap()
    }

    fn known() -> RigidTransform {
        RigidTransform::new(axis_rotation(&Vec3::z(), 5f64.to_radians()), Vec3::new(2.0, -1.0, 0.5))
    }

    #[test]
    fn kabsch_exact_on_clean_pairs() {
        let t = known();
        let pts = blade_cloud(1).points;
        let step = kabsch(pts.iter().map(|p| (*p, t.apply(p))));
        let (angle, shift) = step.difference(&t);
        assert!(angle < 1e-12 && shift < 1e-10);
    }

    #[test]
    fn identical_clouds_give_identity() {
        let cloud = blade_cloud(2);
        let r = icp_register(&cloud, &cloud, &RigidTransform::identity(), &IcpConfig::default()).unwrap();
        let (angle, shift) = r.transform.difference(&RigidTransform::identity());
        assert!(angle < 1e-9 && shift < 1e-9);
        assert_eq!(r.residual, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn recovers_known_transform() {
        let source = blade_cloud(3);
        let t = known();
        let target = source.transformed(&t);
        let r = icp_register(&source, &target, &RigidTransform::identity(), &IcpConfig::default()).unwrap();
        let (angle, shift) = r.transform.difference(&t);
        assert!(angle < 1e-3 && shift < 1e-3, "angle {angle} shift {shift}");
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tolerates_outliers() {
        let source = blade_cloud(4);
        let t = known();
        let mut target = source.transformed(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (lo, hi) = (
            target.points.iter().fold(Point3::repeat(f64::INFINITY), |a, p| a.inf(p)),
            target.points.iter().fold(Point3::repeat(f64::NEG_INFINITY), |a, p| a.sup(p)),
        );
        let n = target.len();
        for i in rand::seq::index::sample(&mut rng, n, n * 3 / 10) {
            target.points[i] = Point3::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            );
        }
        let r = icp_register(&source, &target, &RigidTransform::identity(), &IcpConfig::default()).unwrap();
        let (angle, shift) = r.transform.difference(&t);
        assert!(angle < 0.05 && shift < 0.5, "angle {angle} shift {shift}");
    }

    #[test]
    fn mesh_target_on_curved_patch() {
        let mesh = bumpy_patch(50.0, 1.0);
        let source = sample_mesh(&mesh, 1.0, 6).unwrap();
        let t = RigidTransform::new(axis_rotation(&Vec3::new(0.2, 1.0, 0.3).normalize(), 0.05), Vec3::new(1.0, -0.5, 1.0));
        let moved = source.transformed(&t.inverse());
        let untrimmed = IcpConfig { trim: 0.0, ..IcpConfig::default() };
        let r = icp_register_to(&moved, &MeshTarget::new(&mesh), &RigidTransform::identity(), &untrimmed).unwrap();
        let (angle, shift) = r.transform.difference(&t);
        assert!(angle < 1e-4 && shift < 1e-2, "angle {angle} shift {shift}");
        assert!(r.residual < 1e-4 && r.converged);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn divergence_guard_returns_best() {
        struct Receding;
        impl IcpTarget for Receding {
            // Each query pushes the target further away, so distances keep growing.
            fn closest(&self, p: &Point3) -> Point3 {
                p * 2.0 + Vec3::new(1.0, 0.0, 0.0)
            }
        }
        let cloud = PointCloud::new((0..20).map(|i| Point3::new(i as f64, (i * i) as f64 * 0.1, 0.0)).collect());
        let r = icp_register_to(&cloud, &Receding, &RigidTransform::identity(), &IcpConfig::default()).unwrap();
        assert!(r.diverged);
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.transform, RigidTransform::identity());
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_bad_config() {
        let cloud = blade_cloud(7);
        let bad = IcpConfig { trim: 1.0, ..IcpConfig::default() };
        assert!(icp_register(&cloud, &cloud, &RigidTransform::identity(), &bad).is_err());
        assert!(icp_register(&PointCloud::default(), &cloud, &RigidTransform::identity(), &IcpConfig::default()).is_err());
    }
}
