//! Alignment, deviation and width statistics for one scanned part, and the
//! text/key-value forms of the result.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    icp_register_to, measure_width, sample_mesh, split_edges, IcpConfig, MeshTarget, MetrologyError, PointCloud,
    RigidTransform, WidthConfig, MIN_EVAL_POINTS,
};
use super::width::AMBIGUOUS_BAND;
use super::IcpResult;
use crate::geometry::{SurfaceLocator, TriMesh};

const REFINE_FACTOR: f64 = 5.0;
const REFINE_TOL_SCALE: f64 = 1e-3;
const REFINE_ITER_SCALE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub icp: IcpConfig,
    pub init: RigidTransform,
    /// Intended bead width (mm). The scan's edges should sit at ±width/2
    /// from the mid-surface; 0 compares the scan to the surface itself.
    pub nominal_width: f64,
    pub width: WidthConfig,
    /// Mid-surface samples per mm² for the width measurement.
    pub width_density: f64,
    pub seed: u64,
    pub geometry: String,
    pub material: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            icp: IcpConfig::default(),
            init: RigidTransform::identity(),
            nominal_width: 0.0,
            width: WidthConfig::default(),
            width_density: 0.5,
            seed: 0,
            geometry: String::new(),
            material: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthStats {
    pub mean_mm: f64,
    pub std_mm: f64,
    /// σ(w)/μ(w) in percent.
    pub variation_pct: f64,
    pub samples: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub geometry: String,
    pub material: String,
    pub e_avg_mm: f64,
    pub e_max_mm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub width: Option<WidthStats>,
    /// Why `width` is missing, when it is.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub width_note: Option<String>,
    pub icp_residual_mm: f64,
    pub icp_iterations: usize,
    pub icp_diverged: bool,
    pub scan_points: usize,
    pub ambiguous_points: usize,
}

/// Aligns `scan` to the CAD mid-surface, then reports per-point deviation
/// `||d| − nominal/2|` (mean and max) and the bead-width statistics.
///
/// A scan lying on one side of the surface (or on it) has no width; the
/// report then carries `width: None` and a note instead of failing.
pub fn evaluate(cad: &TriMesh, scan: &PointCloud, config: &EvalConfig) -> Result<EvalReport, MetrologyError> {
    scan.require(MIN_EVAL_POINTS)?;
    if !(config.nominal_width >= 0.0) {
        return Err(MetrologyError::InvalidParameter("nominal width must be non-negative".into()));
    }
    let target = MeshTarget::new(cad);
    let locator = SurfaceLocator::new(cad);
    let coarse = icp_register_to(scan, &target, &config.init, &config.icp)?;
    let icp = refine(scan, &target, &locator, &coarse, &config.icp)?;
    let aligned = scan.transformed(&icp.transform);

    let half = config.nominal_width / 2.0;
    let errors: Vec<f64> = aligned
        .points
        .par_iter()
        .map(|p| (locator.closest(p).distance - half).abs())
        .collect();
    let e_avg = errors.iter().sum::<f64>() / errors.len() as f64;
    let e_max = errors.iter().copied().fold(0.0, f64::max);

    let (width, width_note, ambiguous) = match split_edges(&aligned, cad) {
        Ok(split) => {
            let samples = sample_mesh(cad, config.width_density, config.seed)?;
            let m = measure_width(&samples, &split.left, &split.right, &config.width)?;
            let (mean, std) = (m.mean(), m.std_dev());
            let stats = WidthStats {
                mean_mm: mean,
                std_mm: std,
                variation_pct: std / mean * 100.0,
                samples: m.samples,
                skipped: m.skipped,
            };
            (Some(stats), None, split.ambiguous)
        }
        Err(e @ MetrologyError::EmptySide(_)) => (None, Some(e.to_string()), count_ambiguous(&aligned, &locator)),
        Err(e) => return Err(e),
    };

    Ok(EvalReport {
        geometry: config.geometry.clone(),
        material: config.material.clone(),
        e_avg_mm: e_avg,
        e_max_mm: e_max,
        width,
        width_note,
        icp_residual_mm: icp.residual,
        icp_iterations: icp.iterations,
        icp_diverged: icp.diverged,
        scan_points: scan.len(),
        ambiguous_points: ambiguous,
    })
}

/// Trimming drops the largest residuals of a clean scan, which are the ones
/// that pin down the remaining misalignment, so the trimmed fit stalls a little
/// short of the optimum. Finish with untrimmed ICP on the points that fit
/// within `REFINE_FACTOR` times the trimmed residual (never less than the
/// ambiguity band); bulges and outliers stay excluded. Its stopping rule is
/// tighter because the report's maximum error is sensitive to leftover
/// rotation at the far corners of the part.
fn refine(
    scan: &PointCloud,
    target: &MeshTarget,
    locator: &SurfaceLocator,
    coarse: &IcpResult,
    config: &IcpConfig,
) -> Result<IcpResult, MetrologyError> {
    let cutoff = (coarse.residual * REFINE_FACTOR).max(AMBIGUOUS_BAND);
    let inliers: Vec<_> = scan
        .points
        .par_iter()
        .filter(|p| locator.closest(&coarse.transform.apply(p)).distance <= cutoff)
        .copied()
        .collect();
    if inliers.len() < MIN_EVAL_POINTS {
        return Ok(coarse.clone());
    }
    let fine_config = IcpConfig {
        trim: 0.0,
        tol: config.tol * REFINE_TOL_SCALE,
        max_iter: config.max_iter * REFINE_ITER_SCALE,
        ..*config
    };
    let fine = icp_register_to(&PointCloud::new(inliers), target, &coarse.transform, &fine_config)?;
    let mut result = if fine.residual <= coarse.residual { fine } else { coarse.clone() };
    result.iterations += coarse.iterations;
    Ok(result)
}

fn count_ambiguous(cloud: &PointCloud, locator: &SurfaceLocator) -> usize {
    cloud
        .points
        .par_iter()
        .filter(|p| locator.closest(p).distance <= AMBIGUOUS_BAND)
        .count()
}

fn title_case(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => "-".into(),
    }
}

impl EvalReport {
    pub const TABLE_HEADER: &'static str = "Geometry | Material | e_avg (mm) | e_max (mm) | σ(w)/μ(w) (%)";

    /// One row in the part-evaluation table, two decimals throughout.
    pub fn table_row(&self) -> String {
        let variation = self.width.map_or("-".to_string(), |w| format!("{:.2}", w.variation_pct));
        format!(
            "{} | {} | {:.2} | {:.2} | {}",
            title_case(&self.geometry),
            title_case(&self.material),
            self.e_avg_mm,
            self.e_max_mm,
            variation
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", Self::TABLE_HEADER);
        let _ = writeln!(s, "{}", self.table_row());
        let _ = writeln!(s);
        let _ = writeln!(s, "scan points        {}", self.scan_points);
        let _ = writeln!(s, "ambiguous points   {}", self.ambiguous_points);
        let _ = writeln!(
            s,
            "ICP residual       {:.6} mm after {} iterations{}",
            self.icp_residual_mm,
            self.icp_iterations,
            if self.icp_diverged { " (diverged; best kept)" } else { "" }
        );
        match (&self.width, &self.width_note) {
            (Some(w), _) => {
                let _ = writeln!(s, "width mean         {:.3} mm", w.mean_mm);
                let _ = writeln!(s, "width std          {:.3} mm", w.std_mm);
                let _ = writeln!(s, "width samples      {} ({} skipped)", w.samples, w.skipped);
            }
            (None, Some(note)) => {
                let _ = writeln!(s, "width              not measured: {note}");
            }
            (None, None) => {}
        }
        s
    }

    /// Key-value (TOML) form with full precision.
    pub fn to_key_values(&self) -> String {
        toml::to_string(self).expect("report fields are plain TOML values")
    }

    pub fn from_key_values(text: &str) -> Result<Self, MetrologyError> {
        toml::from_str(text).map_err(|e| MetrologyError::Parse {
            line: 0,
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{axis_rotation, Point3, Vec3};
    use crate::shapes::{bumpy_patch, wall};

    #[test]
    fn self_sampled_cad_has_no_error() {
        let cad = wall(100.0, 50.0, 2.0);
        let scan = sample_mesh(&cad, 1.0, 1).unwrap();
        let r = evaluate(&cad, &scan, &EvalConfig::default()).unwrap();
        assert!(r.e_avg_mm < 1e-6 && r.e_max_mm < 1e-6);
        assert!(r.width.is_none() && r.width_note.is_some());
        assert_eq!(r.ambiguous_points, scan.len());
    }

    #[test]
    fn sampled_bead_shell_is_nominal() {
        let cad = wall(100.0, 50.0, 1.0);
        let mid = sample_mesh(&cad, 2.0, 2).unwrap();
        let normals = mid.normals.as_ref().unwrap();
        let mut pts = Vec::new();
        for (p, n) in mid.points.iter().zip(normals) {
            pts.push(p + n * 1.5);
            pts.push(p - n * 1.5);
        }
        let config = EvalConfig {
            nominal_width: 3.0,
            ..EvalConfig::default()
        };
        let r = evaluate(&cad, &PointCloud::new(pts), &config).unwrap();
        assert!(r.e_avg_mm < 1e-6 && r.e_max_mm < 1e-6, "{r:?}");
        let w = r.width.unwrap();
        assert!((w.mean_mm - 3.0).abs() < 1e-6 && w.std_mm < 1e-6);
    }

    #[test]
    fn bulge_over_a_tenth_of_the_surface() {
        let cad = wall(100.0, 50.0, 2.0);
        let mut scan = sample_mesh(&cad, 2.0, 3).unwrap();
        let normals = scan.normals.clone().unwrap();
        // 25 × 20 mm patch = 10% of 100 × 50
        for (p, n) in scan.points.iter_mut().zip(&normals) {
            if (40.0..65.0).contains(&p.x) && (15.0..35.0).contains(&p.z) {
                *p += n * 0.4;
            }
        }
        let r = evaluate(&cad, &scan, &EvalConfig::default()).unwrap();
        assert!((r.e_max_mm - 0.4).abs() < 0.02, "e_max {}", r.e_max_mm);
        assert!((r.e_avg_mm - 0.04).abs() < 0.01, "e_avg {}", r.e_avg_mm);
        assert!(r.e_avg_mm <= r.e_max_mm);
    }

    #[test]
    fn rigid_pre_transform_does_not_change_report() {
        let cad = bumpy_patch(50.0, 1.0);
        let scan = sample_mesh(&cad, 1.0, 4).unwrap();
        let base = evaluate(&cad, &scan, &EvalConfig::default()).unwrap();
        let t = RigidTransform::new(axis_rotation(&Vec3::new(0.2, 1.0, 0.3).normalize(), 4f64.to_radians()), Vec3::new(1.5, -1.0, 2.0));
        let moved = evaluate(&cad, &scan.transformed(&t), &EvalConfig::default()).unwrap();
        assert!((base.e_avg_mm - moved.e_avg_mm).abs() <= 1e-3, "{} vs {}", base.e_avg_mm, moved.e_avg_mm);
        assert!((base.e_max_mm - moved.e_max_mm).abs() <= 1e-3, "{} vs {}", base.e_max_mm, moved.e_max_mm);
    }

    #[test]
    fn too_few_points() {
        let cad = wall(10.0, 10.0, 1.0);
        let scan = PointCloud::new(vec![Point3::zeros(); 9]);
        assert_eq!(
            evaluate(&cad, &scan, &EvalConfig::default()),
            Err(MetrologyError::TooFewPoints { needed: 10, found: 9 })
        );
    }

    fn report_row(geometry: &str, material: &str, e_avg: f64, e_max: f64, var: f64) -> EvalReport {
        EvalReport {
            geometry: geometry.into(),
            material: material.into(),
            e_avg_mm: e_avg,
            e_max_mm: e_max,
            width: Some(WidthStats {
                mean_mm: 5.0,
                std_mm: 5.0 * var / 100.0,
                variation_pct: var,
                samples: 100,
                skipped: 0,
            }),
            width_note: None,
            icp_residual_mm: 0.0,
            icp_iterations: 1,
            icp_diverged: false,
            scan_points: 1000,
            ambiguous_points: 0,
        }
    }

    #[test]
    fn table_rows_render_identically() {
        let rows = [
            ("bell", "aluminum", 0.39, 1.22, 8.73, "Bell | Aluminum | 0.39 | 1.22 | 8.73"),
            ("bell", "steel", 0.48, 1.60, 13.45, "Bell | Steel | 0.48 | 1.60 | 13.45"),
            ("bell", "stainless", 0.67, 1.46, 7.75, "Bell | Stainless | 0.67 | 1.46 | 7.75"),
            ("blade", "aluminum", 0.25, 1.69, 11.22, "Blade | Aluminum | 0.25 | 1.69 | 11.22"),
            ("blade", "steel", 0.42, 2.24, 13.20, "Blade | Steel | 0.42 | 2.24 | 13.20"),
            ("blade", "stainless", 0.25, 1.65, 12.57, "Blade | Stainless | 0.25 | 1.65 | 12.57"),
        ];
        for (g, m, a, x, v, expected) in rows {
            let r = report_row(g, m, a, x, v);
            assert_eq!(r.table_row(), expected);
            assert!(r.to_text().contains(expected));
            assert_eq!(EvalReport::from_key_values(&r.to_key_values()).unwrap(), r);
        }
    }

    #[test]
    fn key_values_keep_missing_width_missing() {
        let mut r = report_row("wall", "steel", 0.0, 0.0, 0.0);
        r.width = None;
        r.width_note = Some("edge split left the left side empty".into());
        let text = r.to_key_values();
        assert!(!text.contains("variation_pct"));
        assert_eq!(EvalReport::from_key_values(&text).unwrap(), r);
        assert!(r.table_row().ends_with("| -"));
    }
}
