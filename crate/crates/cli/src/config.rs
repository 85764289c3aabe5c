//! Pipeline parameters: defaults, TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use waam_core::emitter::Dialect;
use waam_core::planner::MaterialTable;

use crate::{Stage, StageError};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mesh: Option<PathBuf>,
    /// Layer increment (mm).
    pub h: f64,
    /// Point spacing along a layer (mm).
    pub sampling: f64,
    /// Mesh vertices used per local plane fit.
    pub neighbors: usize,
    /// Robot waypoint spacing (mm).
    pub d_r: f64,
    pub material: String,
    /// Extra material table replacing the built-in one.
    pub materials_file: Option<PathBuf>,
    pub dialect: String,
    pub spiral: bool,
    pub out: PathBuf,
    pub seed: u64,
    /// Points per mm² when a scan is sampled from the CAD itself.
    pub scan_density: f64,
    /// Bead width the scan is compared against; 0 compares to the surface.
    pub nominal_width: f64,
    /// Label for the evaluation report; the mesh file stem when absent.
    pub geometry: Option<String>,
    pub px_per_mm: f64,
    /// Intended torch-to-deposit distance (mm) during monitoring.
    pub standoff: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mesh: None,
            h: 1.0,
            sampling: 0.5,
            neighbors: 50,
            d_r: 5.0,
            material: "aluminum".into(),
            materials_file: None,
            dialect: "rapid".into(),
            spiral: false,
            out: PathBuf::from("out"),
            seed: 0,
            scan_density: 1.0,
            nominal_width: 0.0,
            geometry: None,
            px_per_mm: 4.0,
            standoff: 10.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, StageError> {
        toml::from_str(text).map_err(|e| StageError::new(Stage::Config, e))
    }

    pub fn load(path: &Path) -> Result<Self, StageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StageError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn materials(&self) -> Result<MaterialTable, StageError> {
        match &self.materials_file {
            None => Ok(MaterialTable::builtin()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| StageError::new(Stage::Config, format!("{}: {e}", path.display())))?;
                MaterialTable::from_toml(&text).map_err(|e| StageError::new(Stage::Config, e))
            }
        }
    }

    pub fn dialect(&self) -> Result<Dialect, StageError> {
        self.dialect.parse().map_err(|e| StageError::new(Stage::Config, e))
    }

    /// All numbers positive, material known, dialect known.
    pub fn validate(&self) -> Result<(), StageError> {
        let positive = [
            ("h", self.h),
            ("sampling", self.sampling),
            ("d_r", self.d_r),
            ("scan_density", self.scan_density),
            ("px_per_mm", self.px_per_mm),
            ("standoff", self.standoff),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StageError::new(Stage::Config, format!("{name} must be positive, got {v}")));
            }
        }
        if self.neighbors < 3 {
            return Err(StageError::new(Stage::Config, "neighbors must be at least 3"));
        }
        if !(self.nominal_width >= 0.0 && self.nominal_width.is_finite()) {
            return Err(StageError::new(Stage::Config, "nominal_width must be non-negative"));
        }
        self.materials()?
            .get(&self.material)
            .map_err(|e| StageError::new(Stage::Config, e))?;
        self.dialect()?;
        Ok(())
    }
}
