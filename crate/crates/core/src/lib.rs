//! Toolpath planning and evaluation for robotic wire-arc additive
//! manufacturing.
//!
//! The pipeline runs surface mesh → non-planar layers ([`slicer`]) →
//! gravity-aligned positioner states ([`positioner`]) → synchronized motion
//! program ([`planner`]) → robot-dialect text ([`emitter`]), with IR-frame
//! process monitoring ([`monitor`]) and scan-versus-CAD evaluation
//! ([`metrology`]) alongside.

pub mod emitter;
pub mod geometry;
pub mod metrology;
pub mod shapes;
pub mod monitor;
pub mod planner;
pub mod positioner;
pub mod slicer;
