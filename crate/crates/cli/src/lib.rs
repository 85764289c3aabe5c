//! Command-line pipeline: slice → warp → plan → emit → evaluate, plus
//! monitoring simulation and plot export. The `waam` binary is a thin
//! front end over the `run_*` functions here.

mod config;
mod stages;
pub mod viz;

use std::fmt;

use thiserror::Error;

pub use config::PipelineConfig;
pub use stages::{run_emit, run_evaluate, run_monitor_sim, run_plan, run_slice, run_viz, run_warp, FrameSource, StageOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Slice,
    Warp,
    Plan,
    Emit,
    Evaluate,
    Monitor,
    Viz,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Slice => "slice",
            Stage::Warp => "warp",
            Stage::Plan => "plan",
            Stage::Emit => "emit",
            Stage::Evaluate => "evaluate",
            Stage::Monitor => "monitor-sim",
            Stage::Viz => "viz",
        })
    }
}

/// Failure of one pipeline stage; prints as `<stage>: <message>`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {message}")]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        StageError {
            stage,
            message: message.to_string(),
        }
    }
}
