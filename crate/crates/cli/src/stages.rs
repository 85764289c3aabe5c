//! One function per subcommand. Each reads only the files the previous stage
//! wrote and writes its artifacts under the configured output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use waam_core::emitter::{emit, emit_ir, parse_script, Script};
use waam_core::geometry::load_mesh;
use waam_core::metrology::{evaluate, read_scan, sample_mesh, write_xyz, EvalConfig};
use waam_core::monitor::{
    estimate_standoff, read_frame_pgm, read_template, select_slice, synth_frame, torch_sprite, write_frame_pgm,
    write_template, MonitorConfig, MonitorError, SynthParams, TorchTemplate, BACKGROUND_INTENSITY, EDGE_THRESHOLD,
    TORCH_INTENSITY,
};
use waam_core::planner::{plan_print, MotionProgram, PlanOptions};
use waam_core::slicer::{read_plan, slice_surface, warp_layers, write_plan, SliceConfig, SlicePlan};

use crate::{PipelineConfig, Stage, StageError};

/// Files written by a stage, in the order they were written.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("output");
    name.split('.').next().filter(|s| !s.is_empty()).unwrap_or("output").to_string()
}

fn read_text(stage: Stage, path: &Path) -> Result<String, StageError> {
    std::fs::read_to_string(path).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

fn write_file(stage: Stage, out: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, StageError> {
    std::fs::create_dir_all(out).map_err(|e| StageError::new(stage, format!("{}: {e}", out.display())))?;
    let path = out.join(name);
    std::fs::write(&path, contents).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn load_plan(stage: Stage, path: &Path) -> Result<SlicePlan, StageError> {
    read_plan(&read_text(stage, path)?).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

fn load_program(stage: Stage, path: &Path) -> Result<Script, StageError> {
    parse_script(&read_text(stage, path)?).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

/// Mesh → `<stem>.plan`.
pub fn run_slice(config: &PipelineConfig) -> Result<StageOutput, StageError> {
    let stage = Stage::Slice;
    let mesh_path = config.mesh.as_ref().ok_or_else(|| StageError::new(stage, "no mesh given"))?;
    let mesh = load_mesh(mesh_path).map_err(|e| StageError::new(stage, e))?;
    let slice_config = SliceConfig {
        h: config.h,
        spacing: config.sampling,
        neighbors: config.neighbors,
        ..SliceConfig::default()
    };
    let plan = slice_surface(&mesh, &slice_config).map_err(|e| StageError::new(stage, e))?;
    let file = write_file(stage, &config.out, &format!("{}.plan", stem(mesh_path)), write_plan(&plan))?;
    Ok(StageOutput {
        files: vec![file],
        summary: format!("{} layers, {} points", plan.layers.len(), plan.point_count()),
    })
}

/// Plan → `<stem>.warped.plan` (one continuous spiral).
pub fn run_warp(config: &PipelineConfig, plan_path: &Path) -> Result<StageOutput, StageError> {
    let stage = Stage::Warp;
    let plan = load_plan(stage, plan_path)?;
    let warped = warp_layers(&plan);
    let file = write_file(stage, &config.out, &format!("{}.warped.plan", stem(plan_path)), write_plan(&warped))?;
    Ok(StageOutput {
        files: vec![file],
        summary: format!("{} layers warped", warped.layers.len()),
    })
}

/// Plan → `<stem>.prog` (motion program IR) and `<stem>.positioner.csv`.
pub fn run_plan(config: &PipelineConfig, plan_path: &Path) -> Result<StageOutput, StageError> {
    let stage = Stage::Plan;
    let plan = load_plan(stage, plan_path)?;
    let table = config.materials()?;
    let material = table.get(&config.material).map_err(|e| StageError::new(stage, e))?;
    let name = stem(plan_path);
    let options = PlanOptions {
        name: name.clone(),
        d_r: config.d_r,
        spiral: config.spiral,
        ..PlanOptions::default()
    };
    let (program, trajectory) = plan_print(&plan, material, &options).map_err(|e| StageError::new(stage, e))?;
    let script = Script::from_program(&program).map_err(|e| StageError::new(stage, e))?;
    let ir = emit_ir(&script).map_err(|e| StageError::new(stage, e))?;
    let files = vec![
        write_file(stage, &config.out, &format!("{name}.prog"), ir)?,
        write_file(stage, &config.out, &format!("{name}.positioner.csv"), trajectory.to_csv())?,
    ];
    let (torch_time, positioner_time) = program.durations();
    Ok(StageOutput {
        files,
        summary: format!(
            "{} segments, {} deposition spans, {:.1} s torch / {:.1} s positioner",
            program.segments.len(),
            program.arc_spans(),
            torch_time,
            positioner_time
        ),
    })
}

/// Program IR → robot-dialect text.
pub fn run_emit(config: &PipelineConfig, program_path: &Path) -> Result<StageOutput, StageError> {
    let stage = Stage::Emit;
    let dialect = config.dialect()?;
    let script = load_program(stage, program_path)?;
    let text = emit(&script, dialect).map_err(|e| StageError::new(stage, e))?;
    let file = write_file(stage, &config.out, &format!("{}.{}", stem(program_path), dialect.extension()), text)?;
    Ok(StageOutput {
        files: vec![file],
        summary: format!("{} motion statements", script.moves().count()),
    })
}

/// CAD mesh and scan → `<stem>.report.txt` and `<stem>.report.toml`. Without
/// a scan the CAD surface itself is sampled (and saved as `<stem>.scan.xyz`).
pub fn run_evaluate(config: &PipelineConfig, cad_path: &Path, scan_path: Option<&Path>) -> Result<StageOutput, StageError> {
    let stage = Stage::Evaluate;
    let cad = load_mesh(cad_path).map_err(|e| StageError::new(stage, e))?;
    let name = stem(cad_path);
    let mut files = Vec::new();
    let scan = match scan_path {
        Some(path) => read_scan(path).map_err(|e| StageError::new(stage, e))?,
        None => {
            let cloud = sample_mesh(&cad, config.scan_density, config.seed).map_err(|e| StageError::new(stage, e))?;
            files.push(write_file(stage, &config.out, &format!("{name}.scan.xyz"), write_xyz(&cloud))?);
            cloud
        }
    };
    let eval_config = EvalConfig {
        nominal_width: config.nominal_width,
        seed: config.seed,
        geometry: config.geometry.clone().unwrap_or_else(|| name.clone()),
        material: config.material.clone(),
        ..EvalConfig::default()
    };
    let report = evaluate(&cad, &scan, &eval_config).map_err(|e| StageError::new(stage, e))?;
    files.push(write_file(stage, &config.out, &format!("{name}.report.txt"), report.to_text())?);
    files.push(write_file(stage, &config.out, &format!("{name}.report.toml"), report.to_key_values())?);
    Ok(StageOutput {
        files,
        summary: report.table_row(),
    })
}

/// Where monitoring frames come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSource {
    /// Every `*.pgm` in the directory, in name order.
    Directory(PathBuf),
    /// Simulate this many frames of a deposit whose per-layer growth scatters
    /// around the material's nominal height, saving them into the directory.
    Synthesize { dir: PathBuf, frames: usize },
}

/// Layer-height scatter of the synthetic deposit (fraction of nominal).
const SYNTH_GROWTH_SCATTER: f64 = 0.15;
/// Synthetic sensor noise (fraction of full scale).
const SYNTH_NOISE: f64 = 0.02;
const SYNTH_TIP: (usize, usize) = (60, 80);
const SYNTH_FLAME_RADIUS: f64 = 8.0;

/// Closed-loop wire tracking over IR frames: each frame's standoff gives
/// the deposit height under the torch, which picks the next slice of the
/// dense plan. Writes `monitor.csv`.
pub fn run_monitor_sim(
    config: &PipelineConfig,
    frames: &FrameSource,
    template_path: Option<&Path>,
    plan_path: &Path,
) -> Result<StageOutput, StageError> {
    let stage = Stage::Monitor;
    let plan = load_plan(stage, plan_path)?;
    let table = config.materials()?;
    let nominal = table.get(&config.material).map_err(|e| StageError::new(stage, e))?.layer_height;
    let mut files = Vec::new();
    let template = match template_path {
        Some(path) => read_template(path).map_err(|e| StageError::new(stage, e))?,
        None => {
            let (sprite, anchor) = torch_sprite(TORCH_INTENSITY, BACKGROUND_INTENSITY);
            let t = TorchTemplate::from_image(&sprite, anchor, EDGE_THRESHOLD).map_err(|e| StageError::new(stage, e))?;
            std::fs::create_dir_all(&config.out).map_err(|e| StageError::new(stage, e))?;
            let path = config.out.join("torch.pgm");
            write_template(&t, &path).map_err(|e| StageError::new(stage, e))?;
            files.push(path);
            t
        }
    };
    let monitor = MonitorConfig::default();

    let recorded: Vec<PathBuf> = match frames {
        FrameSource::Directory(dir) => {
            let mut list: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| StageError::new(stage, format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
                .collect();
            list.sort();
            list
        }
        FrameSource::Synthesize { .. } => Vec::new(),
    };
    let frame_count = match frames {
        FrameSource::Directory(_) => recorded.len(),
        FrameSource::Synthesize { frames, .. } => *frames,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let growth = Normal::new(nominal, nominal * SYNTH_GROWTH_SCATTER).map_err(|e| StageError::new(stage, e))?;
    let mut deposit = 0.0;

    let mut csv = String::from("frame,torch_z_mm,standoff_mm,tip_row,tip_col,score,measured_height_mm,next_slice\n");
    let mut current: Option<usize> = None;
    let mut tracked = 0;
    for i in 0..frame_count {
        // the torch rides the standoff above the slice it is printing
        let torch_z = current.map_or(0.0, |k| k as f64 * plan.h) + config.standoff;
        let frame = match frames {
            FrameSource::Directory(_) => {
                let path = &recorded[i];
                let bytes = std::fs::read(path).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))?;
                read_frame_pgm(&bytes, config.px_per_mm).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))?
            }
            FrameSource::Synthesize { dir, .. } => {
                deposit += growth.sample(&mut rng).max(0.0);
                let true_standoff = torch_z - deposit;
                let params = SynthParams {
                    tip: SYNTH_TIP,
                    flame_center: (
                        SYNTH_TIP.0 as f64 + true_standoff * config.px_per_mm + SYNTH_FLAME_RADIUS,
                        SYNTH_TIP.1 as f64,
                    ),
                    flame_radius: SYNTH_FLAME_RADIUS,
                    noise_sigma: SYNTH_NOISE,
                    px_per_mm: config.px_per_mm,
                    seed: config.seed.wrapping_add(i as u64),
                    ..SynthParams::default()
                };
                let frame = synth_frame(&params).map_err(|e| StageError::new(stage, format!("frame {i}: {e}")))?;
                write_file(stage, dir, &format!("frame_{i:04}.pgm"), write_frame_pgm(&frame))?;
                frame
            }
        };
        let estimate = match estimate_standoff(&frame, &template, &monitor) {
            Ok(e) => e,
            Err(e @ (MonitorError::TorchNotFound(_) | MonitorError::FlameNotFound)) => {
                log::warn!("frame {i}: {e}");
                let _ = writeln!(csv, "{i},{torch_z},,,,,,");
                continue;
            }
            Err(e) => return Err(StageError::new(stage, format!("frame {i}: {e}"))),
        };
        let measured = (torch_z - estimate.standoff_mm).max(0.0);
        let next = match select_slice(&plan, measured, nominal, current) {
            Ok(k) => k,
            Err(MonitorError::PlanExhausted(h)) => {
                log::info!("plan exhausted at measured height {h:.3} mm after {i} frames");
                break;
            }
            Err(e) => return Err(StageError::new(stage, e)),
        };
        let _ = writeln!(
            csv,
            "{i},{torch_z},{},{},{},{:.6},{measured},{next}",
            estimate.standoff_mm, estimate.tip.0, estimate.tip.1, estimate.torch.score
        );
        current = Some(next);
        tracked += 1;
    }
    files.push(write_file(stage, &config.out, "monitor.csv", csv)?);
    Ok(StageOutput {
        files,
        summary: format!("{tracked} of {frame_count} frames tracked"),
    })
}

/// Plan or program file → `<file>.ply` and `<file>.svg`.
pub fn run_viz(config: &PipelineConfig, input: &Path) -> Result<StageOutput, StageError> {
    let stage = Stage::Viz;
    let text = read_text(stage, input)?;
    // keep the input's extension so a plan and its program do not collide
    let name = input.file_name().and_then(|s| s.to_str()).unwrap_or("output").to_string();
    let (ply, svg, summary) = if text.starts_with("SLICEPLAN") {
        let plan = read_plan(&text).map_err(|e| StageError::new(stage, e))?;
        (
            waam_core::slicer::write_plan_ply(&plan),
            crate::viz::plan_svg(&plan),
            format!("{} layers", plan.layers.len()),
        )
    } else {
        let script = parse_script(&text).map_err(|e| StageError::new(stage, e))?;
        let program: MotionProgram = script.to_program().map_err(|e| StageError::new(stage, e))?;
        (
            crate::viz::program_ply(&program),
            crate::viz::program_svg(&program),
            format!("{} segments", program.segments.len()),
        )
    };
    let files = vec![
        write_file(stage, &config.out, &format!("{name}.ply"), ply)?,
        write_file(stage, &config.out, &format!("{name}.svg"), svg)?,
    ];
    Ok(StageOutput { files, summary })
}
