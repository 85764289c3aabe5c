use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use waam_cli::{
    run_emit, run_evaluate, run_monitor_sim, run_plan, run_slice, run_viz, run_warp, FrameSource, PipelineConfig,
    StageError, StageOutput,
};

/// Toolpath planning and evaluation for robotic wire-arc additive manufacturing.
#[derive(Debug, Parser)]
#[command(name = "waam", version)]
struct Cli {
    /// TOML file with pipeline parameters; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every stochastic step (scan sampling, synthetic frames).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Slice a surface mesh (STL) into non-planar layers.
    Slice(SliceArgs),
    /// Blend a closed-layer plan into one continuous spiral.
    Warp {
        #[arg(long)]
        plan: PathBuf,
    },
    /// Plan synchronized robot and positioner motion for a slice plan.
    Plan(PlanArgs),
    /// Translate a motion program into a robot dialect.
    Emit {
        #[arg(long)]
        program: PathBuf,
        /// inform, rapid or karel
        #[arg(long)]
        dialect: Option<String>,
    },
    /// Compare a scan (PLY or XYZ) with the CAD surface.
    Evaluate(EvaluateArgs),
    /// Track deposit height from IR frames and pick slices of a dense plan.
    MonitorSim(MonitorArgs),
    /// Export PLY and SVG views of a plan or program.
    Viz {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SliceArgs {
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    sampling: Option<f64>,
    #[arg(long)]
    neighbors: Option<usize>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    material: Option<String>,
    #[arg(long)]
    materials_file: Option<PathBuf>,
    #[arg(long)]
    d_r: Option<f64>,
    /// Treat the plan as one spiral (after `warp`).
    #[arg(long)]
    spiral: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    cad: PathBuf,
    /// Scan to evaluate; the CAD itself is sampled when omitted.
    #[arg(long)]
    scan: Option<PathBuf>,
    #[arg(long)]
    nominal_width: Option<f64>,
    #[arg(long)]
    scan_density: Option<f64>,
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    material: Option<String>,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    /// Dense slice plan to choose layers from.
    #[arg(long)]
    plan: PathBuf,
    /// Directory of 16-bit PGM frames.
    #[arg(long)]
    frames: PathBuf,
    /// 8-bit PGM torch template (with `.anchor` sidecar); built in if absent.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Generate this many synthetic frames into `--frames` first.
    #[arg(long)]
    synthesize: Option<usize>,
    #[arg(long)]
    px_per_mm: Option<f64>,
    #[arg(long)]
    standoff: Option<f64>,
    #[arg(long)]
    material: Option<String>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<StageOutput, StageError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut config.out, cli.out);
    set(&mut config.seed, cli.seed);
    match cli.command {
        Command::Slice(a) => {
            config.mesh = a.mesh.or(config.mesh);
            set(&mut config.h, a.h);
            set(&mut config.sampling, a.sampling);
            set(&mut config.neighbors, a.neighbors);
            config.validate()?;
            run_slice(&config)
        }
        Command::Warp { plan } => {
            config.validate()?;
            run_warp(&config, &plan)
        }
        Command::Plan(a) => {
            set(&mut config.material, a.material);
            config.materials_file = a.materials_file.or(config.materials_file);
            set(&mut config.d_r, a.d_r);
            config.spiral |= a.spiral;
            config.validate()?;
            run_plan(&config, &a.plan)
        }
        Command::Emit { program, dialect } => {
            set(&mut config.dialect, dialect);
            config.validate()?;
            run_emit(&config, &program)
        }
        Command::Evaluate(a) => {
            set(&mut config.nominal_width, a.nominal_width);
            set(&mut config.scan_density, a.scan_density);
            config.geometry = a.geometry.or(config.geometry);
            set(&mut config.material, a.material);
            config.validate()?;
            run_evaluate(&config, &a.cad, a.scan.as_deref())
        }
        Command::MonitorSim(a) => {
            set(&mut config.px_per_mm, a.px_per_mm);
            set(&mut config.standoff, a.standoff);
            set(&mut config.material, a.material);
            config.validate()?;
            let frames = match a.synthesize {
                Some(n) => FrameSource::Synthesize { dir: a.frames, frames: n },
                None => FrameSource::Directory(a.frames),
            };
            run_monitor_sim(&config, &frames, a.template.as_deref(), &a.plan)
        }
        Command::Viz { input } => {
            config.validate()?;
            run_viz(&config, &input)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(output) => {
            for f in &output.files {
                println!("{}", f.display());
            }
            eprintln!("{}", output.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
