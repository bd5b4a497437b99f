//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 invalid input, 3 no path found, 4 no spill-free trajectory.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use thiserror::Error;

use crate::container::{max_tilt_angle, tilt_angle_oracle, ContainerSpec, DEFAULT_ORACLE_TOL};
use crate::dataset::{default_workspace, evaluate, generate, load_dataset, save_dataset, GeneratorConfig};
use crate::experiment::{load_containers, load_scenes, run_grid, summarize, summary_table, write_csv, write_tilt_long, ExperimentConfig, Mode};
use crate::pipeline::{srrt_star, PipelineError, SrrtConfig};
use crate::planner::{PlanError, PlannerConfig};
use crate::sampler::SamplerMode;
use crate::se3::{Scene, Trajectory};
use crate::sfc::load_weights;
use crate::spill::{classify, ClassifierHandle, SftpParams, SpillError};
use crate::timeparam::{KinematicLimits, DEFAULT_DT};
use crate::validate::validate_trajectory;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NoPath(String),
    #[error("{0}")]
    NoSpillFree(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::NoPath(_) => 3,
            CliError::NoSpillFree(_) => 4,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Plan(PlanError::NoPathFound { .. }) => CliError::NoPath(e.to_string()),
            PipelineError::Spill(SpillError::NoSpillFreeTrajectory { .. }) => CliError::NoSpillFree(e.to_string()),
            PipelineError::Plan(_) | PipelineError::Spill(SpillError::InvalidParams(_)) => invalid(e),
            _ => runtime(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sfrrt", version, about = "Spill-free motion planning for open liquid containers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JerkPolicy {
    Sfc,
    Oracle,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Oracle,
    Model,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasi-static spill angle of a container.
    Tiltangle {
        #[arg(long)]
        container: Option<PathBuf>,
        #[arg(long, requires_all = ["r_u", "h_c", "h_w"])]
        r_b: Option<f64>,
        #[arg(long)]
        r_u: Option<f64>,
        #[arg(long)]
        h_c: Option<f64>,
        #[arg(long)]
        h_w: Option<f64>,
        /// Also run the numerical cross-section oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Plan a path and a spill-free trajectory.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        container: PathBuf,
        /// Trajectory CSV.
        #[arg(long)]
        out: PathBuf,
        /// Pruned waypoint path as JSON.
        #[arg(long)]
        path_out: Option<PathBuf>,
        #[arg(long, default_value = "informed")]
        sampler: SamplerMode,
        /// Degrees; defaults to the container's spill angle.
        #[arg(long)]
        tilt_cap: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        iters: usize,
        #[arg(long, value_enum, default_value = "oracle")]
        jerk_policy: JerkPolicy,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// JSON kinematic limits.
        #[arg(long)]
        limits: Option<PathBuf>,
    },
    /// Label a trajectory CSV as spill or spill-free.
    Label {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        container: PathBuf,
        #[arg(long, value_enum, default_value = "oracle")]
        backend: Backend,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Scene whose bounds normalize positions for the model backend.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Generate a synthetic oracle-labelled dataset.
    Dataset {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        containers: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        seq_len: usize,
    },
    /// Score a weight file on a dataset.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Repeated runs over scenes, containers and modes.
    Experiment {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        containers: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "sfrrt,sfrrt_u,sfrrt_r,tiltcap15")]
        modes: Vec<Mode>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        iters: usize,
        /// Guide the guided modes with a model instead of the oracle.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_container(path: &FsPath) -> Result<ContainerSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let c: ContainerSpec = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    c.validate().map_err(invalid)?;
    Ok(c)
}

fn load_scene(path: &FsPath) -> Result<Scene, CliError> {
    Scene::load(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn learned(weights: Option<&FsPath>) -> Result<ClassifierHandle, CliError> {
    let path = weights.ok_or_else(|| invalid("a model backend needs --weights"))?;
    Ok(ClassifierHandle::learned(load_weights(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?))
}

fn tiltangle(container: Option<PathBuf>, dims: [Option<f64>; 4], oracle: bool) -> Result<(), CliError> {
    let c = match (container, dims) {
        (Some(p), _) => load_container(&p)?,
        (None, [Some(r_b), Some(r_u), Some(h_c), Some(h_w)]) => ContainerSpec::new(r_b, r_u, h_c, h_w).map_err(invalid)?,
        _ => return Err(invalid("give --container or all of --r-b --r-u --h-c --h-w")),
    };
    let t = max_tilt_angle(&c).map_err(invalid)?;
    println!("theta_max: {:.6} rad ({:.4} deg), {}", t.theta_max, t.theta_max.to_degrees(), t.case.name());
    if oracle {
        let o = tilt_angle_oracle(&c, DEFAULT_ORACLE_TOL).map_err(invalid)?;
        println!("oracle:    {:.6} rad ({:.4} deg), difference {:.2e} rad", o.theta_max, o.theta_max.to_degrees(), (o.theta_max - t.theta_max).abs());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plan_cmd(
    scene: PathBuf,
    container: PathBuf,
    out: PathBuf,
    path_out: Option<PathBuf>,
    sampler: SamplerMode,
    tilt_cap: Option<f64>,
    seed: u64,
    iters: usize,
    jerk_policy: JerkPolicy,
    weights: Option<PathBuf>,
    dt: f64,
    limits: Option<PathBuf>,
) -> Result<(), CliError> {
    let scene = load_scene(&scene)?;
    let c = load_container(&container)?;
    let limits = match limits {
        Some(p) => {
            let l: KinematicLimits = serde_json::from_reader(BufReader::new(File::open(&p).map_err(invalid)?)).map_err(invalid)?;
            l.validate().map_err(invalid)?;
            l
        }
        None => KinematicLimits::default(),
    };
    let handle = match jerk_policy {
        JerkPolicy::Oracle => ClassifierHandle::oracle(),
        JerkPolicy::Random => ClassifierHandle::Random(seed),
        JerkPolicy::Sfc => learned(weights.as_deref())?,
    };
    let cfg = SrrtConfig {
        planner: PlannerConfig {
            max_iterations: iters,
            sampler,
            tilt_cap: tilt_cap.map(f64::to_radians),
            seed,
            refine_iterations: Some(500),
            ..Default::default()
        },
        limits,
        sftp: SftpParams { dt, ..Default::default() },
    };
    let result = srrt_star(&scene, &c, &cfg, &handle)?;
    let traj = result.trajectory();
    let cap = cfg.planner.effective_cap(&c).map_err(invalid)?;
    let report = validate_trajectory(traj, &scene, &c, cap, &result.sftp.limits, cfg.planner.edge_resolution);
    if !report.ok() {
        return Err(runtime(format!("output failed validation: {report:?}")));
    }
    traj.write_csv(File::create(&out).map_err(runtime)?).map_err(runtime)?;
    if let Some(p) = path_out {
        let doc = serde_json::json!({ "cost": result.path.cost, "poses": result.path.poses });
        std::fs::write(&p, serde_json::to_string_pretty(&doc).map_err(runtime)?).map_err(runtime)?;
    }
    println!(
        "{} waypoints, {:.2} s, max tilt {:.1} deg, j_max {:.3} after {} classifier queries",
        result.path.len(),
        traj.duration(),
        report.max_tilt.to_degrees(),
        result.sftp.limits.j_max,
        result.sftp.queries
    );
    Ok(())
}

fn label(traj: PathBuf, container: PathBuf, backend: Backend, weights: Option<PathBuf>, scene: Option<PathBuf>) -> Result<(), CliError> {
    let c = load_container(&container)?;
    let t = Trajectory::read_csv(File::open(&traj).map_err(invalid)?).map_err(invalid)?;
    let bounds = match scene {
        Some(p) => load_scene(&p)?.bounds,
        None => default_workspace(),
    };
    let handle = match backend {
        Backend::Oracle => ClassifierHandle::oracle(),
        Backend::Model => learned(weights.as_deref())?,
    };
    let v = classify(&handle, &t, &c, &bounds).map_err(|e| match e {
        SpillError::NonFiniteTrajectory => invalid(e),
        other => runtime(other),
    })?;
    println!(
        "{}",
        serde_json::json!({ "spilled": v.spilled, "margin": v.margin, "first_violation_time": v.first_violation_time })
    );
    Ok(())
}

fn dataset(n: usize, scenes: Option<PathBuf>, containers: Option<PathBuf>, out: PathBuf, seed: u64, seq_len: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(invalid("--n must be positive"));
    }
    let scenes = scenes.map(|d| load_scenes(&d)).transpose().map_err(invalid)?.unwrap_or_default();
    let containers = containers.map(|d| load_containers(&d)).transpose().map_err(invalid)?.unwrap_or_default();
    let specs: Vec<ContainerSpec> = containers.iter().map(|c| c.spec).collect();
    let cfg = GeneratorConfig { n, seed, seq_len, ..Default::default() };
    let records = generate(&scenes, &specs, &cfg).map_err(runtime)?;
    save_dataset(&records, &out).map_err(runtime)?;
    let free = records.iter().filter(|r| r.spill_free).count();
    println!("wrote {} records ({free} spill-free) to {}", records.len(), out.display());
    Ok(())
}

fn eval_cmd(weights: PathBuf, dataset: PathBuf, threshold: f64) -> Result<(), CliError> {
    let model = load_weights(&weights).map_err(invalid)?;
    let records = load_dataset(&dataset).map_err(invalid)?;
    let report = evaluate(&model, &records, threshold).map_err(invalid)?;
    print!("{}", report.table());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    scenes: PathBuf,
    containers: PathBuf,
    modes: Vec<Mode>,
    repeats: usize,
    seed: u64,
    iters: usize,
    weights: Option<PathBuf>,
    out: PathBuf,
) -> Result<(), CliError> {
    let scenes = load_scenes(&scenes).map_err(invalid)?;
    let containers = load_containers(&containers).map_err(invalid)?;
    if scenes.is_empty() || containers.is_empty() || repeats == 0 {
        return Err(invalid("need at least one scene, one container and one repeat"));
    }
    let mut cfg = ExperimentConfig { repeats, seed, ..Default::default() };
    cfg.planner.max_iterations = iters;
    if weights.is_some() {
        cfg.guide = learned(weights.as_deref())?;
    }
    let records = run_grid(&scenes, &containers, &modes, &cfg);
    let summary = summarize(&records);
    std::fs::create_dir_all(&out).map_err(runtime)?;
    write_csv(&summary, File::create(out.join("summary.csv")).map_err(runtime)?).map_err(runtime)?;
    write_csv(&records, File::create(out.join("runs.csv")).map_err(runtime)?).map_err(runtime)?;
    write_tilt_long(&records, File::create(out.join("tilt_over_time.csv")).map_err(runtime)?).map_err(runtime)?;
    print!("{}", summary_table(&summary));
    info!("wrote results to {}", out.display());
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Tiltangle { container, r_b, r_u, h_c, h_w, oracle } => tiltangle(container, [r_b, r_u, h_c, h_w], oracle),
        Command::Plan { scene, container, out, path_out, sampler, tilt_cap, seed, iters, jerk_policy, weights, dt, limits } => {
            plan_cmd(scene, container, out, path_out, sampler, tilt_cap, seed, iters, jerk_policy, weights, dt, limits)
        }
        Command::Label { traj, container, backend, weights, scene } => label(traj, container, backend, weights, scene),
        Command::Dataset { n, scenes, containers, out, seed, seq_len } => dataset(n, scenes, containers, out, seed, seq_len),
        Command::Eval { weights, dataset, threshold } => eval_cmd(weights, dataset, threshold),
        Command::Experiment { scenes, containers, modes, repeats, seed, iters, weights, out } => {
            experiment(scenes, containers, modes, repeats, seed, iters, weights, out)
        }
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SFRRT_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
