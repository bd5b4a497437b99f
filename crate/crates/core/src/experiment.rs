//! Repeated planning runs over scene, container and mode grids, with
//! oracle-verified success and plot-ready outputs.

use std::fmt;
use std::io::Write;
use std::path::Path as FsPath;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::container::ContainerSpec;
use crate::pipeline::{srrt_star, SrrtConfig};
use crate::planner::PlannerConfig;
use crate::sampler::SamplerMode;
use crate::se3::{tilt_of, Scene, SceneError};
use crate::spill::{oracle_label, ClassifierHandle, SloshParams, SftpParams};
use crate::timeparam::KinematicLimits;
use crate::validate::validate_trajectory;

/// Tilt cap of the conventional baseline.
pub const BASELINE_CAP_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Mode {
    /// Tilt-informed sampling, classifier-guided jerk.
    #[serde(rename = "sfrrt")]
    Sfrrt,
    /// Uniform orientation sampling.
    #[serde(rename = "sfrrt_u")]
    SfrrtU,
    /// Random jerk selection.
    #[serde(rename = "sfrrt_r")]
    SfrrtR,
    /// Fixed 15 degree tilt cap.
    #[serde(rename = "tiltcap15")]
    TiltCap15,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Sfrrt, Mode::SfrrtU, Mode::SfrrtR, Mode::TiltCap15];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Sfrrt => "sfrrt",
            Mode::SfrrtU => "sfrrt_u",
            Mode::SfrrtR => "sfrrt_r",
            Mode::TiltCap15 => "tiltcap15",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedContainer {
    pub name: String,
    pub spec: ContainerSpec,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub repeats: usize,
    pub seed: u64,
    /// Planner settings shared by all modes; mode-specific fields are overridden.
    pub planner: PlannerConfig,
    pub limits: KinematicLimits,
    pub sftp: SftpParams,
    /// Ground truth used for verification.
    pub slosh: SloshParams,
    /// Classifier for the guided modes.
    pub guide: ClassifierHandle,
    /// Keep per-sample tilt series for the long-format output.
    pub record_tilt: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            repeats: 5,
            seed: 0,
            planner: PlannerConfig { max_iterations: 20_000, refine_iterations: Some(500), ..Default::default() },
            limits: KinematicLimits::default(),
            sftp: SftpParams::default(),
            slosh: SloshParams::default(),
            guide: ClassifierHandle::oracle(),
            record_tilt: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scene: String,
    pub container: String,
    pub mode: Mode,
    pub repeat: usize,
    /// A trajectory came back.
    pub returned: bool,
    /// Returned, oracle spill-free and passing the validator.
    pub success: bool,
    pub oracle_margin: f64,
    pub validator_violations: usize,
    pub max_tilt_deg: f64,
    pub mean_speed: f64,
    pub duration: f64,
    pub queries: usize,
    pub j_max_final: f64,
    pub failure: String,
    #[serde(skip)]
    pub tilt_series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scene: String,
    pub container: String,
    pub mode: Mode,
    pub runs: usize,
    pub success_rate: f64,
    pub max_tilt_deg: f64,
    pub mean_speed: f64,
}

impl ExperimentConfig {
    fn run_config(&self, mode: Mode, repeat: usize) -> (SrrtConfig, ClassifierHandle) {
        let seed = self.seed.wrapping_add(repeat as u64);
        let mut planner = PlannerConfig { seed, ..self.planner.clone() };
        let mut handle = self.guide.clone();
        match mode {
            Mode::Sfrrt => planner.sampler = SamplerMode::Informed,
            Mode::SfrrtU => planner.sampler = SamplerMode::Uniform,
            Mode::SfrrtR => {
                planner.sampler = SamplerMode::Informed;
                handle = ClassifierHandle::Random(seed);
            }
            Mode::TiltCap15 => {
                planner.sampler = SamplerMode::Informed;
                planner.tilt_cap = Some(BASELINE_CAP_DEG.to_radians());
                planner.allow_cap_above_limit = true;
            }
        }
        (SrrtConfig { planner, limits: self.limits, sftp: self.sftp }, handle)
    }
}

/// Plans one run and verifies it independently.
pub fn run_once(scene: &Scene, container: &NamedContainer, mode: Mode, repeat: usize, cfg: &ExperimentConfig) -> RunRecord {
    let (srrt, handle) = cfg.run_config(mode, repeat);
    let mut rec = RunRecord {
        scene: scene.name.clone(),
        container: container.name.clone(),
        mode,
        repeat,
        returned: false,
        success: false,
        oracle_margin: f64::NAN,
        validator_violations: 0,
        max_tilt_deg: f64::NAN,
        mean_speed: f64::NAN,
        duration: f64::NAN,
        queries: 0,
        j_max_final: f64::NAN,
        failure: String::new(),
        tilt_series: Vec::new(),
    };
    let out = match srrt_star(scene, &container.spec, &srrt, &handle) {
        Ok(o) => o,
        Err(e) => {
            rec.failure = e.to_string();
            return rec;
        }
    };
    let traj = out.trajectory();
    rec.returned = true;
    rec.queries = out.sftp.queries;
    rec.j_max_final = out.sftp.limits.j_max;
    rec.duration = traj.duration();
    rec.mean_speed = traj.mean_speed();
    rec.max_tilt_deg = traj.samples.iter().map(|s| tilt_of(&s.pose)).fold(0.0, f64::max).to_degrees();
    let cap = srrt.planner.effective_cap(&container.spec).unwrap_or(f64::NAN);
    let report = validate_trajectory(traj, scene, &container.spec, cap, &out.sftp.limits, srrt.planner.edge_resolution);
    rec.validator_violations = report.collisions.len() + report.tilt_violations.len() + report.limit_violations.len();
    match oracle_label(traj, &container.spec, &cfg.slosh) {
        Ok(v) => {
            rec.oracle_margin = v.margin;
            rec.success = !v.spilled && report.ok();
            if v.spilled {
                rec.failure = format!("oracle reports spill (margin {:.4} rad)", v.margin);
            } else if !report.ok() {
                rec.failure = format!("validator: {} violations", rec.validator_violations);
            }
        }
        Err(e) => rec.failure = e.to_string(),
    }
    if cfg.record_tilt {
        rec.tilt_series = traj.samples.iter().enumerate().map(|(i, s)| (traj.time_at(i), tilt_of(&s.pose).to_degrees())).collect();
    }
    rec
}

/// Runs every (scene, container, mode, repeat) combination in parallel and
/// returns records in that lexicographic order.
pub fn run_grid(scenes: &[Scene], containers: &[NamedContainer], modes: &[Mode], cfg: &ExperimentConfig) -> Vec<RunRecord> {
    let mut units = Vec::new();
    for (si, _) in scenes.iter().enumerate() {
        for (ci, _) in containers.iter().enumerate() {
            for &mode in modes {
                for r in 0..cfg.repeats {
                    units.push((si, ci, mode, r));
                }
            }
        }
    }
    units.par_iter().map(|&(si, ci, mode, r)| run_once(&scenes[si], &containers[ci], mode, r, cfg)).collect()
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for chunk in records.chunk_by(|a, b| a.scene == b.scene && a.container == b.container && a.mode == b.mode) {
        let ok: Vec<&RunRecord> = chunk.iter().filter(|r| r.success).collect();
        let mean = |f: fn(&RunRecord) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64 };
        rows.push(SummaryRow {
            scene: chunk[0].scene.clone(),
            container: chunk[0].container.clone(),
            mode: chunk[0].mode,
            runs: chunk.len(),
            success_rate: ok.len() as f64 / chunk.len() as f64,
            max_tilt_deg: ok.iter().map(|r| r.max_tilt_deg).fold(f64::NAN, f64::max),
            mean_speed: mean(|r| r.mean_speed),
        });
    }
    rows
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!("{:<12} {:<10} {:<10} {:>5} {:>9} {:>10} {:>11}\n", "scene", "container", "mode", "runs", "success", "max tilt", "mean speed");
    for r in rows {
        s.push_str(&format!(
            "{:<12} {:<10} {:<10} {:>5} {:>8.0}% {:>9.1}° {:>9.3} m/s\n",
            r.scene,
            r.container,
            r.mode.name(),
            r.runs,
            100.0 * r.success_rate,
            r.max_tilt_deg,
            r.mean_speed
        ));
    }
    s
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format tilt over time: one row per run and sample.
pub fn write_tilt_long<W: Write>(records: &[RunRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scene", "container", "mode", "repeat", "t", "tilt_deg"])?;
    for r in records {
        for (t, tilt) in &r.tilt_series {
            w.write_record([r.scene.as_str(), r.container.as_str(), r.mode.name(), &r.repeat.to_string(), &format!("{t:.4}"), &format!("{tilt:.6}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads every `*.json` scene in `dir`, sorted by file name. Unnamed scenes
/// take the file stem.
pub fn load_scenes(dir: &FsPath) -> Result<Vec<Scene>, SceneError> {
    let mut out = Vec::new();
    for path in json_files(dir)? {
        let mut scene = Scene::load(&path)?;
        if scene.name.is_empty() {
            scene.name = stem(&path);
        }
        out.push(scene);
    }
    Ok(out)
}

/// Loads every `*.json` container in `dir`, named by file stem.
pub fn load_containers(dir: &FsPath) -> Result<Vec<NamedContainer>, SceneError> {
    json_files(dir)?
        .into_iter()
        .map(|path| {
            let spec: ContainerSpec = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            spec.validate().map_err(|e| SceneError::Invalid(format!("{}: {e}", path.display())))?;
            Ok(NamedContainer { name: stem(&path), spec })
        })
        .collect()
}

fn stem(path: &FsPath) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn json_files(dir: &FsPath) -> Result<Vec<std::path::PathBuf>, SceneError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}
