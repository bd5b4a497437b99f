//! Synthetic labelled trajectories for classifier training and evaluation.
//!
//! File layout, little-endian: magic `SFCD`, `u32` record count, then per
//! record `N x 8` `f32` matrix rows, 4 `f32` container properties, a label
//! byte (`1` = spill-free) and an `f32` oracle margin.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path as FsPath;

use log::{debug, info};
use nalgebra::{UnitQuaternion, Vector3};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::container::ContainerSpec;
use crate::planner::{plan, prune, Path, PlannerConfig};
use crate::se3::{Aabb, Pose, Scene, Trajectory, TrajectorySample};
use crate::sfc::{encode, EncodedTrajectory, SfcError, SfcModel, IN_DIM, N_PROPS};
use crate::spill::{oracle_label, SloshParams, SpillError};
use crate::timeparam::{parameterize, KinematicLimits, TimeParamError};

pub const MAGIC: [u8; 4] = *b"SFCD";
const RECORD_TAIL: usize = N_PROPS * 4 + 1 + 4;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad dataset magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("dataset format: {0}")]
    Format(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("dataset is empty")]
    Empty,
    #[error(transparent)]
    Spill(#[from] SpillError),
    #[error(transparent)]
    Sfc(#[from] SfcError),
    #[error(transparent)]
    TimeParam(#[from] TimeParamError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub encoded: EncodedTrajectory,
    pub spill_free: bool,
    pub margin: f64,
}

pub fn write_dataset<W: Write>(records: &[DatasetRecord], mut out: W) -> Result<(), DatasetError> {
    let rows = records.first().map_or(0, |r| r.encoded.rows());
    out.write_all(&MAGIC)?;
    out.write_all(&(records.len() as u32).to_le_bytes())?;
    for r in records {
        if r.encoded.matrix.shape() != [rows, IN_DIM] || r.encoded.props.len() != N_PROPS {
            return Err(DatasetError::Format("records must share one matrix shape".into()));
        }
        for v in r.encoded.matrix.iter().chain(r.encoded.props.iter()) {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        out.write_all(&[r.spill_free as u8])?;
        out.write_all(&(r.margin as f32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_dataset(records: &[DatasetRecord], path: &FsPath) -> Result<(), DatasetError> {
    write_dataset(records, BufWriter::new(File::create(path)?))
}

/// Reads a dataset; the sequence length is inferred from the payload size.
pub fn read_dataset<R: Read>(mut input: R) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut head = [0u8; 8];
    input.read_exact(&mut head).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => DatasetError::Format("file shorter than its header".into()),
        _ => e.into(),
    })?;
    let magic: [u8; 4] = head[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(DatasetError::BadMagic(magic));
    }
    let count = u32::from_le_bytes(head[4..].try_into().expect("4 bytes")) as usize;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if count == 0 {
        return if body.is_empty() { Ok(Vec::new()) } else { Err(DatasetError::Format("payload after zero count".into())) };
    }
    if body.len() % count != 0 {
        return Err(DatasetError::Format(format!("{} payload bytes do not split into {count} records", body.len())));
    }
    let per = body.len() / count;
    if per < RECORD_TAIL || !(per - RECORD_TAIL).is_multiple_of(IN_DIM * 4) {
        return Err(DatasetError::Format(format!("record size {per} is not a valid layout")));
    }
    let rows = (per - RECORD_TAIL) / (IN_DIM * 4);
    let floats = |b: &[u8]| -> Vec<f64> { b.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect() };
    body.chunks_exact(per)
        .map(|rec| {
            let m_end = rows * IN_DIM * 4;
            let p_end = m_end + N_PROPS * 4;
            let label = rec[p_end];
            if label > 1 {
                return Err(DatasetError::Format(format!("label byte {label}")));
            }
            Ok(DatasetRecord {
                encoded: EncodedTrajectory {
                    matrix: Array2::from_shape_vec((rows, IN_DIM), floats(&rec[..m_end])).expect("sized"),
                    props: Array1::from(floats(&rec[m_end..p_end])),
                },
                spill_free: label == 1,
                margin: f32::from_le_bytes(rec[p_end + 1..].try_into().unwrap()) as f64,
            })
        })
        .collect()
}

pub fn load_dataset(path: &FsPath) -> Result<Vec<DatasetRecord>, DatasetError> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Motion families the generator draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Straight,
    ZigZag,
    HighTilt,
    Planned,
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    pub seq_len: usize,
    pub slosh: SloshParams,
    pub dt: f64,
    /// Planner seeds per (scene, container) pair for the planned family.
    pub planner_seeds: u64,
    pub planner_iterations: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n: 1000,
            seed: 0,
            seq_len: 100,
            slosh: SloshParams::default(),
            dt: 0.02,
            planner_seeds: 2,
            planner_iterations: 3000,
        }
    }
}

/// Bounds used to normalize synthetic motions that have no scene.
pub fn default_workspace() -> Aabb {
    Aabb::new(Vector3::new(-0.5, -0.5, 0.0), Vector3::new(0.5, 0.5, 0.6))
}

fn random_container(rng: &mut ChaCha8Rng, known: &[ContainerSpec]) -> ContainerSpec {
    let fill = rng.random_range(0.1..0.95);
    if !known.is_empty() && rng.random_bool(0.5) {
        let base = known[rng.random_range(0..known.len())];
        return base.with_fill(fill * base.h_c).unwrap_or(base);
    }
    let r_b = rng.random_range(0.015..0.05);
    let r_u = r_b + rng.random_range(0.0..0.02);
    let h_c = rng.random_range(0.06..0.2);
    ContainerSpec::new(r_b, r_u, h_c, fill * h_c).expect("sampled container is valid")
}

fn random_limits(rng: &mut ChaCha8Rng) -> KinematicLimits {
    KinematicLimits {
        v_max: rng.random_range(0.2..1.0),
        a_max: rng.random_range(0.5..6.0),
        j_max: 10f64.powf(rng.random_range(-0.5..2.5)),
        ..Default::default()
    }
}

fn random_point(rng: &mut ChaCha8Rng, b: &Aabb) -> Vector3<f64> {
    Vector3::new(
        rng.random_range(b.min.x..b.max.x),
        rng.random_range(b.min.y..b.max.y),
        rng.random_range(b.min.z..b.max.z),
    )
}

fn tilted(rng: &mut ChaCha8Rng, position: Vector3<f64>, tilt: f64) -> Pose {
    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
    let axis = Vector3::new(azimuth.cos(), azimuth.sin(), 0.0);
    let spin = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.random_range(0.0..std::f64::consts::TAU));
    Pose::new(position, UnitQuaternion::from_scaled_axis(axis * tilt) * spin)
}

fn hold_tail(mut traj: Trajectory, seconds: f64) -> Trajectory {
    let last = traj.samples.last().expect("parameterized trajectory is non-empty").pose;
    let extra = (seconds / traj.dt).round() as usize;
    traj.samples.extend(std::iter::repeat_n(TrajectorySample::at_rest(last), extra));
    traj
}

/// Builds one trajectory of `family` for `container`.
fn synthesize(
    family: Family,
    rng: &mut ChaCha8Rng,
    container: &ContainerSpec,
    pool: &[(Path, Aabb)],
    dt: f64,
) -> Result<(Trajectory, Aabb), DatasetError> {
    let theta = container.theta_max().map_err(SpillError::from)?;
    let limits = random_limits(rng);
    let ws = default_workspace();
    let traj = match family {
        Family::Straight => {
            let (pa, ta) = (random_point(rng, &ws), rng.random_range(0.0..0.6 * theta));
            let a = tilted(rng, pa, ta);
            let (pb, tb) = (random_point(rng, &ws), rng.random_range(0.0..0.6 * theta));
            let b = tilted(rng, pb, tb);
            parameterize(&Path::from_poses(vec![a, b], 0.3), &limits, dt)?
        }
        Family::ZigZag => {
            let n = rng.random_range(3..7);
            let start = random_point(rng, &ws);
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let (fwd, side) = (Vector3::new(heading.cos(), heading.sin(), 0.0), Vector3::new(-heading.sin(), heading.cos(), 0.0));
            let amp = rng.random_range(0.03..0.15);
            let poses = (0..n)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let p = start + fwd * (0.1 * i as f64) + side * (sign * amp);
                    let t = rng.random_range(0.0..0.5 * theta);
                    tilted(rng, p, t)
                })
                .collect();
            parameterize(&Path::from_poses(poses, 0.3), &limits, dt)?
        }
        Family::HighTilt => {
            let p = random_point(rng, &ws);
            let t = rng.random_range(0.7 * theta..(1.3 * theta).min(3.0));
            let target = tilted(rng, p + Vector3::new(0.0, 0.0, 0.02), t);
            let path = Path::from_poses(vec![Pose::upright(p), target], 0.3);
            hold_tail(parameterize(&path, &limits, dt)?, rng.random_range(0.2..1.0))
        }
        Family::Planned => {
            let (path, bounds) = &pool[rng.random_range(0..pool.len())];
            return Ok((parameterize(path, &limits, dt)?, *bounds));
        }
    };
    Ok((traj, ws))
}

fn planner_pool(scenes: &[Scene], containers: &[ContainerSpec], cfg: &GeneratorConfig) -> Vec<(Path, Aabb)> {
    let mut pool = Vec::new();
    for scene in scenes {
        for container in containers {
            for seed in 0..cfg.planner_seeds {
                let pc = PlannerConfig { max_iterations: cfg.planner_iterations, seed, refine_iterations: Some(200), ..Default::default() };
                match plan(scene, container, &pc).and_then(|p| prune(&p, scene, container, &pc)) {
                    Ok(path) => pool.push((path, scene.bounds)),
                    Err(e) => debug!("pool: {} seed {seed}: {e}", scene.name),
                }
            }
        }
    }
    pool
}

/// Generates `cfg.n` oracle-labelled records with classes balanced to
/// within one record by rejection.
pub fn generate(scenes: &[Scene], containers: &[ContainerSpec], cfg: &GeneratorConfig) -> Result<Vec<DatasetRecord>, DatasetError> {
    if cfg.n == 0 {
        return Err(DatasetError::Invalid("record count must be positive".into()));
    }
    let pool = planner_pool(scenes, containers, cfg);
    info!("planner pool: {} paths", pool.len());
    let mut families = vec![Family::Straight, Family::ZigZag, Family::HighTilt];
    if !pool.is_empty() {
        families.push(Family::Planned);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let quota = [cfg.n / 2, cfg.n - cfg.n / 2];
    let mut counts = [0usize; 2];
    let mut out = Vec::with_capacity(cfg.n);
    let max_attempts = 200 * cfg.n + 1000;
    for _ in 0..max_attempts {
        if out.len() == cfg.n {
            break;
        }
        let container = random_container(&mut rng, containers);
        let family = families[rng.random_range(0..families.len())];
        let (traj, bounds) = synthesize(family, &mut rng, &container, &pool, cfg.dt)?;
        let verdict = oracle_label(&traj, &container, &cfg.slosh)?;
        let class = usize::from(!verdict.spilled);
        if counts[class] >= quota[class] {
            continue;
        }
        counts[class] += 1;
        out.push(DatasetRecord { encoded: encode(&traj, &container, &bounds, cfg.seq_len)?, spill_free: !verdict.spilled, margin: verdict.margin });
    }
    if out.len() < cfg.n {
        return Err(DatasetError::Invalid(format!("could not balance classes within {max_attempts} attempts")));
    }
    Ok(out)
}

/// Confusion counts with "spill" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalReport {
    pub true_spill: usize,
    pub false_spill: usize,
    pub true_free: usize,
    /// Spills the model called spill-free.
    pub missed_spill: usize,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.true_spill + self.false_spill + self.true_free + self.missed_spill
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_spill + self.true_free) as f64 / self.total() as f64
    }

    pub fn false_negative_rate(&self) -> f64 {
        let spills = self.true_spill + self.missed_spill;
        if spills == 0 { 0.0 } else { self.missed_spill as f64 / spills as f64 }
    }

    pub fn table(&self) -> String {
        format!(
            "records: {}\naccuracy: {:.4}\nfalse-negative rate: {:.4}\n\n{:>16} {:>14} {:>14}\n{:>16} {:>14} {:>14}\n{:>16} {:>14} {:>14}\n",
            self.total(),
            self.accuracy(),
            self.false_negative_rate(),
            "",
            "pred spill",
            "pred free",
            "actual spill",
            self.true_spill,
            self.missed_spill,
            "actual free",
            self.false_spill,
            self.true_free,
        )
    }
}

pub fn evaluate(model: &SfcModel, records: &[DatasetRecord], threshold: f64) -> Result<EvalReport, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut r = EvalReport::default();
    for rec in records {
        let predicted_free = model.forward(&rec.encoded)? >= threshold;
        match (rec.spill_free, predicted_free) {
            (false, false) => r.true_spill += 1,
            (false, true) => r.missed_spill += 1,
            (true, true) => r.true_free += 1,
            (true, false) => r.false_spill += 1,
        }
    }
    Ok(r)
}
