//! Spill labelling and the jerk-reduction loop that turns a path into a
//! spill-free trajectory.
//!
//! The ground-truth labeller combines the quasi-static surface orientation
//! under the container's linear acceleration with the deflection of a damped
//! spherical pendulum standing in for slosh.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::container::{ContainerSpec, GeometryError};
use crate::planner::Path;
use crate::se3::{Aabb, Trajectory};
use crate::sfc::{encode, SfcError, SfcModel};
use crate::timeparam::{parameterize, scale_jerk, KinematicLimits, TimeParamError, DEFAULT_DT};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum SpillError {
    #[error("trajectory contains non-finite values")]
    NonFiniteTrajectory,
    #[error("encoding failed: {0}")]
    Encoding(#[from] SfcError),
    #[error("no spill-free trajectory above jerk floor {j_floor} after {queries} queries")]
    NoSpillFreeTrajectory { queries: usize, j_floor: f64 },
    #[error("invalid sftp parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    TimeParam(#[from] TimeParamError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Slosh surrogate parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SloshParams {
    /// Pendulum length in meters; `None` uses half the container height.
    pub length: Option<f64>,
    /// Damping ratio in `[0, 1)`.
    pub damping: f64,
    /// Surface-tilt gain on the pendulum deflection angle.
    pub gain: f64,
    /// Integration step in seconds.
    pub step: f64,
    /// Spill margin in radians.
    pub epsilon: f64,
}

impl Default for SloshParams {
    fn default() -> Self {
        SloshParams { length: None, damping: 0.05, gain: 1.0, step: 0.002, epsilon: 0.0 }
    }
}

impl SloshParams {
    pub fn length_for(&self, c: &ContainerSpec) -> f64 {
        self.length.unwrap_or(0.5 * c.h_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpillVerdict {
    pub spilled: bool,
    /// Radians for the oracle (smallest remaining tilt room); for learned
    /// models the probability of spill-free minus the threshold.
    pub margin: f64,
    pub first_violation_time: Option<f64>,
}

impl SpillVerdict {
    pub fn from_margin(margin: f64, epsilon: f64) -> Self {
        SpillVerdict { spilled: margin < epsilon, margin, first_violation_time: None }
    }
}

/// Per-sample surrogate state, exposed for plotting and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SloshSample {
    pub static_tilt: f64,
    pub deflection: f64,
    pub effective_tilt: f64,
}

#[derive(Clone, Copy)]
struct PendulumState {
    dir: Vector3<f64>,
    rate: Vector3<f64>,
}

fn effective_gravity(acc: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -GRAVITY) - acc
}

fn pendulum_derivative(s: &PendulumState, g_eff: &Vector3<f64>, length: f64, damp: f64) -> PendulumState {
    let tangential = g_eff - s.dir * s.dir.dot(g_eff);
    let accel = tangential / length - s.dir * s.rate.norm_squared() - s.rate * damp;
    PendulumState { dir: s.rate, rate: accel }
}

fn rk4(s: PendulumState, g0: Vector3<f64>, g1: Vector3<f64>, h: f64, length: f64, damp: f64) -> PendulumState {
    let gm = (g0 + g1) * 0.5;
    let add = |a: &PendulumState, k: &PendulumState, f: f64| PendulumState {
        dir: a.dir + k.dir * f,
        rate: a.rate + k.rate * f,
    };
    let k1 = pendulum_derivative(&s, &g0, length, damp);
    let k2 = pendulum_derivative(&add(&s, &k1, h / 2.0), &gm, length, damp);
    let k3 = pendulum_derivative(&add(&s, &k2, h / 2.0), &gm, length, damp);
    let k4 = pendulum_derivative(&add(&s, &k3, h), &g1, length, damp);
    let mut next = PendulumState {
        dir: s.dir + (k1.dir + k2.dir * 2.0 + k3.dir * 2.0 + k4.dir) * (h / 6.0),
        rate: s.rate + (k1.rate + k2.rate * 2.0 + k3.rate * 2.0 + k4.rate) * (h / 6.0),
    };
    next.dir = next.dir.normalize();
    next.rate -= next.dir * next.dir.dot(&next.rate);
    next
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    // atan2 form stays accurate near 0 and pi.
    a.cross(b).norm().atan2(a.dot(b))
}

/// Runs the surrogate over the trajectory and reports every sample.
pub fn slosh_response(
    traj: &Trajectory,
    container: &ContainerSpec,
    p: &SloshParams,
) -> Result<Vec<SloshSample>, SpillError> {
    if !traj.is_finite() {
        return Err(SpillError::NonFiniteTrajectory);
    }
    if traj.is_empty() {
        return Ok(Vec::new());
    }
    let length = p.length_for(container);
    let omega = (GRAVITY / length).sqrt();
    let damp = 2.0 * p.damping * omega;
    let substeps = ((traj.dt / p.step).ceil() as usize).max(1);
    let h = traj.dt / substeps as f64;

    let g_first = effective_gravity(&traj.samples[0].lin_acc);
    let mut state = PendulumState { dir: g_first.normalize(), rate: Vector3::zeros() };
    let mut out = Vec::with_capacity(traj.len());
    for (i, s) in traj.samples.iter().enumerate() {
        if i > 0 {
            let a0 = traj.samples[i - 1].lin_acc;
            let a1 = s.lin_acc;
            for k in 0..substeps {
                let f0 = k as f64 / substeps as f64;
                let f1 = (k + 1) as f64 / substeps as f64;
                let g0 = effective_gravity(&(a0 + (a1 - a0) * f0));
                let g1 = effective_gravity(&(a0 + (a1 - a0) * f1));
                state = rk4(state, g0, g1, h, length, damp);
            }
        }
        let g_eff = effective_gravity(&s.lin_acc);
        // The free surface is normal to the effective gravity.
        let static_tilt = angle_between(&s.pose.axis(), &(-g_eff));
        let deflection = angle_between(&state.dir, &g_eff);
        out.push(SloshSample { static_tilt, deflection, effective_tilt: static_tilt + p.gain * deflection });
    }
    Ok(out)
}

/// Ground-truth spill label.
pub fn oracle_label(traj: &Trajectory, container: &ContainerSpec, p: &SloshParams) -> Result<SpillVerdict, SpillError> {
    let theta_max = container.theta_max()?;
    let response = slosh_response(traj, container, p)?;
    let mut margin = theta_max;
    let mut first = None;
    for (i, s) in response.iter().enumerate() {
        let room = theta_max - s.effective_tilt;
        margin = margin.min(room);
        if first.is_none() && room < p.epsilon {
            first = Some(traj.time_at(i));
        }
    }
    Ok(SpillVerdict { spilled: margin < p.epsilon, margin, first_violation_time: first })
}

pub type ClassifierFn = dyn Fn(&Trajectory, &ContainerSpec) -> SpillVerdict + Send + Sync;

/// Which spill classifier backs a query.
#[derive(Clone)]
pub enum ClassifierHandle {
    Oracle(SloshParams),
    Learned { model: Arc<SfcModel>, threshold: f64 },
    /// Coin-flip labels; in [`sftp`] it selects a random jerk instead.
    Random(u64),
    AlwaysSpill,
    NeverSpill,
    /// Arbitrary callback, used for scripted tests.
    Custom(Arc<ClassifierFn>),
}

impl fmt::Debug for ClassifierHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierHandle::Oracle(p) => f.debug_tuple("Oracle").field(p).finish(),
            ClassifierHandle::Learned { threshold, .. } => f.debug_struct("Learned").field("threshold", threshold).finish(),
            ClassifierHandle::Random(s) => f.debug_tuple("Random").field(s).finish(),
            ClassifierHandle::AlwaysSpill => f.write_str("AlwaysSpill"),
            ClassifierHandle::NeverSpill => f.write_str("NeverSpill"),
            ClassifierHandle::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl ClassifierHandle {
    pub fn oracle() -> Self {
        ClassifierHandle::Oracle(SloshParams::default())
    }

    pub fn learned(model: SfcModel) -> Self {
        ClassifierHandle::Learned { model: Arc::new(model), threshold: 0.5 }
    }
}

/// Mixes trajectory shape into the random handle's seed so that identical
/// queries give identical answers.
fn trajectory_fingerprint(traj: &Trajectory) -> u64 {
    let mut h = traj.len() as u64 ^ traj.dt.to_bits().rotate_left(17);
    if let Some(last) = traj.samples.last() {
        for v in last.pose.position.iter() {
            h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ v.to_bits();
        }
    }
    h
}

pub fn classify(
    h: &ClassifierHandle,
    traj: &Trajectory,
    container: &ContainerSpec,
    bounds: &Aabb,
) -> Result<SpillVerdict, SpillError> {
    match h {
        ClassifierHandle::Oracle(p) => oracle_label(traj, container, p),
        ClassifierHandle::Learned { model, threshold } => {
            let x = encode(traj, container, bounds, model.seq_len())?;
            let prob = model.forward(&x)?;
            Ok(SpillVerdict::from_margin(prob - threshold, 0.0))
        }
        ClassifierHandle::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trajectory_fingerprint(traj));
            let margin = rng.random::<f64>() - 0.5;
            Ok(SpillVerdict::from_margin(margin, 0.0))
        }
        ClassifierHandle::AlwaysSpill => Ok(SpillVerdict { spilled: true, margin: -1.0, first_violation_time: Some(0.0) }),
        ClassifierHandle::NeverSpill => Ok(SpillVerdict { spilled: false, margin: 1.0, first_violation_time: None }),
        ClassifierHandle::Custom(f) => Ok(f(traj, container)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SftpParams {
    /// Jerk decrease factor per rejection.
    pub rate: f64,
    /// Candidates stop once the jerk bound is no longer above this; `None`
    /// means `j_max / 1024`.
    pub j_floor: Option<f64>,
    pub dt: f64,
}

impl Default for SftpParams {
    fn default() -> Self {
        SftpParams { rate: 2.0, j_floor: None, dt: DEFAULT_DT }
    }
}

#[derive(Debug, Clone)]
pub struct SftpResult {
    pub trajectory: Trajectory,
    /// Limits the returned trajectory was built with.
    pub limits: KinematicLimits,
    /// Number of jerk reductions applied.
    pub reductions: u32,
    pub queries: usize,
    /// Verdicts of rejected candidates, highest jerk first.
    pub rejected: Vec<SpillVerdict>,
}

/// Jerk bounds tried in order: `j_max, j_max / rate, ...` while above the floor.
pub fn jerk_schedule(limits: &KinematicLimits, params: &SftpParams) -> Vec<KinematicLimits> {
    let floor = params.j_floor.unwrap_or(limits.j_max / 1024.0);
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let factor = params.rate.powi(k);
        let cand = scale_jerk(limits, factor);
        if cand.j_max <= floor || !cand.j_max.is_finite() {
            break;
        }
        out.push(cand);
        k += 1;
    }
    out
}

/// Spill-free time parameterization: lower the jerk bound geometrically
/// until the classifier accepts the trajectory.
pub fn sftp(
    path: &Path,
    limits: &KinematicLimits,
    handle: &ClassifierHandle,
    params: &SftpParams,
    container: &ContainerSpec,
    bounds: &Aabb,
) -> Result<SftpResult, SpillError> {
    if !(params.rate > 1.0) {
        return Err(SpillError::InvalidParams(format!("rate must exceed 1, got {}", params.rate)));
    }
    if let Some(f) = params.j_floor {
        if !(f > 0.0) {
            return Err(SpillError::InvalidParams(format!("jerk floor must be positive, got {f}")));
        }
    }
    limits.validate()?;
    let floor = params.j_floor.unwrap_or(limits.j_max / 1024.0);
    let schedule = jerk_schedule(limits, params);

    if let ClassifierHandle::Random(seed) = handle {
        if schedule.is_empty() {
            return Err(SpillError::NoSpillFreeTrajectory { queries: 0, j_floor: floor });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        let k = rng.random_range(0..schedule.len());
        let trajectory = parameterize(path, &schedule[k], params.dt)?;
        return Ok(SftpResult { trajectory, limits: schedule[k], reductions: k as u32, queries: 0, rejected: Vec::new() });
    }

    let mut rejected = Vec::new();
    for (k, cand) in schedule.iter().enumerate() {
        let trajectory = parameterize(path, cand, params.dt)?;
        let verdict = classify(handle, &trajectory, container, bounds)?;
        if !verdict.spilled {
            return Ok(SftpResult { trajectory, limits: *cand, reductions: k as u32, queries: k + 1, rejected });
        }
        rejected.push(verdict);
    }
    Err(SpillError::NoSpillFreeTrajectory { queries: schedule.len(), j_floor: floor })
}
