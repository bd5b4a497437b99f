//! Jerk-limited time parameterization of waypoint paths.
//!
//! Every segment between consecutive waypoints is traversed rest-to-rest.
//! Each translational axis and the rotation geodesic get a seven-phase
//! S-curve; all of them are stretched in time to the slowest one so that
//! the pose moves along the same straight line and shortest arc as the
//! planner's edge checks.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::Path;
use crate::se3::{relative_scaled_axis, Pose, Trajectory, TrajectorySample};

pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum TimeParamError {
    #[error("path needs at least two waypoints")]
    EmptyPath,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("sample period must be positive, got {0}")]
    InvalidDt(f64),
}

/// Kinematic bounds. Translational limits apply per axis; angular limits
/// apply to the rotation rate about the segment's geodesic axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub j_max: f64,
    pub w_max: f64,
    pub alpha_max: f64,
    pub zeta_max: f64,
}

impl Default for KinematicLimits {
    /// Desk-scale transport limits.
    fn default() -> Self {
        KinematicLimits { v_max: 0.5, a_max: 2.0, j_max: 40.0, w_max: 1.5, alpha_max: 6.0, zeta_max: 120.0 }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<(), TimeParamError> {
        let all = [self.v_max, self.a_max, self.j_max, self.w_max, self.alpha_max, self.zeta_max];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(TimeParamError::InvalidLimits(format!("{self:?}")))
        }
    }
}

/// Divides both jerk bounds by `factor`.
pub fn scale_jerk(limits: &KinematicLimits, factor: f64) -> KinematicLimits {
    assert!(factor > 0.0, "jerk scale factor must be positive");
    KinematicLimits { j_max: limits.j_max / factor, zeta_max: limits.zeta_max / factor, ..*limits }
}

/// Position, velocity, acceleration and jerk along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub p: f64,
    pub v: f64,
    pub a: f64,
    pub j: f64,
}

/// Time-minimal rest-to-rest seven-phase profile over a distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SCurve {
    distance: f64,
    /// `(duration, jerk, state at phase start)`
    phases: Vec<(f64, f64, AxisState)>,
    duration: f64,
}

impl SCurve {
    pub fn minimal(distance: f64, v_max: f64, a_max: f64, j_max: f64) -> Self {
        assert!(distance >= 0.0);
        if distance == 0.0 {
            return SCurve { distance, phases: Vec::new(), duration: 0.0 };
        }
        let accel_times = |vp: f64| {
            if vp * j_max >= a_max * a_max {
                (a_max / j_max, vp / a_max - a_max / j_max)
            } else {
                ((vp / j_max).sqrt(), 0.0)
            }
        };
        let (mut tj, mut ta) = accel_times(v_max);
        let ramp_distance = v_max * (2.0 * tj + ta);
        let tv;
        if distance >= ramp_distance {
            tv = (distance - ramp_distance) / v_max;
        } else {
            tv = 0.0;
            let a2 = a_max * a_max;
            let vp = (-a2 / j_max + (a2 * a2 / (j_max * j_max) + 4.0 * distance * a_max).sqrt()) / 2.0;
            if vp * j_max >= a2 {
                tj = a_max / j_max;
                ta = vp / a_max - a_max / j_max;
            } else {
                tj = (distance / (2.0 * j_max)).cbrt();
                ta = 0.0;
            }
        }
        let plan = [
            (tj, j_max),
            (ta, 0.0),
            (tj, -j_max),
            (tv, 0.0),
            (tj, -j_max),
            (ta, 0.0),
            (tj, j_max),
        ];
        let mut phases = Vec::with_capacity(7);
        let mut state = AxisState::default();
        for (dur, jerk) in plan {
            if dur <= 0.0 {
                continue;
            }
            phases.push((dur, jerk, AxisState { j: jerk, ..state }));
            state = advance(state, jerk, dur);
        }
        let duration = phases.iter().map(|p| p.0).sum();
        SCurve { distance, phases, duration }
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Jerk of each non-empty phase with its duration.
    pub fn phase_jerks(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.phases.iter().map(|&(d, j, _)| (d, j))
    }

    pub fn eval(&self, t: f64) -> AxisState {
        if t <= 0.0 || self.phases.is_empty() {
            let j = self.phases.first().map_or(0.0, |p| p.1);
            return AxisState { j: if t < 0.0 { 0.0 } else { j }, ..AxisState::default() };
        }
        if t >= self.duration {
            return AxisState { p: self.distance, ..AxisState::default() };
        }
        let mut start = 0.0;
        for &(dur, jerk, s0) in &self.phases {
            if t < start + dur {
                let mut s = advance(s0, jerk, t - start);
                s.j = jerk;
                return s;
            }
            start += dur;
        }
        AxisState { p: self.distance, ..AxisState::default() }
    }

    /// Evaluates the profile slowed down to last `total` seconds.
    pub fn eval_stretched(&self, t: f64, total: f64) -> AxisState {
        if self.duration == 0.0 {
            return AxisState::default();
        }
        let k = self.duration / total;
        let s = self.eval(t * k);
        AxisState { p: s.p, v: s.v * k, a: s.a * k * k, j: s.j * k * k * k }
    }
}

fn advance(s: AxisState, jerk: f64, dt: f64) -> AxisState {
    AxisState {
        p: s.p + s.v * dt + s.a * dt * dt / 2.0 + jerk * dt * dt * dt / 6.0,
        v: s.v + s.a * dt + jerk * dt * dt / 2.0,
        a: s.a + jerk * dt,
        j: jerk,
    }
}

/// One rest-to-rest segment. A single S-curve drives the path parameter
/// `s` from 0 to 1; the position moves along the straight line and the
/// orientation along the shortest arc, so every axis shares one time law
/// and the pose never leaves the edge the planner checked.
#[derive(Debug, Clone)]
pub struct Segment {
    pub from: Pose,
    pub to: Pose,
    /// Duration rounded up to whole sample periods.
    pub duration: f64,
    delta: Vector3<f64>,
    /// Scaled rotation axis: angle times unit axis.
    rotation: Vector3<f64>,
    curve: SCurve,
}

/// Tightest bound on `ds/dt` (or its derivatives) implied by `limit` on
/// each nonzero component length.
fn parameter_bound(lengths: &[(f64, f64)]) -> f64 {
    lengths
        .iter()
        .filter(|(len, _)| *len > 0.0)
        .map(|(len, limit)| limit / len)
        .fold(f64::INFINITY, f64::min)
}

impl Segment {
    pub fn new(from: Pose, to: Pose, limits: &KinematicLimits, dt: f64) -> Self {
        let delta = to.position - from.position;
        let rotation = relative_scaled_axis(&from.orientation, &to.orientation);
        let angle = rotation.norm();
        let bound = |lin: f64, rot: f64| {
            let mut parts: Vec<(f64, f64)> = delta.iter().map(|d| (d.abs(), lin)).collect();
            parts.push((angle, rot));
            parameter_bound(&parts)
        };
        let curve = if delta.amax() > 0.0 || angle > 0.0 {
            SCurve::minimal(
                1.0,
                bound(limits.v_max, limits.w_max),
                bound(limits.a_max, limits.alpha_max),
                bound(limits.j_max, limits.zeta_max),
            )
        } else {
            SCurve::minimal(0.0, 1.0, 1.0, 1.0)
        };
        let slowest = curve.duration();
        let duration = if slowest > 0.0 { (slowest / dt).ceil().max(1.0) * dt } else { 0.0 };
        Segment { from, to, duration, delta, rotation, curve }
    }

    /// Minimal (unrounded) duration.
    pub fn minimal_duration(&self) -> f64 {
        self.curve.duration()
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        if t >= self.duration {
            return TrajectorySample::at_rest(self.to);
        }
        let st = self.curve.eval_stretched(t, self.duration);
        let orientation = UnitQuaternion::from_scaled_axis(self.rotation * st.p) * self.from.orientation;
        TrajectorySample {
            pose: Pose::new(self.from.position + self.delta * st.p, orientation),
            lin_vel: self.delta * st.v,
            lin_acc: self.delta * st.a,
            lin_jerk: self.delta * st.j,
            ang_vel: self.rotation * st.v,
            ang_acc: self.rotation * st.a,
            ang_jerk: self.rotation * st.j,
        }
    }
}

/// Samples the whole path at period `dt`. Segment boundaries fall on sample
/// instants and reproduce the waypoints exactly.
pub fn parameterize(path: &Path, limits: &KinematicLimits, dt: f64) -> Result<Trajectory, TimeParamError> {
    if path.poses.len() < 2 {
        return Err(TimeParamError::EmptyPath);
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(TimeParamError::InvalidDt(dt));
    }
    limits.validate()?;
    if path.poses.iter().any(|p| !p.is_finite()) {
        return Err(TimeParamError::NonFiniteInput);
    }
    let mut samples = vec![TrajectorySample::at_rest(path.poses[0])];
    for w in path.poses.windows(2) {
        let seg = Segment::new(w[0], w[1], limits, dt);
        let steps = (seg.duration / dt).round() as usize;
        for k in 1..steps {
            samples.push(seg.sample(k as f64 * dt));
        }
        if steps > 0 {
            samples.push(TrajectorySample::at_rest(seg.to));
        }
    }
    Ok(Trajectory::new(dt, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integrates jerk with a fine explicit scheme, independent of the
    /// closed-form phase states.
    fn integrate(curve: &SCurve, h: f64) -> (f64, f64, f64) {
        let (mut p, mut v, mut a) = (0.0, 0.0, 0.0);
        let (mut vmax, mut amax) = (0.0f64, 0.0f64);
        for (dur, j) in curve.phase_jerks() {
            let n = (dur / h).ceil() as usize;
            let dh = dur / n as f64;
            for _ in 0..n {
                p += v * dh + a * dh * dh / 2.0 + j * dh * dh * dh / 6.0;
                v += a * dh + j * dh * dh / 2.0;
                a += j * dh;
                vmax = vmax.max(v.abs());
                amax = amax.max(a.abs());
            }
        }
        (p, vmax, amax)
    }

    #[test]
    fn full_profile_duration() {
        let c = SCurve::minimal(3.0, 1.0, 1.0, 1.0);
        assert!((c.duration() - 5.0).abs() < 1e-12);
        let (p, vmax, amax) = integrate(&c, 1e-4);
        assert!((p - 3.0).abs() < 1e-9);
        assert!(vmax <= 1.0 + 1e-9 && amax <= 1.0 + 1e-9);
        assert!((c.eval(c.duration()).p - 3.0).abs() < 1e-15);
    }

    #[test]
    fn short_profile_never_cruises() {
        let c = SCurve::minimal(1.0, 1.0, 1.0, 1.0);
        assert!(c.duration() < 5.0);
        // Trapezoid-rule integral of sampled velocity.
        let n = 200_000;
        let h = c.duration() / n as f64;
        let integral: f64 = (0..n).map(|k| 0.5 * (c.eval(k as f64 * h).v + c.eval((k + 1) as f64 * h).v) * h).sum();
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn acceleration_limited_without_cruise() {
        let c = SCurve::minimal(2.0, 2.0, 1.0, 4.0);
        let (p, vmax, amax) = integrate(&c, 1e-4);
        assert!((p - 2.0).abs() < 1e-9);
        assert!(vmax <= 2.0 + 1e-9);
        assert!((amax - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_length_segment_adds_nothing() {
        let p = Pose::upright(Vector3::new(0.1, 0.2, 0.3));
        let path = Path { poses: vec![p, p], cost: 0.0 };
        let traj = parameterize(&path, &KinematicLimits::default(), 0.01).unwrap();
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn errors() {
        let p = Pose::upright(Vector3::zeros());
        let limits = KinematicLimits::default();
        assert_eq!(parameterize(&Path { poses: vec![p], cost: 0.0 }, &limits, 0.01), Err(TimeParamError::EmptyPath));
        let mut bad = p;
        bad.position.x = f64::NAN;
        let path = Path { poses: vec![p, bad], cost: 0.0 };
        assert_eq!(parameterize(&path, &limits, 0.01), Err(TimeParamError::NonFiniteInput));
        let ok = Path { poses: vec![p, Pose::upright(Vector3::x())], cost: 1.0 };
        assert_eq!(parameterize(&ok, &limits, 0.0), Err(TimeParamError::InvalidDt(0.0)));
    }

    #[test]
    fn scale_jerk_examples() {
        let l = KinematicLimits { j_max: 8.0, ..Default::default() };
        assert_eq!(scale_jerk(&l, 2.0).j_max, 4.0);
        assert_eq!(scale_jerk(&l, 1.0), l);
        let thrice = scale_jerk(&scale_jerk(&scale_jerk(&l, 2.0), 2.0), 2.0);
        assert_eq!(thrice.j_max, 1.0);
        assert_eq!(thrice.zeta_max, l.zeta_max / 8.0);
        assert_eq!(thrice.a_max, l.a_max);
    }

    #[test]
    fn boundaries_hit_waypoints() {
        let a = Pose::upright(Vector3::new(0.0, 0.0, 0.1));
        let b = Pose::new(Vector3::new(0.3, -0.1, 0.2), UnitQuaternion::from_euler_angles(0.3, 0.0, 0.5));
        let c = Pose::upright(Vector3::new(0.5, 0.2, 0.1));
        let limits = KinematicLimits::default();
        let traj = parameterize(&Path::from_poses(vec![a, b, c], 0.3), &limits, 0.01).unwrap();
        let seg_ab = Segment::new(a, b, &limits, 0.01);
        let k = (seg_ab.duration / 0.01).round() as usize;
        assert_eq!(traj.samples[k].pose, b);
        assert_eq!(traj.samples.last().unwrap().pose, c);
        assert_eq!(traj.samples.last().unwrap().lin_vel, Vector3::zeros());
    }

    #[test]
    fn samples_stay_on_the_edge() {
        let a = Pose::upright(Vector3::new(0.0, 0.0, 0.1));
        let b = Pose::new(Vector3::new(0.9, -0.05, 0.3), UnitQuaternion::from_euler_angles(0.6, 0.1, 0.0));
        let limits = KinematicLimits::default();
        let seg = Segment::new(a, b, &limits, 0.01);
        let dir = (b.position - a.position).normalize();
        let mut steps = 0;
        while (steps as f64) * 0.01 < seg.duration {
            let s = seg.sample(steps as f64 * 0.01);
            let off = s.pose.position - a.position;
            assert!((off - dir * off.dot(&dir)).norm() < 1e-12);
            // Orientation progress matches position progress.
            let frac = off.norm() / (b.position - a.position).norm();
            let expect = crate::se3::interpolate(&a, &b, frac);
            assert!(crate::se3::rotation_angle(&expect.orientation, &s.pose.orientation) < 1e-7, "acos resolution near identity is about 1e-8");
            assert!(s.lin_vel.amax() <= limits.v_max + 1e-9 && s.lin_jerk.amax() <= limits.j_max + 1e-9);
            steps += 1;
        }
    }
}
