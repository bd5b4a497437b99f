use std::io::{Read, Write};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use super::pose::Pose;

pub const CSV_HEADER: [&str; 14] =
    ["t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"];

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad trajectory file: {0}")]
    Format(String),
}

/// Kinematic state at one sample instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub pose: Pose,
    pub lin_vel: Vector3<f64>,
    pub lin_acc: Vector3<f64>,
    pub lin_jerk: Vector3<f64>,
    pub ang_vel: Vector3<f64>,
    pub ang_acc: Vector3<f64>,
    pub ang_jerk: Vector3<f64>,
}

impl TrajectorySample {
    pub fn at_rest(pose: Pose) -> Self {
        TrajectorySample {
            pose,
            lin_vel: Vector3::zeros(),
            lin_acc: Vector3::zeros(),
            lin_jerk: Vector3::zeros(),
            ang_vel: Vector3::zeros(),
            ang_acc: Vector3::zeros(),
            ang_jerk: Vector3::zeros(),
        }
    }

    fn is_finite(&self) -> bool {
        self.pose.is_finite()
            && [self.lin_vel, self.lin_acc, self.lin_jerk, self.ang_vel, self.ang_acc, self.ang_jerk]
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Uniformly sampled container motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(dt: f64, samples: Vec<TrajectorySample>) -> Self {
        assert!(dt > 0.0, "trajectory dt must be positive");
        Trajectory { dt, samples }
    }

    /// A pose held still for `duration` seconds.
    pub fn hold(pose: Pose, duration: f64, dt: f64) -> Self {
        let n = (duration / dt).round() as usize + 1;
        Trajectory::new(dt, vec![TrajectorySample::at_rest(pose); n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn is_finite(&self) -> bool {
        self.dt.is_finite() && self.samples.iter().all(TrajectorySample::is_finite)
    }

    /// Length of the traced position curve.
    pub fn path_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].pose.position - w[0].pose.position).norm()).sum()
    }

    pub fn mean_speed(&self) -> f64 {
        let d = self.duration();
        if d > 0.0 { self.path_length() / d } else { 0.0 }
    }

    /// Largest gap between the central difference of positions and the
    /// stored velocity. Of order `a_max * dt` for consistent data.
    pub fn velocity_consistency_error(&self) -> f64 {
        self.samples
            .windows(3)
            .map(|w| {
                let fd = (w[2].pose.position - w[0].pose.position) / (2.0 * self.dt);
                (fd - w[1].lin_vel).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrajectoryError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for (i, s) in self.samples.iter().enumerate() {
            let [qw, qx, qy, qz] = s.pose.wxyz();
            let p = s.pose.position;
            let row = [
                self.time_at(i), p.x, p.y, p.z, qw, qx, qy, qz,
                s.lin_vel.x, s.lin_vel.y, s.lin_vel.z, s.ang_vel.x, s.ang_vel.y, s.ang_vel.z,
            ];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV format written by [`Trajectory::write_csv`].
    /// Accelerations and jerks are rebuilt by central differences.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, TrajectoryError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
            return Err(TrajectoryError::Format(format!("unexpected header {header:?}")));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| TrajectoryError::Format(e.to_string()))?;
            if vals.len() != CSV_HEADER.len() {
                return Err(TrajectoryError::Format("wrong column count".into()));
            }
            times.push(vals[0]);
            let q = UnitQuaternion::from_quaternion(Quaternion::new(vals[4], vals[5], vals[6], vals[7]));
            let mut s = TrajectorySample::at_rest(Pose::new(Vector3::new(vals[1], vals[2], vals[3]), q));
            s.lin_vel = Vector3::new(vals[8], vals[9], vals[10]);
            s.ang_vel = Vector3::new(vals[11], vals[12], vals[13]);
            samples.push(s);
        }
        if samples.is_empty() {
            return Err(TrajectoryError::Format("no samples".into()));
        }
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.01 };
        if !(dt > 0.0) {
            return Err(TrajectoryError::Format("non-increasing time column".into()));
        }
        for (i, t) in times.iter().enumerate() {
            if (t - times[0] - i as f64 * dt).abs() > 1e-6 * (1.0 + t.abs()) {
                return Err(TrajectoryError::Format(format!("non-uniform sampling at row {i}")));
            }
        }
        let lin_acc = central_difference(&samples.iter().map(|s| s.lin_vel).collect::<Vec<_>>(), dt);
        let lin_jerk = central_difference(&lin_acc, dt);
        let ang_acc = central_difference(&samples.iter().map(|s| s.ang_vel).collect::<Vec<_>>(), dt);
        let ang_jerk = central_difference(&ang_acc, dt);
        for (i, s) in samples.iter_mut().enumerate() {
            s.lin_acc = lin_acc[i];
            s.lin_jerk = lin_jerk[i];
            s.ang_acc = ang_acc[i];
            s.ang_jerk = ang_jerk[i];
        }
        Ok(Trajectory::new(dt, samples))
    }
}

/// Central differences inside, one-sided at the ends.
pub fn central_difference(values: &[Vector3<f64>], dt: f64) -> Vec<Vector3<f64>> {
    let n = values.len();
    if n < 2 {
        return vec![Vector3::zeros(); n];
    }
    (0..n)
        .map(|i| match i {
            0 => (values[1] - values[0]) / dt,
            _ if i == n - 1 => (values[n - 1] - values[n - 2]) / dt,
            _ => (values[i + 1] - values[i - 1]) / (2.0 * dt),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moving(n: usize, dt: f64) -> Trajectory {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let mut s = TrajectorySample::at_rest(Pose::new(
                    Vector3::new(0.5 * t * t, t, 0.2),
                    UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.1 * t),
                ));
                s.lin_vel = Vector3::new(t, 1.0, 0.0);
                s.ang_vel = Vector3::new(0.1, 0.0, 0.0);
                s
            })
            .collect();
        Trajectory::new(dt, samples)
    }

    #[test]
    fn csv_roundtrip_keeps_poses_and_velocities() {
        let traj = moving(50, 0.02);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz\n"));
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 50);
        assert!((back.dt - 0.02).abs() < 1e-15);
        for (a, b) in traj.samples.iter().zip(&back.samples) {
            assert!((a.pose.position - b.pose.position).norm() < 1e-15);
            assert!(crate::se3::rotation_angle(&a.pose.orientation, &b.pose.orientation) < 1e-7);
            assert_eq!(a.lin_vel, b.lin_vel);
        }
        // Rebuilt acceleration of v = t is 1 in x.
        assert!((back.samples[10].lin_acc.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_header() {
        let err = Trajectory::read_csv("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TrajectoryError::Format(_)));
    }

    #[test]
    fn consistency_is_small_for_consistent_data() {
        let traj = moving(100, 0.01);
        assert!(traj.velocity_consistency_error() < 1e-9);
        assert!((traj.duration() - 0.99).abs() < 1e-12);
    }
}
