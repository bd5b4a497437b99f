use ndarray::{Array1, Array2};

use super::SfcError;
use crate::container::ContainerSpec;
use crate::se3::{interpolate, Aabb, Pose, Trajectory};

/// Channels per row: position (3), quaternion `w, x, y, z` (4), interval (1).
pub const IN_DIM: usize = 8;
pub const N_PROPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTrajectory {
    pub matrix: Array2<f64>,
    /// `[r_b, r_u, h_c, h_w]` in meters.
    pub props: Array1<f64>,
}

impl EncodedTrajectory {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Pose at `n` instants evenly spread over the trajectory's duration.
pub fn resample(traj: &Trajectory, n: usize) -> Result<Vec<Pose>, SfcError> {
    if traj.is_empty() {
        return Err(SfcError::EmptyTrajectory);
    }
    let last = traj.len() - 1;
    Ok((0..n)
        .map(|i| {
            if last == 0 || n == 1 {
                return traj.samples[0].pose;
            }
            // Work in sample-index units so exact hits stay exact.
            let u = i as f64 * last as f64 / (n - 1) as f64;
            let k = (u.floor() as usize).min(last - 1);
            let s = u - k as f64;
            interpolate(&traj.samples[k].pose, &traj.samples[k + 1].pose, s)
        })
        .collect())
}

pub fn encode(traj: &Trajectory, container: &ContainerSpec, bounds: &Aabb, n: usize) -> Result<EncodedTrajectory, SfcError> {
    let poses = resample(traj, n)?;
    let dt = if n > 1 { traj.duration() / (n - 1) as f64 } else { 0.0 };
    let extent = bounds.extent();
    let mut matrix = Array2::zeros((n, IN_DIM));
    for (i, p) in poses.iter().enumerate() {
        for a in 0..3 {
            let span = extent[a].max(f64::MIN_POSITIVE);
            matrix[[i, a]] = 2.0 * (p.position[a] - bounds.min[a]) / span - 1.0;
        }
        let q = p.canonicalized().wxyz();
        for (j, v) in q.iter().enumerate() {
            matrix[[i, 3 + j]] = *v;
        }
        matrix[[i, 7]] = dt;
    }
    let props = Array1::from(vec![container.r_b, container.r_u, container.h_c, container.h_w]);
    Ok(EncodedTrajectory { matrix, props })
}
