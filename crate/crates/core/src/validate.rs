//! Independent re-checks of planner and pipeline outputs.
//!
//! These use the unpadded collision body, sample at half the planner's
//! resolution and read limits off the stored derivatives, so they share no
//! shortcuts with the code under test.

use crate::container::ContainerSpec;
use crate::planner::Path;
use crate::se3::{edge_samples, in_collision, tilt_of, ContainerBody, Pose, Scene, Trajectory};
use crate::timeparam::KinematicLimits;

pub const TILT_TOLERANCE: f64 = 1e-9;
pub const LIMIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Indices of waypoints or samples starting a colliding stretch.
    pub collisions: Vec<usize>,
    pub tilt_violations: Vec<usize>,
    pub limit_violations: Vec<(usize, &'static str)>,
    pub max_tilt: f64,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.collisions.is_empty() && self.tilt_violations.is_empty() && self.limit_violations.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    fn check_stretch(&mut self, i: usize, a: &Pose, b: &Pose, body: &ContainerBody, scene: &Scene, res: f64, cap: f64) {
        let mut hit = false;
        let mut over = false;
        for p in edge_samples(a, b, body, res) {
            let t = tilt_of(&p);
            self.max_tilt = self.max_tilt.max(t);
            over |= t > cap + TILT_TOLERANCE;
            hit |= in_collision(&p, body, scene);
        }
        if hit {
            self.collisions.push(i);
        }
        if over {
            self.tilt_violations.push(i);
        }
    }
}

/// Dense check of every edge of `path`.
pub fn validate_path(path: &Path, scene: &Scene, container: &ContainerSpec, cap: f64, resolution: f64) -> ValidationReport {
    let body = ContainerBody::from_container(container);
    let res = resolution / 2.0;
    let mut r = ValidationReport::default();
    if path.poses.len() == 1 {
        r.check_stretch(0, &path.poses[0], &path.poses[0], &body, scene, res, cap);
    }
    for (i, w) in path.poses.windows(2).enumerate() {
        r.check_stretch(i, &w[0], &w[1], &body, scene, res, cap);
    }
    r
}

fn over(value: f64, limit: f64) -> bool {
    value > limit * (1.0 + LIMIT_TOLERANCE) + LIMIT_TOLERANCE * 1e-3
}

/// Collision between samples, tilt at every sample and kinematic limits.
pub fn validate_trajectory(
    traj: &Trajectory,
    scene: &Scene,
    container: &ContainerSpec,
    cap: f64,
    limits: &KinematicLimits,
    resolution: f64,
) -> ValidationReport {
    let body = ContainerBody::from_container(container);
    let res = resolution / 2.0;
    let mut r = ValidationReport::default();
    for (i, s) in traj.samples.iter().enumerate() {
        let next = traj.samples.get(i + 1).map_or(s.pose, |n| n.pose);
        r.check_stretch(i, &s.pose, &next, &body, scene, res, cap);
        let lin_checks = [
            ("v", s.lin_vel.amax(), limits.v_max),
            ("a", s.lin_acc.amax(), limits.a_max),
            ("j", s.lin_jerk.amax(), limits.j_max),
            ("w", s.ang_vel.norm(), limits.w_max),
            ("alpha", s.ang_acc.norm(), limits.alpha_max),
            ("zeta", s.ang_jerk.norm(), limits.zeta_max),
        ];
        for (name, value, limit) in lin_checks {
            if over(value, limit) {
                r.limit_violations.push((i, name));
            }
        }
    }
    r
}
