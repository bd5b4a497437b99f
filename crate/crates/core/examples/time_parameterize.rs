//! Jerk-limited timing of a three-waypoint path, written as trajectory CSV.
//!
//! cargo run --release --example time_parameterize -- [out.csv]

use std::f64::consts::FRAC_PI_6;
use std::fs::File;

use nalgebra::{UnitQuaternion, Vector3};
use sfrrt::planner::Path;
use sfrrt::se3::Pose;
use sfrrt::timeparam::{parameterize, scale_jerk, KinematicLimits, SCurve, DEFAULT_DT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SCurve::minimal(3.0, 1.0, 1.0, 1.0);
    println!("single axis d=3 v=a=j=1: {:.6} s", s.duration());

    let path = Path::from_poses(
        vec![
            Pose::upright(Vector3::new(0.1, 0.0, 0.2)),
            Pose::new(Vector3::new(0.4, 0.2, 0.3), UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_6)),
            Pose::upright(Vector3::new(0.8, 0.0, 0.2)),
        ],
        0.3,
    );
    let limits = KinematicLimits::default();
    for k in [0, 2, 4, 6] {
        let l = scale_jerk(&limits, 2f64.powi(k));
        let t = parameterize(&path, &l, DEFAULT_DT)?;
        println!("j_max {:>7.3}: {:.2} s, mean speed {:.3} m/s", l.j_max, t.duration(), t.mean_speed());
    }
    let traj = parameterize(&path, &limits, DEFAULT_DT)?;
    let out = std::env::args().nth(1).unwrap_or_else(|| "trajectory.csv".into());
    traj.write_csv(File::create(&out)?)?;
    println!("wrote {} samples to {out}", traj.len());
    Ok(())
}
