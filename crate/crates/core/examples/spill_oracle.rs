//! Sloshing surrogate on a fast and a slow version of the same move, then
//! SFTP lowering jerk until the oracle accepts.
//!
//! cargo run --release --example spill_oracle

use nalgebra::Vector3;
use sfrrt::container::ContainerSpec;
use sfrrt::dataset::default_workspace;
use sfrrt::planner::Path;
use sfrrt::se3::Pose;
use sfrrt::spill::{oracle_label, sftp, slosh_response, ClassifierHandle, SftpParams, SloshParams};
use sfrrt::timeparam::{parameterize, KinematicLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = ContainerSpec::cylinder(0.03, 0.10, 0.08)?;
    println!("container theta_max {:.1} deg", c.theta_max()?.to_degrees());
    let path = Path::from_poses(vec![Pose::upright(Vector3::new(-0.4, 0.0, 0.2)), Pose::upright(Vector3::new(0.4, 0.0, 0.2))], 0.3);
    let slosh = SloshParams::default();
    for j in [200.0, 5.0] {
        let limits = KinematicLimits { v_max: 1.0, a_max: 8.0, j_max: j, ..Default::default() };
        let traj = parameterize(&path, &limits, 0.01)?;
        let v = oracle_label(&traj, &c, &slosh)?;
        let peak = slosh_response(&traj, &c, &slosh)?.iter().map(|s| s.effective_tilt).fold(0.0, f64::max);
        println!(
            "j_max {j:>5}: {:.2} s, peak surface tilt {:.1} deg, margin {:+.3} rad, {}",
            traj.duration(),
            peak.to_degrees(),
            v.margin,
            if v.spilled { "spills" } else { "spill-free" }
        );
    }

    let limits = KinematicLimits { v_max: 1.0, a_max: 8.0, j_max: 200.0, ..Default::default() };
    let r = sftp(&path, &limits, &ClassifierHandle::oracle(), &SftpParams::default(), &c, &default_workspace())?;
    println!(
        "sftp: accepted j_max {:.3} after {} queries ({} rejected), {:.2} s",
        r.limits.j_max,
        r.queries,
        r.rejected.len(),
        r.trajectory.duration()
    );
    Ok(())
}
