//! Full SFRRT* run on the table scene: plan, prune, spill-free timing and an
//! independent re-check.
//!
//! cargo run --release --example srrt_pipeline -- [container] [seed]

use std::path::Path;

use sfrrt::experiment::load_containers;
use sfrrt::pipeline::{srrt_star, SrrtConfig};
use sfrrt::planner::PlannerConfig;
use sfrrt::se3::Scene;
use sfrrt::spill::{oracle_label, ClassifierHandle, SloshParams};
use sfrrt::validate::validate_trajectory;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "tumbler".into());
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let scene = Scene::load(&data.join("scenes/table.json"))?;
    let c = load_containers(&data.join("containers"))?
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| format!("no container named {name}"))?
        .spec;

    let cfg = SrrtConfig {
        planner: PlannerConfig { max_iterations: 20_000, refine_iterations: Some(500), seed, ..Default::default() },
        ..Default::default()
    };
    let out = srrt_star(&scene, &c, &cfg, &ClassifierHandle::oracle())?;
    let traj = out.trajectory();
    println!(
        "planner: {} iterations, {} nodes; path {} -> {} waypoints, max tilt {:.1} deg",
        out.stats.iterations,
        out.stats.nodes,
        out.raw_path.len(),
        out.path.len(),
        out.path.max_tilt().to_degrees()
    );
    println!(
        "sftp: j_max {:.3} after {} queries, {:.2} s at {:.3} m/s",
        out.sftp.limits.j_max,
        out.sftp.queries,
        traj.duration(),
        traj.mean_speed()
    );
    let cap = cfg.planner.effective_cap(&c)?;
    let report = validate_trajectory(traj, &scene, &c, cap, &out.sftp.limits, cfg.planner.edge_resolution);
    let verdict = oracle_label(traj, &c, &SloshParams::default())?;
    println!("validator ok: {}, oracle margin {:+.4} rad", report.ok(), verdict.margin);
    Ok(())
}
