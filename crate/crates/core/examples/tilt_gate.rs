//! Plans through the tilt gate with a wide and a narrow tilt cap.
//!
//! cargo run --release --example tilt_gate -- [cap_deg ...]

use std::path::Path;
use std::time::Instant;

use sfrrt::container::ContainerSpec;
use sfrrt::planner::{plan_with_stats, PlannerConfig};
use sfrrt::se3::Scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let scene = Scene::load(&data.join("scenes/tilt_gate.json"))?;
    let cup: ContainerSpec = serde_json::from_str(&std::fs::read_to_string(data.join("containers/cup.json"))?)?;
    println!("cup theta_max = {:.1} deg", cup.theta_max()?.to_degrees());
    let mut caps: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if caps.is_empty() {
        caps = vec![45.0, 15.0];
    }
    for cap_deg in caps {
        for seed in 0..5 {
            let cfg = PlannerConfig {
                max_iterations: 20_000,
                tilt_cap: Some(cap_deg.to_radians()),
                seed,
                refine_iterations: Some(500),
                ..Default::default()
            };
            let t = Instant::now();
            match plan_with_stats(&scene, &cup, &cfg) {
                Ok((path, stats)) => println!(
                    "cap {cap_deg:>4} seed {seed}: {} waypoints, max tilt {:.1} deg, {} iterations, {:.2?}",
                    path.len(),
                    path.max_tilt().to_degrees(),
                    stats.iterations,
                    t.elapsed()
                ),
                Err(e) => println!("cap {cap_deg:>4} seed {seed}: {e} ({:.2?})", t.elapsed()),
            }
        }
    }
    Ok(())
}
