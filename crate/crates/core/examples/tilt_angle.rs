//! Quasi-static spill angle of the shipped containers, closed form against
//! the cross-section oracle, and how it falls as the fill rises.
//!
//! cargo run --release --example tilt_angle

use std::path::Path;

use sfrrt::container::{conservative_frustum_of, max_tilt_angle, tilt_angle_oracle, WallProfile, DEFAULT_ORACLE_TOL};
use sfrrt::experiment::load_containers;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/containers");
    for c in load_containers(&dir)? {
        let closed = max_tilt_angle(&c.spec)?;
        let oracle = tilt_angle_oracle(&c.spec, DEFAULT_ORACLE_TOL)?;
        println!(
            "{:<8} {:>7.3} deg ({}), oracle {:>7.3} deg",
            c.name,
            closed.theta_max.to_degrees(),
            closed.case.name(),
            oracle.theta_max.to_degrees()
        );
        let row: Vec<String> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|f| Ok(format!("{:.0}%→{:.1}°", f * 100.0, c.spec.with_fill(f * c.spec.h_c)?.theta_max()?.to_degrees())))
            .collect::<Result<_, sfrrt::container::GeometryError>>()?;
        println!("         {}", row.join("  "));
    }

    // A curved bowl reduced to the frustum it is guaranteed to contain.
    let bowl: Vec<(f64, f64)> = (0..=8).map(|i| {
        let y = 0.1 * i as f64 / 8.0;
        (y, 0.02 + 0.05 * (y / 0.1).sqrt())
    }).collect();
    let profile = WallProfile::from_pairs(&bowl, 0.05);
    let f = conservative_frustum_of(&profile)?;
    println!(
        "bowl: frustum r_b {:.4} r_u {:.4} h_w {:.4}, theta_max {:.2} deg",
        f.r_b,
        f.r_u,
        f.h_w,
        f.theta_max()?.to_degrees()
    );
    Ok(())
}
