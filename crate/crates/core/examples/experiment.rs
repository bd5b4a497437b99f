//! Runs the mode comparison over the shipped scenes and containers and
//! writes the summary, per-run and tilt-over-time CSVs to a directory.
//!
//! cargo run --release --example experiment -- [out_dir] [repeats]

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sfrrt::experiment::{load_containers, load_scenes, run_grid, summarize, summary_table, write_csv, write_tilt_long, ExperimentConfig, Mode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "experiment_out".into()));
    let repeats = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let scenes = load_scenes(&data.join("scenes"))?;
    let containers = load_containers(&data.join("containers"))?;
    for c in &containers {
        println!("{:<8} theta_max {:.1} deg", c.name, c.spec.theta_max()?.to_degrees());
    }
    let cfg = ExperimentConfig { repeats, ..Default::default() };
    let t = Instant::now();
    let records = run_grid(&scenes, &containers, &Mode::ALL, &cfg);
    let summary = summarize(&records);
    print!("{}", summary_table(&summary));
    println!("{} runs in {:.1?}", records.len(), t.elapsed());
    for r in records.iter().filter(|r| !r.success && r.mode == Mode::Sfrrt) {
        println!("  {} {} repeat {}: {}", r.scene, r.container, r.repeat, r.failure);
    }
    std::fs::create_dir_all(&out)?;
    write_csv(&summary, File::create(out.join("summary.csv"))?)?;
    write_csv(&records, File::create(out.join("runs.csv"))?)?;
    write_tilt_long(&records, File::create(out.join("tilt_over_time.csv"))?)?;
    println!("wrote {}", out.display());
    Ok(())
}
