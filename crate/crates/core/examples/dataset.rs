//! Generates a small balanced oracle-labelled dataset, saves it and scores a
//! model against it.
//!
//! cargo run --release --example dataset -- [n] [out.sfcd]

use std::path::{Path, PathBuf};

use sfrrt::dataset::{evaluate, generate, load_dataset, save_dataset, GeneratorConfig};
use sfrrt::experiment::{load_containers, load_scenes};
use sfrrt::sfc::{SfcConfig, SfcModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic.sfcd".into()));
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let scenes = load_scenes(&data.join("scenes"))?;
    let containers: Vec<_> = load_containers(&data.join("containers"))?.into_iter().map(|c| c.spec).collect();

    let records = generate(&scenes, &containers, &GeneratorConfig { n, seed: 1, ..Default::default() })?;
    save_dataset(&records, &out)?;
    let back = load_dataset(&out)?;
    let free = back.iter().filter(|r| r.spill_free).count();
    println!("{} records ({free} spill-free) in {} bytes at {}", back.len(), std::fs::metadata(&out)?.len(), out.display());
    let margins: Vec<f64> = back.iter().map(|r| r.margin).collect();
    println!(
        "oracle margins from {:+.3} to {:+.3} rad",
        margins.iter().copied().fold(f64::INFINITY, f64::min),
        margins.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    );

    // An untrained model as a floor for comparison.
    let model = SfcModel::random(SfcConfig::default(), 3)?;
    print!("{}", evaluate(&model, &back, 0.5)?.table());
    Ok(())
}
