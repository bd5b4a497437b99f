//! Learned spill classifier runtime: weight file round trip, golden-vector
//! parity and use as an SFTP handle.
//!
//! cargo run --release --example sfc_inference -- [weights.sfcw]

use nalgebra::Vector3;
use sfrrt::container::ContainerSpec;
use sfrrt::dataset::default_workspace;
use sfrrt::planner::Path;
use sfrrt::se3::Pose;
use sfrrt::sfc::{encode, load_weights, max_parity_error, save_weights, GoldenFile, GoldenVector, SfcConfig, SfcModel};
use sfrrt::spill::{sftp, ClassifierHandle, SftpParams};
use sfrrt::timeparam::{parameterize, KinematicLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let model = match std::env::args().nth(1) {
        Some(p) => load_weights(p.as_ref())?,
        None => {
            let path = dir.path().join("random.sfcw");
            save_weights(&SfcModel::random(SfcConfig::default(), 7)?, &path)?;
            println!("no weights given; using a random model ({} bytes on disk)", std::fs::metadata(&path)?.len());
            load_weights(&path)?
        }
    };
    println!("config: {:?}", model.config);

    let c = ContainerSpec::cylinder(0.03, 0.10, 0.06)?;
    let bounds = default_workspace();
    let path = Path::from_poses(vec![Pose::upright(Vector3::new(-0.3, 0.0, 0.2)), Pose::upright(Vector3::new(0.3, 0.1, 0.2))], 0.3);
    let mut goldens = GoldenFile { vectors: Vec::new() };
    for j in [40.0, 10.0, 2.5] {
        let traj = parameterize(&path, &KinematicLimits { j_max: j, ..Default::default() }, 0.01)?;
        let e = encode(&traj, &c, &bounds, model.seq_len())?;
        let p = model.forward(&e)?;
        println!("j_max {j:>4}: P(spill-free) = {p:.6}");
        goldens.vectors.push(GoldenVector {
            input: e.matrix.outer_iter().map(|r| r.to_vec()).collect(),
            props: e.props.to_vec(),
            probability: p,
            label: None,
        });
    }
    let golden_path = dir.path().join("golden.json");
    goldens.save(&golden_path)?;
    println!("golden parity after reload: {:.2e}", max_parity_error(&model, &GoldenFile::load(&golden_path)?)?);

    let handle = ClassifierHandle::learned(model);
    match sftp(&path, &KinematicLimits::default(), &handle, &SftpParams::default(), &c, &bounds) {
        Ok(r) => println!("sftp with the model: j_max {:.3} after {} queries", r.limits.j_max, r.queries),
        Err(e) => println!("sftp with the model: {e}"),
    }
    Ok(())
}
