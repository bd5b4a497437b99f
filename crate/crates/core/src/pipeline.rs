//! Path planning followed by spill-free time parameterization.

use log::info;
use thiserror::Error;

use crate::container::ContainerSpec;
use crate::planner::{plan_with_stats, prune, Path, PlanError, PlanStats, PlannerConfig};
use crate::se3::{Scene, Trajectory};
use crate::spill::{sftp, ClassifierHandle, SftpParams, SftpResult, SpillError};
use crate::timeparam::KinematicLimits;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Spill(#[from] SpillError),
}

#[derive(Debug, Clone, Default)]
pub struct SrrtConfig {
    pub planner: PlannerConfig,
    pub limits: KinematicLimits,
    pub sftp: SftpParams,
}

#[derive(Debug, Clone)]
pub struct SrrtOutput {
    pub raw_path: Path,
    pub path: Path,
    pub stats: PlanStats,
    pub sftp: SftpResult,
}

impl SrrtOutput {
    pub fn trajectory(&self) -> &Trajectory {
        &self.sftp.trajectory
    }
}

/// Plans, shortcuts the path, then lowers jerk until `handle` approves.
pub fn srrt_star(
    scene: &Scene,
    container: &ContainerSpec,
    cfg: &SrrtConfig,
    handle: &ClassifierHandle,
) -> Result<SrrtOutput, PipelineError> {
    let (raw_path, stats) = plan_with_stats(scene, container, &cfg.planner)?;
    let path = prune(&raw_path, scene, container, &cfg.planner)?;
    info!(
        "path: {} waypoints ({} before pruning), cost {:.3}, max tilt {:.1} deg",
        path.len(),
        raw_path.len(),
        path.cost,
        path.max_tilt().to_degrees()
    );
    let result = sftp(&path, &cfg.limits, handle, &cfg.sftp, container, &scene.bounds)?;
    info!(
        "trajectory: {:.2} s at j_max {:.3} after {} queries",
        result.trajectory.duration(),
        result.limits.j_max,
        result.queries
    );
    Ok(SrrtOutput { raw_path, path, stats, sftp: result })
}
