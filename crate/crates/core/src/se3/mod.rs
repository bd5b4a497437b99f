//! Poses, trajectories, scenes and collision checking.

mod collision;
mod pose;
mod scene;
mod trajectory;

pub use collision::{
    edge_samples, edge_steps, in_collision, max_edge_tilt, segment_box_distance_sq, segment_free,
    segment_point_distance, ContainerBody,
};
pub use pose::{canonical, interpolate, max_tilt_along, relative_scaled_axis, rotation_angle, tilt_of, up, Pose};
pub use scene::{Aabb, Obstacle, Scene, SceneError};
pub use trajectory::{central_difference, Trajectory, TrajectoryError, TrajectorySample, CSV_HEADER};
