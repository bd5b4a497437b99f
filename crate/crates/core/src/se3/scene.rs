use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pose::Pose;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("scene json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Aabb { min, max }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    Box {
        center: Vector3<f64>,
        half_extents: Vector3<f64>,
        /// `[w, x, y, z]`; identity when omitted.
        #[serde(default = "identity_wxyz", with = "wxyz")]
        orientation: UnitQuaternion<f64>,
    },
}

fn identity_wxyz() -> UnitQuaternion<f64> {
    UnitQuaternion::identity()
}

mod wxyz {
    use nalgebra::{Quaternion, UnitQuaternion};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(q: &UnitQuaternion<f64>, s: S) -> Result<S::Ok, S::Error> {
        [q.w, q.i, q.j, q.k].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<UnitQuaternion<f64>, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        Ok(UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)))
    }
}

impl Obstacle {
    pub fn sphere(center: Vector3<f64>, radius: f64) -> Self {
        Obstacle::Sphere { center, radius }
    }

    pub fn aabb(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Obstacle::Box {
            center: (min + max) * 0.5,
            half_extents: (max - min) * 0.5,
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Same obstacle grown by `margin` in every direction (boxes keep their
    /// corners sharp, so this is a superset of the Minkowski inflation).
    pub fn inflated(&self, margin: f64) -> Self {
        match *self {
            Obstacle::Sphere { center, radius } => Obstacle::Sphere { center, radius: radius + margin },
            Obstacle::Box { center, half_extents, orientation } => Obstacle::Box {
                center,
                half_extents: half_extents.add_scalar(margin),
                orientation,
            },
        }
    }

    fn validate(&self) -> Result<(), SceneError> {
        let ok = match self {
            Obstacle::Sphere { radius, .. } => *radius > 0.0,
            Obstacle::Box { half_extents, .. } => half_extents.iter().all(|h| *h > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(SceneError::Invalid(format!("obstacle dimensions must be positive: {self:?}")))
        }
    }
}

/// Workspace description for one planning query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub name: String,
    pub bounds: Aabb,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub start: Pose,
    pub goal: Pose,
    /// Meters.
    pub goal_position_tolerance: f64,
    /// Radians, on the difference of tilt angles.
    pub goal_tilt_tolerance: f64,
}

impl Scene {
    /// Checks geometric sanity. Collision of start and goal depends on the
    /// container body and is checked by the planner.
    pub fn validate(&self) -> Result<(), SceneError> {
        if (0..3).any(|i| !(self.bounds.max[i] > self.bounds.min[i])) {
            return Err(SceneError::Invalid("empty bounds".into()));
        }
        for o in &self.obstacles {
            o.validate()?;
        }
        for (label, p) in [("start", &self.start), ("goal", &self.goal)] {
            if !p.is_finite() || !self.bounds.contains(&p.position) {
                return Err(SceneError::Invalid(format!("{label} pose outside bounds")));
            }
        }
        if !(self.goal_position_tolerance > 0.0) || !(self.goal_tilt_tolerance >= 0.0) {
            return Err(SceneError::Invalid("goal tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SceneError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn with_obstacles(&self, obstacles: Vec<Obstacle>) -> Self {
        Scene { obstacles, ..self.clone() }
    }
}
