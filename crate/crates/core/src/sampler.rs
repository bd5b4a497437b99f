//! Container pose sampling restricted to the spill-free tilt cap.

use std::f64::consts::TAU;

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::se3::{Aabb, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// Orientation drawn uniformly from the cap of allowed tilts.
    Informed,
    /// Orientation uniform over all rotations.
    Uniform,
}

impl std::str::FromStr for SamplerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "informed" => Ok(SamplerMode::Informed),
            "uniform" => Ok(SamplerMode::Uniform),
            other => Err(format!("unknown sampler mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub theta_max: f64,
    pub bounds: Aabb,
    pub mode: SamplerMode,
    pub seed: u64,
}

pub struct PoseSampler {
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl PoseSampler {
    pub fn new(cfg: SamplerConfig) -> Self {
        assert!(
            (0.0..=std::f64::consts::FRAC_PI_2).contains(&cfg.theta_max),
            "theta_max must lie in [0, pi/2]"
        );
        PoseSampler { cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed) }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn sample(&mut self) -> Pose {
        sample_pose(&self.cfg, &mut self.rng)
    }
}

pub fn sample_position<R: Rng + ?Sized>(bounds: &Aabb, rng: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|i, _| bounds.min[i] + rng.random::<f64>() * (bounds.max[i] - bounds.min[i]))
}

/// Orientation whose symmetry axis lies within `theta_max` of world up,
/// uniform over the spherical cap, with uniform spin about the axis.
pub fn sample_capped_orientation<R: Rng + ?Sized>(theta_max: f64, rng: &mut R) -> UnitQuaternion<f64> {
    let cos_min = theta_max.cos();
    let cos_tilt = 1.0 - rng.random::<f64>() * (1.0 - cos_min);
    let tilt = cos_tilt.clamp(-1.0, 1.0).acos().min(theta_max);
    let azimuth = rng.random::<f64>() * TAU;
    let spin = rng.random::<f64>() * TAU;
    // Tilt about a horizontal axis perpendicular to the azimuth direction.
    let hinge = Unit::new_unchecked(Vector3::new(-azimuth.sin(), azimuth.cos(), 0.0));
    UnitQuaternion::from_axis_angle(&hinge, tilt) * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), spin)
}

/// Uniform rotation (Shoemake's subgroup algorithm).
pub fn sample_uniform_orientation<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(b * (TAU * u3).cos(), a * (TAU * u2).sin(), a * (TAU * u2).cos(), b * (TAU * u3).sin());
    UnitQuaternion::from_quaternion(q)
}

pub fn sample_pose<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Pose {
    let position = sample_position(&cfg.bounds, rng);
    let orientation = match cfg.mode {
        SamplerMode::Informed => sample_capped_orientation(cfg.theta_max, rng),
        SamplerMode::Uniform => sample_uniform_orientation(rng),
    };
    Pose::new(position, orientation)
}
