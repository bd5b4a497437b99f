use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// World up; also the container's symmetry axis in its own frame.
pub fn up() -> Vector3<f64> {
    Vector3::z()
}

/// Container pose: position of the bottom center and orientation.
///
/// Orientations are stored with a non-negative scalar part so that the
/// two quaternions of the same rotation compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    /// `[w, x, y, z]`
    orientation: [f64; 4],
}

impl From<PoseRepr> for Pose {
    fn from(r: PoseRepr) -> Self {
        let [w, x, y, z] = r.orientation;
        Pose::new(Vector3::from(r.position), UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)))
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        PoseRepr { position: p.position.into(), orientation: p.wxyz() }
    }
}

pub fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Pose { position, orientation: canonical(orientation) }
    }

    pub fn upright(position: Vector3<f64>) -> Self {
        Pose::new(position, UnitQuaternion::identity())
    }

    pub fn canonicalized(self) -> Self {
        Pose::new(self.position, self.orientation)
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation;
        [q.w, q.i, q.j, q.k]
    }

    /// Container symmetry axis in world coordinates.
    pub fn axis(&self) -> Vector3<f64> {
        self.orientation * up()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite()) && self.wxyz().iter().all(|v| v.is_finite())
    }
}

/// Angle between the container's symmetry axis and world up, in `[0, pi]`.
pub fn tilt_of(pose: &Pose) -> f64 {
    pose.axis().z.clamp(-1.0, 1.0).acos()
}

/// Geodesic angle of the relative rotation between two orientations, in `[0, pi]`.
pub fn rotation_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let dot = a.coords.dot(&b.coords).abs().min(1.0);
    2.0 * dot.acos()
}

/// Shortest-arc relative rotation from `a` to `b` as a scaled axis in the
/// world frame, so `b = exp(axis) * a`.
pub fn relative_scaled_axis(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> Vector3<f64> {
    canonical(b * a.inverse()).scaled_axis()
}

/// Straight-line position and constant-speed shortest-arc orientation.
pub fn interpolate(a: &Pose, b: &Pose, s: f64) -> Pose {
    if s <= 0.0 {
        return *a;
    }
    if s >= 1.0 {
        return *b;
    }
    let position = a.position + (b.position - a.position) * s;
    let rel = relative_scaled_axis(&a.orientation, &b.orientation);
    Pose::new(position, UnitQuaternion::from_scaled_axis(rel * s) * a.orientation)
}

/// Exact largest tilt along the shortest-arc interpolation from `a` to `b`.
///
/// The symmetry axis rotates about a fixed world axis at constant rate, so
/// its vertical component is `c + p cos(phi) + q sin(phi)` over the swept
/// angle `phi`; the minimum is at an endpoint or at the sinusoid's trough.
pub fn max_tilt_along(a: &Pose, b: &Pose) -> f64 {
    let rel = relative_scaled_axis(&a.orientation, &b.orientation);
    let sweep = rel.norm();
    let (ta, tb) = (tilt_of(a), tilt_of(b));
    if sweep < 1e-12 {
        return ta.max(tb);
    }
    let n = rel / sweep;
    let z = a.axis();
    let along = z.dot(&n);
    let p = (z - n * along).z;
    let q = n.cross(&z).z;
    let trough = (q.atan2(p) + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    let mut worst = ta.max(tb);
    if trough > 0.0 && trough < sweep {
        let zz = along * n.z + p * trough.cos() + q * trough.sin();
        worst = worst.max(zz.clamp(-1.0, 1.0).acos());
    }
    worst
}
