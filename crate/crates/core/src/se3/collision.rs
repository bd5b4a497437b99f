//! Capsule-vs-primitive collision queries.
//!
//! Sphere and box tests are exact: the box test minimizes the piecewise
//! quadratic squared distance from the capsule segment to the box over each
//! breakpoint interval.

use nalgebra::Vector3;

use super::pose::{interpolate, rotation_angle, tilt_of, Pose};
use super::scene::{Obstacle, Scene};
use crate::container::ContainerSpec;

/// Capsule collision proxy in the container frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainerBody {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

impl ContainerBody {
    /// Capsule along the symmetry axis from the bottom center to the rim
    /// center with the rim radius. It encloses the frustum.
    pub fn from_container(c: &ContainerSpec) -> Self {
        ContainerBody { a: Vector3::zeros(), b: Vector3::new(0.0, 0.0, c.h_c), radius: c.r_u.max(c.r_b) }
    }

    /// Farthest capsule point from the frame origin.
    pub fn reach(&self) -> f64 {
        self.a.norm().max(self.b.norm()) + self.radius
    }

    pub fn world_segment(&self, pose: &Pose) -> (Vector3<f64>, Vector3<f64>) {
        (pose.position + pose.orientation * self.a, pose.position + pose.orientation * self.b)
    }
}

/// Distance from point `p` to segment `[a, b]`.
pub fn segment_point_distance(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - p).norm()
}

/// Squared distance from segment `[a, b]` to the origin-centered box with
/// `half` extents, both in the box frame.
pub fn segment_box_distance_sq(a: &Vector3<f64>, b: &Vector3<f64>, half: &Vector3<f64>) -> f64 {
    let d = b - a;
    let mut cuts = vec![0.0, 1.0];
    for i in 0..3 {
        if d[i].abs() > 0.0 {
            for face in [-half[i], half[i]] {
                let t = (face - a[i]) / d[i];
                if t > 0.0 && t < 1.0 {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let dist_sq = |t: f64| -> f64 {
        (0..3)
            .map(|i| {
                let x = a[i] + d[i] * t;
                let e = (x.abs() - half[i]).max(0.0);
                e * e
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        // On this interval each axis is either inside its slab or beyond a
        // fixed face, making the squared distance a quadratic in t.
        let (mut qa, mut qb) = (0.0, 0.0);
        for i in 0..3 {
            let x = a[i] + d[i] * mid;
            if x.abs() > half[i] {
                let face = half[i].copysign(x);
                let off = a[i] - face;
                qa += d[i] * d[i];
                qb += 2.0 * d[i] * off;
            }
        }
        let mut cand = vec![t0, t1];
        if qa > 0.0 {
            let t = -qb / (2.0 * qa);
            if t > t0 && t < t1 {
                cand.push(t);
            }
        }
        for t in cand {
            best = best.min(dist_sq(t));
        }
    }
    best
}

fn capsule_hits(obstacle: &Obstacle, p0: &Vector3<f64>, p1: &Vector3<f64>, radius: f64) -> bool {
    match obstacle {
        Obstacle::Sphere { center, radius: rs } => segment_point_distance(p0, p1, center) <= rs + radius,
        Obstacle::Box { center, half_extents, orientation } => {
            // Quick reject on the bounding sphere.
            if segment_point_distance(p0, p1, center) > half_extents.norm() + radius {
                return false;
            }
            let inv = orientation.inverse();
            let a = inv * (p0 - center);
            let b = inv * (p1 - center);
            segment_box_distance_sq(&a, &b, half_extents) <= radius * radius
        }
    }
}

/// True iff the capsule at `pose` touches any obstacle or leaves the bounds.
pub fn in_collision(pose: &Pose, body: &ContainerBody, scene: &Scene) -> bool {
    let (p0, p1) = body.world_segment(pose);
    let r = body.radius;
    for p in [&p0, &p1] {
        for i in 0..3 {
            if p[i] - r < scene.bounds.min[i] || p[i] + r > scene.bounds.max[i] {
                return true;
            }
        }
    }
    scene.obstacles.iter().any(|o| capsule_hits(o, &p0, &p1, r))
}

/// Number of interpolation intervals so that no capsule point moves more
/// than `resolution` between samples.
pub fn edge_steps(a: &Pose, b: &Pose, body: &ContainerBody, resolution: f64) -> usize {
    let travel = (b.position - a.position).norm() + body.reach() * rotation_angle(&a.orientation, &b.orientation);
    ((travel / resolution).ceil() as usize).max(1)
}

/// Samples along the interpolated edge, endpoints included.
pub fn edge_samples(a: &Pose, b: &Pose, body: &ContainerBody, resolution: f64) -> impl Iterator<Item = Pose> + use<> {
    let n = edge_steps(a, b, body, resolution);
    let (a, b) = (*a, *b);
    (0..=n).map(move |k| interpolate(&a, &b, k as f64 / n as f64))
}

/// True iff every interpolation sample along `a -> b` is collision-free.
///
/// Sample spacing bounds the displacement of every capsule point (position
/// change plus rotation times the capsule reach), which is never coarser
/// than spacing on the position arc alone.
pub fn segment_free(a: &Pose, b: &Pose, body: &ContainerBody, scene: &Scene, resolution: f64) -> bool {
    assert!(resolution > 0.0, "resolution must be positive");
    edge_samples(a, b, body, resolution).all(|p| !in_collision(&p, body, scene))
}

/// Largest tilt along the interpolated edge.
pub fn max_edge_tilt(a: &Pose, b: &Pose, body: &ContainerBody, resolution: f64) -> f64 {
    edge_samples(a, b, body, resolution).map(|p| tilt_of(&p)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::scene::Aabb;
    use nalgebra::UnitQuaternion;

    fn open_scene(obstacles: Vec<Obstacle>) -> Scene {
        Scene {
            name: "test".into(),
            bounds: Aabb::new(Vector3::new(-1.0, -1.0, -1.0), Vector3::new(1.0, 1.0, 1.0)),
            obstacles,
            start: Pose::upright(Vector3::new(-0.5, 0.0, 0.0)),
            goal: Pose::upright(Vector3::new(0.5, 0.0, 0.0)),
            goal_position_tolerance: 0.02,
            goal_tilt_tolerance: 0.1,
        }
    }

    fn body() -> ContainerBody {
        ContainerBody::from_container(&ContainerSpec::cylinder(0.03, 0.1, 0.05).unwrap())
    }

    #[test]
    fn far_from_everything() {
        let scene = open_scene(vec![Obstacle::sphere(Vector3::new(0.7, 0.7, 0.7), 0.1)]);
        assert!(!in_collision(&Pose::upright(Vector3::zeros()), &body(), &scene));
    }

    #[test]
    fn inside_sphere() {
        let scene = open_scene(vec![Obstacle::sphere(Vector3::new(0.0, 0.0, 0.05), 0.2)]);
        assert!(in_collision(&Pose::upright(Vector3::zeros()), &body(), &scene));
    }

    #[test]
    fn grazing_sphere() {
        let b = body();
        // Sphere beside the capsule's mid-height.
        let rs = 0.05;
        let gap = rs + b.radius + 1e-3;
        let scene = open_scene(vec![Obstacle::sphere(Vector3::new(gap, 0.0, 0.05), rs)]);
        assert!(!in_collision(&Pose::upright(Vector3::zeros()), &b, &scene));
        let scene = open_scene(vec![Obstacle::sphere(Vector3::new(gap - 2e-3, 0.0, 0.05), rs)]);
        assert!(in_collision(&Pose::upright(Vector3::zeros()), &b, &scene));
    }

    #[test]
    fn leaving_bounds() {
        let scene = open_scene(vec![]);
        assert!(in_collision(&Pose::upright(Vector3::new(0.0, 0.0, 0.9)), &body(), &scene));
        assert!(in_collision(&Pose::upright(Vector3::new(0.99, 0.0, 0.0)), &body(), &scene));
    }

    #[test]
    fn box_distance_matches_brute_force() {
        let half = Vector3::new(0.1, 0.2, 0.05);
        let cases = [
            (Vector3::new(0.3, 0.0, 0.0), Vector3::new(0.3, 0.5, 0.4)),
            (Vector3::new(-0.5, -0.5, 0.2), Vector3::new(0.5, 0.4, 0.3)),
            (Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.5, 0.0, 0.0)),
            (Vector3::new(0.2, 0.3, 0.1), Vector3::new(0.2, 0.3, 0.1)),
        ];
        for (a, b) in cases {
            let exact = segment_box_distance_sq(&a, &b, &half);
            let brute = (0..=20000)
                .map(|k| {
                    let p = a + (b - a) * (k as f64 / 20000.0);
                    (0..3).map(|i| (p[i].abs() - half[i]).max(0.0).powi(2)).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(exact <= brute + 1e-15, "{exact} > {brute}");
            assert!(brute - exact < 1e-6, "{exact} vs {brute}");
        }
    }

    #[test]
    fn rotated_box() {
        let b = body();
        let ob = Obstacle::Box {
            center: Vector3::new(0.2, 0.0, 0.05),
            half_extents: Vector3::new(0.05, 0.3, 0.3),
            orientation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.4),
        };
        let scene = open_scene(vec![ob]);
        assert!(!in_collision(&Pose::upright(Vector3::new(-0.2, 0.0, 0.0)), &b, &scene));
        assert!(in_collision(&Pose::upright(Vector3::new(0.15, 0.0, 0.0)), &b, &scene));
    }

    #[test]
    fn segment_checks() {
        let b = body();
        let empty = open_scene(vec![]);
        let (s, g) = (empty.start, empty.goal);
        assert!(segment_free(&s, &g, &b, &empty, 0.01));
        let blocked = open_scene(vec![Obstacle::sphere(Vector3::new(0.0, 0.0, 0.05), 0.1)]);
        assert!(!in_collision(&s, &b, &blocked) && !in_collision(&g, &b, &blocked));
        assert!(!segment_free(&s, &g, &b, &blocked, 0.01));
        let both = open_scene(vec![
            Obstacle::sphere(s.position, 0.05),
            Obstacle::sphere(g.position, 0.05),
        ]);
        assert!(!segment_free(&s, &g, &b, &both, 0.01));
    }
}
