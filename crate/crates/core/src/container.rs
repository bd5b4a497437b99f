//! Quasi-static tilt limits of liquid-filled frustum containers.
//!
//! The container is reduced to its 2D cross-section through the symmetry
//! axis: a trapezoid with bottom half-width `r_b`, top half-width `r_u` and
//! height `h_c`. The liquid rests up to `h_w`. Tilting conserves the liquid
//! cross-section area; the container is at its limit when the horizontal
//! free surface passes through the low rim corner.
//!
//! Two limit shapes exist. When the conserved area is at least
//! `r_b * h_c` the surface meets the high wall (a trapezoid plus a triangle
//! of liquid); otherwise it meets the bottom and the liquid is a single
//! triangle standing on the low wall.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polygon::{self, Point2};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid container: {0}")]
    InvalidContainer(String),
    #[error("wall profile has fewer than two samples")]
    EmptyProfile,
    #[error("invalid wall profile: {0}")]
    InvalidProfile(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Frustum-of-cone container with its liquid fill level, all in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContainerSpec {
    pub r_b: f64,
    pub r_u: f64,
    pub h_c: f64,
    pub h_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiltCase {
    /// Liquid forms a trapezoid under a triangle; surface meets the high wall.
    TrapezoidPlusTriangle,
    /// Liquid forms one triangle; surface meets the bottom.
    TriangleOnly,
}

impl TiltCase {
    pub fn name(self) -> &'static str {
        match self {
            TiltCase::TrapezoidPlusTriangle => "TrapezoidPlusTriangle",
            TiltCase::TriangleOnly => "TriangleOnly",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltResult {
    /// Radians in `[0, pi/2]`.
    pub theta_max: f64,
    pub case: TiltCase,
    /// Width of the wetted bottom at the limit angle (meters).
    pub wet_bottom_width: f64,
}

impl ContainerSpec {
    pub fn new(r_b: f64, r_u: f64, h_c: f64, h_w: f64) -> Result<Self, GeometryError> {
        let c = ContainerSpec { r_b, r_u, h_c, h_w };
        c.validate()?;
        Ok(c)
    }

    pub fn cylinder(radius: f64, h_c: f64, h_w: f64) -> Result<Self, GeometryError> {
        Self::new(radius, radius, h_c, h_w)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let ContainerSpec { r_b, r_u, h_c, h_w } = *self;
        if ![r_b, r_u, h_c, h_w].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidContainer("non-finite dimension".into()));
        }
        if r_b <= 0.0 || r_u <= 0.0 || h_c <= 0.0 {
            return Err(GeometryError::InvalidContainer(format!(
                "radii and height must be positive (r_b={r_b}, r_u={r_u}, h_c={h_c})"
            )));
        }
        if r_u < r_b {
            return Err(GeometryError::InvalidContainer(format!(
                "inverted frustum (r_u={r_u} < r_b={r_b})"
            )));
        }
        if !(0.0..=h_c).contains(&h_w) {
            return Err(GeometryError::InvalidContainer(format!(
                "fill height {h_w} outside [0, {h_c}]"
            )));
        }
        Ok(())
    }

    /// Wall slope: radius gained per meter of height.
    pub fn wall_slope(&self) -> f64 {
        (self.r_u - self.r_b) / self.h_c
    }

    /// Half-width of the cross-section at height `y` above the bottom.
    pub fn radius_at(&self, y: f64) -> f64 {
        self.r_b + self.wall_slope() * y
    }

    /// Cross-section area of the liquid at rest.
    pub fn rest_area(&self) -> f64 {
        self.h_w * (self.r_b + self.radius_at(self.h_w))
    }

    pub fn fill_fraction(&self) -> f64 {
        self.h_w / self.h_c
    }

    /// Same container with a different fill height.
    pub fn with_fill(&self, h_w: f64) -> Result<Self, GeometryError> {
        Self::new(self.r_b, self.r_u, self.h_c, h_w)
    }

    /// Cross-section polygon, counter-clockwise, bottom-left first.
    pub fn cross_section(&self) -> Vec<Point2> {
        vec![
            Point2::new(-self.r_b, 0.0),
            Point2::new(self.r_b, 0.0),
            Point2::new(self.r_u, self.h_c),
            Point2::new(-self.r_u, self.h_c),
        ]
    }

    /// Quasi-static tilt limit, also available as [`max_tilt_angle`].
    pub fn theta_max(&self) -> Result<f64, GeometryError> {
        max_tilt_angle(self).map(|r| r.theta_max)
    }
}

/// Closed-form maximum tilt angle.
pub fn max_tilt_angle(c: &ContainerSpec) -> Result<TiltResult, GeometryError> {
    c.validate()?;
    let ContainerSpec { r_b, r_u, h_c, .. } = *c;
    if c.h_w >= h_c {
        return Ok(TiltResult {
            theta_max: 0.0,
            case: TiltCase::TrapezoidPlusTriangle,
            wet_bottom_width: 2.0 * r_b,
        });
    }
    let area = c.rest_area();
    let s = c.wall_slope();
    // Bottom width wetted by a single liquid triangle standing on the low wall.
    let w = 2.0 * area / h_c;
    if w <= 2.0 * r_b {
        let theta = h_c.atan2(r_u - r_b + w);
        Ok(TiltResult { theta_max: theta, case: TiltCase::TriangleOnly, wet_bottom_width: w })
    } else {
        // Height at which the surface meets the high wall. The wetted
        // polygon's area simplifies to r_u * y + r_b * h_c.
        let y_high = ((area - r_b * h_c) / r_u).min(h_c);
        let theta = (h_c - y_high).atan2(r_b + r_u + s * y_high);
        Ok(TiltResult {
            theta_max: theta,
            case: TiltCase::TrapezoidPlusTriangle,
            wet_bottom_width: 2.0 * r_b,
        })
    }
}

/// Liquid area a convex cross-section can hold when tilted by `theta`, with
/// the surface through the low rim corner `rim`.
pub fn capacity_at_tilt(section: &[Point2], rim: Point2, theta: f64) -> f64 {
    let (sin, cos) = theta.sin_cos();
    let kept = polygon::clip_half_plane(section, |p| sin * (p.x - rim.x) + cos * (p.y - rim.y));
    polygon::area(&kept)
}

/// Bisection over the tilt angle for the angle at which `capacity` drops to
/// `area`. `capacity` must be non-increasing on `[0, pi/2]`.
fn bisect_capacity(area: f64, tol: f64, capacity: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, std::f64::consts::FRAC_PI_2);
    if capacity(lo) <= area {
        return 0.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if capacity(mid) > area {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Numeric ground truth for [`max_tilt_angle`]: bisection on the tilt angle,
/// clipping the cross-section against the free surface at each step.
pub fn tilt_angle_oracle(c: &ContainerSpec, tol: f64) -> Result<TiltResult, GeometryError> {
    c.validate()?;
    if !(tol > 0.0) {
        return Err(GeometryError::InvalidTolerance(tol));
    }
    let section = c.cross_section();
    let rim = Point2::new(-c.r_u, c.h_c);
    let area = polygon::area(&polygon::clip_half_plane(&section, |p| p.y - c.h_w));
    if c.h_w >= c.h_c {
        return Ok(TiltResult {
            theta_max: 0.0,
            case: TiltCase::TrapezoidPlusTriangle,
            wet_bottom_width: 2.0 * c.r_b,
        });
    }
    let theta = bisect_capacity(area, tol, |t| capacity_at_tilt(&section, rim, t));
    // Where the surface line crosses the bottom decides the shape.
    let reach = c.h_c / theta.tan();
    let foot = -c.r_u + reach;
    if foot <= c.r_b {
        Ok(TiltResult {
            theta_max: theta,
            case: TiltCase::TriangleOnly,
            wet_bottom_width: (foot + c.r_b).max(0.0),
        })
    } else {
        Ok(TiltResult {
            theta_max: theta,
            case: TiltCase::TrapezoidPlusTriangle,
            wet_bottom_width: 2.0 * c.r_b,
        })
    }
}

/// One radius sample of a rotationally symmetric wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub height: f64,
    pub radius: f64,
}

/// Radius-vs-height description of a curved container plus its liquid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallProfile {
    /// Samples ordered by strictly increasing height.
    pub samples: Vec<ProfileSample>,
    /// Liquid height above the lowest sample.
    pub fill_height: f64,
}

impl WallProfile {
    pub fn from_pairs(pairs: &[(f64, f64)], fill_height: f64) -> Self {
        WallProfile {
            samples: pairs.iter().map(|&(height, radius)| ProfileSample { height, radius }).collect(),
            fill_height,
        }
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.samples.len() < 2 {
            return Err(GeometryError::EmptyProfile);
        }
        for pair in self.samples.windows(2) {
            if !(pair[1].height > pair[0].height) {
                return Err(GeometryError::InvalidProfile("heights must increase".into()));
            }
        }
        if self.samples.iter().any(|s| !(s.radius > 0.0) || !s.radius.is_finite()) {
            return Err(GeometryError::InvalidProfile("radii must be positive".into()));
        }
        if !self.fill_height.is_finite() || self.fill_height < 0.0 {
            return Err(GeometryError::InvalidProfile("fill height must be non-negative".into()));
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.samples.last().unwrap().height - self.samples[0].height
    }

    /// Cross-section polygon (counter-clockwise) with heights rebased to 0.
    pub fn cross_section(&self) -> Vec<Point2> {
        let y0 = self.samples[0].height;
        let mut pts: Vec<Point2> =
            self.samples.iter().map(|s| Point2::new(s.radius, s.height - y0)).collect();
        pts.extend(self.samples.iter().rev().map(|s| Point2::new(-s.radius, s.height - y0)));
        pts
    }

    pub fn rest_area(&self) -> f64 {
        let fill = self.fill_height;
        polygon::area(&polygon::clip_half_plane(&self.cross_section(), |p| p.y - fill))
    }
}

/// Quasi-static tilt limit of a convex profiled container, by bisection.
pub fn profile_tilt_oracle(profile: &WallProfile, tol: f64) -> Result<f64, GeometryError> {
    profile.check()?;
    if !(tol > 0.0) {
        return Err(GeometryError::InvalidTolerance(tol));
    }
    let section = profile.cross_section();
    let top = profile.samples.last().unwrap();
    let rim = Point2::new(-top.radius, profile.height());
    let area = profile.rest_area();
    Ok(bisect_capacity(area, tol, |t| capacity_at_tilt(&section, rim, t)))
}

/// Largest-area frustum inscribed in `profile`.
///
/// The frustum spans the profile's full height. Its fill level holds the
/// same liquid cross-section area as the original container does (clamped
/// to brim-full), so the frustum never claims more tilt room than the real
/// shape.
pub fn conservative_frustum_of(profile: &WallProfile) -> Result<ContainerSpec, GeometryError> {
    profile.check()?;
    let h_c = profile.height();
    let y0 = profile.samples[0].height;
    // Constraints a * r_b + b * r_u <= c.
    let mut cons: Vec<(f64, f64, f64)> = profile
        .samples
        .iter()
        .map(|s| {
            let t = (s.height - y0) / h_c;
            (1.0 - t, t, s.radius)
        })
        .collect();
    cons.push((1.0, -1.0, 0.0)); // r_b <= r_u
    cons.push((-1.0, 0.0, 0.0)); // r_b >= 0

    let feasible = |rb: f64, ru: f64| {
        cons.iter().all(|&(a, b, c)| a * rb + b * ru <= c + 1e-12 * (1.0 + c.abs()))
    };
    let mut best: Option<(f64, f64)> = None;
    for i in 0..cons.len() {
        for j in (i + 1)..cons.len() {
            let (a1, b1, c1) = cons[i];
            let (a2, b2, c2) = cons[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-14 {
                continue;
            }
            let rb = (c1 * b2 - c2 * b1) / det;
            let ru = (a1 * c2 - a2 * c1) / det;
            if !feasible(rb, ru) {
                continue;
            }
            let better = match best {
                None => true,
                Some((brb, bru)) => rb + ru > brb + bru + 1e-15,
            };
            if better {
                best = Some((rb, ru));
            }
        }
    }
    let (r_b, r_u) = best.ok_or(GeometryError::EmptyProfile)?;
    let r_u = r_u.max(r_b);
    let mut spec = ContainerSpec { r_b, r_u, h_c, h_w: 0.0 };
    spec.validate()?;
    spec.h_w = fill_height_for_area(&spec, profile.rest_area());
    Ok(spec)
}

/// Fill height at which the frustum's rest area equals `area`.
fn fill_height_for_area(c: &ContainerSpec, area: f64) -> f64 {
    let full = c.h_c * (c.r_b + c.r_u);
    if area >= full {
        return c.h_c;
    }
    // h * (2 r_b + s h) = area
    let s = c.wall_slope();
    if s.abs() < 1e-15 {
        return area / (2.0 * c.r_b);
    }
    let disc = (4.0 * c.r_b * c.r_b + 4.0 * s * area).sqrt();
    ((disc - 2.0 * c.r_b) / (2.0 * s)).clamp(0.0, c.h_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn deg(r: f64) -> f64 {
        r.to_degrees()
    }

    #[test]
    fn cylinder_trapezoid_case() {
        let c = ContainerSpec::cylinder(0.04, 0.10, 0.06).unwrap();
        let r = max_tilt_angle(&c).unwrap();
        assert!((r.theta_max - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert_eq!(r.case, TiltCase::TrapezoidPlusTriangle);
    }

    #[test]
    fn cylinder_triangle_case() {
        let c = ContainerSpec::cylinder(0.04, 0.10, 0.02).unwrap();
        let r = max_tilt_angle(&c).unwrap();
        assert!((r.theta_max - 3.125_f64.atan()).abs() < 1e-12);
        assert!((deg(r.theta_max) - 72.26).abs() < 0.01);
        assert_eq!(r.case, TiltCase::TriangleOnly);
        assert!(r.wet_bottom_width <= 0.08);
    }

    #[test]
    fn brim_full_and_empty() {
        let full = ContainerSpec::new(0.03, 0.05, 0.1, 0.1).unwrap();
        assert_eq!(max_tilt_angle(&full).unwrap().theta_max, 0.0);
        assert_eq!(tilt_angle_oracle(&full, 1e-6).unwrap().theta_max, 0.0);
        let empty = ContainerSpec::cylinder(0.04, 0.1, 0.0).unwrap();
        assert!((max_tilt_angle(&empty).unwrap().theta_max - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn half_fill_cylinder_cases_coincide() {
        let c = ContainerSpec::cylinder(0.04, 0.10, 0.05).unwrap();
        let expected = (0.05_f64 / 0.04).atan();
        let r = max_tilt_angle(&c).unwrap();
        assert!((r.theta_max - expected).abs() < 1e-12);
        let o = tilt_angle_oracle(&c, 1e-9).unwrap();
        assert!((o.theta_max - expected).abs() < 1e-8);
    }

    #[test]
    fn oracle_matches_cylinder() {
        let c = ContainerSpec::cylinder(0.04, 0.10, 0.06).unwrap();
        let o = tilt_angle_oracle(&c, 1e-6).unwrap();
        assert!((o.theta_max - std::f64::consts::FRAC_PI_4).abs() <= 1e-6);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ContainerSpec::new(0.05, 0.03, 0.1, 0.05).is_err());
        assert!(ContainerSpec::new(0.0, 0.03, 0.1, 0.05).is_err());
        assert!(ContainerSpec::new(0.03, 0.03, 0.1, 0.2).is_err());
        let bad = ContainerSpec { r_b: 0.03, r_u: 0.03, h_c: -1.0, h_w: 0.0 };
        assert!(matches!(max_tilt_angle(&bad), Err(GeometryError::InvalidContainer(_))));
        let c = ContainerSpec::cylinder(0.04, 0.1, 0.05).unwrap();
        assert!(matches!(tilt_angle_oracle(&c, 0.0), Err(GeometryError::InvalidTolerance(_))));
    }

    #[test]
    fn frustum_profile_is_fixed_point() {
        let c = ContainerSpec::new(0.03, 0.045, 0.11, 0.07).unwrap();
        let profile = WallProfile::from_pairs(&[(0.0, 0.03), (0.11, 0.045)], 0.07);
        let f = conservative_frustum_of(&profile).unwrap();
        assert!((f.r_b - c.r_b).abs() < 1e-12);
        assert!((f.r_u - c.r_u).abs() < 1e-12);
        assert!((f.h_c - c.h_c).abs() < 1e-12);
        assert!((f.h_w - c.h_w).abs() < 1e-12);
    }

    #[test]
    fn sampled_cylinder_profile() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.01, 0.035)).collect();
        let f = conservative_frustum_of(&WallProfile::from_pairs(&pairs, 0.05)).unwrap();
        assert!((f.r_b - 0.035).abs() < 1e-12);
        assert!((f.r_u - 0.035).abs() < 1e-12);
    }

    #[test]
    fn profile_errors() {
        assert_eq!(
            conservative_frustum_of(&WallProfile::from_pairs(&[(0.0, 0.02)], 0.0)),
            Err(GeometryError::EmptyProfile)
        );
        let unordered = WallProfile::from_pairs(&[(0.1, 0.02), (0.0, 0.03)], 0.0);
        assert!(matches!(conservative_frustum_of(&unordered), Err(GeometryError::InvalidProfile(_))));
    }
}
