//! Minimal planar polygon helpers for the cross-section oracles.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

/// Clips a convex polygon to the half-plane `side(p) <= 0`, where `side`
/// is affine in `p` (Sutherland-Hodgman, single edge).
pub fn clip_half_plane(poly: &[Point2], side: impl Fn(Point2) -> f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let (sc, sn) = (side(cur), side(next));
        if sc <= 0.0 {
            out.push(cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let t = sc / (sc - sn);
            out.push(Point2::new(cur.x + t * (next.x - cur.x), cur.y + t * (next.y - cur.y)));
        }
    }
    out
}

/// Unsigned shoelace area.
pub fn area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}
