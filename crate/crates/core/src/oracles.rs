//! Independent references: classical mensuration and polygonal brute force.
//!
//! Nothing here touches the support-function machinery, so agreement with it is evidence.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};

/// Area of the intersection of two disks with radii `r1`, `r2` and centre distance `d`.
pub fn disk_lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return PI * r * r;
    }
    // Circular segments cut by the common chord.
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let kite = 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
    r1 * r1 * a1 + r2 * r2 * a2 - kite
}

fn spherical_cap(radius: f64, height: f64) -> f64 {
    PI * height * height * (3.0 * radius - height) / 3.0
}

/// Volume of the intersection of two balls in R^3.
pub fn ball_lens_volume(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return 4.0 / 3.0 * PI * r * r * r;
    }
    // The radical plane sits at distance x from the first centre.
    let x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    spherical_cap(r1, r1 - x) + spherical_cap(r2, r2 - (d - x))
}

/// Curvature of the ellipse `(a cos t, b sin t)` from the parametric formula.
pub fn ellipse_curvature_param(a: f64, b: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    let (dx, dy) = (-a * s, b * c);
    let (ddx, ddy) = (-a * c, -b * s);
    (dx * ddy - dy * ddx).abs() / (dx * dx + dy * dy).powf(1.5)
}

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<[f64; 2]>,
}

const CONVEXITY_TOL: f64 = 1e-12;

impl ConvexPolygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidArgument("polygon needs at least 3 vertices".into()));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if a == b {
                return Err(Error::InvalidArgument(format!("repeated vertex {a:?}")));
            }
            if cross(sub(b, a), sub(c, b)) < -CONVEXITY_TOL {
                return Err(Error::InvalidArgument("polygon is not convex counterclockwise".into()));
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// Regular n-gon inscribed in the circle of radius `r` about `center`.
    pub fn regular(center: [f64; 2], r: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            })
            .collect();
        ConvexPolygon { vertices }
    }

    /// Inscribed polygon of the ellipse with semi-axes `a`, `b`.
    pub fn ellipse(center: [f64; 2], a: f64, b: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                [center[0] + a * t.cos(), center[1] + b * t.sin()]
            })
            .collect();
        ConvexPolygon { vertices }
    }

    /// Intersection of the three disks of radius `width` about the vertices of an equilateral
    /// triangle with centroid at the origin and one vertex on +y.
    pub fn reuleaux(width: f64, n: usize) -> Self {
        let rho = width / 3f64.sqrt();
        let mut poly = None::<ConvexPolygon>;
        for i in 0..3 {
            let a = FRAC_PI_2 + TAU * i as f64 / 3.0;
            let disk = ConvexPolygon::regular([rho * a.cos(), rho * a.sin()], width, n);
            poly = Some(match poly {
                None => disk,
                Some(p) => clip(&p, &disk).expect("disks overlap"),
            });
        }
        poly.expect("three disks")
    }

    pub fn translate(&self, t: [f64; 2]) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|v| [v[0] + t[0], v[1] + t[1]]).collect(),
        }
    }

    /// Part on the side `{y : y·n ≥ offset}`; `None` when empty.
    pub fn clip_halfplane(&self, n: [f64; 2], offset: f64) -> Option<ConvexPolygon> {
        let out = clip_convex(&self.vertices, |p| p[0] * n[0] + p[1] * n[1] - offset);
        (out.len() >= 3).then_some(ConvexPolygon { vertices: out })
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Sutherland–Hodgman against one half-plane `{p : f(p) ≥ 0}` with `f` affine.
fn clip_convex(subject: &[[f64; 2]], f: impl Fn([f64; 2]) -> f64) -> Vec<[f64; 2]> {
    let n = subject.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let (a, b) = (subject[i], subject[(i + 1) % n]);
        let (fa, fb) = (f(a), f(b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn clip(p: &ConvexPolygon, q: &ConvexPolygon) -> Option<ConvexPolygon> {
    let mut cur = p.vertices.clone();
    let m = q.vertices.len();
    for j in 0..m {
        if cur.len() < 3 {
            return None;
        }
        let (a, b) = (q.vertices[j], q.vertices[(j + 1) % m]);
        let edge = sub(b, a);
        cur = clip_convex(&cur, |pt| cross(edge, sub(pt, a)));
    }
    (cur.len() >= 3).then_some(ConvexPolygon { vertices: cur })
}

/// Area of `P ∩ Q` by convex clipping and the shoelace formula.
pub fn polygon_clip_area(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    clip(p, q).map_or(0.0, |c| c.area().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> ConvexPolygon {
        ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn lens_examples() {
        assert_abs_diff_eq!(disk_lens_area(1.0, 1.0, 0.0), PI, epsilon = 1e-15);
        assert_eq!(disk_lens_area(1.0, 1.0, 2.0), 0.0);
        assert_eq!(disk_lens_area(1.0, 2.0, 3.5), 0.0);
        assert_abs_diff_eq!(
            disk_lens_area(1.0, 1.0, 1.0),
            TAU / 3.0 - 3f64.sqrt() / 2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(ball_lens_volume(1.0, 1.0, 0.0), 4.0 / 3.0 * PI, epsilon = 1e-14);
        assert_eq!(ball_lens_volume(1.0, 1.0, 2.0), 0.0);
        assert_abs_diff_eq!(ball_lens_volume(1.0, 2.0, 1.0), 4.0 / 3.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn lens_is_continuous_across_regimes() {
        for (r1, r2) in [(1.0f64, 1.0f64), (1.0, 2.0), (0.3, 1.7)] {
            let inner: f64 = (r1 - r2).abs();
            for d0 in [inner, r1 + r2] {
                for f in [disk_lens_area, ball_lens_volume] {
                    assert!((f(r1, r2, d0 - 1e-9) - f(r1, r2, d0 + 1e-9)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn lens_matches_polygon_brute_force() {
        let n = 10_000;
        for (r1, r2, d) in [(1.0, 1.0, 1.0), (1.0, 2.0, 1.5), (0.5, 0.8, 0.9)] {
            let p = ConvexPolygon::regular([0.0, 0.0], r1, n);
            let q = ConvexPolygon::regular([d, 0.0], r2, n);
            // Inscribed n-gons lose a fraction ~ (2π/n)²/6 of the area.
            let brute = polygon_clip_area(&p, &q);
            let exact = disk_lens_area(r1, r2, d);
            assert!((brute / exact - 1.0).abs() < 1e-6, "{brute} vs {exact}");
        }
    }

    #[test]
    fn clip_examples() {
        let s = square();
        assert_abs_diff_eq!(polygon_clip_area(&s, &s), 1.0, epsilon = 1e-15);
        assert_eq!(polygon_clip_area(&s, &s.translate([2.0, 0.0])), 0.0);
        assert_abs_diff_eq!(polygon_clip_area(&s, &s.translate([0.5, 0.0])), 0.5, epsilon = 1e-15);
        let half = s.clip_halfplane([1.0, 0.0], 0.25).unwrap();
        assert_abs_diff_eq!(half.area(), 0.75, epsilon = 1e-15);
        assert!(s.clip_halfplane([1.0, 0.0], 2.0).is_none());
    }

    #[test]
    fn polygon_validation() {
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn reuleaux_area() {
        let area = ConvexPolygon::reuleaux(1.0, 10_000).area();
        assert!((area - (PI - 3f64.sqrt()) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn ellipse_curvature_examples() {
        assert_abs_diff_eq!(ellipse_curvature_param(1.0, 1.0, 0.7), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ellipse_curvature_param(2.0, 1.0, 0.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ellipse_curvature_param(2.0, 1.0, FRAC_PI_2), 0.25, epsilon = 1e-14);
    }
}
