use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::membership::Membership;
use crate::error::{Error, Result};
use crate::geometry::{equidistributed, ConvexBody, Direction, TangentFrame};

/// Normal cones wider than this (radians, per probe direction) count as non-unique.
pub const NORMAL_CONE_TOLERANCE: f64 = 1e-3;

/// Minkowski functional of `body` about the origin.
pub fn gauge(body: &ConvexBody, v: &[f64]) -> f64 {
    Membership::new(body).gauge(v)
}

/// `sup_u (v·u)/h(u)`, for bodies without a closed form.
pub(crate) fn numeric_gauge(body: &ConvexBody, v: &[f64]) -> f64 {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let coarse = if body.dim() == 2 { 512 } else { 1 << 12 };
    let vhat = Direction::new(v).expect("nonzero");
    let (_, best) = maximize_on_sphere(body.dim(), coarse, Some(vhat), |u| {
        u.as_slice().iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / body.support(u)
    });
    best
}

/// Maximizes `f` on the unit sphere: a scan over `coarse` near-uniform directions (plus
/// `start`), then golden-section search in angle (2D) or a shrinking pattern search (3D).
pub fn maximize_on_sphere(
    dim: usize,
    coarse: usize,
    start: Option<Direction>,
    f: impl Fn(&Direction) -> f64,
) -> (Direction, f64) {
    let mut candidates = equidistributed(dim, coarse);
    candidates.extend(start);
    assert!(!candidates.is_empty(), "nothing to maximize over");
    let (mut best, mut best_val) = (candidates[0].clone(), f64::NEG_INFINITY);
    for u in candidates {
        let v = f(&u);
        if v > best_val {
            best_val = v;
            best = u;
        }
    }
    let step = if coarse > 0 {
        match dim {
            2 => TAU / coarse as f64,
            _ => 2.0 * (4.0 * PI / coarse as f64).sqrt(),
        }
    } else {
        0.05
    };
    if dim == 2 {
        let t0 = best.angle();
        let g = |t: f64| f(&Direction::from_angle(t));
        let (t, v) = golden_section(&g, t0 - step, t0 + step, 40);
        if v > best_val {
            return (Direction::from_angle(t), v);
        }
        (best, best_val)
    } else {
        pattern_search(&f, best, best_val, step)
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: usize) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn pattern_search(
    f: &impl Fn(&Direction) -> f64,
    mut best: Direction,
    mut best_val: f64,
    mut step: f64,
) -> (Direction, f64) {
    let probes: Vec<f64> = (0..8).map(|k| TAU * k as f64 / 8.0).collect();
    let mut evaluations = 0;
    while step > 1e-10 && evaluations < 4000 {
        let frame = TangentFrame::new(&best);
        let mut improved = None;
        for &a in &probes {
            let u = frame.tilt_towards(a, step);
            evaluations += 1;
            let v = f(&u);
            if v > best_val {
                best_val = v;
                improved = Some(u);
            }
        }
        match improved {
            Some(u) => best = u,
            None => step *= 0.5,
        }
    }
    (best, best_val)
}

/// Outward normals at a boundary point.
#[derive(Debug, Clone)]
pub struct NormalCone {
    /// A normal maximizing `p·u − h(u)`; in the plane, the bisector of the cone.
    pub normal: Direction,
    /// Angular extent of the cone around `normal` along each probe direction.
    pub half_widths: Vec<f64>,
    /// `max_u p·u − h(u)`; zero for a boundary point.
    pub residual: f64,
}

impl NormalCone {
    pub fn width(&self) -> f64 {
        self.half_widths.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_unique(&self) -> bool {
        self.width() <= NORMAL_CONE_TOLERANCE
    }
}

/// Normal cone of `body` at the boundary point `p`.
pub fn outer_normal(body: &ConvexBody, p: &[f64]) -> Result<NormalCone> {
    let membership = Membership::new(body);
    if let Some(n) = membership.normal_exact(p) {
        let normal = Direction::from_vector(n)?;
        let residual = normal.dot_slice(p) - body.support(&normal);
        check_on_boundary(body, &normal, residual)?;
        return Ok(NormalCone {
            normal,
            half_widths: vec![0.0; 2 * (body.dim() - 1)],
            residual,
        });
    }
    let excess = |u: &Direction| u.dot_slice(p) - body.support(u);
    let coarse = if body.dim() == 2 { 512 } else { 1 << 12 };
    let start = Direction::new(p).ok();
    let (normal, residual) = maximize_on_sphere(body.dim(), coarse, start, excess);
    check_on_boundary(body, &normal, residual)?;
    let tol = 1e-13 * body.support(&normal).abs().max(1e-300);
    let frame = TangentFrame::new(&normal);
    let probes: Vec<f64> = if body.dim() == 2 {
        vec![0.0, PI]
    } else {
        (0..8).map(|k| TAU * k as f64 / 8.0).collect()
    };
    let half_widths = probes
        .iter()
        .map(|&a| {
            let within = |t: f64| excess(&frame.tilt_towards(a, t)) >= residual - tol;
            if within(FRAC_PI_2) {
                return FRAC_PI_2;
            }
            let (mut lo, mut hi) = (0.0, FRAC_PI_2);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if within(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        })
        .collect::<Vec<f64>>();
    if body.dim() == 2 && half_widths[0] != half_widths[1] {
        // Recentre on the bisector of the arc of normals.
        let shift = 0.5 * (half_widths[0] - half_widths[1]);
        let half = 0.5 * (half_widths[0] + half_widths[1]);
        return Ok(NormalCone {
            normal: frame.tilt_towards(0.0, shift),
            half_widths: vec![half, half],
            residual,
        });
    }
    Ok(NormalCone {
        normal,
        half_widths,
        residual,
    })
}

fn check_on_boundary(body: &ConvexBody, normal: &Direction, residual: f64) -> Result<()> {
    let scale = body.support(normal).abs().max(body.support(&-normal).abs());
    if residual.abs() > 1e-7 * scale {
        return Err(Error::InvalidArgument(format!(
            "point is not on the boundary (support excess {residual:e})"
        )));
    }
    Ok(())
}
