use std::f64::consts::{PI, TAU};

use nalgebra::DVector;

use super::gauge::maximize_on_sphere;
use super::membership::Membership;
use super::qmc::{integrate_indicator, QmcConfig};
use super::quadrature::QuadratureGrid;
use super::{Aabb, IntegrationResult, Method};
use crate::error::{Error, Result};
use crate::geometry::{equidistributed, ConvexBody, Direction, TangentFrame};

/// Axis-aligned box from the supports along ±e_i, padded by 1% of each extent.
pub fn bounding_box(body: &ConvexBody) -> Aabb {
    let n = body.dim();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let u = Direction::new(&e).expect("axis");
        hi[i] = body.support(&u);
        lo[i] = -body.support(&-&u);
    }
    Aabb::new(&lo[..n], &hi[..n]).padded(0.01, 0.0)
}

/// Volume by the support integral when the curvature is available everywhere on the
/// quadrature grid, otherwise by QMC.
pub fn volume(body: &ConvexBody, qmc: &QmcConfig) -> IntegrationResult {
    volume_support_integral(body).unwrap_or_else(|_| volume_qmc(body, qmc))
}

/// `V = (1/N) ∫ h det R dσ`. The reported error is the gap to the half-resolution rule.
pub fn volume_support_integral(body: &ConvexBody) -> Result<IntegrationResult> {
    let n = body.dim();
    let integrand = |u: &Direction| -> Result<f64> {
        let c = body.curvature(u)?;
        Ok(body.support(u) * c.radii.determinant())
    };
    let fine = QuadratureGrid::standard(n);
    let coarse = QuadratureGrid::coarse(n);
    let v_fine = fine.try_integrate(integrand)? / n as f64;
    let v_coarse = coarse.try_integrate(integrand)? / n as f64;
    Ok(IntegrationResult {
        value: v_fine,
        stderr: (v_fine - v_coarse).abs().max(1e-14 * v_fine.abs()),
        method: Method::SupportIntegral,
        sample_count: fine.len(),
    })
}

pub fn volume_qmc(body: &ConvexBody, qmc: &QmcConfig) -> IntegrationResult {
    let m = Membership::new(body);
    integrate_indicator(&bounding_box(body), qmc, |y| m.contains(y))
}

fn check_pair(g: &ConvexBody, k: &ConvexBody, x: &[f64], r: f64) -> Result<()> {
    if g.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: k.dim(),
        });
    }
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    Ok(())
}

/// `V(G ∩ (x + rK))`, counted in the bounding box of G.
///
/// Every x shares the same box and point set, so estimates at different x carry correlated
/// errors and their spread is resolved more finely than each value.
pub fn intersection_volume(
    g: &ConvexBody,
    k: &ConvexBody,
    x: &[f64],
    r: f64,
    qmc: &QmcConfig,
) -> Result<IntegrationResult> {
    check_pair(g, k, x, r)?;
    let mg = Membership::new(g);
    let mk = Membership::new(k);
    let bbox = bounding_box(g);
    let n = g.dim();
    Ok(integrate_indicator(&bbox, qmc, |y| {
        if !mg.contains(y) {
            return false;
        }
        let mut z = [0.0; 3];
        for i in 0..n {
            z[i] = (y[i] - x[i]) / r;
        }
        mk.contains(&z[..n])
    }))
}

/// `V(K ∩ {y : y·n ≥ 0})`.
pub fn halfspace_cut_volume(k: &ConvexBody, n: &Direction, qmc: &QmcConfig) -> IntegrationResult {
    let mk = Membership::new(k);
    let nv = n.as_slice();
    integrate_indicator(&bounding_box(k), qmc, |y| {
        y.iter().zip(nv).map(|(a, b)| a * b).sum::<f64>() >= 0.0 && mk.contains(y)
    })
}

/// `V(G \ (x + rK))`, counted directly inside a box around the part of ∂G outside `x + rK`.
///
/// `hint` is a normal of G near which ∂G leaves `x + rK` (the touch normal); without it the
/// boundary is scanned.
pub fn deficit_volume(
    g: &ConvexBody,
    k: &ConvexBody,
    x: &[f64],
    r: f64,
    hint: Option<&Direction>,
    qmc: &QmcConfig,
) -> Result<IntegrationResult> {
    check_pair(g, k, x, r)?;
    let n = g.dim();
    let mg = Membership::new(g);
    let mk = Membership::new(k);
    let scaled = |y: &[f64]| {
        let mut z = [0.0; 3];
        for i in 0..n {
            z[i] = (y[i] - x[i]) / r;
        }
        z
    };
    let outside = |u: &Direction| {
        let b = g.support_point_any(u.as_slice());
        !mk.contains(&scaled(b.as_slice())[..n])
    };
    let bbox = match deficit_box(g, &outside, hint) {
        Some(b) => b,
        None => {
            return Ok(IntegrationResult {
                value: 0.0,
                stderr: 0.0,
                method: Method::Qmc,
                sample_count: 0,
            })
        }
    };
    Ok(integrate_indicator(&bbox, qmc, |y| {
        mg.contains(y) && !mk.contains(&scaled(y)[..n])
    }))
}

/// Box containing the convex hull of `{b_G(u) : outside(u)}`, or `None` when no boundary
/// point is outside.
fn deficit_box(g: &ConvexBody, outside: &impl Fn(&Direction) -> bool, hint: Option<&Direction>) -> Option<Aabb> {
    let n = g.dim();
    let scan = equidistributed(n, if n == 2 { 4096 } else { 1 << 14 });
    let flagged: Vec<bool> = scan.iter().map(outside).collect();
    let seed = match hint {
        Some(h) if outside(h) => h.clone(),
        _ => {
            // Centre of the flagged directions.
            let mut s = DVector::zeros(n);
            let mut any = false;
            for (u, f) in scan.iter().zip(&flagged) {
                if *f {
                    s += u.as_vector();
                    any = true;
                }
            }
            if !any {
                return None;
            }
            let c = Direction::from_vector(s).ok()?;
            if outside(&c) {
                c
            } else {
                return Some(bounding_box(g));
            }
        }
    };
    let frame = TangentFrame::new(&seed);
    let headings: Vec<f64> = if n == 2 {
        vec![0.0, PI]
    } else {
        (0..24).map(|k| TAU * k as f64 / 24.0).collect()
    };
    let reach: Vec<f64> = headings
        .iter()
        .map(|&a| march(&|t| outside(&frame.tilt_towards(a, t))))
        .collect();
    if reach.iter().all(|t| *t >= PI) {
        return Some(bounding_box(g));
    }
    let cap = reach.iter().copied().fold(0.0, f64::max);
    // Flagged directions well away from the marched cap mean the outside set is not one piece.
    if scan
        .iter()
        .zip(&flagged)
        .any(|(u, f)| *f && u.angle_to(&seed) > 1.25 * cap + 0.02)
    {
        return Some(bounding_box(g));
    }
    let mut points: Vec<DVector<f64>> = Vec::new();
    if n == 2 {
        let (lo, hi) = (-reach[1], reach[0]);
        let t0 = seed.angle();
        for i in 0..=512 {
            let t = lo + (hi - lo) * i as f64 / 512.0;
            points.push(g.support_point_any(&[(t0 + t).cos(), (t0 + t).sin()]));
        }
    } else {
        let m = 96;
        for j in 0..m {
            let a = TAU * j as f64 / m as f64;
            let pos = a / TAU * headings.len() as f64;
            let (i0, w) = (pos.floor() as usize % headings.len(), pos.fract());
            let psi = (1.0 - w) * reach[i0] + w * reach[(i0 + 1) % headings.len()];
            for s in 0..=8 {
                let u = frame.tilt_towards(a, psi * s as f64 / 8.0);
                points.push(g.support_point_any(u.as_slice()));
            }
        }
    }
    let bbox = Aabb::around(n, points.iter().map(|p| p.as_slice()))?;
    let diameter = bounding_box(g).extent()[..n].iter().copied().fold(0.0, f64::max);
    let pad = if n == 2 { 0.02 } else { 0.1 };
    Some(bbox.padded(pad, 1e-9 * diameter).intersect(&bounding_box(g)))
}

/// Largest `t ∈ [0, π]` such that `inside(s)` holds for `s ∈ [0, t]`, assuming `inside(0)`.
fn march(inside: &impl Fn(f64) -> bool) -> f64 {
    let mut last = 0.0;
    let mut step = 1e-4;
    loop {
        let t = last + step;
        if t >= PI {
            return if inside(PI) { PI } else { bisect(inside, last, PI) };
        }
        if inside(t) {
            last = t;
            step *= 1.5;
        } else {
            return bisect(inside, last, t);
        }
    }
}

fn bisect(inside: &impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `r_G(x) = max_{y ∈ G} gauge_K(y − x)`: the least r with `G ⊂ x + rK`.
pub fn circumscribed_ratio(g: &ConvexBody, k: &ConvexBody, x: &[f64]) -> Result<f64> {
    check_pair(g, k, x, 1.0)?;
    let mk = Membership::new(k);
    let n = g.dim();
    let f = |u: &Direction| {
        let b = g.support_point_any(u.as_slice());
        let mut z = [0.0; 3];
        for i in 0..n {
            z[i] = b[i] - x[i];
        }
        mk.gauge(&z[..n])
    };
    let coarse = if n == 2 { 512 } else { 1 << 12 };
    Ok(maximize_on_sphere(n, coarse, None, f).1)
}
