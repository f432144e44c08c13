use std::f64::consts::TAU;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::gauge::{maximize_on_sphere, numeric_gauge};
use crate::geometry::{equidistributed, BodyKind, ConvexBody, Direction};

/// Points whose gauge is at most `1 + MEMBERSHIP_TOLERANCE` count as inside.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// Target chord length of the boundary polygon, relative to the diameter.
const CHORD_FRACTION: f64 = 2e-4;

/// Closed-form description when the combinator tree reduces to a known shape.
#[derive(Debug, Clone)]
enum Shape {
    Ellipsoid {
        q_inv: DMatrix<f64>,
        center: DVector<f64>,
        q: DMatrix<f64>,
    },
    /// `{y : Σ |(y − c)_i / scale|^p ≤ 1}`.
    Superellipse {
        p: f64,
        scale: f64,
        center: DVector<f64>,
    },
    /// `scale·(±base) + offset`, where `base` has no simpler form.
    Mapped {
        base: ConvexBody,
        scale: f64,
        flip: bool,
        offset: DVector<f64>,
    },
}

fn canonical(body: &ConvexBody) -> Shape {
    let n = body.dim();
    let mapped = |b: &ConvexBody| Shape::Mapped {
        base: b.clone(),
        scale: 1.0,
        flip: false,
        offset: DVector::zeros(n),
    };
    match body.kind() {
        BodyKind::Ball { radius, center } => {
            let r2 = radius * radius;
            Shape::Ellipsoid {
                q: DMatrix::identity(n, n) * r2,
                q_inv: DMatrix::identity(n, n) / r2,
                center: center.clone(),
            }
        }
        BodyKind::Ellipsoid { q, q_inv, center } => Shape::Ellipsoid {
            q: q.clone(),
            q_inv: q_inv.clone(),
            center: center.clone(),
        },
        BodyKind::Superellipse2D { exponent, .. } => Shape::Superellipse {
            p: *exponent,
            scale: 1.0,
            center: DVector::zeros(2),
        },
        BodyKind::Fourier2D { .. } | BodyKind::Reuleaux2D { .. } | BodyKind::Polygon2D { .. } => {
            mapped(body)
        }
        BodyKind::Dilate(b, s) => match canonical(b) {
            Shape::Ellipsoid { q, q_inv, center } => Shape::Ellipsoid {
                q: q * (s * s),
                q_inv: q_inv / (s * s),
                center: center * *s,
            },
            Shape::Superellipse { p, scale, center } => Shape::Superellipse {
                p,
                scale: scale * s,
                center: center * *s,
            },
            Shape::Mapped {
                base,
                scale,
                flip,
                offset,
            } => Shape::Mapped {
                base,
                scale: scale * s,
                flip,
                offset: offset * *s,
            },
        },
        BodyKind::Translate(b, t) => match canonical(b) {
            Shape::Ellipsoid { q, q_inv, center } => Shape::Ellipsoid {
                q,
                q_inv,
                center: center + t,
            },
            Shape::Superellipse { p, scale, center } => Shape::Superellipse {
                p,
                scale,
                center: center + t,
            },
            Shape::Mapped {
                base,
                scale,
                flip,
                offset,
            } => Shape::Mapped {
                base,
                scale,
                flip,
                offset: offset + t,
            },
        },
        // Ellipsoids and superellipses are symmetric about their centres.
        BodyKind::Reflect(b) => match canonical(b) {
            Shape::Ellipsoid { q, q_inv, center } => Shape::Ellipsoid {
                q,
                q_inv,
                center: -center,
            },
            Shape::Superellipse { p, scale, center } => Shape::Superellipse {
                p,
                scale,
                center: -center,
            },
            Shape::Mapped {
                base,
                scale,
                flip,
                offset,
            } => Shape::Mapped {
                base,
                scale,
                flip: !flip,
                offset: -offset,
            },
        },
        BodyKind::MinkowskiSum(a, b) => match (canonical(a), canonical(b)) {
            (
                Shape::Ellipsoid {
                    q: qa, center: ca, ..
                },
                Shape::Ellipsoid {
                    q: qb, center: cb, ..
                },
            ) if proportional(&qa, &qb).is_some() => {
                // √(uᵀQu) + √(s uᵀQu) = (1 + √s)√(uᵀQu).
                let s = proportional(&qa, &qb).expect("checked");
                let factor = (1.0 + s.sqrt()).powi(2);
                let q = qa * factor;
                let q_inv = nalgebra::Cholesky::new(q.clone())
                    .expect("scaled positive definite matrix")
                    .inverse();
                Shape::Ellipsoid {
                    q,
                    q_inv,
                    center: ca + cb,
                }
            }
            (
                Shape::Superellipse {
                    p: pa,
                    scale: sa,
                    center: ca,
                },
                Shape::Superellipse {
                    p: pb,
                    scale: sb,
                    center: cb,
                },
            ) if pa == pb => Shape::Superellipse {
                p: pa,
                scale: sa + sb,
                center: ca + cb,
            },
            (
                Shape::Mapped {
                    base: ba,
                    scale: sa,
                    flip: fa,
                    offset: ta,
                },
                Shape::Mapped {
                    base: bb,
                    scale: sb,
                    flip: fb,
                    offset: tb,
                },
            ) if fa == fb && ba.same_shape(&bb) => Shape::Mapped {
                base: ba,
                scale: sa + sb,
                flip: fa,
                offset: ta + tb,
            },
            _ => mapped(body),
        },
    }
}

/// Radius and centre when the body reduces to a Euclidean ball.
pub(crate) fn as_ball(body: &ConvexBody) -> Option<(f64, DVector<f64>)> {
    match canonical(body) {
        Shape::Ellipsoid { q, center, .. } => {
            let n = q.nrows();
            let s = proportional(&DMatrix::identity(n, n), &q)?;
            Some((s.sqrt(), center))
        }
        _ => None,
    }
}

/// `Some(s)` when `b = s·a` up to rounding.
fn proportional(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let s = b.trace() / a.trace();
    let residual = (b - a * s).abs().max();
    (s > 0.0 && residual <= 1e-12 * b.abs().max()).then_some(s)
}

#[derive(Debug, Clone)]
enum Compiled {
    Ellipsoid {
        q_inv: DMatrix<f64>,
        center: DVector<f64>,
    },
    Superellipse {
        p: f64,
        integer_p: Option<i32>,
        scale: f64,
        center: DVector<f64>,
    },
    Mapped {
        scale: f64,
        flip: bool,
        offset: DVector<f64>,
        base: Base,
    },
}

#[derive(Debug, Clone)]
enum Base {
    Reuleaux {
        width: f64,
        vertices: [[f64; 2]; 3],
    },
    /// Half-planes `n·y ≤ c`.
    Polygon {
        normals: Vec<[f64; 2]>,
        offsets: Vec<f64>,
    },
    /// Planar body without a closed form, tested against a fine inscribed polygon.
    Boundary {
        body: ConvexBody,
        polygon: OnceLock<BoundaryPolygon>,
    },
    /// Spatial body without a closed form, tested through its support function.
    Numeric {
        body: ConvexBody,
        table: OnceLock<SupportTable>,
    },
}

/// Fast point-in-body test, compiled once per body.
#[derive(Debug, Clone)]
pub struct Membership {
    body: ConvexBody,
    compiled: Compiled,
}

impl Membership {
    pub fn new(body: &ConvexBody) -> Self {
        let compiled = match canonical(body) {
            Shape::Ellipsoid { q_inv, center, .. } => Compiled::Ellipsoid { q_inv, center },
            Shape::Superellipse { p, scale, center } => Compiled::Superellipse {
                p,
                integer_p: (p.fract() == 0.0 && p < 64.0).then_some(p as i32),
                scale,
                center,
            },
            Shape::Mapped {
                base,
                scale,
                flip,
                offset,
            } => Compiled::Mapped {
                scale,
                flip,
                offset,
                base: compile_base(&base),
            },
        };
        Membership {
            body: body.clone(),
            compiled,
        }
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    /// True when membership is decided by a closed form rather than an approximation.
    pub fn is_exact(&self) -> bool {
        match &self.compiled {
            Compiled::Mapped { base, .. } => {
                matches!(base, Base::Reuleaux { .. } | Base::Polygon { .. })
            }
            _ => true,
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.contains_with(y, MEMBERSHIP_TOLERANCE)
    }

    /// Membership with the boundary inflated by the relative tolerance `tol`.
    pub fn contains_with(&self, y: &[f64], tol: f64) -> bool {
        let n = y.len();
        match &self.compiled {
            Compiled::Ellipsoid { q_inv, center } => {
                let mut d = [0.0; 3];
                for i in 0..n {
                    d[i] = y[i] - center[i];
                }
                let mut s = 0.0;
                for i in 0..n {
                    let mut row = 0.0;
                    for j in 0..n {
                        row += q_inv[(i, j)] * d[j];
                    }
                    s += d[i] * row;
                }
                s <= (1.0 + tol) * (1.0 + tol)
            }
            Compiled::Superellipse {
                p,
                integer_p,
                scale,
                center,
            } => {
                let z = [(y[0] - center[0]) / scale, (y[1] - center[1]) / scale];
                match integer_p {
                    Some(k) => {
                        z[0].abs().powi(*k) + z[1].abs().powi(*k) <= (1.0 + tol).powi(*k)
                    }
                    None => z[0].abs().powf(*p) + z[1].abs().powf(*p) <= (1.0 + tol).powf(*p),
                }
            }
            Compiled::Mapped {
                scale,
                flip,
                offset,
                base,
            } => {
                let sign = if *flip { -1.0 } else { 1.0 };
                let mut z = [0.0; 3];
                for i in 0..n {
                    z[i] = sign * (y[i] - offset[i]) / scale;
                }
                base.contains(&z[..n], tol)
            }
        }
    }

    /// Minkowski functional about the origin, `inf{t > 0 : v ∈ t·body}`.
    pub fn gauge(&self, v: &[f64]) -> f64 {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r == 0.0 {
            return 0.0;
        }
        match &self.compiled {
            Compiled::Ellipsoid { q_inv, center } => {
                // Solve (v − t c)ᵀ A (v − t c) = t² for the positive root t.
                let vv = DVector::from_column_slice(v);
                let av = q_inv * &vv;
                let ac = q_inv * center;
                let a = 1.0 - center.dot(&ac);
                let b = center.dot(&av);
                let c0 = vv.dot(&av);
                let disc = (b * b + a * c0).max(0.0).sqrt();
                // Stable form of (−b + disc)/a.
                if b <= 0.0 {
                    (disc - b) / a
                } else {
                    c0 / (disc + b)
                }
            }
            Compiled::Superellipse {
                p, scale, center, ..
            } if center.iter().all(|c| *c == 0.0) => {
                (v[0].abs().powf(*p) + v[1].abs().powf(*p)).powf(1.0 / p) / scale
            }
            _ if self.is_exact() => self.gauge_by_bisection(v, r),
            _ => numeric_gauge(&self.body, v),
        }
    }

    /// Largest `s` with `s·v` inside, found by bisection on exact membership.
    fn gauge_by_bisection(&self, v: &[f64], r: f64) -> f64 {
        let u = Direction::new(v).expect("nonzero");
        // gauge(v) ≥ |v| / h(v/|v|), so s·v is outside beyond h/|v|.
        let mut hi = self.body.support(&u) / r * (1.0 + 1e-12);
        let mut lo = 0.0;
        let mut y = [0.0; 3];
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi = mid * vi;
            }
            if self.contains_with(&y[..v.len()], 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        1.0 / (0.5 * (lo + hi))
    }

    /// Outward normal at a boundary point when the shape is smooth and closed-form.
    pub(crate) fn normal_exact(&self, y: &[f64]) -> Option<DVector<f64>> {
        match &self.compiled {
            Compiled::Ellipsoid { q_inv, center } => {
                let d = DVector::from_column_slice(y) - center;
                Some(q_inv * d)
            }
            Compiled::Superellipse { p, center, .. } => {
                let g = (0..2)
                    .map(|i| {
                        let z = y[i] - center[i];
                        z.signum() * z.abs().powf(p - 1.0)
                    })
                    .collect::<Vec<_>>();
                Some(DVector::from_vec(g))
            }
            Compiled::Mapped { .. } => None,
        }
    }
}

fn compile_base(base: &ConvexBody) -> Base {
    match base.kind() {
        BodyKind::Reuleaux2D { width, vertices } => Base::Reuleaux {
            width: *width,
            vertices: *vertices,
        },
        BodyKind::Polygon2D { vertices } => {
            let (normals, offsets) = half_planes(vertices);
            Base::Polygon { normals, offsets }
        }
        _ if base.dim() == 2 => Base::Boundary {
            body: base.clone(),
            polygon: OnceLock::new(),
        },
        _ => Base::Numeric {
            body: base.clone(),
            table: OnceLock::new(),
        },
    }
}

/// Outward unit normals and offsets of a counterclockwise polygon around the origin.
fn half_planes(vertices: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<f64>) {
    let m = vertices.len();
    let mut normals = Vec::with_capacity(m);
    let mut offsets = Vec::with_capacity(m);
    for i in 0..m {
        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len = (ex * ex + ey * ey).sqrt();
        if len == 0.0 {
            continue;
        }
        let nrm = [ey / len, -ex / len];
        normals.push(nrm);
        offsets.push(nrm[0] * a[0] + nrm[1] * a[1]);
    }
    (normals, offsets)
}

impl Base {
    fn contains(&self, z: &[f64], tol: f64) -> bool {
        match self {
            Base::Reuleaux { width, vertices } => {
                let w = width * (1.0 + tol);
                vertices
                    .iter()
                    .all(|v| (z[0] - v[0]).powi(2) + (z[1] - v[1]).powi(2) <= w * w)
            }
            Base::Polygon { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .all(|(nrm, c)| nrm[0] * z[0] + nrm[1] * z[1] <= c * (1.0 + tol)),
            Base::Boundary { body, polygon } => polygon
                .get_or_init(|| BoundaryPolygon::new(body))
                .contains(z, tol),
            Base::Numeric { body, table } => table
                .get_or_init(|| SupportTable::new(body))
                .contains(body, z, tol),
        }
    }
}

/// Inscribed polygon through boundary points, with vertices sorted by polar angle.
#[derive(Debug, Clone)]
pub(crate) struct BoundaryPolygon {
    angles: Vec<f64>,
    normals: Vec<[f64; 2]>,
    offsets: Vec<f64>,
}

impl BoundaryPolygon {
    pub(crate) fn new(body: &ConvexBody) -> Self {
        let point = |t: f64| {
            let p = body.support_point_any(&[t.cos(), t.sin()]);
            [p[0], p[1]]
        };
        let diameter = (0..360)
            .map(|i| {
                let u = Direction::from_angle(TAU * i as f64 / 360.0);
                body.support(&u) + body.support(&-&u)
            })
            .fold(0.0, f64::max);
        let max_chord = CHORD_FRACTION * diameter;
        let m0 = 1024;
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(8 * m0);
        let mut prev = point(0.0);
        for i in 0..m0 {
            let (ta, tb) = (TAU * i as f64 / m0 as f64, TAU * (i + 1) as f64 / m0 as f64);
            let next = point(tb);
            refine(&point, ta, prev, tb, next, max_chord, 0, &mut pts);
            prev = next;
        }
        let tiny = 1e-13 * diameter;
        let mut clean: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
        for p in pts {
            if clean
                .last()
                .is_none_or(|q| (p[0] - q[0]).hypot(p[1] - q[1]) > tiny)
            {
                clean.push(p);
            }
        }
        while clean.len() > 3 {
            let (f, l) = (clean[0], clean[clean.len() - 1]);
            if (f[0] - l[0]).hypot(f[1] - l[1]) > tiny {
                break;
            }
            clean.pop();
        }
        let start = (0..clean.len())
            .min_by(|&i, &j| {
                let a = clean[i][1].atan2(clean[i][0]);
                let b = clean[j][1].atan2(clean[j][0]);
                a.total_cmp(&b)
            })
            .expect("nonempty");
        clean.rotate_left(start);
        let angles = clean.iter().map(|p| p[1].atan2(p[0])).collect();
        let (normals, offsets) = half_planes(&clean);
        BoundaryPolygon {
            angles,
            normals,
            offsets,
        }
    }

    pub(crate) fn contains(&self, z: &[f64], tol: f64) -> bool {
        let theta = z[1].atan2(z[0]);
        let n = self.angles.len();
        let idx = self.angles.partition_point(|a| *a <= theta);
        let i = if idx == 0 { n - 1 } else { idx - 1 };
        let (nrm, c) = (self.normals[i], self.offsets[i]);
        nrm[0] * z[0] + nrm[1] * z[1] <= c * (1.0 + tol)
    }
}

#[allow(clippy::too_many_arguments)]
fn refine(
    point: &impl Fn(f64) -> [f64; 2],
    ta: f64,
    pa: [f64; 2],
    tb: f64,
    pb: [f64; 2],
    max_chord: f64,
    depth: u32,
    out: &mut Vec<[f64; 2]>,
) {
    if depth < 30 && (pa[0] - pb[0]).hypot(pa[1] - pb[1]) > max_chord {
        let tm = 0.5 * (ta + tb);
        let pm = point(tm);
        refine(point, ta, pa, tm, pm, max_chord, depth + 1, out);
        refine(point, tm, pm, tb, pb, max_chord, depth + 1, out);
    } else {
        out.push(pa);
    }
}

/// Support values on a fixed direction set, used to decide membership without a closed form.
#[derive(Debug, Clone)]
pub(crate) struct SupportTable {
    directions: Vec<Direction>,
    values: Vec<f64>,
    /// Bound on how far the sampled maximum of `y·u − h(u)` can fall below the true one,
    /// per unit of `|y| + diameter`.
    slack: f64,
}

impl SupportTable {
    fn new(body: &ConvexBody) -> Self {
        let m = 1 << 12;
        let directions = equidistributed(body.dim(), m);
        let values = directions.iter().map(|u| body.support(u)).collect();
        let spacing = (4.0 * std::f64::consts::PI / m as f64).sqrt();
        SupportTable {
            directions,
            values,
            slack: 2.0 * spacing * spacing,
        }
    }

    fn contains(&self, body: &ConvexBody, z: &[f64], tol: f64) -> bool {
        let n = z.len();
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for (i, (u, h)) in self.directions.iter().zip(&self.values).enumerate() {
            let s = u.as_slice();
            let excess = (0..n).map(|k| z[k] * s[k]).sum::<f64>() - h * (1.0 + tol);
            if excess > best {
                best = excess;
                best_i = i;
            }
        }
        if best > 0.0 {
            return false;
        }
        let zn = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if best < -self.slack * (zn + self.values[best_i]) {
            return true;
        }
        let (_, value) = maximize_on_sphere(n, 0, Some(self.directions[best_i].clone()), |u| {
            let s = u.as_slice();
            (0..n).map(|k| z[k] * s[k]).sum::<f64>() - body.support(u) * (1.0 + tol)
        });
        value <= 0.0
    }
}
