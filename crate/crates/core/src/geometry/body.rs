use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{equidistributed, Direction};
use crate::error::{Error, Result};

/// How second derivatives of the support function are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    #[default]
    Analytic,
    /// Central differences of the 1-homogeneous extension.
    FiniteDifference,
}

/// Step of the central-difference Hessian, in direction space (|u| = 1).
pub const FD_HESSIAN_STEP: f64 = 1e-4;

/// The shapes a [`ConvexBody`] can take. Each primitive has closed-form support function,
/// gradient and Hessian; the combinators act on those by the usual support calculus.
#[derive(Debug, Clone)]
pub enum BodyKind {
    Ball {
        radius: f64,
        center: DVector<f64>,
    },
    /// `{x : (x−c)ᵀ Q⁻¹ (x−c) ≤ 1}`, support `√(uᵀQu) + c·u`.
    Ellipsoid {
        q: DMatrix<f64>,
        q_inv: DMatrix<f64>,
        center: DVector<f64>,
    },
    /// Planar body with `h(θ) = Σ a_k cos kθ + b_k sin kθ`.
    Fourier2D {
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    /// Unit ball of the ℓ^p norm; its support function is the dual ℓ^q norm.
    Superellipse2D {
        exponent: f64,
        dual_exponent: f64,
    },
    /// Intersection of three disks of radius `width` centred at the vertices.
    Reuleaux2D {
        width: f64,
        vertices: [[f64; 2]; 3],
    },
    /// Counterclockwise convex polygon; carries no curvature.
    Polygon2D {
        vertices: Vec<[f64; 2]>,
    },
    MinkowskiSum(ConvexBody, ConvexBody),
    Dilate(ConvexBody, f64),
    Translate(ConvexBody, DVector<f64>),
    Reflect(ConvexBody),
}

/// A convex body in R^2 or R^3 given by its support function. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    kind: Arc<BodyKind>,
    mode: DerivativeMode,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidBody(format!("dimension {dim} not in {{2, 3}}")))
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidBody(format!("{what} has non-finite entries")))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl ConvexBody {
    fn build(dim: usize, kind: BodyKind) -> Result<Self> {
        let body = ConvexBody {
            dim,
            kind: Arc::new(kind),
            mode: DerivativeMode::Analytic,
        };
        body.validate_origin_interior()?;
        Ok(body)
    }

    fn validate_origin_interior(&self) -> Result<()> {
        let m = if self.dim == 2 { 720 } else { 2048 };
        for u in equidistributed(self.dim, m) {
            let h = self.support(&u);
            if !(h > 0.0) {
                return Err(Error::InvalidBody(format!(
                    "origin is not interior: h({:?}) = {h}",
                    u.as_slice()
                )));
            }
        }
        Ok(())
    }

    pub fn ball(radius: f64, center: &[f64]) -> Result<Self> {
        check_dim(center.len())?;
        check_finite(center, "center")?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody(format!("ball radius must be positive, got {radius}")));
        }
        Self::build(
            center.len(),
            BodyKind::Ball {
                radius,
                center: DVector::from_column_slice(center),
            },
        )
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Self::ball(1.0, &vec![0.0; dim])
    }

    /// Ellipsoid with support `√(uᵀQu) + c·u`; `q` must be symmetric positive definite.
    pub fn ellipsoid(q: DMatrix<f64>, center: &[f64]) -> Result<Self> {
        let dim = center.len();
        check_dim(dim)?;
        check_finite(center, "center")?;
        check_finite(q.as_slice(), "Q")?;
        if q.nrows() != dim || q.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: q.nrows(),
            });
        }
        let asym = (&q - q.transpose()).abs().max();
        if asym > 1e-12 * q.abs().max() {
            return Err(Error::InvalidBody("Q is not symmetric".into()));
        }
        let chol = nalgebra::Cholesky::new(q.clone())
            .ok_or_else(|| Error::InvalidBody("Q is not positive definite".into()))?;
        let q_inv = chol.inverse();
        Self::build(
            dim,
            BodyKind::Ellipsoid {
                q,
                q_inv,
                center: DVector::from_column_slice(center),
            },
        )
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn ellipsoid_axes(semi_axes: &[f64], center: &[f64]) -> Result<Self> {
        if semi_axes.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: semi_axes.len(),
            });
        }
        if semi_axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidBody("semi-axes must be positive".into()));
        }
        let q = DMatrix::from_diagonal(&DVector::from_iterator(
            semi_axes.len(),
            semi_axes.iter().map(|a| a * a),
        ));
        Self::ellipsoid(q, center)
    }

    /// Planar body with support `h(θ) = Σ_k cos[k]·cos kθ + sin[k]·sin kθ` (`sin[0]` is ignored).
    /// Rejects coefficient sets whose `h + h''` is not positive on a 4096-point grid.
    pub fn fourier_2d(cos: &[f64], sin: &[f64]) -> Result<Self> {
        check_finite(cos, "cosine coefficients")?;
        check_finite(sin, "sine coefficients")?;
        if cos.is_empty() {
            return Err(Error::InvalidBody("need at least the constant coefficient".into()));
        }
        for i in 0..4096 {
            let t = TAU * i as f64 / 4096.0;
            let (h, _, h2) = fourier_eval(cos, sin, t);
            if !(h + h2 > 0.0) {
                return Err(Error::InvalidBody(format!(
                    "h + h'' = {} ≤ 0 at θ = {t}: not convex",
                    h + h2
                )));
            }
        }
        Self::build(
            2,
            BodyKind::Fourier2D {
                cos: cos.to_vec(),
                sin: sin.to_vec(),
            },
        )
    }

    /// `{|x|^p + |y|^p ≤ 1}` for `p > 2`.
    pub fn superellipse_2d(exponent: f64) -> Result<Self> {
        if !(exponent > 2.0 && exponent.is_finite()) {
            return Err(Error::InvalidBody(format!(
                "superellipse exponent must exceed 2, got {exponent}"
            )));
        }
        Self::build(
            2,
            BodyKind::Superellipse2D {
                exponent,
                dual_exponent: exponent / (exponent - 1.0),
            },
        )
    }

    /// Reuleaux triangle of the given width with its centroid at the origin and a vertex at +y.
    pub fn reuleaux_2d(width: f64) -> Result<Self> {
        Self::reuleaux_2d_rotated(width, 0.0)
    }

    pub fn reuleaux_2d_rotated(width: f64, rotation: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidBody(format!("width must be positive, got {width}")));
        }
        let rho = width / 3f64.sqrt();
        let vertex = |i: usize| {
            let a = FRAC_PI_2 + rotation + TAU * i as f64 / 3.0;
            [rho * a.cos(), rho * a.sin()]
        };
        Self::build(
            2,
            BodyKind::Reuleaux2D {
                width,
                vertices: [vertex(0), vertex(1), vertex(2)],
            },
        )
    }

    /// Convex polygon from counterclockwise vertices.
    pub fn polygon_2d(vertices: &[[f64; 2]]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidBody("polygon needs at least 3 vertices".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            let [a, b, c] = [vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross < 0.0 {
                return Err(Error::InvalidBody("polygon is not convex and counterclockwise".into()));
            }
            if a == b {
                return Err(Error::InvalidBody("polygon has repeated vertices".into()));
            }
        }
        Self::build(
            2,
            BodyKind::Polygon2D {
                vertices: vertices.to_vec(),
            },
        )
    }

    fn wrap(&self, kind: BodyKind) -> Self {
        ConvexBody {
            dim: self.dim,
            kind: Arc::new(kind),
            mode: self.mode,
        }
    }

    pub fn minkowski_sum(&self, other: &ConvexBody) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(self.wrap(BodyKind::MinkowskiSum(self.clone(), other.clone())))
    }

    pub fn dilate(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidBody(format!("dilation factor must be positive, got {factor}")));
        }
        Ok(self.wrap(BodyKind::Dilate(self.clone(), factor)))
    }

    /// Translation; rejected when the origin would leave the interior.
    pub fn translate(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: offset.len(),
            });
        }
        check_finite(offset, "offset")?;
        let body = self.wrap(BodyKind::Translate(
            self.clone(),
            DVector::from_column_slice(offset),
        ));
        body.validate_origin_interior()?;
        Ok(body)
    }

    pub fn reflect(&self) -> Self {
        self.wrap(BodyKind::Reflect(self.clone()))
    }

    /// `G − G = G + (−G)`, always centrally symmetric about the origin.
    pub fn difference_body(&self) -> Self {
        self.wrap(BodyKind::MinkowskiSum(self.clone(), self.reflect()))
    }

    pub fn with_derivative_mode(&self, mode: DerivativeMode) -> Self {
        ConvexBody {
            dim: self.dim,
            kind: self.kind.clone(),
            mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    /// Whether both handles share the same underlying shape.
    pub(crate) fn same_shape(&self, other: &ConvexBody) -> bool {
        Arc::ptr_eq(&self.kind, &other.kind)
    }

    /// False when some component may have flat faces (polygons).
    pub fn is_strictly_convex(&self) -> bool {
        match self.kind() {
            BodyKind::Polygon2D { .. } => false,
            BodyKind::MinkowskiSum(a, b) => a.is_strictly_convex() && b.is_strictly_convex(),
            BodyKind::Dilate(b, _) | BodyKind::Translate(b, _) | BodyKind::Reflect(b) => {
                b.is_strictly_convex()
            }
            _ => true,
        }
    }

    /// True when every part has a C² support function away from isolated directions
    /// (balls, ellipsoids, Fourier bodies, superellipses and their combinations).
    pub fn is_smooth(&self) -> bool {
        match self.kind() {
            BodyKind::Polygon2D { .. } | BodyKind::Reuleaux2D { .. } => false,
            BodyKind::MinkowskiSum(a, b) => a.is_smooth() && b.is_smooth(),
            BodyKind::Dilate(b, _) | BodyKind::Translate(b, _) | BodyKind::Reflect(b) => {
                b.is_smooth()
            }
            _ => true,
        }
    }

    fn check_direction(&self, u: &Direction) {
        assert_eq!(
            u.dim(),
            self.dim,
            "direction of dimension {} used with a body of dimension {}",
            u.dim(),
            self.dim
        );
    }

    /// Support function `h(u) = max{x·u : x ∈ body}`.
    pub fn support(&self, u: &Direction) -> f64 {
        self.check_direction(u);
        self.support_extended(u.as_slice())
    }

    /// The 1-homogeneous extension `H(v) = |v|·h(v/|v|)`, valid for any `v ≠ 0`.
    pub fn support_extended(&self, v: &[f64]) -> f64 {
        match self.kind() {
            BodyKind::Ball { radius, center } => radius * norm(v) + dot(center.as_slice(), v),
            BodyKind::Ellipsoid { q, center, .. } => {
                quad_form(q, v).sqrt() + dot(center.as_slice(), v)
            }
            BodyKind::Fourier2D { cos, sin } => {
                let r = norm(v);
                let (h, _, _) = fourier_eval(cos, sin, v[1].atan2(v[0]));
                r * h
            }
            BodyKind::Superellipse2D { dual_exponent, .. } => {
                let q = *dual_exponent;
                (v[0].abs().powf(q) + v[1].abs().powf(q)).powf(1.0 / q)
            }
            BodyKind::Reuleaux2D { width, vertices } => {
                let r = norm(v);
                let u = [v[0] / r, v[1] / r];
                r * reuleaux_support(*width, vertices, &u).0
            }
            BodyKind::Polygon2D { vertices } => vertices
                .iter()
                .map(|p| p[0] * v[0] + p[1] * v[1])
                .fold(f64::NEG_INFINITY, f64::max),
            BodyKind::MinkowskiSum(a, b) => a.support_extended(v) + b.support_extended(v),
            BodyKind::Dilate(b, r) => r * b.support_extended(v),
            BodyKind::Translate(b, t) => b.support_extended(v) + dot(t.as_slice(), v),
            BodyKind::Reflect(b) => {
                let mut w = [0.0; 3];
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi = -vi;
                }
                b.support_extended(&w[..v.len()])
            }
        }
    }

    /// The unique boundary point with outward normal `u`, i.e. `∇H(u)`.
    pub fn boundary_point(&self, u: &Direction) -> Result<DVector<f64>> {
        self.check_direction(u);
        self.gradient(u.as_slice(), true)
    }

    /// Some maximizer of `x·u`; never fails on flat faces.
    pub(crate) fn support_point_any(&self, u: &[f64]) -> DVector<f64> {
        self.gradient(u, false).expect("lenient gradient does not fail")
    }

    fn gradient(&self, u: &[f64], strict: bool) -> Result<DVector<f64>> {
        let n = u.len();
        Ok(match self.kind() {
            BodyKind::Ball { radius, center } => {
                DVector::from_column_slice(u) * (*radius / norm(u)) + center
            }
            BodyKind::Ellipsoid { q, center, .. } => {
                let uv = DVector::from_column_slice(u);
                let qu = q * &uv;
                let h = uv.dot(&qu).sqrt();
                qu / h + center
            }
            BodyKind::Fourier2D { cos, sin } => {
                let t = u[1].atan2(u[0]);
                let (h, h1, _) = fourier_eval(cos, sin, t);
                let (c, s) = (t.cos(), t.sin());
                DVector::from_vec(vec![h * c - h1 * s, h * s + h1 * c])
            }
            BodyKind::Superellipse2D { dual_exponent, .. } => {
                let q = *dual_exponent;
                let g = [
                    u[0].abs().powf(q - 1.0) * u[0].signum(),
                    u[1].abs().powf(q - 1.0) * u[1].signum(),
                ];
                let s = u[0].abs().powf(q) + u[1].abs().powf(q);
                let scale = s.powf(1.0 / q - 1.0);
                DVector::from_vec(vec![scale * g[0], scale * g[1]])
            }
            BodyKind::Reuleaux2D { width, vertices } => {
                let r = norm(u);
                let un = [u[0] / r, u[1] / r];
                let (_, arc, vertex) = reuleaux_support(*width, vertices, &un);
                let p = vertices[vertex];
                if arc {
                    DVector::from_vec(vec![p[0] + width * un[0], p[1] + width * un[1]])
                } else {
                    DVector::from_vec(vec![p[0], p[1]])
                }
            }
            BodyKind::Polygon2D { vertices } => {
                let values: Vec<f64> = vertices.iter().map(|p| p[0] * u[0] + p[1] * u[1]).collect();
                let (best, &max) = values
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("polygon has vertices");
                if strict {
                    let scale = vertices
                        .iter()
                        .map(|p| p[0].abs().max(p[1].abs()))
                        .fold(0.0, f64::max);
                    let tol = 1e-10 * scale.max(1.0);
                    let mut width: f64 = 0.0;
                    for (i, v) in values.iter().enumerate() {
                        if i != best && max - v <= tol {
                            let (a, b) = (vertices[i], vertices[best]);
                            width = width.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
                        }
                    }
                    if width > 0.0 {
                        return Err(Error::NonUniqueSupport {
                            direction: u.to_vec(),
                            width,
                        });
                    }
                }
                DVector::from_vec(vertices[best].to_vec())
            }
            BodyKind::MinkowskiSum(a, b) => a.gradient(u, strict)? + b.gradient(u, strict)?,
            BodyKind::Dilate(b, r) => b.gradient(u, strict)? * *r,
            BodyKind::Translate(b, t) => b.gradient(u, strict)? + t,
            BodyKind::Reflect(b) => {
                let w: Vec<f64> = u.iter().map(|x| -x).collect();
                -b.gradient(&w[..n], strict)?
            }
        })
    }

    /// Ambient N×N Hessian of the 1-homogeneous extension at the unit vector `u`.
    /// Entries are `+∞` where the radius of curvature blows up (flat points).
    pub fn hessian(&self, u: &Direction) -> DMatrix<f64> {
        self.check_direction(u);
        match self.mode {
            DerivativeMode::Analytic => self.hessian_analytic(u.as_slice()),
            DerivativeMode::FiniteDifference => self.hessian_fd(u.as_slice()),
        }
    }

    fn hessian_analytic(&self, u: &[f64]) -> DMatrix<f64> {
        let n = u.len();
        let uv = DVector::from_column_slice(u);
        let projector = DMatrix::identity(n, n) - &uv * uv.transpose();
        match self.kind() {
            BodyKind::Ball { radius, .. } => projector * *radius,
            BodyKind::Ellipsoid { q, .. } => {
                let qu = q * &uv;
                let h = uv.dot(&qu).sqrt();
                q / h - (&qu * qu.transpose()) / (h * h * h)
            }
            BodyKind::Fourier2D { cos, sin } => {
                let t = u[1].atan2(u[0]);
                let (h, _, h2) = fourier_eval(cos, sin, t);
                let e = DVector::from_vec(vec![-t.sin(), t.cos()]);
                (&e * e.transpose()) * (h + h2)
            }
            BodyKind::Superellipse2D { dual_exponent, .. } => {
                let q = *dual_exponent;
                let s = u[0].abs().powf(q) + u[1].abs().powf(q);
                let g = [
                    u[0].abs().powf(q - 1.0) * u[0].signum(),
                    u[1].abs().powf(q - 1.0) * u[1].signum(),
                ];
                let mut m = DMatrix::zeros(2, 2);
                for i in 0..2 {
                    for j in 0..2 {
                        m[(i, j)] = (1.0 - q) * s.powf(1.0 / q - 2.0) * g[i] * g[j];
                    }
                    m[(i, i)] += if u[i] == 0.0 {
                        f64::INFINITY
                    } else {
                        (q - 1.0) * s.powf(1.0 / q - 1.0) * u[i].abs().powf(q - 2.0)
                    };
                }
                m
            }
            BodyKind::Reuleaux2D { width, vertices } => {
                let (_, arc, _) = reuleaux_support(*width, vertices, &[u[0], u[1]]);
                if arc {
                    projector * *width
                } else {
                    DMatrix::zeros(2, 2)
                }
            }
            BodyKind::Polygon2D { .. } => DMatrix::zeros(2, 2),
            BodyKind::MinkowskiSum(a, b) => a.hessian_analytic(u) + b.hessian_analytic(u),
            BodyKind::Dilate(b, r) => b.hessian_analytic(u) * *r,
            BodyKind::Translate(b, _) => b.hessian_analytic(u),
            BodyKind::Reflect(b) => {
                let w: Vec<f64> = u.iter().map(|x| -x).collect();
                b.hessian_analytic(&w)
            }
        }
    }

    fn hessian_fd(&self, u: &[f64]) -> DMatrix<f64> {
        let n = u.len();
        let d = FD_HESSIAN_STEP;
        let eval = |shift: &[(usize, f64)]| {
            let mut v = [0.0; 3];
            v[..n].copy_from_slice(u);
            for &(i, s) in shift {
                v[i] += s;
            }
            self.support_extended(&v[..n])
        };
        let h0 = eval(&[]);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = (eval(&[(i, d)]) - 2.0 * h0 + eval(&[(i, -d)])) / (d * d);
            for j in 0..i {
                let v = (eval(&[(i, d), (j, d)]) - eval(&[(i, d), (j, -d)])
                    - eval(&[(i, -d), (j, d)])
                    + eval(&[(i, -d), (j, -d)]))
                    / (4.0 * d * d);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

fn quad_form(q: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * q[(i, j)] * v[j];
        }
    }
    s
}

/// `(h, h', h'')` of a Fourier support function at angle `t`.
pub(crate) fn fourier_eval(cos: &[f64], sin: &[f64], t: f64) -> (f64, f64, f64) {
    let mut h = cos[0];
    let (mut h1, mut h2) = (0.0, 0.0);
    for k in 1..cos.len().max(sin.len()) {
        let a = cos.get(k).copied().unwrap_or(0.0);
        let b = sin.get(k).copied().unwrap_or(0.0);
        let kf = k as f64;
        let (s, c) = (kf * t).sin_cos();
        h += a * c + b * s;
        h1 += kf * (b * c - a * s);
        h2 -= kf * kf * (a * c + b * s);
    }
    (h, h1, h2)
}

/// Support value at unit `u`, whether `u` lies in an arc sector, and which vertex carries it
/// (the arc centre, or the supporting vertex).
fn reuleaux_support(width: f64, vertices: &[[f64; 2]; 3], u: &[f64; 2]) -> (f64, bool, usize) {
    // Arc i (centred at vertex i) carries the normals within 30° of −v_i/|v_i|.
    let cos30 = 3f64.sqrt() / 2.0;
    let mut best = (f64::NEG_INFINITY, false, 0);
    for (i, p) in vertices.iter().enumerate() {
        let at_vertex = p[0] * u[0] + p[1] * u[1];
        if at_vertex > best.0 {
            best = (at_vertex, false, i);
        }
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let along_bisector = -(p[0] * u[0] + p[1] * u[1]) / r;
        if along_bisector >= cos30 - 1e-15 && at_vertex + width > best.0 {
            best = (at_vertex + width, true, i);
        }
    }
    best
}
