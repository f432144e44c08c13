//! Checks of K-density and of the identities it forces.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{equidistributed, ConvexBody, Direction, TangentFrame};
use crate::measure::{
    gauge, halfspace_cut_volume, intersection_volume, outer_normal, volume, QmcConfig,
};

/// How far `gauge_K(x̄ − x)` may stray from 1 at a touch point.
pub const TOUCH_GAUGE_TOLERANCE: f64 = 1e-6;
/// Largest angle between `ν_K(x̄ − x)` and `−ν_G(x)` accepted at a touch point.
pub const TOUCH_NORMAL_TOLERANCE: f64 = 1e-6;

/// Summary of a quantity that should be constant over the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadReport {
    pub quantity: String,
    pub sample_count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max − min) / mean`.
    pub relative_spread: f64,
    pub error_budget: f64,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Sample indices left out (singular curvature).
    pub flagged: Vec<usize>,
}

impl SpreadReport {
    /// `values[i]` of `None` marks a flagged sample.
    pub fn new(
        quantity: &str,
        values: &[Option<f64>],
        stderrs: &[f64],
        error_budget: impl FnOnce(f64) -> f64,
    ) -> Self {
        let kept: Vec<f64> = values.iter().flatten().copied().collect();
        let flagged = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.is_none().then_some(i))
            .collect();
        let (min, max) = kept
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let mean = kept.iter().sum::<f64>() / kept.len().max(1) as f64;
        let relative_spread = if kept.is_empty() {
            f64::NAN
        } else if max == min {
            0.0
        } else {
            (max - min) / mean.abs()
        };
        SpreadReport {
            quantity: quantity.to_string(),
            sample_count: kept.len(),
            min,
            max,
            mean,
            relative_spread,
            error_budget: error_budget(mean),
            values: values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            stderrs: stderrs.to_vec(),
            flagged,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.sample_count > 0 && self.relative_spread <= self.error_budget
    }

    /// Largest `|v − target| / |target|` over the kept samples.
    pub fn max_relative_deviation(&self, target: f64) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .map(|v| (v - target).abs() / target.abs())
            .fold(0.0, f64::max)
    }
}

/// The unique point `x̄` of `∂G ∩ ∂(x + K)` and `u = ν_G(x̄) = −ν_G(x)`.
///
/// Fails with [`Error::NonUniqueContact`] where the normal of G at `x` is not unique, since the
/// contact set is then an arc; the error carries samples of it.
pub fn touch_point(g: &ConvexBody, k: &ConvexBody, x: &[f64]) -> Result<(DVector<f64>, Direction)> {
    let cone = outer_normal(g, x)?;
    if !cone.is_unique() {
        return Err(Error::NonUniqueContact {
            arc: contact_arc(g, &cone.normal, &cone.half_widths),
        });
    }
    let u = -&cone.normal;
    let xbar = match g.boundary_point(&u) {
        Ok(p) => p,
        Err(Error::NonUniqueSupport { .. }) => {
            return Err(Error::NonUniqueContact {
                arc: face_samples(g, &u),
            })
        }
        Err(e) => return Err(e),
    };
    let d: Vec<f64> = xbar.iter().zip(x).map(|(a, b)| a - b).collect();
    let gk = gauge(k, &d);
    if (gk - 1.0).abs() > TOUCH_GAUGE_TOLERANCE {
        return Err(Error::Postcondition(format!(
            "gauge_K(x̄ − x) = {gk}, expected 1 (is K normalized?)"
        )));
    }
    let nk = outer_normal(k, &d)?;
    let angle = nk.normal.angle_to(&u);
    if angle > TOUCH_NORMAL_TOLERANCE {
        return Err(Error::Postcondition(format!(
            "ν_K(x̄ − x) is {angle:e} rad away from −ν_G(x)"
        )));
    }
    Ok((xbar, u))
}

/// Boundary points of G with normals opposite to the cone around `normal`.
fn contact_arc(g: &ConvexBody, normal: &Direction, half_widths: &[f64]) -> Vec<Vec<f64>> {
    let frame = TangentFrame::new(normal);
    let n = half_widths.len();
    let headings: Vec<f64> = if g.dim() == 2 {
        vec![0.0, std::f64::consts::PI]
    } else {
        (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect()
    };
    let mut arc = Vec::new();
    for (a, w) in headings.iter().zip(half_widths) {
        for s in 0..=8 {
            let v = frame.tilt_towards(*a, w * s as f64 / 8.0);
            arc.push(g.support_point_any((-v).as_slice()).as_slice().to_vec());
        }
    }
    arc
}

fn face_samples(g: &ConvexBody, u: &Direction) -> Vec<Vec<f64>> {
    let frame = TangentFrame::new(u);
    [-1e-9, 1e-9]
        .iter()
        .map(|t| {
            g.support_point_any(frame.tilt_towards(0.0, *t).as_slice())
                .as_slice()
                .to_vec()
        })
        .collect()
}

/// Boundary points with equidistributed outward normals.
pub fn boundary_samples(g: &ConvexBody, m: usize) -> Vec<DVector<f64>> {
    equidistributed(g.dim(), m)
        .iter()
        .map(|u| g.support_point_any(u.as_slice()))
        .collect()
}

/// `V(G ∩ (x + rK))` at `m` boundary points. Error budget: 3× the largest relative stderr.
pub fn kdense_spread(g: &ConvexBody, k: &ConvexBody, r: f64, m: usize, qmc: &QmcConfig) -> Result<SpreadReport> {
    if m < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 sample points, got {m}")));
    }
    let mut values = Vec::with_capacity(m);
    let mut stderrs = Vec::with_capacity(m);
    for x in boundary_samples(g, m) {
        let v = intersection_volume(g, k, x.as_slice(), r, qmc)?;
        values.push(Some(v.value));
        stderrs.push(v.stderr);
    }
    let max_err = stderrs.iter().copied().fold(0.0, f64::max);
    Ok(SpreadReport::new("intersection_volume", &values, &stderrs, |mean| {
        3.0 * max_err / mean
    }))
}

/// Estimate of the centre of symmetry: the mean midpoint of antipodal boundary points.
pub fn symmetry_center(g: &ConvexBody, m: usize) -> DVector<f64> {
    let dirs = equidistributed(g.dim(), m);
    let mut c = DVector::zeros(g.dim());
    for u in &dirs {
        c += (g.support_point_any(u.as_slice()) + g.support_point_any((-u).as_slice())) * 0.5;
    }
    c / dirs.len() as f64
}

/// Relative spread budget for the deterministic curvature checks.
pub const PETTY_BUDGET: f64 = 1e-6;

/// `κ_G(u) / h_{G−c}(u)^{N+1}` over `m` directions, with `c` the symmetry-centre estimate.
pub fn petty_check(g: &ConvexBody, m: usize) -> SpreadReport {
    let n = g.dim();
    let c = symmetry_center(g, m.max(64));
    let values: Vec<Option<f64>> = equidistributed(n, m)
        .iter()
        .map(|u| {
            let h = g.support(u) - u.dot(&c);
            g.curvature(u).ok().map(|cd| cd.kappa / h.powi(n as i32 + 1))
        })
        .collect();
    SpreadReport::new("kappa/h^(N+1)", &values, &vec![0.0; m], |_| PETTY_BUDGET)
}

/// Per-direction Petty data: `(κ, h, ratio)`, `None` where the curvature is singular.
pub fn petty_samples(g: &ConvexBody, m: usize) -> Vec<Option<(f64, f64, f64)>> {
    let n = g.dim();
    let c = symmetry_center(g, m.max(64));
    equidistributed(n, m)
        .iter()
        .map(|u| {
            let h = g.support(u) - u.dot(&c);
            g.curvature(u)
                .ok()
                .map(|cd| (cd.kappa, h, cd.kappa / h.powi(n as i32 + 1)))
        })
        .collect()
}

fn shape_in(body: &ConvexBody, u: &Direction, frame: &TangentFrame) -> Result<DMatrix<f64>> {
    Ok(body.curvature_in_frame(u, frame)?.shape)
}

/// `(I + S_A⁻¹ S_B)⁻¹ S_B`.
fn sum_shape(sa: &DMatrix<f64>, sb: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = sa.nrows();
    let sa_inv = sa
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Postcondition("S_A is singular".into()))?;
    let m = DMatrix::identity(d, d) + sa_inv * sb;
    let m_inv = m
        .try_inverse()
        .ok_or_else(|| Error::Postcondition("I + S_A⁻¹S_B is singular".into()))?;
    Ok(m_inv * sb)
}

/// `‖S_{A+B}(u) − (I + S_A⁻¹S_B)⁻¹S_B‖` in a shared frame.
pub fn krantz_parks_check(a: &ConvexBody, b: &ConvexBody, u: &Direction) -> Result<f64> {
    Ok(krantz_parks_residuals(a, b, u)?.stated)
}

/// Residuals of three readings of the Minkowski-sum curvature formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrantzParksResiduals {
    /// Against `(I + S_A⁻¹S_B)⁻¹S_B`.
    pub stated: f64,
    /// Against `S_B(I + S_A⁻¹S_B)⁻¹ = (S_A⁻¹ + S_B⁻¹)⁻¹`.
    pub reordered: f64,
    /// Relative gap between the determinants, which both orderings share.
    pub determinant: f64,
}

/// `(I + S_A⁻¹S_B)⁻¹S_B` is `S_B⁻¹ (S_A⁻¹ + S_B⁻¹)⁻¹ S_B`, a similarity transform of the true
/// `S_{A+B}`; the two agree as matrices only when `S_A` and `S_B` commute (always in the plane).
pub fn krantz_parks_residuals(a: &ConvexBody, b: &ConvexBody, u: &Direction) -> Result<KrantzParksResiduals> {
    let frame = TangentFrame::new(u);
    let sa = shape_in(a, u, &frame)?;
    let sb = shape_in(b, u, &frame)?;
    let sum = a.minkowski_sum(b)?;
    let lhs = shape_in(&sum, u, &frame)?;
    let stated = sum_shape(&sa, &sb)?;
    let d = sa.nrows();
    let m = (DMatrix::identity(d, d) + sa.clone().try_inverse().expect("checked by sum_shape") * &sb)
        .try_inverse()
        .expect("checked by sum_shape");
    let reordered = &sb * m;
    let det = lhs.determinant();
    Ok(KrantzParksResiduals {
        stated: (&lhs - &stated).norm(),
        reordered: (&lhs - reordered).norm(),
        determinant: (det - stated.determinant()).abs() / det.abs(),
    })
}

/// Residual of `S_K(u) = (I + S_G(u)⁻¹S_G(−u))⁻¹S_G(−u)` for `K = G − G`.
///
/// Also checks that `S_G(u) − S_K(u)` is positive definite.
pub fn kp1_check(g: &ConvexBody, u: &Direction) -> Result<f64> {
    let frame = TangentFrame::new(u);
    let s_u = shape_in(g, u, &frame)?;
    // The curvature of G at −u, as a form on the same tangent space u⊥ = (−u)⊥.
    let s_minus = shape_in(g, &-u, &frame)?;
    let k = g.difference_body();
    let s_k = shape_in(&k, u, &frame)?;
    let residual = (&s_k - sum_shape(&s_u, &s_minus)?).norm();
    let gap = &s_u - &s_k;
    let min_eig = ((&gap + gap.transpose()) * 0.5).symmetric_eigen().eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::Postcondition(format!(
            "S_G(u) − S_K(u) is not positive definite (smallest eigenvalue {min_eig:e})"
        )));
    }
    Ok(residual)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub max_difference: f64,
    /// `|κ(u) − κ(−u)|` per direction, NaN where skipped.
    pub differences: Vec<f64>,
    pub skipped: Vec<usize>,
}

/// `max |κ_G(u) − κ_G(−u)|` over `m` directions.
pub fn curvature_symmetry_check(g: &ConvexBody, m: usize) -> SymmetryReport {
    let mut differences = Vec::with_capacity(m);
    let mut skipped = Vec::new();
    for (i, u) in equidistributed(g.dim(), m).iter().enumerate() {
        match (g.curvature(u), g.curvature(&-u)) {
            (Ok(a), Ok(b)) => differences.push((a.kappa - b.kappa).abs()),
            _ => {
                skipped.push(i);
                differences.push(f64::NAN);
            }
        }
    }
    let max_difference = differences
        .iter()
        .filter(|d| !d.is_nan())
        .copied()
        .fold(0.0, f64::max);
    SymmetryReport {
        max_difference,
        differences,
        skipped,
    }
}

/// Relative tolerance on `h_K = 2h_{G−c}`.
pub const K2G_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    /// Spread of `h_K(u) / (2 h_{G−c}(u))`.
    pub ratio: SpreadReport,
    /// `max |h_K(u) − 2h_{G−c}(u)|`.
    pub max_residual: f64,
    pub residuals: Vec<f64>,
    pub center: Vec<f64>,
    pub passes: bool,
}

/// Compares `K = G − G` with `2(G − c)`.
pub fn k_equals_2g_check(g: &ConvexBody, m: usize) -> DoublingReport {
    let k = g.difference_body();
    let c = symmetry_center(g, m.max(64));
    let dirs = equidistributed(g.dim(), m);
    let mut ratios = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut scale: f64 = 0.0;
    for u in &dirs {
        let hk = k.support(u);
        let hg = g.support(u) - u.dot(&c);
        scale = scale.max(hk.abs());
        ratios.push(Some(hk / (2.0 * hg)));
        residuals.push((hk - 2.0 * hg).abs());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let ratio = SpreadReport::new("h_K/(2h_G)", &ratios, &vec![0.0; m], |_| K2G_TOLERANCE);
    DoublingReport {
        passes: max_residual <= K2G_TOLERANCE * scale,
        ratio,
        max_residual,
        residuals,
        center: c.as_slice().to_vec(),
    }
}

/// `V(K ∩ {y·ν_G(x) ≥ 0}) / V(K)` at `m` boundary points of G.
///
/// The error budget is 3× the largest relative error of the ratio.
pub fn halfvolume_condition_check(g: &ConvexBody, k: &ConvexBody, m: usize, qmc: &QmcConfig) -> Result<SpreadReport> {
    let vk = volume(k, qmc);
    let mut values = Vec::with_capacity(m);
    let mut stderrs = Vec::with_capacity(m);
    for u in equidistributed(g.dim(), m) {
        // The boundary point with outward normal u has ν_G = u by construction.
        let cut = halfspace_cut_volume(k, &u, qmc);
        let ratio = cut.value / vk.value;
        let rel = ((cut.stderr / cut.value).powi(2) + (vk.stderr / vk.value).powi(2)).sqrt();
        values.push(Some(ratio));
        stderrs.push(ratio * rel);
    }
    let max_err = stderrs.iter().copied().fold(0.0, f64::max);
    Ok(SpreadReport::new("halfspace_cut/V(K)", &values, &stderrs, |mean| {
        3.0 * max_err / mean
    }))
}

/// Whether every sampled ratio equals ½ within the report's error budget.
pub fn halfvolume_holds(report: &SpreadReport) -> bool {
    report.sample_count > 0 && report.max_relative_deviation(0.5) <= report.error_budget.max(0.0)
}

/// A named body of the fixed test zoo.
#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub body: ConvexBody,
    pub centrally_symmetric: bool,
    /// Strictly convex with a differentiable boundary.
    pub smooth_strictly_convex: bool,
}

/// Ball, ellipsoids in 2D and 3D, superellipse p = 4, a three-fold Fourier body, the Reuleaux
/// triangle and an off-centre disk.
pub fn zoo() -> Vec<ZooEntry> {
    let entry = |name, body: Result<ConvexBody>, sym, smooth| ZooEntry {
        name,
        body: body.expect("zoo bodies are valid"),
        centrally_symmetric: sym,
        smooth_strictly_convex: smooth,
    };
    vec![
        entry("disk", ConvexBody::unit_ball(2), true, true),
        entry("ball3", ConvexBody::unit_ball(3), true, true),
        entry("ellipse", ConvexBody::ellipsoid_axes(&[2.0, 1.0], &[0.0, 0.0]), true, true),
        entry(
            "ellipsoid3",
            ConvexBody::ellipsoid_axes(&[2.0, 1.0, 0.7], &[0.0; 3]),
            true,
            true,
        ),
        entry("superellipse4", ConvexBody::superellipse_2d(4.0), true, true),
        entry("fourier3", ConvexBody::fourier_2d(&[1.0, 0.0, 0.0, 0.1], &[]), false, true),
        entry("reuleaux", ConvexBody::reuleaux_2d(1.0), false, false),
        entry("offcenter_disk", ConvexBody::ball(1.0, &[0.5, 0.0]), true, true),
    ]
}
