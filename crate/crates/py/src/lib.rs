//! Python bindings: convex bodies, volumes and the K-density checks.

use kdense_core::analysis;
use kdense_core::asymptotics::{self, LadderConfig};
use kdense_core::measure::{self, IntegrationResult, QmcConfig};
use kdense_core::{ConvexBody, Direction};
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(kdense, KdenseError, PyValueError);

fn err(e: kdense_core::Error) -> PyErr {
    KdenseError::new_err((e.code(), e.to_string()))
}

fn direction(u: &[f64]) -> PyResult<Direction> {
    Direction::new(u).map_err(err)
}

fn qmc(replicates: usize, points: usize, seed: u64) -> QmcConfig {
    QmcConfig { replicates, points, seed }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn estimate(r: IntegrationResult) -> (f64, f64) {
    (r.value, r.stderr)
}

fn spread<'py>(py: Python<'py>, s: &analysis::SpreadReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("quantity", &s.quantity)?;
    d.set_item("mean", s.mean)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    d.set_item("relative_spread", s.relative_spread)?;
    d.set_item("error_budget", s.error_budget)?;
    d.set_item("constant", s.is_constant())?;
    d.set_item("values", s.values.clone())?;
    d.set_item("flagged", s.flagged.clone())?;
    Ok(d)
}

/// A convex body in the plane or in space, given by its support function.
#[pyclass(name = "Body", frozen, module = "kdense", skip_from_py_object)]
#[derive(Clone)]
struct Body(ConvexBody);

#[pymethods]
impl Body {
    #[staticmethod]
    #[pyo3(signature = (radius, center=None, dim=2))]
    fn ball(radius: f64, center: Option<Vec<f64>>, dim: usize) -> PyResult<Self> {
        let center = center.unwrap_or_else(|| vec![0.0; dim]);
        ConvexBody::ball(radius, &center).map(Body).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (axes, center=None))]
    fn ellipsoid(axes: Vec<f64>, center: Option<Vec<f64>>) -> PyResult<Self> {
        let center = center.unwrap_or_else(|| vec![0.0; axes.len()]);
        ConvexBody::ellipsoid_axes(&axes, &center).map(Body).map_err(err)
    }

    /// `{y : (y−c)ᵀ Q (y−c) ≤ 1}` for a symmetric positive definite `q` (list of rows).
    #[staticmethod]
    #[pyo3(signature = (q, center=None))]
    fn ellipsoid_matrix(q: Vec<Vec<f64>>, center: Option<Vec<f64>>) -> PyResult<Self> {
        let n = q.len();
        if q.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("q must be square"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
        let center = center.unwrap_or_else(|| vec![0.0; n]);
        ConvexBody::ellipsoid(m, &center).map(Body).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (cos, sin=Vec::new()))]
    fn fourier(cos: Vec<f64>, sin: Vec<f64>) -> PyResult<Self> {
        ConvexBody::fourier_2d(&cos, &sin).map(Body).map_err(err)
    }

    #[staticmethod]
    fn superellipse(p: f64) -> PyResult<Self> {
        ConvexBody::superellipse_2d(p).map(Body).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (width=1.0, rotation=0.0))]
    fn reuleaux(width: f64, rotation: f64) -> PyResult<Self> {
        ConvexBody::reuleaux_2d_rotated(width, rotation).map(Body).map_err(err)
    }

    #[staticmethod]
    fn polygon(vertices: Vec<[f64; 2]>) -> PyResult<Self> {
        ConvexBody::polygon_2d(&vertices).map(Body).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn is_smooth(&self) -> bool {
        self.0.is_smooth()
    }

    fn is_strictly_convex(&self) -> bool {
        self.0.is_strictly_convex()
    }

    fn support(&self, u: Vec<f64>) -> PyResult<f64> {
        Ok(self.0.support(&direction(&u)?))
    }

    fn boundary_point(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = self.0.boundary_point(&direction(&u)?).map_err(err)?;
        Ok(p.iter().copied().collect())
    }

    /// `{"kappa", "radii", "shape", "frame"}` at the boundary point with normal `u`.
    fn curvature<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.0.curvature(&direction(&u)?).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("kappa", c.kappa)?;
        d.set_item("radii", rows(&c.radii))?;
        d.set_item("shape", rows(&c.shape))?;
        // Tangent basis vectors, one per row.
        d.set_item("frame", rows(&c.frame.basis().transpose()))?;
        Ok(d)
    }

    fn gauge(&self, v: Vec<f64>) -> f64 {
        measure::gauge(&self.0, &v)
    }

    fn contains(&self, y: Vec<f64>) -> bool {
        measure::Membership::new(&self.0).contains(&y)
    }

    /// `(value, stderr)`.
    #[pyo3(signature = (replicates=8, points=1 << 17, seed=1))]
    fn volume(&self, replicates: usize, points: usize, seed: u64) -> (f64, f64) {
        estimate(measure::volume(&self.0, &qmc(replicates, points, seed)))
    }

    fn __add__(&self, other: &Body) -> PyResult<Self> {
        self.0.minkowski_sum(&other.0).map(Body).map_err(err)
    }

    fn __neg__(&self) -> Self {
        Body(self.0.reflect())
    }

    fn dilate(&self, factor: f64) -> PyResult<Self> {
        self.0.dilate(factor).map(Body).map_err(err)
    }

    fn translate(&self, offset: Vec<f64>) -> PyResult<Self> {
        self.0.translate(&offset).map(Body).map_err(err)
    }

    fn difference_body(&self) -> Self {
        Body(self.0.difference_body())
    }

    fn __repr__(&self) -> String {
        format!("Body(dim={}, kind={:?})", self.0.dim(), self.0.kind())
    }
}

/// `V(G ∩ (x + rK))` as `(value, stderr)`.
#[pyfunction]
#[pyo3(signature = (g, k, x, r, replicates=8, points=1 << 17, seed=1))]
fn intersection_volume(
    g: &Body,
    k: &Body,
    x: Vec<f64>,
    r: f64,
    replicates: usize,
    points: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    measure::intersection_volume(&g.0, &k.0, &x, r, &qmc(replicates, points, seed))
        .map(estimate)
        .map_err(err)
}

/// `V(G \ (x + rK))` as `(value, stderr)`.
#[pyfunction]
#[pyo3(signature = (g, k, x, r, replicates=8, points=1 << 17, seed=1))]
fn deficit_volume(
    g: &Body,
    k: &Body,
    x: Vec<f64>,
    r: f64,
    replicates: usize,
    points: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    measure::deficit_volume(&g.0, &k.0, &x, r, None, &qmc(replicates, points, seed))
        .map(estimate)
        .map_err(err)
}

/// `(x̄, u)`: where `x + K` meets ∂G and the outer normal of G there.
#[pyfunction]
fn touch_point(g: &Body, k: &Body, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let (p, u) = analysis::touch_point(&g.0, &k.0, &x).map_err(err)?;
    Ok((p.iter().copied().collect(), u.to_vec()))
}

/// Closed-form coefficients of the deficit as `r → 1⁻`.
#[pyfunction]
fn large_r_closed<'py>(py: Python<'py>, g: &Body, k: &Body, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let c = asymptotics::large_r_closed(&g.0, &k.0, &x).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("theorem", c.theorem)?;
    d.set_item("hessian_normalized", c.hessian_normalized)?;
    d.set_item("final_statement", c.final_statement)?;
    d.set_item("curvature_bound", c.curvature_bound)?;
    d.set_item("h_k", c.h_k)?;
    d.set_item("det_gap", c.det_gap)?;
    Ok(d)
}

/// Power-law fit of the deficit ladder `ε_k = eps0 · ratio^{−k}`.
#[pyfunction]
#[pyo3(signature = (g, k, x, eps0=0.1, ratio=2.0, rungs=8, replicates=8, points=1 << 17, seed=1))]
#[allow(clippy::too_many_arguments)]
fn large_r_fit<'py>(
    py: Python<'py>,
    g: &Body,
    k: &Body,
    x: Vec<f64>,
    eps0: f64,
    ratio: f64,
    rungs: usize,
    replicates: usize,
    points: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let ladder = LadderConfig { eps0, ratio, rungs };
    let fit = asymptotics::large_r_coefficient_numeric(&g.0, &k.0, &x, &ladder, &qmc(replicates, points, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("exponent", fit.exponent)?;
    d.set_item("coefficient", fit.coefficient)?;
    d.set_item("r_squared", fit.r_squared)?;
    d.set_item("eps", fit.ladder.iter().map(|p| p.eps).collect::<Vec<_>>())?;
    d.set_item("deficit", fit.ladder.iter().map(|p| p.value).collect::<Vec<_>>())?;
    Ok(d)
}

/// Spread of `V(G ∩ (x + rK))` over `m` boundary points x.
#[pyfunction]
#[pyo3(signature = (g, k, r, m=64, replicates=8, points=1 << 17, seed=1))]
#[allow(clippy::too_many_arguments)]
fn kdense_spread<'py>(
    py: Python<'py>,
    g: &Body,
    k: &Body,
    r: f64,
    m: usize,
    replicates: usize,
    points: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = analysis::kdense_spread(&g.0, &k.0, r, m, &qmc(replicates, points, seed)).map_err(err)?;
    spread(py, &s)
}

/// Spread of `κ/h^{N+1}` about the centre of symmetry.
#[pyfunction]
#[pyo3(signature = (g, m=256))]
fn petty_check<'py>(py: Python<'py>, g: &Body, m: usize) -> PyResult<Bound<'py, PyDict>> {
    spread(py, &analysis::petty_check(&g.0, m))
}

/// Residual of the difference-body curvature identity at `u`.
#[pyfunction]
fn kp1_check(g: &Body, u: Vec<f64>) -> PyResult<f64> {
    analysis::kp1_check(&g.0, &direction(&u)?).map_err(err)
}

/// `{"stated", "reordered", "determinant"}` residuals of the Minkowski-sum curvature formula.
#[pyfunction]
fn krantz_parks_residuals<'py>(py: Python<'py>, a: &Body, b: &Body, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = analysis::krantz_parks_residuals(&a.0, &b.0, &direction(&u)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("stated", r.stated)?;
    d.set_item("reordered", r.reordered)?;
    d.set_item("determinant", r.determinant)?;
    Ok(d)
}

/// `max |κ(u) − κ(−u)|`, or NaN when every direction is singular.
#[pyfunction]
#[pyo3(signature = (g, m=64))]
fn curvature_symmetry(g: &Body, m: usize) -> f64 {
    analysis::curvature_symmetry_check(&g.0, m).max_difference
}

/// `(passes, max |h_K − 2h_{G−c}|)` for `K = G − G`.
#[pyfunction]
#[pyo3(signature = (g, m=64))]
fn k_equals_2g(g: &Body, m: usize) -> (bool, f64) {
    let r = analysis::k_equals_2g_check(&g.0, m);
    (r.passes, r.max_residual)
}

/// Spread of `V(K ∩ {y·ν(x) ≥ 0}) / V(K)` over boundary points of G.
#[pyfunction]
#[pyo3(signature = (g, k, m=64, replicates=8, points=1 << 17, seed=1))]
fn halfvolume<'py>(
    py: Python<'py>,
    g: &Body,
    k: &Body,
    m: usize,
    replicates: usize,
    points: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = analysis::halfvolume_condition_check(&g.0, &k.0, m, &qmc(replicates, points, seed)).map_err(err)?;
    spread(py, &s)
}

#[pymodule]
fn kdense(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KdenseError", m.py().get_type::<KdenseError>())?;
    m.add_class::<Body>()?;
    m.add_function(wrap_pyfunction!(intersection_volume, m)?)?;
    m.add_function(wrap_pyfunction!(deficit_volume, m)?)?;
    m.add_function(wrap_pyfunction!(touch_point, m)?)?;
    m.add_function(wrap_pyfunction!(large_r_closed, m)?)?;
    m.add_function(wrap_pyfunction!(large_r_fit, m)?)?;
    m.add_function(wrap_pyfunction!(kdense_spread, m)?)?;
    m.add_function(wrap_pyfunction!(petty_check, m)?)?;
    m.add_function(wrap_pyfunction!(kp1_check, m)?)?;
    m.add_function(wrap_pyfunction!(krantz_parks_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(k_equals_2g, m)?)?;
    m.add_function(wrap_pyfunction!(halfvolume, m)?)?;
    Ok(())
}
