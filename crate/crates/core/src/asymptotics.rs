//! The two asymptotic regimes of `V(G ∩ (x + rK))`: the deficit as `r → 1⁻` and the
//! leading `r^N` term as `r → 0⁺`.
//!
//! Deficits are reported as positive numbers `V(G \ (x + rK))`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::touch_point;
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Direction, TangentFrame};
use crate::measure::{
    as_ball, circumscribed_ratio, deficit_volume, halfspace_cut_volume, intersection_volume, omega_lower,
    outer_normal, volume, IntegrationResult, Method, QmcConfig,
};
use crate::oracles::{ball_lens_volume, disk_lens_area};

/// Fits with a coefficient of determination below this are flagged as untrusted.
pub const MIN_R_SQUARED: f64 = 0.99;

/// `r_G` must equal 1 to this tolerance before large-r asymptotics are attempted.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderPoint {
    pub eps: f64,
    pub value: f64,
    pub stderr: f64,
}

/// `f(ε) ≈ coefficient · ε^exponent` from a weighted log-log regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
    pub ladder: Vec<LadderPoint>,
    pub trusted: bool,
}

/// `log f = log C + a log ε + b ε`: a power law with a first-order correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub correction: f64,
}

fn validate_ladder(samples: &[LadderPoint]) -> Result<()> {
    if samples.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 samples, got {}",
            samples.len()
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        if !(s.eps > 0.0) {
            return Err(Error::DegenerateFit(format!("ε = {} is not positive", s.eps)));
        }
        if i > 0 && !(s.eps < samples[i - 1].eps) {
            return Err(Error::DegenerateFit("ε values must be strictly decreasing".into()));
        }
        if !(s.value > 0.0) || s.value <= s.stderr {
            return Err(Error::DegenerateFit(format!(
                "signal {:e} at ε = {:e} does not exceed its error {:e}",
                s.value, s.eps, s.stderr
            )));
        }
    }
    Ok(())
}

/// Weights `1/var(log f)`, with exact samples treated as equally reliable.
fn log_weights(samples: &[LadderPoint]) -> Vec<f64> {
    samples
        .iter()
        .map(|s| {
            let rel = (s.stderr / s.value).max(1e-12);
            1.0 / (rel * rel)
        })
        .collect()
}

/// Weighted least squares of `log f` against `log ε`.
pub fn fit_power_law(samples: &[LadderPoint]) -> Result<PowerLawFit> {
    validate_ladder(samples)?;
    let w = log_weights(samples);
    let x: Vec<f64> = samples.iter().map(|s| s.eps.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.value.ln()).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = w.iter().zip(&y).map(|(w, y)| w * (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("ε values do not spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(PowerLawFit {
        exponent: slope,
        coefficient: intercept.exp(),
        r_squared,
        ladder: samples.to_vec(),
        trusted: r_squared >= MIN_R_SQUARED,
    })
}

/// Weighted least squares of `log f` on `(1, log ε, ε)`, absorbing the leading correction.
pub fn fit_power_law_corrected(samples: &[LadderPoint]) -> Result<CorrectedFit> {
    validate_ladder(samples)?;
    let w = log_weights(samples);
    let mut ata = DMatrix::<f64>::zeros(3, 3);
    let mut atb = nalgebra::DVector::<f64>::zeros(3);
    for (s, wi) in samples.iter().zip(&w) {
        let row = [1.0, s.eps.ln(), s.eps];
        let y = s.value.ln();
        for i in 0..3 {
            atb[i] += wi * row[i] * y;
            for j in 0..3 {
                ata[(i, j)] += wi * row[i] * row[j];
            }
        }
    }
    let sol = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::DegenerateFit("corrected fit is singular".into()))?;
    Ok(CorrectedFit {
        coefficient: sol[0].exp(),
        exponent: sol[1],
        correction: sol[2],
    })
}

/// Geometry of a ladder `ε_k = eps0 · ratio^{−k}`, `k = 0..rungs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct LadderConfig {
    pub eps0: f64,
    pub ratio: f64,
    pub rungs: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            eps0: 0.1,
            ratio: 2.0,
            rungs: 8,
        }
    }
}

impl LadderConfig {
    pub fn values(&self) -> Vec<f64> {
        (0..self.rungs)
            .map(|k| self.eps0 * self.ratio.powi(-(k as i32)))
            .collect()
    }
}

/// Rung `k` uses its own seed so rungs are independent yet reproducible.
fn rung_qmc(qmc: &QmcConfig, k: usize) -> QmcConfig {
    QmcConfig {
        seed: qmc.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)),
        ..*qmc
    }
}

/// Exact `V(G ∩ (x + rK))` when both bodies are Euclidean balls.
fn ball_pair_intersection(g: &ConvexBody, k: &ConvexBody, x: &[f64], r: f64) -> Option<f64> {
    let (rg, cg) = as_ball(g)?;
    let (rk, ck) = as_ball(k)?;
    let d = (0..g.dim())
        .map(|i| (cg[i] - (x[i] + r * ck[i])).powi(2))
        .sum::<f64>()
        .sqrt();
    Some(match g.dim() {
        2 => disk_lens_area(rg, r * rk, d),
        _ => ball_lens_volume(rg, r * rk, d),
    })
}

fn ball_volume(dim: usize, radius: f64) -> f64 {
    match dim {
        2 => std::f64::consts::PI * radius * radius,
        _ => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
    }
}

/// The deficit ladder `f(ε) = V(G \ (x + (1−ε)K))`, exact for ball pairs and QMC otherwise.
pub fn large_r_ladder(
    g: &ConvexBody,
    k: &ConvexBody,
    x: &[f64],
    ladder: &LadderConfig,
    qmc: &QmcConfig,
) -> Result<(Vec<LadderPoint>, Method)> {
    let r_g = circumscribed_ratio(g, k, x)?;
    if (r_g - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(r_g));
    }
    let eps = ladder.values();
    if let (Some((rg, _)), Some(_)) = (as_ball(g), as_ball(k)) {
        let vg = ball_volume(g.dim(), rg);
        let points = eps
            .iter()
            .map(|&e| LadderPoint {
                eps: e,
                value: vg - ball_pair_intersection(g, k, x, 1.0 - e).expect("ball pair"),
                stderr: 0.0,
            })
            .collect();
        return Ok((points, Method::Exact));
    }
    let (_, u) = touch_point(g, k, x)?;
    let points = eps
        .par_iter()
        .enumerate()
        .map(|(i, &e)| {
            let d = deficit_volume(g, k, x, 1.0 - e, Some(&u), &rung_qmc(qmc, i))?;
            Ok(LadderPoint {
                eps: e,
                value: d.value,
                stderr: d.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((points, Method::Qmc))
}

/// Fitted exponent and coefficient of the deficit as `r → 1⁻`.
///
/// Fails with [`Error::FlatContact`] when the exponent falls clearly below `(N+1)/2`, the
/// signature of vanishing curvature at the touch point.
pub fn large_r_coefficient_numeric(
    g: &ConvexBody,
    k: &ConvexBody,
    x: &[f64],
    ladder: &LadderConfig,
    qmc: &QmcConfig,
) -> Result<PowerLawFit> {
    let (points, _) = large_r_ladder(g, k, x, ladder, qmc)?;
    let fit = fit_power_law(&points)?;
    let threshold = (g.dim() as f64 + 1.0) / 2.0 - 0.1;
    if fit.exponent < threshold {
        return Err(Error::FlatContact {
            fit: Box::new(fit),
            threshold,
        });
    }
    Ok(fit)
}

/// Closed-form large-r coefficients at the touch point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedCoefficients {
    /// `2ω_{N−1} h_K(u)^{(N+1)/2} / ((N²−1) det[S_G(u) − S_K(u)]^{1/2})`.
    pub theorem: f64,
    /// The same with the local graph written as `½⟨S y, y⟩`, i.e. `theorem · 2^{(N−1)/2}`;
    /// this is the value the deficit actually approaches.
    pub hessian_normalized: f64,
    /// `2√2 ω_{N−1} h_K(u)^{(N+1)/2} / ((N+1) det[S_G(u)]^{1/2})`, the constant of the
    /// closing statement for K-dense bodies (there `K = 2G`).
    pub final_statement: f64,
    /// Upper bound `2ω_{N−1}/(N²−1) κ_G(u) h_K(u)^{(N+1)/2} (1+Λ)^{(N−1)/2}`, with `Λ` the
    /// largest principal curvature at `x`. Diagnostic only.
    pub curvature_bound: f64,
    pub h_k: f64,
    pub det_gap: f64,
}

/// Evaluates the closed-form coefficients at `u = ν_G(x̄)`.
pub fn large_r_closed(g: &ConvexBody, k: &ConvexBody, x: &[f64]) -> Result<ClosedCoefficients> {
    let (_, u) = touch_point(g, k, x)?;
    closed_at(g, k, &u)
}

fn closed_at(g: &ConvexBody, k: &ConvexBody, u: &Direction) -> Result<ClosedCoefficients> {
    let n = g.dim();
    let nf = n as f64;
    let frame = TangentFrame::new(u);
    let cg = g.curvature_in_frame(u, &frame)?;
    let ck = k.curvature_in_frame(u, &frame)?;
    let gap = &cg.shape - &ck.shape;
    let gap = (&gap + gap.transpose()) * 0.5;
    let min_eig = gap.clone().symmetric_eigen().eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::Postcondition(format!(
            "S_G(u) − S_K(u) is not positive definite (smallest eigenvalue {min_eig:e})"
        )));
    }
    let det_gap = gap.determinant();
    let h_k = k.support(u);
    let omega = omega_lower(n);
    let theorem = 2.0 * omega * h_k.powf((nf + 1.0) / 2.0) / ((nf * nf - 1.0) * det_gap.sqrt());
    let final_statement =
        2.0 * 2f64.sqrt() * omega * h_k.powf((nf + 1.0) / 2.0) / ((nf + 1.0) * cg.kappa.sqrt());
    // Λ is read at x, whose outward normal is −u.
    let lambda = g.curvature(&-u)?.max_principal_curvature();
    let curvature_bound = 2.0 * omega / (nf * nf - 1.0)
        * cg.kappa
        * h_k.powf((nf + 1.0) / 2.0)
        * (1.0 + lambda).powf((nf - 1.0) / 2.0);
    Ok(ClosedCoefficients {
        theorem,
        hessian_normalized: theorem * 2f64.powf((nf - 1.0) / 2.0),
        final_statement,
        curvature_bound,
        h_k,
        det_gap,
    })
}

/// The closed Theorem-form coefficient alone.
pub fn large_r_coefficient_closed(g: &ConvexBody, k: &ConvexBody, x: &[f64]) -> Result<f64> {
    Ok(large_r_closed(g, k, x)?.theorem)
}

/// Ladder `r_k = r0 · ratio^{−k}` for the small-r regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SmallRConfig {
    pub r0: f64,
    pub ratio: f64,
    pub rungs: usize,
}

impl Default for SmallRConfig {
    fn default() -> Self {
        SmallRConfig {
            r0: 0.05,
            ratio: 2.0,
            rungs: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallRResult {
    /// Intercept of `g(r)/r^N` regressed linearly on `r`.
    pub numeric: f64,
    /// `V(K ∩ {y·(−ν_G(x)) ≥ 0})`.
    pub closed: f64,
    pub closed_stderr: f64,
    /// Slope of the same regression: an estimate of the next-order coefficient.
    pub next_order: f64,
    pub ladder: Vec<LadderPoint>,
}

/// Leading coefficient `V₀(x)` of `V(G ∩ (x + rK)) = V₀ r^N + o(r^N)`.
pub fn small_r_v0(
    g: &ConvexBody,
    k: &ConvexBody,
    x: &[f64],
    config: &SmallRConfig,
    qmc: &QmcConfig,
) -> Result<SmallRResult> {
    let n = g.dim();
    let cone = outer_normal(g, x)?;
    if !cone.is_unique() {
        return Err(Error::InvalidArgument(
            "the boundary is not differentiable at x".into(),
        ));
    }
    let inward = -&cone.normal;
    let rs: Vec<f64> = (0..config.rungs)
        .map(|k| config.r0 * config.ratio.powi(-(k as i32)))
        .collect();
    let ladder = rs
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let v: IntegrationResult = match ball_pair_intersection(g, k, x, r) {
                Some(exact) => IntegrationResult {
                    value: exact,
                    stderr: 0.0,
                    method: Method::Exact,
                    sample_count: 0,
                },
                None => intersection_volume(g, k, x, r, &rung_qmc(qmc, i))?,
            };
            Ok(LadderPoint {
                eps: r,
                value: v.value,
                stderr: v.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    validate_ladder(&ladder)?;
    // g/r^N = V₀ + V₁ r + …, weighted by the scaled errors.
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &ladder {
        let scale = p.eps.powi(n as i32);
        let y = p.value / scale;
        let sigma = (p.stderr / scale).max(1e-12 * y);
        let w = 1.0 / (sigma * sigma);
        s += w;
        sx += w * p.eps;
        sy += w * y;
        sxx += w * p.eps * p.eps;
        sxy += w * p.eps * y;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::DegenerateFit("small-r ladder does not spread".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / s;
    let cut = match as_ball(k) {
        Some((rk, ck)) if ck.iter().all(|c| *c == 0.0) => IntegrationResult {
            value: ball_volume(n, rk) / 2.0,
            stderr: 0.0,
            method: Method::Exact,
            sample_count: 0,
        },
        _ => halfspace_cut_volume(k, &inward, qmc),
    };
    Ok(SmallRResult {
        numeric: intercept,
        closed: cut.value,
        closed_stderr: cut.stderr,
        next_order: slope,
        ladder,
    })
}

/// Reference volume of G used to express deficits as fractions.
pub fn body_volume(g: &ConvexBody, qmc: &QmcConfig) -> IntegrationResult {
    match as_ball(g) {
        Some((r, _)) => IntegrationResult {
            value: ball_volume(g.dim(), r),
            stderr: 0.0,
            method: Method::Exact,
            sample_count: 0,
        },
        None => volume(g, qmc),
    }
}
