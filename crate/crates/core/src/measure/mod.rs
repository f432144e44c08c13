//! Gauges, membership, volumes and the Monte Carlo machinery behind them.

mod gauge;
mod membership;
mod qmc;
mod quadrature;
mod volume;

pub use gauge::{gauge, maximize_on_sphere, outer_normal, NormalCone, NORMAL_CONE_TOLERANCE};
pub use membership::{Membership, MEMBERSHIP_TOLERANCE};
pub(crate) use membership::as_ball;
pub use qmc::{integrate_indicator, QmcConfig, Sobol};
pub use quadrature::{gauss_legendre, omega_lower, sphere_measure, QuadratureGrid, OMEGA_1, OMEGA_2};
pub use volume::{
    bounding_box, circumscribed_ratio, deficit_volume, halfspace_cut_volume, intersection_volume,
    volume, volume_qmc, volume_support_integral,
};

use serde::Serialize;

/// How an [`IntegrationResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Deterministic quadrature of the support integral.
    SupportIntegral,
    /// Randomly shifted Sobol points.
    Qmc,
    /// A closed-form oracle.
    Exact,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::SupportIntegral => "support_integral",
            Method::Qmc => "qmc",
            Method::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationResult {
    pub value: f64,
    /// Standard error for QMC; the difference from the half-resolution rule for quadrature.
    pub stderr: f64,
    pub method: Method,
    pub sample_count: usize,
}

/// Axis-aligned box in R^2 or R^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    dim: usize,
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Aabb {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!((1..=3).contains(&lo.len()));
        let mut a = Aabb {
            dim: lo.len(),
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        a.lo[..lo.len()].copy_from_slice(lo);
        a.hi[..hi.len()].copy_from_slice(hi);
        a
    }

    /// Smallest box containing the points.
    pub fn around<'a>(dim: usize, points: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for p in points {
            any = true;
            for d in 0..dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        any.then(|| Aabb::new(&lo[..dim], &hi[..dim]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn extent(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        for d in 0..self.dim {
            e[d] = (self.hi[d] - self.lo[d]).max(0.0);
        }
        e
    }

    pub fn volume(&self) -> f64 {
        self.extent()[..self.dim].iter().product()
    }

    /// Grows each side by `fraction` of its extent plus `absolute`.
    pub fn padded(&self, fraction: f64, absolute: f64) -> Self {
        let e = self.extent();
        let mut out = *self;
        for d in 0..self.dim {
            let pad = fraction * e[d] + absolute;
            out.lo[d] -= pad;
            out.hi[d] += pad;
        }
        out
    }

    /// Intersection; may be empty (zero volume).
    pub fn intersect(&self, other: &Aabb) -> Self {
        let mut out = *self;
        for d in 0..self.dim {
            out.lo[d] = self.lo[d].max(other.lo[d]);
            out.hi[d] = self.hi[d].min(other.hi[d]).max(out.lo[d]);
        }
        out
    }

    /// Image under `y ↦ x + r·y`.
    pub fn scaled_translated(&self, r: f64, x: &[f64]) -> Self {
        let mut out = *self;
        for d in 0..self.dim {
            out.lo[d] = x[d] + r * self.lo[d];
            out.hi[d] = x[d] + r * self.hi[d];
        }
        out
    }
}
