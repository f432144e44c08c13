use std::f64::consts::{PI, TAU};

use crate::geometry::Direction;

/// Surface measure of S⁰ (two points): ω₁.
pub const OMEGA_1: f64 = 2.0;
/// Surface measure of S¹: ω₂.
pub const OMEGA_2: f64 = TAU;

/// `ω_{N−1}`, the surface measure of the unit sphere of R^{N−1}.
pub fn omega_lower(dim: usize) -> f64 {
    match dim {
        2 => OMEGA_1,
        3 => OMEGA_2,
        _ => panic!("dimension {dim} not in {{2, 3}}"),
    }
}

/// Surface measure of S^{N−1} itself (2π or 4π).
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        2 => TAU,
        3 => 4.0 * PI,
        _ => panic!("dimension {dim} not in {{2, 3}}"),
    }
}

/// Nodes and positive weights on S^{N−1} whose weights sum to the sphere measure.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Uniform trapezoid rule in θ.
    pub fn circle(n: usize) -> Self {
        let w = TAU / n as f64;
        QuadratureGrid {
            dim: 2,
            nodes: (0..n).map(|i| Direction::from_angle(w * i as f64)).collect(),
            weights: vec![w; n],
        }
    }

    /// Gauss–Legendre in z = cos θ times a uniform trapezoid in the azimuth.
    pub fn sphere(n_polar: usize, n_azimuth: usize) -> Self {
        let (zs, wz) = gauss_legendre(n_polar);
        let dphi = TAU / n_azimuth as f64;
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (z, w) in zs.iter().zip(&wz) {
            let theta = z.clamp(-1.0, 1.0).acos();
            for j in 0..n_azimuth {
                // Half-step stagger between rings keeps nodes off the coordinate planes.
                let phi = dphi * (j as f64 + 0.5);
                nodes.push(Direction::from_spherical(theta, phi));
                weights.push(w * dphi);
            }
        }
        QuadratureGrid {
            dim: 3,
            nodes,
            weights,
        }
    }

    /// 4096-point circle or a 64×128 sphere grid.
    pub fn standard(dim: usize) -> Self {
        match dim {
            2 => Self::circle(4096),
            _ => Self::sphere(64, 128),
        }
    }

    /// Same rule at half the resolution, used for error estimates.
    pub fn coarse(dim: usize) -> Self {
        match dim {
            2 => Self::circle(2048),
            _ => Self::sphere(32, 64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(&Direction) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| w * f(u))
            .sum()
    }

    /// Like [`integrate`](Self::integrate) but stops at the first error.
    pub fn try_integrate<E>(&self, mut f: impl FnMut(&Direction) -> Result<f64, E>) -> Result<f64, E> {
        let mut acc = 0.0;
        for (u, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(u)?;
        }
        Ok(acc)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
