use nalgebra::DVector;

use crate::error::{Error, Result};

/// A unit vector in R^2 or R^3.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(DVector<f64>);

impl Direction {
    /// Normalizes `coords` into a direction. Rejects zero vectors and dimensions other than 2 or 3.
    pub fn new(coords: &[f64]) -> Result<Self> {
        Self::from_vector(DVector::from_column_slice(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.len() != 2 && v.len() != 3 {
            return Err(Error::InvalidDirection(format!(
                "dimension {} not in {{2, 3}}",
                v.len()
            )));
        }
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidDirection(format!("cannot normalize {:?}", v.as_slice())));
        }
        Ok(Direction(v / norm))
    }

    /// Unit vector at polar angle `theta` in the plane.
    pub fn from_angle(theta: f64) -> Self {
        Direction(DVector::from_vec(vec![theta.cos(), theta.sin()]))
    }

    /// Unit vector with polar angle `theta` from +z and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        Direction(DVector::from_vec(vec![s * phi.cos(), s * phi.sin(), theta.cos()]))
    }

    /// Wraps a vector already known to be unit length.
    pub(crate) fn from_unit_unchecked(v: DVector<f64>) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9);
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn dot(&self, v: &DVector<f64>) -> f64 {
        self.0.dot(v)
    }

    pub fn dot_slice(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Angle between two directions, accurate near zero.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let d = (&self.0 - &other.0).norm();
        let s = (&self.0 + &other.0).norm();
        2.0 * d.atan2(s)
    }

    /// Polar angle in the plane; only meaningful for N = 2.
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }
}

impl std::ops::Neg for &Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-&self.0)
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

/// `m` equidistributed directions: uniform angles in 2D, a Fibonacci lattice in 3D.
pub fn equidistributed(dim: usize, m: usize) -> Vec<Direction> {
    match dim {
        2 => (0..m)
            .map(|i| Direction::from_angle(std::f64::consts::TAU * i as f64 / m as f64))
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let z = 1.0 - (2 * i + 1) as f64 / m as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    Direction(DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z]))
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_rejects() {
        let d = Direction::new(&[3.0, 4.0]).unwrap();
        assert!((d.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!(Direction::new(&[0.0, 0.0]).is_err());
        assert!(Direction::new(&[1.0]).is_err());
        assert!(Direction::new(&[1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn equidistributed_are_unit() {
        for dim in [2, 3] {
            for d in equidistributed(dim, 100) {
                assert!((d.as_vector().norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
