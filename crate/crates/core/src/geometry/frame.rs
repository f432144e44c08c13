use nalgebra::{DMatrix, DVector};

use super::Direction;
use crate::error::{Error, Result};

/// Orthonormal basis of the tangent hyperplane u⊥, stored as the columns of an N×(N−1) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    base: Direction,
    basis: DMatrix<f64>,
}

impl TangentFrame {
    /// Deterministic frame: in 2D `u` rotated by +90°; in 3D Gram–Schmidt against the
    /// coordinate axis least aligned with `u` (lowest index on ties).
    pub fn new(u: &Direction) -> Self {
        let v = u.as_vector();
        match u.dim() {
            2 => TangentFrame {
                base: u.clone(),
                basis: DMatrix::from_column_slice(2, 1, &[-v[1], v[0]]),
            },
            _ => {
                let mut axis = 0;
                for i in 1..3 {
                    if v[i].abs() < v[axis].abs() {
                        axis = i;
                    }
                }
                let mut reference = DVector::zeros(3);
                reference[axis] = 1.0;
                Self::with_reference(u, &reference).expect("least-aligned axis is never parallel")
            }
        }
    }

    /// 3D frame seeded by an arbitrary reference vector: e1 is the normalized projection of
    /// `reference` onto u⊥, e2 = u × e1. In 2D the reference only fixes the orientation sign.
    pub fn with_reference(u: &Direction, reference: &DVector<f64>) -> Result<Self> {
        if reference.len() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                got: reference.len(),
            });
        }
        let v = u.as_vector();
        let projected = reference - v * v.dot(reference);
        let norm = projected.norm();
        if norm < 1e-8 * reference.norm().max(1e-300) {
            return Err(Error::InvalidArgument(
                "frame reference is parallel to the base direction".into(),
            ));
        }
        let e1 = projected / norm;
        let basis = match u.dim() {
            2 => DMatrix::from_column_slice(2, 1, e1.as_slice()),
            _ => {
                let e2 = v.cross(&e1);
                let mut m = DMatrix::zeros(3, 2);
                m.set_column(0, &e1);
                m.set_column(1, &e2);
                m
            }
        };
        Ok(TangentFrame {
            base: u.clone(),
            basis,
        })
    }

    pub fn base(&self) -> &Direction {
        &self.base
    }

    /// N×(N−1) matrix whose columns are the tangent basis vectors.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    pub fn tangent_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Restricts an ambient N×N bilinear form to the frame.
    pub fn restrict(&self, ambient: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.transpose() * ambient * &self.basis
    }

    /// Rotates the base direction by `angle` towards the tangent vector `t` (unit, ⊥ base).
    pub fn tilt(&self, t: &DVector<f64>, angle: f64) -> Direction {
        let v = self.base.as_vector() * angle.cos() + t * angle.sin();
        Direction::from_unit_unchecked(v.normalize())
    }

    /// Tilts by `angle` towards the tangent direction at polar angle `heading` in the frame
    /// (in 2D only the sign of `cos heading` matters).
    pub fn tilt_towards(&self, heading: f64, angle: f64) -> Direction {
        let mut t = self.vector(0) * heading.cos();
        if self.tangent_dim() > 1 {
            t += self.vector(1) * heading.sin();
        }
        if self.tangent_dim() == 1 {
            t = self.vector(0) * heading.cos().signum();
        }
        self.tilt(&t, angle)
    }
}
