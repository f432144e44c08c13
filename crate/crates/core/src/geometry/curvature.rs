use nalgebra::DMatrix;

use super::{ConvexBody, Direction, TangentFrame};
use crate::error::{Error, Result, Singularity};

/// Relative threshold on `det R / h^{N−1}` below which the boundary is treated as a corner,
/// and above whose reciprocal it is treated as flat.
pub const SINGULAR_RELATIVE_DET: f64 = 1e-12;

/// Curvature of the boundary at the point with outward normal `u`, expressed in `frame`.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub frame: TangentFrame,
    /// Reverse Weingarten map: principal radii of curvature (symmetric, PSD).
    pub radii: DMatrix<f64>,
    /// Shape operator `S = R⁻¹`.
    pub shape: DMatrix<f64>,
    /// Gauss curvature `det S`.
    pub kappa: f64,
}

impl CurvatureData {
    /// Largest principal curvature (largest eigenvalue of S).
    pub fn max_principal_curvature(&self) -> f64 {
        self.shape
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ConvexBody {
    /// Reverse Weingarten map at `u` restricted to `frame`. The frame must span u⊥, so the
    /// frame of `−u` is also accepted. Never fails; entries may be infinite at flat points.
    pub fn reverse_weingarten(&self, u: &Direction, frame: &TangentFrame) -> DMatrix<f64> {
        let r = frame.restrict(&self.hessian(u));
        (&r + r.transpose()) * 0.5
    }

    pub fn curvature(&self, u: &Direction) -> Result<CurvatureData> {
        self.curvature_in_frame(u, &TangentFrame::new(u))
    }

    pub fn curvature_in_frame(&self, u: &Direction, frame: &TangentFrame) -> Result<CurvatureData> {
        let radii = self.reverse_weingarten(u, frame);
        let h = self.support(u);
        let scale = h.abs().max(f64::MIN_POSITIVE).powi(radii.nrows() as i32);
        let singular = |kind| Error::SingularCurvature {
            direction: u.to_vec(),
            kind,
        };
        if !radii.iter().all(|x| x.is_finite()) {
            return Err(singular(Singularity::Flat));
        }
        let det = radii.determinant();
        if det <= SINGULAR_RELATIVE_DET * scale {
            return Err(singular(Singularity::Corner));
        }
        if det >= scale / SINGULAR_RELATIVE_DET {
            return Err(singular(Singularity::Flat));
        }
        let shape = radii
            .clone()
            .try_inverse()
            .ok_or_else(|| singular(Singularity::Corner))?;
        let shape = (&shape + shape.transpose()) * 0.5;
        Ok(CurvatureData {
            frame: frame.clone(),
            kappa: 1.0 / det,
            radii,
            shape,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::equidistributed;
    use crate::oracles::ellipse_curvature_param;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn ball_and_sum_of_balls() {
        for dim in [2, 3] {
            let b = ConvexBody::unit_ball(dim).unwrap();
            let two = b.minkowski_sum(&b).unwrap();
            for u in equidistributed(dim, 9) {
                let c = b.curvature(&u).unwrap();
                assert!((c.radii.clone() - DMatrix::identity(dim - 1, dim - 1)).abs().max() < 1e-14);
                assert_abs_diff_eq!(c.kappa, 1.0, epsilon = 1e-14);
                let c2 = two.curvature(&u).unwrap();
                assert_abs_diff_eq!(c2.kappa, 0.5f64.powi(dim as i32 - 1), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ellipse_against_parametric_oracle() {
        let (a, b) = (2.0, 1.0);
        let e = ConvexBody::ellipsoid_axes(&[a, b], &[0.0, 0.0]).unwrap();
        let c = e.curvature(&Direction::new(&[1.0, 0.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(c.kappa, ellipse_curvature_param(a, b, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(c.kappa, 2.0, epsilon = 1e-12);
        for i in 0..100 {
            let t = std::f64::consts::TAU * i as f64 / 100.0;
            // Outward normal of (a cos t, b sin t) is ∝ (b cos t, a sin t).
            let u = Direction::new(&[b * t.cos(), a * t.sin()]).unwrap();
            let k = e.curvature(&u).unwrap().kappa;
            assert!((k - ellipse_curvature_param(a, b, t)).abs() < 1e-8 * k);
        }
    }

    #[test]
    fn shape_inverts_radii() {
        let e = ConvexBody::ellipsoid(
            DMatrix::from_row_slice(3, 3, &[3.0, 0.5, 0.1, 0.5, 2.0, 0.3, 0.1, 0.3, 1.0]),
            &[0.1, -0.2, 0.0],
        )
        .unwrap();
        for u in equidistributed(3, 31) {
            let c = e.curvature(&u).unwrap();
            assert!((&c.shape * &c.radii - DMatrix::identity(2, 2)).abs().max() < 1e-8);
            assert_abs_diff_eq!(c.kappa, c.shape.determinant(), epsilon = 1e-8);
            assert!(c.radii.clone().symmetric_eigen().eigenvalues.min() >= 0.0);
        }
    }

    #[test]
    fn frame_invariance_of_kappa() {
        let e = ConvexBody::ellipsoid_axes(&[2.0, 1.0, 0.7], &[0.0; 3]).unwrap();
        let seed = DVector::from_vec(vec![0.3, 0.9, -0.4]);
        for u in equidistributed(3, 40) {
            let k1 = e.curvature(&u).unwrap().kappa;
            let frame = TangentFrame::with_reference(&u, &seed).unwrap();
            let k2 = e.curvature_in_frame(&u, &frame).unwrap().kappa;
            assert!((k1 - k2).abs() < 1e-8 * k1.max(1.0));
        }
    }

    #[test]
    fn singular_kinds() {
        let s = ConvexBody::superellipse_2d(4.0).unwrap();
        match s.curvature(&Direction::new(&[1.0, 0.0]).unwrap()) {
            Err(Error::SingularCurvature { kind: Singularity::Flat, .. }) => {}
            other => panic!("{other:?}"),
        }
        let r = ConvexBody::reuleaux_2d(1.0).unwrap();
        match r.curvature(&Direction::new(&[0.0, 1.0]).unwrap()) {
            Err(Error::SingularCurvature { kind: Singularity::Corner, .. }) => {}
            other => panic!("{other:?}"),
        }
        let arc = r.curvature(&Direction::new(&[0.0, -1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(arc.kappa, 1.0, epsilon = 1e-12);
    }
}
