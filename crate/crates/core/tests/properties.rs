use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use kdense_core::analysis::{curvature_symmetry_check, k_equals_2g_check, kp1_check, SpreadReport};
use kdense_core::asymptotics::{fit_power_law, LadderPoint};
use kdense_core::geometry::{ConvexBody, Direction, TangentFrame};
use kdense_core::measure::{
    gauge, halfspace_cut_volume, intersection_volume, volume, volume_support_integral, QmcConfig,
};
use kdense_core::oracles::{disk_lens_area, ellipse_curvature_param, polygon_clip_area, ConvexPolygon};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn small_qmc(seed: u64) -> QmcConfig {
    QmcConfig {
        replicates: 8,
        points: 1 << 13,
        seed,
    }
}

fn direction(dim: usize) -> impl Strategy<Value = Direction> {
    if dim == 2 {
        (0.0..TAU).prop_map(Direction::from_angle).boxed()
    } else {
        (-1.0f64..1.0, 0.0..TAU)
            .prop_map(|(z, phi)| Direction::from_spherical(z.acos(), phi))
            .boxed()
    }
}

/// `L Lᵀ + 0.2 I` with L's entries in [−1, 1].
fn spd(dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |e| {
        let l = DMatrix::from_vec(dim, dim, e);
        &l * l.transpose() + DMatrix::identity(dim, dim) * 0.2
    })
}

fn ellipsoid(dim: usize) -> impl Strategy<Value = ConvexBody> {
    (spd(dim), prop::collection::vec(-0.2f64..0.2, dim)).prop_filter_map("origin must be interior", |(q, c)| {
        ConvexBody::ellipsoid(q, &c).ok()
    })
}

fn fourier() -> impl Strategy<Value = ConvexBody> {
    (
        prop::collection::vec(-0.03f64..0.03, 5),
        prop::collection::vec(-0.03f64..0.03, 5),
    )
        .prop_map(|(mut c, s)| {
            c[0] = 1.0;
            ConvexBody::fourier_2d(&c, &s).expect("small perturbations of the disk are convex")
        })
}

/// Smooth, strictly convex bodies in 2D.
fn smooth_2d() -> impl Strategy<Value = ConvexBody> {
    prop_oneof![
        ellipsoid(2),
        fourier(),
        (0.3f64..2.0).prop_map(|r| ConvexBody::ball(r, &[0.1, -0.1]).unwrap()),
    ]
}

fn dvec(s: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_algebra(a in smooth_2d(), b in smooth_2d(), u in direction(2), r in 0.2f64..3.0, t in prop::collection::vec(-0.3f64..0.3, 2)) {
        let sum = a.minkowski_sum(&b).unwrap();
        prop_assert!((sum.support(&u) - a.support(&u) - b.support(&u)).abs() < 1e-12);
        prop_assert!((a.dilate(r).unwrap().support(&u) - r * a.support(&u)).abs() < 1e-12);
        if let Ok(moved) = a.translate(&t) {
            prop_assert!((moved.support(&u) - a.support(&u) - u.dot_slice(&t)).abs() < 1e-12);
        }
        prop_assert!((a.reflect().support(&u) - a.support(&-&u)).abs() < 1e-12);
    }

    #[test]
    fn support_algebra_3d(a in ellipsoid(3), b in ellipsoid(3), u in direction(3)) {
        let sum = a.minkowski_sum(&b).unwrap();
        prop_assert!((sum.support(&u) - a.support(&u) - b.support(&u)).abs() < 1e-12);
    }

    #[test]
    fn support_extension_is_homogeneous(a in smooth_2d(), b in ellipsoid(3), u2 in direction(2), u3 in direction(3), lambda in 0.1f64..10.0) {
        for (body, u) in [(&a, &u2), (&b, &u3)] {
            let v: Vec<f64> = u.as_slice().iter().map(|x| lambda * x).collect();
            prop_assert!((body.support_extended(&v) - lambda * body.support(u)).abs() < 1e-10 * lambda.max(1.0));
        }
    }

    #[test]
    fn gauss_map_duality(a in smooth_2d(), b in ellipsoid(3), u2 in direction(2), u3 in direction(3)) {
        for (body, u) in [(&a, &u2), (&b, &u3)] {
            let x = body.boundary_point(u).unwrap();
            prop_assert!((body.support(u) - u.dot(&x)).abs() < 1e-9);
            prop_assert!((gauge(body, x.as_slice()) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn gauge_is_homogeneous(a in smooth_2d(), v in prop::collection::vec(-2.0f64..2.0, 2), lambda in 0.1f64..5.0) {
        prop_assume!(v[0].hypot(v[1]) > 1e-3);
        let scaled: Vec<f64> = v.iter().map(|x| lambda * x).collect();
        assert_relative_eq!(gauge(&a, &scaled), lambda * gauge(&a, &v), max_relative = 1e-8);
    }

    #[test]
    fn tangent_frames_are_orthonormal(u in direction(3), w in direction(2)) {
        for dir in [&u, &w] {
            let f = TangentFrame::new(dir);
            let g = TangentFrame::new(dir);
            prop_assert_eq!(f.basis(), g.basis());
            for i in 0..f.tangent_dim() {
                prop_assert!((f.vector(i).norm() - 1.0).abs() < 1e-12);
                prop_assert!(f.vector(i).dot(dir.as_vector()).abs() < 1e-12);
                for j in 0..i {
                    prop_assert!(f.vector(i).dot(&f.vector(j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn curvature_data_is_consistent(a in smooth_2d(), b in ellipsoid(3), u2 in direction(2), u3 in direction(3)) {
        for (body, u) in [(&a, &u2), (&b, &u3)] {
            let c = body.curvature(u).unwrap();
            let d = c.radii.nrows();
            prop_assert!((&c.shape * &c.radii - DMatrix::identity(d, d)).norm() < 1e-8);
            prop_assert!((c.kappa - c.shape.determinant()).abs() < 1e-8 * c.kappa.max(1.0));
            prop_assert!((c.kappa * c.radii.determinant() - 1.0).abs() < 1e-8);
            prop_assert!(c.radii.clone().symmetric_eigen().eigenvalues.min() >= 0.0);
        }
    }

    #[test]
    fn gauss_curvature_is_frame_invariant(b in ellipsoid(3), u in direction(3), seed in direction(3)) {
        let alt = TangentFrame::with_reference(&u, seed.as_vector());
        prop_assume!(alt.is_ok());
        let k1 = b.curvature(&u).unwrap().kappa;
        let k2 = b.curvature_in_frame(&u, &alt.unwrap()).unwrap().kappa;
        prop_assert!((k1 - k2).abs() < 1e-8 * k1.max(1.0));
    }

    #[test]
    fn reverse_weingarten_is_additive(a in smooth_2d(), b in smooth_2d(), c in ellipsoid(3), d in ellipsoid(3), u2 in direction(2), u3 in direction(3)) {
        for (x, y, u) in [(&a, &b, &u2), (&c, &d, &u3)] {
            let frame = TangentFrame::new(u);
            let sum = x.minkowski_sum(y).unwrap();
            let lhs = sum.reverse_weingarten(u, &frame);
            let rhs = x.reverse_weingarten(u, &frame) + y.reverse_weingarten(u, &frame);
            prop_assert!((lhs - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn difference_bodies_are_centrally_symmetric(a in smooth_2d(), b in ellipsoid(3)) {
        for body in [&a, &b] {
            let k = body.difference_body();
            for u in kdense_core::geometry::equidistributed(body.dim(), 256) {
                prop_assert!((k.support(&u) - k.support(&-&u)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_bodies_chain_their_verdicts(q in spd(2), q3 in spd(3), u in direction(2), w in direction(3)) {
        let e = ConvexBody::ellipsoid(q, &[0.0, 0.0]).unwrap();
        let e3 = ConvexBody::ellipsoid(q3, &[0.0; 3]).unwrap();
        prop_assert!(kp1_check(&e, &u).unwrap() < 1e-6);
        prop_assert!(kp1_check(&e3, &w).unwrap() < 1e-6);
        for body in [&e, &e3] {
            let sym = curvature_symmetry_check(body, 32);
            let scale = body.curvature(&u_or(body, &u, &w)).unwrap().kappa.max(1.0);
            prop_assert!(sym.max_difference < 1e-9 * scale);
            prop_assert!(k_equals_2g_check(body, 32).passes);
        }
    }

    #[test]
    fn ellipse_curvature_matches_the_parametric_oracle(a in 0.3f64..3.0, b in 0.3f64..3.0, t in 0.0..TAU) {
        let e = ConvexBody::ellipsoid_axes(&[a, b], &[0.0, 0.0]).unwrap();
        let u = Direction::new(&[b * t.cos(), a * t.sin()]).unwrap();
        let kappa = e.curvature(&u).unwrap().kappa;
        assert_relative_eq!(kappa, ellipse_curvature_param(a, b, t), max_relative = 1e-8);
    }

    #[test]
    fn spread_report_invariants(values in prop::collection::vec(prop::option::weighted(0.9, 0.1f64..10.0), 1..40)) {
        prop_assume!(values.iter().any(Option::is_some));
        let r = SpreadReport::new("q", &values, &vec![0.0; values.len()], |_| 0.1);
        prop_assert!(r.min <= r.mean * (1.0 + 1e-12) && r.mean <= r.max * (1.0 + 1e-12));
        prop_assert!(r.relative_spread >= 0.0);
        prop_assert_eq!(r.is_constant(), r.relative_spread <= r.error_budget);
        prop_assert_eq!(r.flagged.len() + r.sample_count, values.len());
    }

    #[test]
    fn power_laws_are_recovered(c in 0.1f64..10.0, p in 0.5f64..3.0) {
        let ladder: Vec<LadderPoint> = (0..8)
            .map(|k| {
                let eps = 0.1 * 0.5f64.powi(k);
                LadderPoint { eps, value: c * eps.powf(p), stderr: 0.0 }
            })
            .collect();
        let fit = fit_power_law(&ladder).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-9);
        assert_relative_eq!(fit.coefficient, c, max_relative = 1e-8);
    }
}

fn u_or(body: &ConvexBody, u2: &Direction, u3: &Direction) -> Direction {
    if body.dim() == 2 {
        u2.clone()
    } else {
        u3.clone()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn volume_scales_with_dilation(a in smooth_2d(), b in ellipsoid(3)) {
        for body in [&a, &b] {
            let v = volume_support_integral(body).unwrap().value;
            for r in [0.5, 2.0, 3.0] {
                let vr = volume_support_integral(&body.dilate(r).unwrap()).unwrap().value;
                assert_relative_eq!(vr, r.powi(body.dim() as i32) * v, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn volume_estimators_agree(a in smooth_2d(), b in ellipsoid(3), seed in any::<u64>()) {
        for body in [&a, &b] {
            let exact = volume_support_integral(body).unwrap();
            let q = kdense_core::measure::volume_qmc(body, &small_qmc(seed));
            let combined = (exact.stderr.powi(2) + q.stderr.powi(2)).sqrt();
            // 5σ keeps the false-alarm rate negligible over many cases.
            prop_assert!((exact.value - q.value).abs() <= 5.0 * combined, "{} vs {} ± {}", exact.value, q.value, combined);
        }
    }

    #[test]
    fn halfspace_cuts_are_complementary(k in smooth_2d(), u in direction(2), seed in any::<u64>()) {
        let qmc = small_qmc(seed);
        let a = halfspace_cut_volume(&k, &u, &qmc);
        let b = halfspace_cut_volume(&k, &-&u, &qmc);
        let v = volume(&k, &qmc);
        let combined = (a.stderr.powi(2) + b.stderr.powi(2) + v.stderr.powi(2)).sqrt();
        prop_assert!((a.value + b.value - v.value).abs() <= 5.0 * combined + 1e-12);
    }

    #[test]
    fn intersection_volume_is_monotone_in_r(g in smooth_2d(), u in direction(2), seed in any::<u64>()) {
        let k = g.difference_body();
        let x = g.boundary_point(&u).unwrap();
        let qmc = small_qmc(seed);
        let mut prev: Option<(f64, f64)> = None;
        for i in 1..=10 {
            let r = 0.1 * i as f64;
            let v = intersection_volume(&g, &k, x.as_slice(), r, &qmc).unwrap();
            if let Some((pv, ps)) = prev {
                prop_assert!(v.value >= pv - 3.0 * (v.stderr + ps));
            }
            prev = Some((v.value, v.stderr));
        }
    }

    #[test]
    fn lens_oracle_matches_qmc(r1 in 0.3f64..1.5, r2 in 0.3f64..1.5, t in 0.0f64..1.0, seed in any::<u64>()) {
        let d = (r1 - r2).abs() + t * (r1 + r2 - (r1 - r2).abs());
        let g = ConvexBody::ball(r1, &[0.0, 0.0]).unwrap();
        let k = ConvexBody::unit_ball(2).unwrap();
        let v = intersection_volume(&g, &k, &[d, 0.0], r2, &small_qmc(seed)).unwrap();
        let exact = disk_lens_area(r1, r2, d);
        prop_assert!((v.value - exact).abs() <= 5.0 * v.stderr + 1e-12, "{} vs {} ± {}", v.value, exact, v.stderr);
    }

    #[test]
    fn polygon_lens_matches_the_disk_oracle(r1 in 0.3f64..1.5, r2 in 0.3f64..1.5, t in 0.05f64..0.95) {
        let d = (r1 - r2).abs() + t * (r1 + r2 - (r1 - r2).abs());
        let p = ConvexPolygon::regular([0.0, 0.0], r1, 10_000);
        let q = ConvexPolygon::regular([d, 0.0], r2, 10_000);
        assert_relative_eq!(polygon_clip_area(&p, &q), disk_lens_area(r1, r2, d), max_relative = 1e-5);
    }

    #[test]
    fn intersection_volume_is_affine_equivariant(q in spd(2), l in prop::collection::vec(-1.0f64..1.0, 4), t in 0.0..TAU, r in 0.2f64..0.9) {
        let lm = DMatrix::from_vec(2, 2, l) + DMatrix::identity(2, 2);
        let det = lm.determinant();
        prop_assume!(det.abs() > 0.2);
        let g = ConvexBody::ellipsoid(q.clone(), &[0.0, 0.0]).unwrap();
        let lg = ConvexBody::ellipsoid(&lm * &q * lm.transpose(), &[0.0, 0.0]).unwrap();
        let (k, lk) = (g.difference_body(), lg.difference_body());
        let u = Direction::from_angle(t);
        let x = g.boundary_point(&u).unwrap();
        let lx = &lm * &x;
        let qmc = small_qmc(11);
        let a = intersection_volume(&g, &k, x.as_slice(), r, &qmc).unwrap();
        let b = intersection_volume(&lg, &lk, lx.as_slice(), r, &qmc).unwrap();
        let combined = ((det.abs() * a.stderr).powi(2) + b.stderr.powi(2)).sqrt();
        prop_assert!((b.value - det.abs() * a.value).abs() <= 5.0 * combined, "{} vs {}", b.value, det.abs() * a.value);
    }
}

#[test]
fn reuleaux_volume_matches_the_polygon_oracle() {
    let r = ConvexBody::reuleaux_2d(1.0).unwrap();
    let exact = (PI - 3f64.sqrt()) / 2.0;
    assert_relative_eq!(ConvexPolygon::reuleaux(1.0, 10_000).area(), exact, max_relative = 1e-6);
    let v = volume(&r, &QmcConfig::default());
    assert!((v.value - exact).abs() < 4.0 * v.stderr + 1e-6, "{v:?}");
}

#[test]
fn ellipsoid_closed_form_support() {
    let e = ConvexBody::ellipsoid(DMatrix::from_diagonal(&dvec(&[4.0, 1.0])), &[0.0, 0.0]).unwrap();
    let u = Direction::new(&[1.0, 0.0]).unwrap();
    assert_eq!(e.support(&u), 2.0);
    assert_eq!(e.boundary_point(&u).unwrap(), dvec(&[2.0, 0.0]));
    assert!((gauge(&e, &[2.0, 0.0]) - 1.0).abs() < 1e-12);
}
