//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use kdense_core::analysis::{
    boundary_samples, halfvolume_condition_check, halfvolume_holds, kdense_spread, kp1_check, krantz_parks_residuals,
    petty_check, touch_point, zoo, TOUCH_GAUGE_TOLERANCE, TOUCH_NORMAL_TOLERANCE,
};
use kdense_core::asymptotics::{fit_power_law, large_r_closed, large_r_coefficient_numeric, large_r_ladder, LadderConfig};
use kdense_core::config::Config;
use kdense_core::geometry::{equidistributed, ConvexBody};
use kdense_core::measure::{gauge, outer_normal, QmcConfig};
use kdense_core::{runner, Error};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(checks: &[(bool, String)]) -> Verdict {
    Verdict {
        pass: checks.iter().all(|(ok, _)| *ok),
        detail: checks
            .iter()
            .map(|(ok, d)| format!("{}{d}", if *ok { "" } else { "✗ " }))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn within_rel(value: f64, target: f64, tol: f64) -> bool {
    ((value - target) / target).abs() <= tol
}

fn criterion_1() -> Verdict {
    let g = ConvexBody::unit_ball(2).unwrap();
    let k = ConvexBody::ball(2.0, &[0.0, 0.0]).unwrap();
    let x = [1.0, 0.0];
    let (ladder, _) = large_r_ladder(&g, &k, &x, &LadderConfig::default(), &QmcConfig::default()).unwrap();
    let fit = fit_power_law(&ladder).unwrap();
    let closed = large_r_closed(&g, &k, &x).unwrap();
    check(&[
        ((fit.exponent - 1.5).abs() <= 0.05, format!("exponent {:.4} (1.5 ± 0.05)", fit.exponent)),
        (
            within_rel(fit.coefficient, 16.0 / 3.0, 0.02),
            format!("coefficient {:.4} vs 16/3 (2%)", fit.coefficient),
        ),
        (
            (closed.theorem - 16.0 / 3.0).abs() <= 1e-10,
            format!("closed form {:.12}", closed.theorem),
        ),
        (true, format!("Hessian-normalized constant {:.4}", closed.hessian_normalized)),
    ])
}

fn criterion_2() -> Verdict {
    let g = ConvexBody::unit_ball(3).unwrap();
    let k = ConvexBody::ball(2.0, &[0.0; 3]).unwrap();
    let x = [1.0, 0.0, 0.0];
    let (ladder, _) = large_r_ladder(&g, &k, &x, &LadderConfig::default(), &QmcConfig::default()).unwrap();
    let fit = fit_power_law(&ladder).unwrap();
    let closed = large_r_closed(&g, &k, &x).unwrap();
    let n = 3.0f64;
    let predicted_ratio = 2f64.sqrt() * (n - 1.0) / 2f64.powf((n - 1.0) / 2.0);
    let ratio = closed.final_statement / closed.theorem;
    check(&[
        ((fit.exponent - 2.0).abs() <= 0.05, format!("exponent {:.4} (2 ± 0.05)", fit.exponent)),
        (
            within_rel(fit.coefficient, 4.0 * PI, 0.02),
            format!("coefficient {:.4} vs 4π (2%)", fit.coefficient),
        ),
        ((closed.theorem - 4.0 * PI).abs() <= 1e-10, format!("closed form {:.12}", closed.theorem)),
        (
            (ratio - predicted_ratio).abs() <= 1e-10 && (ratio - 1.0).abs() > 0.1,
            format!("final-statement/theorem ratio {ratio:.6} (≠ 1)"),
        ),
    ])
}

fn criterion_3() -> Verdict {
    let g = ConvexBody::superellipse_2d(4.0).unwrap();
    let k = g.difference_body();
    match large_r_coefficient_numeric(&g, &k, &[1.0, 0.0], &LadderConfig::default(), &QmcConfig::default()) {
        Err(Error::FlatContact { fit, .. }) => check(&[(
            (fit.exponent - 1.25).abs() <= 0.05,
            format!("FlatContact, exponent {:.4} (1.25 ± 0.05)", fit.exponent),
        )]),
        other => check(&[(false, format!("expected FlatContact, got {other:?}"))]),
    }
}

fn random_ellipsoid(rng: &mut ChaCha8Rng, dim: usize) -> ConvexBody {
    let l = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let q = &l * l.transpose() + DMatrix::identity(dim, dim) * 0.1;
    let c: Vec<f64> = (0..dim).map(|_| 0.0).collect();
    ConvexBody::ellipsoid(q, &c).unwrap()
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = Vec::new();
    for dim in [2, 3] {
        let (mut kp, mut kp1, mut reordered, mut det) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..100 {
            let a = random_ellipsoid(&mut rng, dim);
            let b = random_ellipsoid(&mut rng, dim);
            for u in equidistributed(dim, 100) {
                match (krantz_parks_residuals(&a, &b, &u), kp1_check(&a, &u)) {
                    (Ok(r1), Ok(r2)) => {
                        kp = kp.max(r1.stated);
                        reordered = reordered.max(r1.reordered);
                        det = det.max(r1.determinant);
                        kp1 = kp1.max(r2);
                    }
                    (e1, e2) => checks.push((false, format!("error {e1:?} {e2:?}"))),
                }
            }
        }
        checks.push((kp < 1e-8, format!("N={dim} max Krantz–Parks residual {kp:.2e}")));
        checks.push((kp1 < 1e-8, format!("N={dim} max KP1 residual {kp1:.2e}")));
        checks.push((true, format!("N={dim} reordered {reordered:.1e}, det {det:.1e}")));
    }
    check(&checks)
}

fn criterion_5() -> Verdict {
    let e = petty_check(&ConvexBody::ellipsoid_axes(&[2.0, 1.0], &[0.0, 0.0]).unwrap(), 256);
    let s = petty_check(&ConvexBody::superellipse_2d(4.0).unwrap(), 256);
    check(&[
        (
            within_rel(e.mean, 1.0 / 16.0, 1e-6),
            format!("ellipse ratio {:.10} vs 1/16 (1/(a²b²) = {})", e.mean, 1.0 / 4.0),
        ),
        (e.relative_spread < 1e-6, format!("ellipse spread {:.2e}", e.relative_spread)),
        (s.relative_spread > 0.1, format!("superellipse spread {:.3}", s.relative_spread)),
    ])
}

fn criterion_6() -> Verdict {
    let qmc = QmcConfig::default();
    let e = ConvexBody::ellipsoid_axes(&[2.0, 1.0], &[0.0, 0.0]).unwrap();
    let ke = e.difference_body();
    let mut checks = Vec::new();
    for r in [0.1, 0.5, 0.9] {
        let rep = kdense_spread(&e, &ke, r, 64, &qmc).unwrap();
        checks.push((
            rep.is_constant(),
            format!(
                "ellipse r={r}: spread {:.2e} / budget {:.2e}",
                rep.relative_spread, rep.error_budget
            ),
        ));
    }
    let s = ConvexBody::superellipse_2d(4.0).unwrap();
    let rep = kdense_spread(&s, &s.difference_body(), 0.5, 64, &qmc).unwrap();
    checks.push((
        !rep.is_constant() && rep.relative_spread > 1e-2,
        format!("superellipse r=0.5: spread {:.3} (not constant)", rep.relative_spread),
    ));
    check(&checks)
}

fn is_origin_symmetric(k: &ConvexBody) -> bool {
    equidistributed(k.dim(), 256)
        .iter()
        .all(|u| (k.support(u) - k.support(&-u)).abs() < 1e-12)
}

fn criterion_7() -> Verdict {
    let qmc = QmcConfig::default();
    let mut checks = Vec::new();
    for entry in zoo() {
        let k = &entry.body;
        if !is_origin_symmetric(k) {
            continue;
        }
        let g = ConvexBody::unit_ball(k.dim()).unwrap();
        let rep = halfvolume_condition_check(&g, k, 64, &qmc).unwrap();
        checks.push((
            halfvolume_holds(&rep),
            format!(
                "{}: max |ratio/½ − 1| {:.1e} (budget {:.1e})",
                entry.name,
                rep.max_relative_deviation(0.5),
                rep.error_budget
            ),
        ));
    }
    let off = ConvexBody::ball(1.0, &[0.5, 0.0]).unwrap();
    let rep = halfvolume_condition_check(&ConvexBody::unit_ball(2).unwrap(), &off, 64, &qmc).unwrap();
    let dev = rep.max_relative_deviation(0.5);
    checks.push((dev > 0.01, format!("off-centre ball deviates {:.1}%", 100.0 * dev)));
    check(&checks)
}

fn criterion_8() -> Verdict {
    let mut checks = Vec::new();
    for entry in zoo().into_iter().filter(|e| e.smooth_strictly_convex) {
        let g = &entry.body;
        let k = g.difference_body();
        let mut worst = 0.0f64;
        let mut failure = None;
        for x in boundary_samples(g, 64) {
            match touch_point(g, &k, x.as_slice()) {
                Ok((xbar, u)) => {
                    let d: Vec<f64> = xbar.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                    let gap = (gauge(&k, &d) - 1.0).abs();
                    let angle = outer_normal(&k, &d).unwrap().normal.angle_to(&u);
                    worst = worst.max(gap / TOUCH_GAUGE_TOLERANCE).max(angle / TOUCH_NORMAL_TOLERANCE);
                }
                Err(e) => failure = Some(e),
            }
        }
        checks.push(match failure {
            Some(e) => (false, format!("{}: {e}", entry.name)),
            None => (worst <= 1.0, format!("{}: worst/tolerance {worst:.1e}", entry.name)),
        });
    }
    let r = ConvexBody::reuleaux_2d(1.0).unwrap();
    // The top vertex; its normal cone spans the directions within 30° of +y.
    let vertex = [0.0, 1.0 / 3f64.sqrt()];
    let k = ConvexBody::unit_ball(2).unwrap();
    let raised = matches!(touch_point(&r, &k, &vertex), Err(Error::NonUniqueContact { .. }));
    checks.push((raised, "Reuleaux vertex raises NonUniqueContact".to_string()));
    check(&checks)
}

fn criterion_9() -> Verdict {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/verify.toml");
    let base = Config::from_file(&path).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for d in &dirs {
        let mut c = base.clone();
        c.output = d.path().to_path_buf();
        let outcome = runner::run(&c, None).unwrap();
        let mut files: Vec<_> = outcome
            .files
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap()))
            .collect();
        files.sort();
        outputs.push((files, outcome.exit_code()));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    check(&[
        (a.0.len() == 6, format!("{} CSV files", a.0.len())),
        (a.1 == 0 && b.1 == 0, format!("exit codes {} and {}", a.1, b.1)),
        (a.0 == b.0, "byte-identical across runs".to_string()),
    ])
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 9] = [
        ("1 large-r disk ladder and closed form", Duration::from_secs(1), criterion_1),
        ("2 large-r ball ladder, closed form, final constant", Duration::from_secs(5), criterion_2),
        ("3 flat contact on the superellipse", Duration::from_secs(30), criterion_3),
        ("4 Krantz–Parks and KP1 on random ellipsoids", Duration::from_secs(5), criterion_4),
        ("5 Petty ratio", Duration::from_secs(1), criterion_5),
        ("6 K-density dichotomy", Duration::from_secs(600), criterion_6),
        ("7 half-volume condition", Duration::from_secs(60), criterion_7),
        ("8 touch points and the Reuleaux vertex", Duration::from_secs(10), criterion_8),
        ("9 deterministic default run", Duration::from_secs(600), criterion_9),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.2} s, limit {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", too slow" }
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
