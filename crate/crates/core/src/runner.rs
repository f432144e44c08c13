//! Executes a [`Config`] and writes its CSV tables, plot data and summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{
    boundary_samples, curvature_symmetry_check, halfvolume_condition_check, halfvolume_holds, k_equals_2g_check,
    kdense_spread, kp1_check, krantz_parks_check, petty_check, petty_samples, touch_point, PETTY_BUDGET,
    TOUCH_GAUGE_TOLERANCE, TOUCH_NORMAL_TOLERANCE,
};
use crate::asymptotics::{fit_power_law, fit_power_law_corrected, large_r_closed, large_r_ladder, LadderConfig};
use crate::config::{Check, Config, Experiment, ExperimentKind, KSpec};
use crate::error::Error;
use crate::geometry::{equidistributed, ConvexBody, Direction};
use crate::measure::{gauge, outer_normal, QmcConfig};

pub const KDENSE_HEADER: &str = "body,r,u_index,volume,stderr";
pub const ASYMPTOTIC_HEADER: &str = "body,x_index,eps,deficit,stderr,fit_exponent,fit_coeff,closed_coeff";
pub const PETTY_HEADER: &str = "body,u_index,kappa,h,ratio";
pub const IDENTITIES_HEADER: &str = "check,body,u_index,residual,verdict";
pub const SUMMARY_HEADER: &str = "experiment,identity,body,verdict,measured,budget";

/// Tolerance on the fitted exponent around `(N+1)/2`.
pub const EXPONENT_TOLERANCE: f64 = 0.05;
/// Relative tolerance on the fitted coefficient.
pub const COEFFICIENT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub identity: String,
    pub body: String,
    pub verdict: String,
    pub measured: f64,
    pub budget: f64,
}

/// An error raised while running an experiment.
#[derive(Debug, Clone)]
pub struct Incident {
    pub experiment: String,
    pub body: String,
    pub error: Error,
    pub expected: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<SummaryRow>,
    pub incidents: Vec<Incident>,
}

impl Outcome {
    pub fn unexpected(&self) -> impl Iterator<Item = &Incident> {
        self.incidents.iter().filter(|i| !i.expected)
    }

    /// 2 if any incident was not declared in `expect`, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.unexpected().next().is_some() {
            2
        } else {
            0
        }
    }
}

/// Restricts a run to one experiment kind (`None` runs everything, including reports).
pub type KindFilter<'a> = Option<&'a str>;

pub fn run(config: &Config, filter: KindFilter) -> std::io::Result<Outcome> {
    let bodies = config
        .build_bodies()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    std::fs::create_dir_all(&config.output)?;
    let mut out = Outcome::default();
    for exp in &config.experiments {
        let kind = exp.kind.name();
        match filter {
            Some(f) if f != kind => continue,
            _ => {}
        }
        let mut ctx = Ctx {
            exp,
            qmc: experiment_qmc(&config.qmc, &exp.name),
            out: &mut out,
            dir: &config.output,
        };
        let pairs: Vec<(&str, &ConvexBody, ConvexBody)> = exp
            .bodies
            .iter()
            .zip(&exp.k)
            .map(|(name, k)| {
                let g = &bodies[name];
                let k = match k {
                    KSpec::Difference => g.difference_body(),
                    KSpec::Body(n) => bodies[n].clone(),
                };
                (name.as_str(), g, k)
            })
            .collect();
        match &exp.kind {
            ExperimentKind::Kdense { r, points } => ctx.kdense(&pairs, r, *points)?,
            ExperimentKind::Asymptotic { ladder, boundary_points } => ctx.asymptotic(&pairs, ladder, *boundary_points)?,
            ExperimentKind::Petty { directions } => ctx.petty(&pairs, *directions)?,
            ExperimentKind::Identities {
                checks,
                directions,
                tolerance,
            } => ctx.identities(&pairs, checks, *directions, *tolerance)?,
            ExperimentKind::Report => ctx.report()?,
        }
    }
    Ok(out)
}

/// Each experiment draws its shifts from its own stream, so adding one leaves the others unchanged.
fn experiment_qmc(base: &QmcConfig, name: &str) -> QmcConfig {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    QmcConfig {
        seed: base.seed ^ h,
        ..*base
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

struct Ctx<'a> {
    exp: &'a Experiment,
    qmc: QmcConfig,
    out: &'a mut Outcome,
    dir: &'a Path,
}

impl Ctx<'_> {
    fn write(&mut self, file: &str, contents: &str) -> std::io::Result<()> {
        let path = self.dir.join(file);
        std::fs::write(&path, contents)?;
        self.out.files.push(path);
        Ok(())
    }

    fn summary(&mut self, identity: &str, body: &str, verdict: &str, measured: f64, budget: f64) {
        self.out.summary.push(SummaryRow {
            experiment: self.exp.name.clone(),
            identity: identity.to_string(),
            body: body.to_string(),
            verdict: verdict.to_string(),
            measured,
            budget,
        });
    }

    /// Records an error; returns its summary verdict.
    fn incident(&mut self, body: &str, identity: &str, error: Error) -> String {
        let expected = self.exp.expect.iter().any(|e| e == error.code());
        let v = if expected {
            format!("expected_{}", error.code())
        } else {
            format!("error_{}", error.code())
        };
        self.summary(identity, body, &v, f64::NAN, f64::NAN);
        self.out.incidents.push(Incident {
            experiment: self.exp.name.clone(),
            body: body.to_string(),
            error,
            expected,
        });
        v
    }

    fn kdense(&mut self, pairs: &[(&str, &ConvexBody, ConvexBody)], radii: &[f64], points: usize) -> std::io::Result<()> {
        let mut csv = format!("{KDENSE_HEADER}\n");
        for (name, g, k) in pairs {
            for &r in radii {
                match kdense_spread(g, k, r, points, &self.qmc) {
                    Ok(rep) => {
                        for (i, (v, s)) in rep.values.iter().zip(&rep.stderrs).enumerate() {
                            writeln!(csv, "{name},{r},{i},{v},{s}").unwrap();
                        }
                        let id = format!("kdense_r{r}");
                        self.summary(&id, name, verdict(rep.is_constant()), rep.relative_spread, rep.error_budget);
                    }
                    Err(e) => {
                        self.incident(name, &format!("kdense_r{r}"), e);
                    }
                }
            }
        }
        let file = format!("{}.csv", self.exp.name);
        self.write(&file, &csv)
    }

    fn asymptotic(
        &mut self,
        pairs: &[(&str, &ConvexBody, ConvexBody)],
        ladder: &LadderConfig,
        boundary_points: Option<usize>,
    ) -> std::io::Result<()> {
        let mut csv = format!("{ASYMPTOTIC_HEADER}\n");
        for (name, g, k) in pairs {
            let n = g.dim();
            let xs = match boundary_points {
                Some(m) => boundary_samples(g, m),
                None => {
                    let mut e1 = vec![0.0; n];
                    e1[0] = 1.0;
                    boundary_samples_along(g, &[Direction::new(&e1).expect("unit axis")])
                }
            };
            for (xi, x) in xs.iter().enumerate() {
                let x = x.as_slice();
                let ladder_points = match large_r_ladder(g, k, x, ladder, &self.qmc) {
                    Ok((p, _)) => p,
                    Err(e) => {
                        self.incident(name, "large_r", e);
                        continue;
                    }
                };
                let closed = match large_r_closed(g, k, x) {
                    Ok(c) => Some(c),
                    Err(Error::SingularCurvature { .. }) => None,
                    Err(e) => {
                        self.incident(name, "large_r_closed", e);
                        None
                    }
                };
                let fit = fit_power_law(&ladder_points);
                let (exponent, coeff) = fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.exponent, f.coefficient));
                let closed_coeff = closed.as_ref().map_or(f64::NAN, |c| c.theorem);
                let mut dat = String::from("# eps deficit\n");
                for p in &ladder_points {
                    writeln!(
                        csv,
                        "{name},{xi},{},{},{},{exponent},{coeff},{closed_coeff}",
                        p.eps, p.value, p.stderr
                    )
                    .unwrap();
                    writeln!(dat, "{} {}", p.eps, p.value).unwrap();
                }
                let dat_file = format!("{}_{name}_x{xi}.dat", self.exp.name);
                self.write(&dat_file, &dat)?;

                let fit = match fit {
                    Ok(f) => f,
                    Err(e) => {
                        self.incident(name, "large_r_fit", e);
                        continue;
                    }
                };
                let target = (n as f64 + 1.0) / 2.0;
                if fit.exponent < target - 0.1 {
                    self.incident(
                        name,
                        "large_r_exponent",
                        Error::FlatContact {
                            threshold: target - 0.1,
                            fit: Box::new(fit.clone()),
                        },
                    );
                }
                let exp_ok = (fit.exponent - target).abs() <= EXPONENT_TOLERANCE;
                self.summary("large_r_exponent", name, verdict(exp_ok), fit.exponent, EXPONENT_TOLERANCE);
                if let Some(c) = closed {
                    for (id, value) in [
                        ("large_r_coefficient_theorem", c.theorem),
                        ("large_r_coefficient_hessian", c.hessian_normalized),
                        ("large_r_coefficient_final_statement", c.final_statement),
                    ] {
                        let rel = fit.coefficient / value - 1.0;
                        let ok = exp_ok && rel.abs() <= COEFFICIENT_TOLERANCE;
                        self.summary(id, name, verdict(ok), rel, COEFFICIENT_TOLERANCE);
                    }
                    // Diagnostic: the three-parameter fit removes the leading O(ε) correction.
                    if let Ok(cf) = fit_power_law_corrected(&ladder_points) {
                        let rel = cf.coefficient / c.hessian_normalized - 1.0;
                        let ok = (cf.exponent - target).abs() <= EXPONENT_TOLERANCE && rel.abs() <= COEFFICIENT_TOLERANCE;
                        self.summary("large_r_coefficient_hessian_corrected_fit", name, verdict(ok), rel, COEFFICIENT_TOLERANCE);
                    }
                }
            }
        }
        let file = format!("{}.csv", self.exp.name);
        self.write(&file, &csv)
    }

    fn petty(&mut self, pairs: &[(&str, &ConvexBody, ConvexBody)], m: usize) -> std::io::Result<()> {
        let mut csv = format!("{PETTY_HEADER}\n");
        for (name, g, _) in pairs {
            for (i, s) in petty_samples(g, m).iter().enumerate() {
                let (kappa, h, ratio) = s.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
                writeln!(csv, "{name},{i},{kappa},{h},{ratio}").unwrap();
            }
            let rep = petty_check(g, m);
            self.summary("petty", name, verdict(rep.is_constant()), rep.relative_spread, PETTY_BUDGET);
        }
        let file = format!("{}.csv", self.exp.name);
        self.write(&file, &csv)
    }

    fn identities(
        &mut self,
        pairs: &[(&str, &ConvexBody, ConvexBody)],
        checks: &[Check],
        m: usize,
        tol: f64,
    ) -> std::io::Result<()> {
        let mut csv = format!("{IDENTITIES_HEADER}\n");
        for (name, g, k) in pairs {
            let dirs = equidistributed(g.dim(), m);
            for &check in checks {
                let c = check.name();
                let mut rows: Vec<(f64, &'static str)> = Vec::with_capacity(m);
                let mut note = None;
                match check {
                    Check::Kp1 | Check::KrantzParks => {
                        let ball = ConvexBody::unit_ball(g.dim()).expect("dimension already validated");
                        for u in &dirs {
                            let r = if check == Check::Kp1 {
                                kp1_check(g, u)
                            } else {
                                krantz_parks_check(g, &ball, u)
                            };
                            rows.push(match r {
                                Ok(res) => (res, verdict(res < tol)),
                                Err(Error::SingularCurvature { .. }) => (f64::NAN, "singular"),
                                Err(Error::Postcondition(_)) => (f64::NAN, "fail"),
                                Err(e) => {
                                    note.get_or_insert(e);
                                    (f64::NAN, "error")
                                }
                            });
                        }
                    }
                    Check::CurvatureSymmetry => {
                        let rep = curvature_symmetry_check(g, m);
                        for d in rep.differences {
                            rows.push(if d.is_nan() { (d, "singular") } else { (d, verdict(d < tol)) });
                        }
                    }
                    Check::KEquals2G => {
                        let rep = k_equals_2g_check(g, m);
                        for (res, ratio) in rep.residuals.iter().zip(&rep.ratio.values) {
                            rows.push((*res, verdict((ratio - 1.0).abs() <= crate::analysis::K2G_TOLERANCE)));
                        }
                        self.summary(c, name, verdict(rep.passes), rep.max_residual, crate::analysis::K2G_TOLERANCE);
                    }
                    Check::Halfvolume => match halfvolume_condition_check(g, k, m, &self.qmc) {
                        Ok(rep) => {
                            let budget = rep.error_budget * 0.5;
                            for v in &rep.values {
                                let res = (v - 0.5).abs();
                                rows.push((res, verdict(res <= budget)));
                            }
                            self.summary(
                                c,
                                name,
                                verdict(halfvolume_holds(&rep)),
                                rep.max_relative_deviation(0.5),
                                rep.error_budget,
                            );
                        }
                        Err(e) => note = Some(e),
                    },
                    Check::TouchPoint => {
                        for x in boundary_samples(g, m) {
                            rows.push(match touch_residual(g, k, x.as_slice()) {
                                Ok(res) => (res, verdict(res <= TOUCH_GAUGE_TOLERANCE.max(TOUCH_NORMAL_TOLERANCE))),
                                Err(e) => {
                                    let v = if e.code() == "non_unique_contact" { "non_unique_contact" } else { "error" };
                                    note.get_or_insert(e);
                                    (f64::NAN, v)
                                }
                            });
                        }
                    }
                }
                for (i, (res, v)) in rows.iter().enumerate() {
                    writeln!(csv, "{c},{name},{i},{res},{v}").unwrap();
                }
                if let Some(e) = note {
                    self.incident(name, c, e);
                } else if !matches!(check, Check::KEquals2G | Check::Halfvolume) {
                    let kept: Vec<&(f64, &str)> = rows.iter().filter(|(_, v)| *v != "singular").collect();
                    let max = kept.iter().map(|(r, _)| *r).filter(|r| !r.is_nan()).fold(0.0, f64::max);
                    let budget = if check == Check::TouchPoint { TOUCH_GAUGE_TOLERANCE } else { tol };
                    if kept.is_empty() {
                        self.summary(c, name, "singular", f64::NAN, budget);
                    } else {
                        let pass = kept.iter().all(|(_, v)| *v == "pass");
                        self.summary(c, name, verdict(pass), max, budget);
                    }
                }
            }
        }
        let file = format!("{}.csv", self.exp.name);
        self.write(&file, &csv)
    }

    fn report(&mut self) -> std::io::Result<()> {
        let mut csv = format!("{SUMMARY_HEADER}\n");
        for r in &self.out.summary {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.experiment, r.identity, r.body, r.verdict, r.measured, r.budget
            )
            .unwrap();
        }
        let file = format!("{}.csv", self.exp.name);
        self.write(&file, &csv)
    }
}

fn boundary_samples_along(g: &ConvexBody, normals: &[Direction]) -> Vec<nalgebra::DVector<f64>> {
    normals.iter().map(|u| g.support_point_any(u.as_slice())).collect()
}

/// Largest of `|gauge_K(x̄ − x) − 1|` and the normal misalignment at the touch point of `x`.
fn touch_residual(g: &ConvexBody, k: &ConvexBody, x: &[f64]) -> crate::Result<f64> {
    let (xbar, u) = touch_point(g, k, x)?;
    let d: Vec<f64> = xbar.iter().zip(x).map(|(a, b)| a - b).collect();
    let gauge_gap = (gauge(k, &d) - 1.0).abs();
    let angle = outer_normal(k, &d)?.normal.angle_to(&u);
    Ok(gauge_gap.max(angle))
}

/// Verdict keyed by `(experiment, identity, body)`.
pub fn verdicts(outcome: &Outcome) -> BTreeMap<(String, String, String), String> {
    outcome
        .summary
        .iter()
        .map(|r| ((r.experiment.clone(), r.identity.clone(), r.body.clone()), r.verdict.clone()))
        .collect()
}
