//! Verification suites run against catalog scenarios.

use std::fmt;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::catalog::{find_scenario, LinearWitness, Scenario, W1pExpectation};
use super::config::{LabConfig, SobolevSection};
use super::report::{fmt_f64, row, Assertion, ExperimentReport, Table};
use crate::derivatives::{
    composition_check, locality_check, metric_directional_derivative, norm_quotient_probe,
    signed_difference_quotient, truncated_weak_weak_star_derivative, DomainBox, MapOracle,
    StepSchedule, TargetMap,
};
use crate::error::{Error, Result};
use crate::fan::{fibonacci_sphere, standard_fan};
use crate::gauge::{build_kuratowski_gauge, gauge_quality_audit, GaugeSequence};
use crate::linear_target::{dual_gradient, md_from_dual, weak_star_residual, DualTestSet};
use crate::seminorm::{
    first_order_residual, fit_metric_differential, seminorm_axiom_check, FittedSeminorm, Seminorm,
    STANDARD_SCALARS,
};
use crate::sobolev::{
    maximal_function, radial_truncation_raw, reshetnyak_gradient_check, restrict_with_maximal,
    w1p_differentiability_check, w1p_norm, Grid, GridFunction,
};
use crate::spaces::{MetricSpace, Point, SpaceKind};

/// Defect allowed for exact floating-point identities.
pub const EXACT_TOL: f64 = 1e-10;
/// Seminorm axiom defects.
pub const AXIOM_TOL: f64 = 1e-12;
/// Slack of the truncated norm over the metric derivative.
pub const NORM_IDENTITY_SLACK: f64 = 1e-6;
/// Slack of the deficit monotonicity in `K`.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Gap between dual recovery and the fitted seminorm.
pub const DUAL_FIT_TOL: f64 = 1e-3;
/// Pairing identity under identity and scaling compositions.
pub const PAIRING_IDENTITY_TOL: f64 = 1e-9;
/// Radii over which nonlinear residuals must decrease.
pub const TREND_TAIL: usize = 4;
/// Random pairs for the truncation audit.
pub const TRUNCATION_PAIRS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    MdConsistency,
    SeminormAxioms,
    NormIdentity,
    FirstOrder,
    MetricVsLinear,
    GaugeAudit,
    Composition,
    Locality,
    SobolevReport,
    W1pCheck,
    DualRecovery,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::MdConsistency,
        Suite::SeminormAxioms,
        Suite::NormIdentity,
        Suite::FirstOrder,
        Suite::MetricVsLinear,
        Suite::GaugeAudit,
        Suite::Composition,
        Suite::Locality,
        Suite::SobolevReport,
        Suite::W1pCheck,
        Suite::DualRecovery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MdConsistency => "md-consistency",
            Suite::SeminormAxioms => "seminorm-axioms",
            Suite::NormIdentity => "norm-identity",
            Suite::FirstOrder => "first-order",
            Suite::MetricVsLinear => "metric-vs-linear",
            Suite::GaugeAudit => "gauge-audit",
            Suite::Composition => "composition",
            Suite::Locality => "locality",
            Suite::SobolevReport => "sobolev-report",
            Suite::W1pCheck => "w1p-check",
            Suite::DualRecovery => "dual-recovery",
        }
    }

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown suite '{name}'; available: {}", names.join(", ")))
            })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolved per-run knobs; scenario defaults apply where the config is silent.
#[derive(Clone, Debug)]
pub struct SuiteSettings {
    pub k: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub halvings: Option<usize>,
    pub ring_radius: Option<f64>,
    pub points: Option<Vec<Vec<f64>>>,
    pub sobolev: SobolevSection,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self::from_config(&LabConfig::default())
    }
}

impl SuiteSettings {
    pub fn from_config(c: &LabConfig) -> Self {
        SuiteSettings {
            k: c.gauge.k,
            seed: c.gauge.seed,
            tol: c.schedules.tol,
            halvings: c.schedules.halvings,
            ring_radius: c.gauge.ring_radius,
            points: c.scenario.points.clone(),
            sobolev: c.sobolev.clone(),
        }
    }
}

/// A scenario with settings applied.
struct Ctx<'a> {
    s: &'a Scenario,
    f: &'a MapOracle,
    k: usize,
    seed: u64,
    tol: f64,
    halvings: usize,
    ring_radius: f64,
    points: Vec<Vec<f64>>,
    sobolev: &'a SobolevSection,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a Scenario, settings: &'a SuiteSettings) -> Result<Self> {
        let points = settings.points.clone().unwrap_or_else(|| s.points.clone());
        let n = s.map.domain().dim();
        for x in &points {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: x.len(),
                });
            }
            if s.map.domain().clearance(x) <= 0.0 {
                return Err(Error::Config(format!("point {x:?} is not interior to the domain")));
            }
        }
        Ok(Ctx {
            s,
            f: &s.map,
            k: settings.k,
            seed: settings.seed,
            tol: settings.tol.unwrap_or(s.tolerance),
            halvings: settings.halvings.unwrap_or(s.halvings),
            ring_radius: settings.ring_radius.unwrap_or(s.ring_radius),
            points,
            sobolev: &settings.sobolev,
        })
    }

    fn dim(&self) -> usize {
        self.f.domain().dim()
    }

    fn fan(&self) -> Vec<Vec<f64>> {
        standard_fan(self.dim())
    }

    fn schedule(&self, x: &[f64]) -> Result<StepSchedule> {
        StepSchedule::for_point(self.f.domain(), x, 1.0, self.halvings)
    }

    /// Steps for gauge pairings: the first step stays well inside the ring
    /// so every Kuratowski functional is smooth along it.
    fn gauge_schedule(&self, x: &[f64]) -> Result<StepSchedule> {
        let r = self.ring_radius.min(0.5 * self.f.domain().clearance(x));
        StepSchedule::geometric(r / 16.0, self.halvings)
    }

    fn gauge(&self, map: &MapOracle, x: &[f64]) -> Result<GaugeSequence> {
        ring_gauge(map, x, self.ring_radius, self.k)
    }

    fn fit(&self, x: &[f64]) -> Result<FittedSeminorm> {
        fit_metric_differential(self.f, &self.gauge(self.f, x)?, x, &self.gauge_schedule(x)?, self.tol)
    }

    fn report(&self, suite: Suite) -> ExperimentReport {
        let mut r = ExperimentReport::new(&self.s.name, suite.name());
        r.param("scenario", self.s.info());
        r.param("k", self.k);
        r.param("seed", self.seed);
        r.param("tol", self.tol);
        r.param("halvings", self.halvings);
        r.param("ring_radius", self.ring_radius);
        r.param("points", &self.points);
        r
    }

    fn header(&self, lead: &[&str], coords: &[&str], tail: &[&str]) -> Vec<String> {
        let mut h: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
        for c in coords {
            for j in 1..=self.dim() {
                h.push(format!("{c}{j}"));
            }
        }
        h.extend(tail.iter().map(|s| s.to_string()));
        h
    }
}

fn table_with(name: &str, header: Vec<String>) -> Table {
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    Table::new(name, &cols)
}

/// Gauge anchored at the images of a ring of domain points around `x`.
pub fn ring_gauge(map: &MapOracle, x: &[f64], radius: f64, k: usize) -> Result<GaugeSequence> {
    let r = radius.min(0.5 * map.domain().clearance(x));
    build_kuratowski_gauge(map.target(), &map.ring_image(x, r, k)?)
}

/// The seminorm of the fitted rows whose partials all converged.
pub fn converged_seminorm(fit: &FittedSeminorm) -> Option<Seminorm> {
    let forms: Vec<Vec<f64>> = fit
        .seminorm
        .forms()
        .iter()
        .enumerate()
        .filter(|(i, _)| !fit.nonconverged_rows.contains(i))
        .map(|(_, row)| row.clone())
        .collect();
    if forms.is_empty() {
        None
    } else {
        Seminorm::new(forms, fit.seminorm.origin().to_vec()).ok()
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Doubling `K` schedule `4, 8, ...` capped at `k`.
fn k_schedule(k: usize, start: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = start.min(k);
    while m < k {
        out.push(m);
        m *= 2;
    }
    out.push(k);
    out
}

pub fn run_suite(s: &Scenario, suite: Suite, settings: &SuiteSettings) -> Result<ExperimentReport> {
    let ctx = Ctx::new(s, settings)?;
    match suite {
        Suite::MdConsistency => md_consistency(&ctx),
        Suite::SeminormAxioms => seminorm_axioms(&ctx),
        Suite::NormIdentity => norm_identity(&ctx),
        Suite::FirstOrder => first_order(&ctx),
        Suite::MetricVsLinear => metric_vs_linear(&ctx),
        Suite::GaugeAudit => gauge_audit(&ctx),
        Suite::Composition => composition(&ctx),
        Suite::Locality => locality(&ctx),
        Suite::SobolevReport => sobolev_report(&ctx),
        Suite::W1pCheck => w1p_check(&ctx),
        Suite::DualRecovery => dual_recovery(&ctx),
    }
}

fn md_consistency(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::MdConsistency);
    let fan = ctx.fan();
    let mut t = table_with(
        "fan",
        ctx.header(&["point"], &["x", "nu"], &["sigma_fit", "metric_derivative", "md_converged", "analytic_md"]),
    );
    let mut gap_analytic = 0.0_f64;
    let mut gap_md = 0.0_f64;
    let mut evaluated = 0;
    for (pi, x) in ctx.points.iter().enumerate() {
        let fit = ctx.fit(x)?;
        let Some(sigma) = converged_seminorm(&fit) else {
            r.note(format!("point {pi}: no fitted row converged; excluded"));
            continue;
        };
        evaluated += 1;
        let schedule = ctx.schedule(x)?;
        let rows = fan
            .par_iter()
            .map(|nu| Ok((nu, metric_directional_derivative(ctx.f, x, nu, &schedule, ctx.tol)?)))
            .collect::<Result<Vec<_>>>()?;
        for (nu, md) in rows {
            let sv = sigma.eval(nu);
            let analytic = ctx.s.analytic_md.as_ref().map(|a| a.eval(x, nu));
            if let Some(a) = analytic {
                gap_analytic = gap_analytic.max((sv - a).abs());
            }
            if md.converged {
                gap_md = gap_md.max((sv - md.value).abs());
            }
            t.push(row(&concat(&[
                &[pi as f64],
                x,
                nu,
                &[sv, md.value, flag(md.converged), analytic.unwrap_or(f64::NAN)],
            ])));
        }
    }
    r.table(t);
    r.assert(Assertion::at_least("evaluated_points", evaluated as f64, 1.0));
    if ctx.s.analytic_md.is_some() {
        r.assert(Assertion::at_most("max_gap_vs_analytic", gap_analytic, ctx.s.consistency_tolerance));
    }
    r.assert(Assertion::at_most("max_gap_vs_metric_derivative", gap_md, ctx.s.consistency_tolerance));
    Ok(r)
}

fn seminorm_axioms(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::SeminormAxioms);
    r.param("scalars", STANDARD_SCALARS);
    let fan = ctx.fan();
    let mut t = table_with(
        "defects",
        ctx.header(&["point"], &["x"], &["rows", "homogeneity", "subadditivity", "min_value", "kind"]),
    );
    let (mut hom, mut sub, mut min) = (0.0_f64, 0.0_f64, f64::INFINITY);
    for (pi, x) in ctx.points.iter().enumerate() {
        let fit = ctx.fit(x)?;
        let sigma = &fit.seminorm;
        let d = seminorm_axiom_check(|nu| sigma.eval(nu), &fan, &STANDARD_SCALARS);
        hom = hom.max(d.homogeneity);
        sub = sub.max(d.subadditivity);
        min = min.min(d.min_value);
        t.push(row(&concat(&[
            &[pi as f64],
            x,
            &[sigma.forms().len() as f64, d.homogeneity, d.subadditivity, d.min_value, 0.0],
        ])));
        if let Some(md) = &ctx.s.analytic_md {
            let d = seminorm_axiom_check(md.at(x), &fan, &STANDARD_SCALARS);
            hom = hom.max(d.homogeneity);
            sub = sub.max(d.subadditivity);
            min = min.min(d.min_value);
            t.push(row(&concat(&[
                &[pi as f64],
                x,
                &[0.0, d.homogeneity, d.subadditivity, d.min_value, 1.0],
            ])));
        }
    }
    r.note("kind 0 = fitted seminorm, kind 1 = analytic metric differential");
    r.table(t);
    r.assert(Assertion::at_least("fitted_points", ctx.points.len() as f64, 1.0));
    r.assert(Assertion::at_most("max_homogeneity_defect", hom, AXIOM_TOL));
    r.assert(Assertion::at_most("max_subadditivity_defect", sub, AXIOM_TOL));
    r.assert(Assertion::at_least("min_value", min, 0.0));
    Ok(r)
}

fn norm_identity(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::NormIdentity);
    let ks = k_schedule(ctx.k, 4);
    r.param("k_schedule", &ks);
    let fan = ctx.fan();
    let mut t = table_with(
        "deficits",
        ctx.header(
            &["point", "direction"],
            &[],
            &["k", "truncated_norm", "metric_derivative", "deficit", "md_converged"],
        ),
    );
    let mut excess = f64::NEG_INFINITY;
    let mut increase = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for (pi, x) in ctx.points.iter().enumerate() {
        let gauge = ctx.gauge(ctx.f, x)?;
        let schedule = ctx.schedule(x)?;
        let pairing_steps = ctx.gauge_schedule(x)?;
        let rows = fan
            .par_iter()
            .map(|nu| {
                let md = metric_directional_derivative(ctx.f, x, nu, &schedule, ctx.tol)?;
                let w = truncated_weak_weak_star_derivative(ctx.f, &gauge, x, nu, &pairing_steps, ctx.tol)?;
                Ok((md, w))
            })
            .collect::<Result<Vec<_>>>()?;
        for (di, (md, w)) in rows.iter().enumerate() {
            let mut previous: Option<f64> = None;
            for &k in &ks {
                let tn = w.prefix(k).converged_norm();
                let deficit = md.value - tn;
                if md.converged {
                    excess = excess.max(tn - md.value);
                    if let Some(p) = previous {
                        increase = increase.max(deficit - p);
                    }
                    previous = Some(deficit);
                }
                t.push(row(&[pi as f64, di as f64, k as f64, tn, md.value, deficit, flag(md.converged)]));
            }
            if md.converged {
                checked += 1;
            }
        }
    }
    r.table(t);
    r.assert(Assertion::at_least("checked_directions", checked as f64, 1.0));
    r.assert(Assertion::at_most("max_truncated_norm_excess", excess.max(0.0), NORM_IDENTITY_SLACK));
    r.assert(Assertion::at_most("max_deficit_increase_in_k", increase.max(0.0), MONOTONE_SLACK));
    Ok(r)
}

fn residual_radii(f: &MapOracle, x: &[f64]) -> Vec<f64> {
    let r0 = 0.5 * f.domain().clearance(x);
    (0..7).map(|i| r0 / f64::powi(2.0, i)).collect()
}

fn first_order(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::FirstOrder);
    let fan = ctx.fan();
    let mut t = table_with("residuals", ctx.header(&["point"], &[], &["radius", "analytic", "fitted"]));
    let exact = ctx.s.w1p == W1pExpectation::Exact;
    let mut worst_final = 0.0_f64;
    let mut all_decreasing = true;
    for (pi, x) in ctx.points.iter().enumerate() {
        let radii = residual_radii(ctx.f, x);
        let fit = ctx.fit(x)?;
        let fitted = first_order_residual(ctx.f, |nu| fit.seminorm.eval(nu), x, &radii, &fan)?;
        let analytic = match &ctx.s.analytic_md {
            Some(md) => Some(first_order_residual(ctx.f, md.at(x), x, &radii, &fan)?),
            None => None,
        };
        if let Some(a) = &analytic {
            worst_final = worst_final.max(a.final_residual);
            let tail = &a.rows[a.rows.len().saturating_sub(TREND_TAIL)..];
            all_decreasing &= tail.windows(2).all(|w| w[1].max_residual <= w[0].max_residual);
        }
        for (i, fr) in fitted.rows.iter().enumerate() {
            let a = analytic.as_ref().map_or(f64::NAN, |a| a.rows[i].max_residual);
            t.push(row(&[pi as f64, fr.radius, a, fr.max_residual]));
        }
    }
    r.table(t);
    if ctx.s.analytic_md.is_some() {
        if exact {
            r.assert(Assertion::at_most("max_final_residual_analytic", worst_final, EXACT_TOL));
        } else {
            r.assert(Assertion::holds("analytic_residual_tail_decreasing", all_decreasing));
        }
    }
    Ok(r)
}

/// Step schedule for norm quotients that stays above the target's
/// discretization scale.
fn probe_schedule(ctx: &Ctx, x: &[f64]) -> Result<StepSchedule> {
    let resolution = match ctx.f.target().kind() {
        SpaceKind::DiscretizedLebesgue { cells, length, .. } => length / *cells as f64,
        _ => 0.0,
    };
    let full = ctx.schedule(x)?;
    let kept: Vec<f64> = full.steps().iter().copied().filter(|h| *h >= resolution).collect();
    if kept.len() < 2 {
        return Err(Error::invalid("domain too small for the target's discretization"));
    }
    StepSchedule::new(kept)
}

fn metric_vs_linear(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::MetricVsLinear);
    r.param("witness", &ctx.s.linear_witness);
    if !ctx.f.target().is_normed() {
        r.note("target is not normed; nothing to compare");
        return Ok(r);
    }
    let fan = ctx.fan();
    let mut t = table_with(
        "quotients",
        ctx.header(
            &["point"],
            &["nu"],
            &["metric_derivative", "md_converged", "signed_converged", "norm_probe_cauchy", "last_probe_term"],
        ),
    );
    let mut per_point = Vec::new();
    for (pi, x) in ctx.points.iter().enumerate() {
        let schedule = ctx.schedule(x)?;
        let probe_steps = probe_schedule(ctx, x)?;
        let rows = fan
            .par_iter()
            .map(|nu| {
                let md = metric_directional_derivative(ctx.f, x, nu, &schedule, ctx.tol)?;
                let signed = signed_difference_quotient(ctx.f, x, nu, &schedule, ctx.tol)?;
                let probe = norm_quotient_probe(ctx.f, x, nu, &probe_steps, ctx.tol)?;
                Ok((nu, md, signed, probe))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut md_gap = 0.0_f64;
        let mut md_ok = true;
        let mut signed_any = false;
        let mut probe_any = false;
        for (nu, md, signed, probe) in &rows {
            if let Some(a) = &ctx.s.analytic_md {
                md_gap = md_gap.max((md.value - a.eval(x, nu)).abs());
            }
            md_ok &= md.converged;
            signed_any |= signed.converged;
            probe_any |= probe.cauchy_converged;
            t.push(row(&concat(&[
                &[pi as f64],
                nu,
                &[
                    md.value,
                    flag(md.converged),
                    flag(signed.converged),
                    flag(probe.cauchy_converged),
                    probe.terms.last().copied().unwrap_or(f64::NAN),
                ],
            ])));
        }
        per_point.push((x.clone(), md_gap, md_ok, signed_any, probe_any));
    }
    r.table(t);
    match &ctx.s.linear_witness {
        LinearWitness::None => {}
        LinearWitness::TwoSidedFailsAt(witnesses) => {
            for w in witnesses {
                let schedule = ctx.schedule(w)?;
                let mut signed_fails = true;
                let mut md_ok = true;
                for nu in &fan {
                    signed_fails &= !signed_difference_quotient(ctx.f, w, nu, &schedule, ctx.tol)?.converged;
                    md_ok &= metric_directional_derivative(ctx.f, w, nu, &schedule, ctx.tol)?.converged;
                }
                let label = format!("{w:?}");
                r.assert(Assertion::holds(format!("signed_quotient_fails_two_sided_at_{label}"), signed_fails));
                r.assert(Assertion::holds(format!("metric_derivative_converged_at_{label}"), md_ok));
                if let Some(md) = &ctx.s.analytic_md {
                    let radii = residual_radii(ctx.f, w);
                    let res = first_order_residual(ctx.f, md.at(w), w, &radii, &fan)?;
                    let worst = res.rows.iter().map(|row| row.max_residual).fold(0.0, f64::max);
                    r.assert(Assertion::at_most(format!("first_order_residual_at_{label}"), worst, 0.0));
                }
            }
        }
        LinearWitness::NormQuotientNotCauchy => {
            let matching = per_point
                .iter()
                .filter(|(_, gap, ok, _, _)| *ok && *gap <= ctx.s.consistency_tolerance)
                .count();
            r.assert(Assertion::at_least(
                "points_with_md_matching_analytic",
                matching as f64,
                ctx.points.len() as f64,
            ));
            let cauchy = per_point.iter().filter(|p| p.4).count();
            r.assert(Assertion::at_most("points_with_cauchy_norm_quotients", cauchy as f64, 0.0));
        }
    }
    Ok(r)
}

fn uniform_point(rng: &mut ChaCha8Rng, domain: &DomainBox) -> Vec<f64> {
    domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
        .collect()
}

fn gauge_audit(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::GaugeAudit);
    let n = ctx.dim();
    let per_axis = ((ctx.k as f64).powf(1.0 / n as f64).ceil() as usize).max(2);
    let sample = ctx.f.lattice_image(per_axis)?;
    let gauge = build_kuratowski_gauge(ctx.f.target(), &sample)?;
    let ks = k_schedule(gauge.len(), 1);
    r.param("lattice_per_axis", per_axis);
    r.param("audit_k_schedule", &ks);

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let pairs: Vec<(Point, Point)> = (0..200)
        .map(|_| {
            let a = uniform_point(&mut rng, ctx.f.domain());
            let b = uniform_point(&mut rng, ctx.f.domain());
            Ok((ctx.f.eval(&a)?, ctx.f.eval(&b)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let audit = gauge_quality_audit(&gauge, &pairs, &ks)?;
    let mut t = Table::new("audit", &["k", "max_relative_underestimate"]);
    for row_ in &audit.rows {
        t.push(row(&[row_.k as f64, row_.max_relative_underestimate]));
    }
    r.table(t);
    if !audit.skipped_pairs.is_empty() {
        r.note(format!("{} coincident pairs skipped", audit.skipped_pairs.len()));
    }
    let nonincreasing = audit
        .rows
        .windows(2)
        .all(|w| w[1].max_relative_underestimate <= w[0].max_relative_underestimate);
    r.assert(Assertion::holds("underestimate_nonincreasing_in_k", nonincreasing));

    let space = ctx.f.target();
    let full = gauge.len();
    let mut excess = 0.0_f64;
    for (x, y) in &pairs {
        let d = space.distance(x, y)?;
        excess = excess.max(gauge.gauge_distance(x, y, full)? - d);
    }
    r.assert(Assertion::at_most("max_gauge_excess_over_distance", excess, AXIOM_TOL));

    let mut sample_gap = 0.0_f64;
    for (i, a) in sample.iter().enumerate().step_by(3) {
        let b = &pairs[i % pairs.len()].0;
        let d = space.distance(a, b)?;
        sample_gap = sample_gap.max((d - gauge.gauge_distance(a, b, full)?).abs());
    }
    r.assert(Assertion::at_most("anchor_pairs_exact_at_full_k", sample_gap, AXIOM_TOL));

    let axioms = crate::spaces::validate_metric_axioms(space, &sample[..sample.len().min(24)])?;
    r.param("metric_axioms", &axioms);
    r.assert(Assertion::at_most(
        "metric_axiom_defect",
        axioms
            .max_identity_defect
            .max(axioms.max_symmetry_defect)
            .max(axioms.max_triangle_defect),
        AXIOM_TOL,
    ));
    Ok(r)
}

fn composition(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::Composition);
    let maps: Vec<String> = ctx.s.compositions.iter().map(TargetMap::name).collect();
    r.param("maps", &maps);
    let fan = ctx.fan();
    let mut t = table_with(
        "composition",
        ctx.header(
            &["point", "map", "direction"],
            &[],
            &["identity_defect", "composed_norm", "source_norm", "lipschitz", "inequality_defect", "excluded_entries", "converged"],
        ),
    );
    let mut identity = vec![0.0_f64; maps.len()];
    let mut inequality = vec![0.0_f64; maps.len()];
    let mut converged = vec![0usize; maps.len()];
    for (pi, x) in ctx.points.iter().enumerate() {
        let schedule = ctx.gauge_schedule(x)?;
        let source_gauge = ctx.gauge(ctx.f, x)?;
        for (mi, psi) in ctx.s.compositions.iter().enumerate() {
            let composed = ctx.f.compose(psi)?;
            let target_gauge = ctx.gauge(&composed, x)?;
            let rows = fan
                .par_iter()
                .map(|nu| composition_check(ctx.f, psi, &source_gauge, &target_gauge, x, nu, &schedule, ctx.tol))
                .collect::<Result<Vec<_>>>()?;
            for (di, c) in rows.iter().enumerate() {
                if c.converged {
                    identity[mi] = identity[mi].max(c.identity_defect);
                    inequality[mi] = inequality[mi].max(c.inequality_defect);
                    converged[mi] += 1;
                }
                t.push(row(&[
                    pi as f64,
                    mi as f64,
                    di as f64,
                    c.identity_defect,
                    c.composed_norm,
                    c.source_norm,
                    c.lipschitz,
                    c.inequality_defect,
                    c.excluded_entries as f64,
                    flag(c.converged),
                ]));
            }
        }
    }
    r.table(t);
    for (mi, psi) in ctx.s.compositions.iter().enumerate() {
        let name = &maps[mi];
        r.assert(Assertion::at_least(format!("converged_checks[{name}]"), converged[mi] as f64, 1.0));
        if matches!(psi, TargetMap::Identity | TargetMap::Scale(_)) {
            r.assert(Assertion::at_most(format!("identity_defect[{name}]"), identity[mi], PAIRING_IDENTITY_TOL));
        }
        r.assert(Assertion::at_most(format!("inequality_defect[{name}]"), inequality[mi], NORM_IDENTITY_SLACK));
    }
    Ok(r)
}

fn middle_half(domain: &DomainBox) -> Result<DomainBox> {
    let (lo, hi): (Vec<f64>, Vec<f64>) = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(a, b)| (a + 0.25 * (b - a), b - 0.25 * (b - a)))
        .unzip();
    DomainBox::new(lo, hi)
}

fn locality(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::Locality);
    let region = middle_half(ctx.f.domain())?;
    r.param("region_lower", region.lower());
    r.param("region_upper", region.upper());
    let inner = ctx.f.clone();
    let clamp_box = region.clone();
    let modified = MapOracle::new(
        format!("{}-clamped", ctx.f.name()),
        ctx.f.domain().clone(),
        ctx.f.target().clone(),
        move |x| {
            let y: Vec<f64> = x
                .iter()
                .zip(clamp_box.lower().iter().zip(clamp_box.upper()))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect();
            inner.eval_raw(&y)
        },
    );
    let center: Vec<f64> = region
        .lower()
        .iter()
        .zip(region.upper())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let gauge = ctx.gauge(ctx.f, &center)?;
    let h0 = ctx
        .points
        .iter()
        .map(|x| ctx.f.domain().clearance(x).min(2.0 * ctx.ring_radius) / 32.0)
        .fold(f64::INFINITY, f64::min);
    let schedule = StepSchedule::geometric(h0, ctx.halvings)?;
    let report = locality_check(ctx.f, &modified, &region, &gauge, &ctx.points, &schedule, ctx.tol)?;
    let mut t = table_with("mismatch", ctx.header(&[], &["x", "axis_mismatch"], &[]));
    for row_ in &report.rows {
        t.push(row(&concat(&[&row_.point, &row_.axis_mismatch])));
    }
    r.table(t);
    r.param("excluded_points", &report.excluded);
    r.assert(Assertion::at_least("checked_points", report.rows.len() as f64, 1.0));
    r.assert(Assertion::at_most("max_norm_mismatch", report.max_mismatch, ctx.tol));
    Ok(r)
}

/// Largest singular value of `j` (rows = outputs).
fn spectral_norm(j: &[Vec<f64>]) -> f64 {
    let n = j.first().map_or(0, Vec::len);
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| j.iter().map(|row| row[a] * row[b]).sum()).collect())
        .collect();
    let top = match n {
        0 => 0.0,
        1 => gram[0][0],
        2 => {
            let (a, b, d) = (gram[0][0], gram[0][1], gram[1][1]);
            0.5 * (a + d) + (0.25 * (a - d).powi(2) + b * b).sqrt()
        }
        _ => {
            let mut v = vec![1.0; n];
            let mut lambda = 0.0;
            for _ in 0..500 {
                let w: Vec<f64> = gram.iter().map(|row| row.iter().zip(&v).map(|(g, x)| g * x).sum()).collect();
                let norm = crate::fan::euclid_norm(&w);
                if norm == 0.0 {
                    return 0.0;
                }
                lambda = norm / crate::fan::euclid_norm(&v);
                v = w.iter().map(|x| x / norm).collect();
            }
            lambda
        }
    };
    top.max(0.0).sqrt()
}

/// Node count per axis giving roughly `cells^2` nodes in any dimension.
fn domain_grid(ctx: &Ctx) -> Result<Grid> {
    let n = ctx.dim() as f64;
    let per_axis = (ctx.sobolev.domain_cells as f64).powf(2.0 / n).round().max(3.0);
    let domain = ctx.f.domain();
    let spacing = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(a, b)| (b - a) / per_axis)
        .fold(f64::INFINITY, f64::min);
    Grid::over_box(domain, spacing)
}

fn truncation_audit(space: &MetricSpace, pairs: &[(Vec<f64>, Vec<f64>)], radius: f64) -> f64 {
    pairs
        .iter()
        .filter_map(|(u, v)| {
            let d = space.dist(u, v);
            (d > 0.0).then(|| {
                let tu = radial_truncation_raw(space, u, radius);
                let tv = radial_truncation_raw(space, v, radius);
                space.dist(&tu, &tv) / d
            })
        })
        .fold(0.0, f64::max)
}

fn sobolev_report(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::SobolevReport);
    let Some(md) = &ctx.s.analytic_md else {
        r.note("no analytic metric differential; majorant unavailable");
        return Ok(r);
    };
    let grid = domain_grid(ctx)?;
    r.param("grid_shape", grid.shape());
    r.param("grid_spacing", grid.spacing());
    let fan = ctx.fan();
    let cap = 1.0 / (2.0 * grid.spacing().sqrt());
    let euclidean = matches!(ctx.f.target().kind(), SpaceKind::Euclidean { .. });
    let h = GridFunction::from_fn(&grid, |x| {
        let v = match ctx.s.jacobian(x) {
            Some(j) if euclidean => spectral_norm(&j),
            _ => fan.iter().map(|nu| md.eval(x, nu)).fold(0.0, f64::max),
        };
        if v.is_finite() {
            v
        } else {
            cap
        }
    })?;
    let mh = maximal_function(&h)?;
    let mut sorted: Vec<f64> = grid.active_nodes().map(|i| mh.values()[i]).collect();
    sorted.sort_by(f64::total_cmp);
    let t0 = sorted[sorted.len() / 2];
    let thresholds: Vec<f64> = (0..6).map(|j| t0 * f64::powi(2.0, j)).collect();
    r.param("thresholds", &thresholds);

    let sampled = ctx.f.tabulate(&grid)?;
    let results = thresholds
        .iter()
        .map(|&t| restrict_with_maximal(&sampled, &mh, t, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "restriction",
        &["t", "excluded_nodes", "measure_excluded", "lipschitz_constant", "product_p1", "product_p2", "degenerate"],
    );
    for res in &results {
        t.push(row(&[
            res.t,
            res.excluded_nodes.len() as f64,
            res.measure_excluded,
            res.empirical_lipschitz_constant,
            res.lipschitz_measure_product,
            res.empirical_lipschitz_constant.powi(2) * res.measure_excluded,
            flag(res.degenerate),
        ]));
    }
    r.table(t);
    let nested = results
        .windows(2)
        .all(|w| w[1].excluded_nodes.iter().all(|i| w[0].excluded_nodes.binary_search(i).is_ok()));
    r.assert(Assertion::holds("excluded_sets_nested", nested));
    let measure_up = results
        .windows(2)
        .map(|w| w[1].measure_excluded - w[0].measure_excluded)
        .fold(0.0, f64::max);
    r.assert(Assertion::at_most("measure_excluded_increase", measure_up, 0.0));
    let product_up = results
        .windows(2)
        .map(|w| w[1].lipschitz_measure_product - w[0].lipschitz_measure_product)
        .fold(0.0, f64::max);
    r.assert(Assertion::at_most("lipschitz_measure_product_increase_p1", product_up, 0.0));

    for &p in &ctx.sobolev.p {
        if grid.shape().iter().all(|&s| s >= 3) {
            r.param(&format!("majorant_w1p_norm_p{p}"), w1p_norm(&h, p)?);
        }
    }

    let gauge = {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let active: Vec<usize> = grid.active_nodes().collect();
        let anchors = (0..ctx.k)
            .map(|_| ctx.f.eval(&grid.node(active[rng.gen_range(0..active.len())])))
            .collect::<Result<Vec<_>>>()?;
        build_kuratowski_gauge(ctx.f.target(), &anchors)?
    };
    let resh = reshetnyak_gradient_check(ctx.f, &h, &gauge, ctx.tol)?;
    let mut rt = table_with("canonical_gradient", ctx.header(&[], &["x"], &["majorant", "canonical"]));
    for i in grid.active_nodes() {
        rt.push(row(&concat(&[&grid.node(i), &[h.values()[i], resh.canonical.values()[i]]])));
    }
    r.table(rt);
    r.param("reshetnyak_checked_nodes", resh.checked_nodes);
    r.param("reshetnyak_excluded_nonconverged", resh.excluded_nonconverged);
    r.param("reshetnyak_dominates_canonical", resh.dominates_canonical);
    r.assert(Assertion::at_most("reshetnyak_violating_nodes", resh.violating_nodes as f64, 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x5eed);
    let space3 = MetricSpace::euclidean(3)?;
    let random_pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..TRUNCATION_PAIRS)
        .map(|_| {
            let mut draw = || (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
            (draw(), draw())
        })
        .collect();
    let factor = truncation_audit(&space3, &random_pairs, 1.0);
    r.assert(Assertion::at_most("truncation_lipschitz_factor_random", factor, 2.0 + 1e-12));
    if ctx.f.target().is_normed() {
        let images: Vec<Vec<f64>> = grid.active_nodes().map(|i| sampled.image(i).to_vec()).collect();
        let mut norms: Vec<f64> = images.iter().map(|v| ctx.f.target().norm_raw(v).unwrap_or(0.0)).collect();
        norms.sort_by(f64::total_cmp);
        let radius = norms[norms.len() / 2].max(1e-3);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..TRUNCATION_PAIRS)
            .map(|_| {
                let a = rng.gen_range(0..images.len());
                let b = rng.gen_range(0..images.len());
                (images[a].clone(), images[b].clone())
            })
            .collect();
        let factor = truncation_audit(ctx.f.target(), &pairs, radius);
        r.param("image_truncation_radius", radius);
        r.assert(Assertion::at_most("truncation_lipschitz_factor_image", factor, 2.0 + 1e-12));
    }
    Ok(r)
}

fn w1p_check(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::W1pCheck);
    let x = &ctx.s.w1p_point;
    let ball = Grid::unit_ball(ctx.dim(), ctx.sobolev.ball_cells)?;
    let clearance = ctx.f.domain().clearance(x);
    let h0 = (0.5 * clearance).min(0.25);
    let schedule = StepSchedule::geometric(h0, 4)?;
    r.param("w1p_point", x);
    r.param("ball_cells", ctx.sobolev.ball_cells);
    r.param("p", &ctx.sobolev.p);
    r.param("h_schedule", &schedule);
    r.param("expectation", ctx.s.w1p);

    let fit = ctx.fit(x)?;
    let sigma_fit = converged_seminorm(&fit).unwrap_or_else(|| fit.seminorm.clone());
    let mut t = Table::new("eta_norms", &["p", "h", "sigma", "lp_part", "gradient_part", "total", "excluded_nodes"]);
    let mut plateau = Vec::new();
    for &p in &ctx.sobolev.p {
        let fitted = w1p_differentiability_check(ctx.f, |nu| sigma_fit.eval(nu), x, p, &schedule, &ball)?;
        let analytic = match &ctx.s.analytic_md {
            Some(md) => Some(w1p_differentiability_check(ctx.f, md.at(x), x, p, &schedule, &ball)?),
            None => None,
        };
        for (kind, report) in [(0.0, Some(&fitted)), (1.0, analytic.as_ref())] {
            let Some(report) = report else { continue };
            for row_ in &report.rows {
                let grad: f64 = row_.norm.gradient_parts.iter().sum();
                t.push(row(&[p, row_.h, kind, row_.norm.lp_part, grad, row_.norm.total, row_.excluded_nodes as f64]));
            }
        }
        match (ctx.s.w1p, &analytic, &ctx.s.analytic_md) {
            (W1pExpectation::Exact, Some(a), _) => {
                let worst = a.rows.iter().map(|row_| row_.norm.total).fold(0.0, f64::max);
                r.assert(Assertion::at_most(format!("max_eta_norm_exact_sigma_p{p}"), worst, EXACT_TOL));
            }
            (W1pExpectation::GaugePlateau, _, Some(md)) => {
                let gap = GridFunction::from_fn(&ball, |nu| md.eval(x, nu) - sigma_fit.eval(nu))?;
                let gap_norm = w1p_norm(&gap, p)?.total;
                plateau.push((p, gap_norm));
                r.assert(Assertion::holds(format!("fitted_tail_nonincreasing_p{p}"), fitted.nonincreasing));
                r.assert(Assertion::at_most(
                    format!("fitted_final_vs_gauge_gap_plateau_p{p}"),
                    fitted.final_value,
                    gap_norm,
                ));
            }
            _ => r.note(format!("p = {p}: trend reported, not asserted")),
        }
    }
    r.param("gauge_gap_plateau", &plateau);
    r.table(t);
    r.note("sigma 0 = fitted seminorm (converged rows), sigma 1 = analytic metric differential");
    Ok(r)
}

/// Dual test set whose sup recovers the dual norm up to `DUAL_FIT_TOL`.
fn dense_duals(space: &MetricSpace) -> Result<Option<DualTestSet>> {
    Ok(match space.kind() {
        SpaceKind::Euclidean { dim: 1 } => Some(DualTestSet::coordinate(space)?),
        SpaceKind::Euclidean { dim: 2 } => Some(DualTestSet::circle(space, 256)?),
        SpaceKind::Euclidean { dim: 3 } => {
            Some(DualTestSet::new(space, fibonacci_sphere(16384), crate::linear_target::DualRole::Dual)?)
        }
        SpaceKind::Lp { p: crate::spaces::Exponent::Infinity, .. } => Some(DualTestSet::coordinate(space)?),
        SpaceKind::DiscretizedLebesgue { cells, .. } if cells % 64 == 0 => {
            Some(DualTestSet::step_functions(space, 64)?)
        }
        _ => None,
    })
}

fn dual_recovery(ctx: &Ctx) -> Result<ExperimentReport> {
    let mut r = ctx.report(Suite::DualRecovery);
    r.param("dual_role", ctx.s.dual_role);
    let target = ctx.f.target();
    if !target.is_normed() {
        r.note("target is not normed; dual pairings unavailable");
        return Ok(r);
    }
    let fan = ctx.fan();
    let coordinate = if target.dim() <= 16 {
        Some(DualTestSet::coordinate(target)?.with_role(ctx.s.dual_role))
    } else {
        None
    };
    let dense = dense_duals(target)?.map(|d| d.with_role(ctx.s.dual_role));
    r.param("coordinate_functionals", coordinate.as_ref().map(DualTestSet::len));
    r.param("dense_functionals", dense.as_ref().map(DualTestSet::len));

    let mut gt = table_with("gradient", ctx.header(&["point", "row"], &["g"], &["expected_max_error"]));
    let mut ft = table_with("fan", ctx.header(&["point"], &["nu"], &["dual_sup", "sigma_fit", "metric_derivative"]));
    let mut entry_error = 0.0_f64;
    let mut excluded = 0usize;
    let mut fit_gap = 0.0_f64;
    let mut excess = 0.0_f64;
    let mut monotone = true;
    for (pi, x) in ctx.points.iter().enumerate() {
        let schedule = ctx.schedule(x)?;
        if let Some(c) = &coordinate {
            let g = dual_gradient(ctx.f, c, x, &schedule, ctx.tol)?;
            let jac = ctx.s.jacobian(x);
            for (k, grow) in g.rows.iter().enumerate() {
                let err = jac.as_ref().map_or(f64::NAN, |j| {
                    grow.iter()
                        .zip(&j[k])
                        .zip(&g.converged[k])
                        .filter(|(_, ok)| **ok)
                        .map(|((a, b), _)| (a - b).abs())
                        .fold(0.0, f64::max)
                });
                excluded += g.converged[k].iter().filter(|c| !**c).count();
                if err.is_finite() {
                    entry_error = entry_error.max(err);
                }
                gt.push(row(&concat(&[&[pi as f64, k as f64], grow, &[err]])));
            }
            if let Some(d) = &dense {
                let gd = dual_gradient(ctx.f, d, x, &schedule, ctx.tol)?;
                let union = c.extend(d)?;
                let gu = dual_gradient(ctx.f, &union, x, &schedule, ctx.tol)?;
                for nu in &fan {
                    let small = md_from_dual(&g, c, nu)?;
                    let big = md_from_dual(&gu, &union, nu)?;
                    monotone &= big >= small && big >= md_from_dual(&gd, d, nu)?;
                }
            }
        }
        if let Some(d) = &dense {
            let g = dual_gradient(ctx.f, d, x, &schedule, ctx.tol)?;
            let fit = ctx.fit(x)?;
            let sigma = converged_seminorm(&fit);
            for nu in &fan {
                let sup = md_from_dual(&g, d, nu)?;
                let md = metric_directional_derivative(ctx.f, x, nu, &schedule, ctx.tol)?;
                let sv = sigma.as_ref().map_or(f64::NAN, |s| s.eval(nu));
                if sv.is_finite() {
                    fit_gap = fit_gap.max((sup - sv).abs());
                }
                if md.converged {
                    excess = excess.max(sup - md.value);
                }
                ft.push(row(&concat(&[&[pi as f64], nu, &[sup, sv, md.value]])));
            }
        }
    }
    r.param("excluded_gradient_entries", excluded);
    r.table(gt);
    r.table(ft);
    if coordinate.is_some() && ctx.s.jacobian.is_some() {
        let tol = if ctx.s.linear { PAIRING_IDENTITY_TOL } else { ctx.tol };
        r.assert(Assertion::at_most("coordinate_gradient_entry_error", entry_error, tol));
    }
    if dense.is_some() {
        r.assert(Assertion::at_most("dual_sup_vs_fitted_gap", fit_gap, DUAL_FIT_TOL));
        r.assert(Assertion::at_most("dual_sup_excess_over_metric_derivative", excess, ctx.tol));
        if coordinate.is_some() {
            r.assert(Assertion::holds("dual_sup_monotone_under_enlargement", monotone));
        }
    }

    if let SpaceKind::DiscretizedLebesgue { cells, .. } = target.kind() {
        let mut st = Table::new("step_sups", &["pieces", "min_dual_sup", "lower_bound"]);
        let mut previous = f64::NEG_INFINITY;
        let mut nondecreasing = true;
        let mut worst_margin = f64::INFINITY;
        let mut m = 2;
        while m <= 64 && cells % m == 0 {
            let d = DualTestSet::step_functions(target, m)?.with_role(ctx.s.dual_role);
            let mut min_sup = f64::INFINITY;
            for x in &ctx.points {
                let g = dual_gradient(ctx.f, &d, x, &ctx.schedule(x)?, ctx.tol)?;
                for nu in &fan {
                    min_sup = min_sup.min(md_from_dual(&g, &d, nu)? / crate::fan::euclid_norm(nu));
                }
            }
            let bound = 1.0 - 1.0 / m as f64;
            worst_margin = worst_margin.min(min_sup - bound);
            nondecreasing &= min_sup >= previous;
            previous = min_sup;
            st.push(row(&[m as f64, min_sup, bound]));
            m *= 2;
        }
        r.table(st);
        r.assert(Assertion::at_least("step_sup_margin_over_one_minus_inverse_pieces", worst_margin, 0.0));
        r.assert(Assertion::holds("step_sup_nondecreasing_in_pieces", nondecreasing));

        // per-functional residuals for a fixed step functional near t
        let x = &ctx.points[ctx.points.len() / 2];
        let d = DualTestSet::step_functions(target, 8)?;
        let g = dual_gradient(ctx.f, &d, x, &ctx.schedule(x)?, ctx.tol)?;
        let r0 = 0.5 * ctx.f.domain().clearance(x);
        let radii: Vec<f64> = (0..4).map(|i| r0 / f64::powi(2.0, i)).collect();
        let ws = weak_star_residual(ctx.f, &g, &d, x, &radii, &fan)?;
        let mut wt = Table::new("weak_star_residual", &["radius", "functional", "residual"]);
        for row_ in &ws.rows {
            for (k, v) in row_.per_functional.iter().enumerate() {
                wt.push(row(&[row_.radius, k as f64, *v]));
            }
        }
        r.table(wt);
    } else if let Some(d) = &dense {
        let x = &ctx.points[0];
        let g = dual_gradient(ctx.f, d, x, &ctx.schedule(x)?, ctx.tol)?;
        let r0 = 0.5 * ctx.f.domain().clearance(x);
        let radii: Vec<f64> = (0..4).map(|i| r0 / f64::powi(2.0, i)).collect();
        let ws = weak_star_residual(ctx.f, &g, d, x, &radii, &fan)?;
        let mut wt = Table::new("weak_star_residual", &["radius", "max_residual"]);
        for row_ in &ws.rows {
            wt.push(row(&[row_.radius, row_.max_residual]));
        }
        r.table(wt);
        if ctx.s.linear {
            let worst = ws.rows.iter().map(|row_| row_.max_residual).fold(0.0, f64::max);
            r.assert(Assertion::at_most("weak_star_residual_linear", worst, EXACT_TOL));
        }
    }
    Ok(r)
}

/// Fitted metric differential at one point, tabulated over the standard fan.
pub fn md_at_point(s: &Scenario, x: &[f64], settings: &SuiteSettings) -> Result<ExperimentReport> {
    let settings = SuiteSettings {
        points: Some(vec![x.to_vec()]),
        ..settings.clone()
    };
    let ctx = Ctx::new(s, &settings)?;
    let mut r = ExperimentReport::new(&s.name, "md-at-point");
    r.param("scenario", s.info());
    r.param("k", ctx.k);
    r.param("tol", ctx.tol);
    r.param("halvings", ctx.halvings);
    r.param("ring_radius", ctx.ring_radius);
    r.param("point", x);
    let fit = ctx.fit(x)?;
    r.param("nonconverged_rows", &fit.nonconverged_rows);
    let mut forms = table_with("forms", ctx.header(&["row", "converged"], &["g"], &[]));
    for (i, g) in fit.seminorm.forms().iter().enumerate() {
        let ok = !fit.nonconverged_rows.contains(&i);
        forms.push(row(&concat(&[&[i as f64, flag(ok)], g])));
    }
    r.table(forms);
    let schedule = ctx.schedule(x)?;
    let sigma = converged_seminorm(&fit);
    let mut t = table_with("fan", ctx.header(&[], &["nu"], &["sigma_fit", "metric_derivative", "md_converged"]));
    for nu in ctx.fan() {
        let md = metric_directional_derivative(ctx.f, x, &nu, &schedule, ctx.tol)?;
        let sv = sigma.as_ref().map_or(f64::NAN, |s| s.eval(&nu));
        t.push(row(&concat(&[&nu, &[sv, md.value, flag(md.converged)]])));
    }
    r.table(t);
    r.assert(Assertion::at_least("converged_rows", (fit.seminorm.forms().len() - fit.nonconverged_rows.len()) as f64, 1.0));
    Ok(r)
}

/// Scenario and suite selection resolved from a config.
pub fn resolve(config: &LabConfig) -> Result<(Vec<Scenario>, Vec<Suite>)> {
    let scenarios = if config.scenario.names.is_empty() {
        super::catalog::catalog()
    } else {
        config
            .scenario
            .names
            .iter()
            .map(|n| find_scenario(n))
            .collect::<Result<Vec<_>>>()?
    };
    let suites = if config.suites.names.is_empty() {
        Suite::ALL.to_vec()
    } else {
        config
            .suites
            .names
            .iter()
            .map(|n| Suite::parse(n))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((scenarios, suites))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<ExperimentReport>,
    pub directories: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

/// Runs every selected suite on every selected scenario and writes the
/// reports under `config.output.dir`.
pub fn run(config: &LabConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (scenarios, suites) = resolve(config)?;
    let settings = SuiteSettings::from_config(config);
    let mut reports = Vec::new();
    let mut directories = Vec::new();
    for s in &scenarios {
        for &suite in &suites {
            let report = run_suite(s, suite, &settings)?;
            directories.push(report.write(&config.output.dir)?);
            reports.push(report);
        }
    }
    Ok(RunOutcome {
        reports,
        directories,
    })
}

/// Renders a float for console summaries.
pub fn show(v: f64) -> String {
    fmt_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(name: &str, suite: Suite) -> ExperimentReport {
        let s = find_scenario(name).unwrap();
        run_suite(&s, suite, &SuiteSettings::default()).unwrap()
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        let err = Suite::parse("bogus").unwrap_err().to_string();
        assert!(err.contains("md-consistency"));
    }

    #[test]
    fn spectral_norm_matches_known_matrices() {
        assert_eq!(spectral_norm(&[vec![1.0, 0.0], vec![0.0, 2.0]]), 2.0);
        assert!((spectral_norm(&[vec![1.0, 1.0], vec![1.0, 1.0]]) - 2.0).abs() < 1e-15);
        assert_eq!(spectral_norm(&[vec![-3.0]]), 3.0);
        let j = [vec![2.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!((spectral_norm(&j) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn k_schedule_doubles() {
        assert_eq!(k_schedule(32, 4), vec![4, 8, 16, 32]);
        assert_eq!(k_schedule(20, 4), vec![4, 8, 16, 20]);
        assert_eq!(k_schedule(3, 4), vec![3]);
    }

    #[test]
    fn linear_consistency_passes() {
        let r = quick("linear-diag", Suite::MdConsistency);
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn abs_kink_is_excluded_from_consistency() {
        let r = quick("abs", Suite::MdConsistency);
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.notes.iter().any(|n| n.starts_with("point 0")));
    }

    #[test]
    fn point_override_is_validated() {
        let s = find_scenario("linear-diag").unwrap();
        let settings = SuiteSettings {
            points: Some(vec![vec![0.0]]),
            ..SuiteSettings::default()
        };
        assert!(run_suite(&s, Suite::MdConsistency, &settings).is_err());
        let settings = SuiteSettings {
            points: Some(vec![vec![1.0, 0.0]]),
            ..SuiteSettings::default()
        };
        assert!(matches!(run_suite(&s, Suite::MdConsistency, &settings), Err(Error::Config(_))));
    }
}
