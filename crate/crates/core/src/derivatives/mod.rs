//! Finite-difference engines for metric directional derivatives and
//! truncated weak weak* derivatives.
//!
//! Limits are taken along a geometric step schedule `h0 * 2^-i`. An
//! estimate is *converged* when its last two values agree within the
//! requested tolerance; non-converged values are reported as such and
//! never averaged away.

mod composition;
mod locality;
mod oracle;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::Serialize;

pub use composition::{composition_check, CompositionReport, TargetMap};
pub use locality::{locality_check, LocalityReport, LocalityRow};
pub use oracle::{DomainBox, MapFn, MapOracle};

use crate::error::{Error, Result};
use crate::fan::euclid_norm;
use crate::gauge::GaugeSequence;

/// Default tolerances for smooth and piecewise-smooth maps.
pub const SMOOTH_TOL: f64 = 1e-6;
pub const PIECEWISE_TOL: f64 = 1e-3;
pub const DEFAULT_HALVINGS: usize = 8;

/// Strictly decreasing positive steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StepSchedule(Vec<f64>);

impl StepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::invalid("empty step schedule"));
        }
        if steps.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::invalid("steps must be positive and finite"));
        }
        if steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("steps must be strictly decreasing"));
        }
        Ok(StepSchedule(steps))
    }

    /// `h0, h0/2, ..., h0/2^halvings`.
    pub fn geometric(h0: f64, halvings: usize) -> Result<Self> {
        Self::new((0..=halvings).map(|i| h0 * 0.5_f64.powi(i as i32)).collect())
    }

    /// `h0 = clearance / (16 |nu|)` at `x`, so the schedule just fits.
    pub fn for_point(domain: &DomainBox, x: &[f64], direction_norm: f64, halvings: usize) -> Result<Self> {
        let clearance = domain.clearance(x);
        if !(clearance > 0.0) {
            return Err(Error::Clearance {
                clearance,
                required: f64::MIN_POSITIVE,
            });
        }
        Self::geometric(clearance / (16.0 * direction_norm.max(f64::MIN_POSITIVE)), halvings)
    }

    pub fn steps(&self) -> &[f64] {
        &self.0
    }

    pub fn max_step(&self) -> f64 {
        self.0[0]
    }

    pub fn min_step(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

fn successive_diffs(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

fn last_diff_within(diffs: &[f64], tol: f64) -> bool {
    diffs.last().is_none_or(|d| *d <= tol)
}

fn check_direction(nu: &[f64]) -> Result<f64> {
    let norm = euclid_norm(nu);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::invalid("direction must be nonzero and finite"));
    }
    Ok(norm)
}

fn shifted(x: &[f64], nu: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(nu).map(|(a, v)| a + h * v).collect()
}

/// Limit estimate for `d(f(x + h nu), f(x)) / |h|`.
#[derive(Clone, Debug, Serialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub h_schedule: StepSchedule,
    /// Quotients for `h > 0`.
    pub forward: Vec<f64>,
    /// Quotients for `h < 0`.
    pub backward: Vec<f64>,
    /// `|est_{i+1} - est_i|` of the two-sided mean.
    pub successive_diffs: Vec<f64>,
    pub converged: bool,
}

pub fn metric_directional_derivative(
    f: &MapOracle,
    x: &[f64],
    nu: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<DerivativeEstimate> {
    let nu_norm = check_direction(nu)?;
    f.require_clearance(x, schedule.max_step() * nu_norm)?;
    let fx = f.eval_raw(x);
    let target = f.target();
    let mut forward = Vec::with_capacity(schedule.steps().len());
    let mut backward = Vec::with_capacity(schedule.steps().len());
    for &h in schedule.steps() {
        forward.push(target.dist(&f.eval_raw(&shifted(x, nu, h)), &fx) / h);
        backward.push(target.dist(&f.eval_raw(&shifted(x, nu, -h)), &fx) / h);
    }
    let mean: Vec<f64> = forward
        .iter()
        .zip(&backward)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let diffs = successive_diffs(&mean);
    let last = mean.len() - 1;
    let converged =
        last_diff_within(&diffs, tol) && (forward[last] - backward[last]).abs() <= tol;
    Ok(DerivativeEstimate {
        value: mean[last],
        h_schedule: schedule.clone(),
        forward,
        backward,
        successive_diffs: diffs,
        converged,
    })
}

/// Signed quotient `(f(x + h nu) - f(x)) / h` in a normed target, used to
/// witness failure of classical differentiability.
#[derive(Clone, Debug, Serialize)]
pub struct LinearQuotientEstimate {
    pub forward_last: Vec<f64>,
    pub backward_last: Vec<f64>,
    /// Target-norm gap between forward and backward quotients per step.
    pub two_sided_gaps: Vec<f64>,
    pub converged: bool,
}

pub fn signed_difference_quotient(
    f: &MapOracle,
    x: &[f64],
    nu: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<LinearQuotientEstimate> {
    let nu_norm = check_direction(nu)?;
    f.require_clearance(x, schedule.max_step() * nu_norm)?;
    let target = f.target();
    if !target.is_normed() {
        return Err(Error::NotNormed(target.id()));
    }
    let fx = f.eval_raw(x);
    let quotient = |h: f64| -> Vec<f64> {
        let y = f.eval_raw(&shifted(x, nu, h));
        y.iter().zip(&fx).map(|(a, b)| (a - b) / h).collect()
    };
    let mut gaps = Vec::new();
    let mut forward_series = Vec::new();
    let mut fwd = Vec::new();
    let mut bwd = Vec::new();
    for &h in schedule.steps() {
        fwd = quotient(h);
        bwd = quotient(-h);
        gaps.push(target.dist(&fwd, &bwd));
        forward_series.push(fwd.clone());
    }
    let cauchy = forward_series
        .windows(2)
        .last()
        .map_or(0.0, |w| target.dist(&w[0], &w[1]));
    let converged = cauchy <= tol && gaps.last().is_some_and(|g| *g <= tol);
    Ok(LinearQuotientEstimate {
        forward_last: fwd,
        backward_last: bwd,
        two_sided_gaps: gaps,
        converged,
    })
}

/// Cauchy behaviour of the norm difference quotient `q_h = (f(x+h nu) - f(x)) / h`.
#[derive(Clone, Debug, Serialize)]
pub struct CauchyProbe {
    /// `||q_{h_i} - q_{h_{i+1}}||` in the target norm.
    pub terms: Vec<f64>,
    pub cauchy_converged: bool,
}

pub fn norm_quotient_probe(
    f: &MapOracle,
    x: &[f64],
    nu: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<CauchyProbe> {
    let nu_norm = check_direction(nu)?;
    f.require_clearance(x, schedule.max_step() * nu_norm)?;
    let target = f.target();
    if !target.is_normed() {
        return Err(Error::NotNormed(target.id()));
    }
    let fx = f.eval_raw(x);
    let quotients: Vec<Vec<f64>> = schedule
        .steps()
        .iter()
        .map(|&h| {
            let y = f.eval_raw(&shifted(x, nu, h));
            y.iter().zip(&fx).map(|(a, b)| (a - b) / h).collect()
        })
        .collect();
    let terms: Vec<f64> = quotients
        .windows(2)
        .map(|w| target.dist(&w[0], &w[1]))
        .collect();
    let cauchy_converged = last_diff_within(&terms, tol);
    Ok(CauchyProbe {
        terms,
        cauchy_converged,
    })
}

/// Pairings `<phi_k, w>` of a functional `w` with the first `K` gauge
/// functionals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedFunctional {
    pub pairings: Vec<f64>,
    pub converged: Vec<bool>,
    pub gauge_id: u64,
}

impl TruncatedFunctional {
    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    pub fn diagnostic_failed(&self) -> bool {
        self.converged.iter().any(|c| !c)
    }

    /// `max |pairing|` over the entries whose diagnostics converged.
    pub fn converged_norm(&self) -> f64 {
        self.pairings
            .iter()
            .zip(&self.converged)
            .filter(|(_, c)| **c)
            .fold(0.0_f64, |acc, (v, _)| acc.max(v.abs()))
    }

    pub fn converged_count(&self) -> usize {
        self.converged.iter().filter(|c| **c).count()
    }

    /// `sum_j weights[j] * parts[j]`, summed in index order.
    pub fn linear_combination(parts: &[TruncatedFunctional], weights: &[f64]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("no functionals to combine"))?;
        if parts.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: parts.len(),
                actual: weights.len(),
            });
        }
        if parts
            .iter()
            .any(|p| p.gauge_id != first.gauge_id || p.len() != first.len())
        {
            return Err(Error::invalid("functionals are truncated against different gauges"));
        }
        let pairings = (0..first.len())
            .map(|k| {
                parts
                    .iter()
                    .zip(weights)
                    .fold(0.0, |acc, (p, w)| acc + p.pairings[k] * w)
            })
            .collect();
        let converged = (0..first.len())
            .map(|k| parts.iter().all(|p| p.converged[k]))
            .collect();
        Ok(TruncatedFunctional {
            pairings,
            converged,
            gauge_id: first.gauge_id,
        })
    }

    pub fn prefix(&self, k: usize) -> TruncatedFunctional {
        TruncatedFunctional {
            pairings: self.pairings[..k].to_vec(),
            converged: self.converged[..k].to_vec(),
            gauge_id: self.gauge_id,
        }
    }
}

/// Stable fingerprint of a gauge's anchors.
pub fn gauge_fingerprint(gauge: &GaugeSequence) -> u64 {
    let mut hasher = DefaultHasher::new();
    gauge.space().id().hash(&mut hasher);
    for anchor in gauge.anchors() {
        for c in anchor.coords() {
            c.to_bits().hash(&mut hasher);
        }
    }
    hasher.finish()
}

/// Central-difference limits of `k -> functionals(f(.))[k]` along `nu`.
///
/// An entry is converged when its last two central estimates agree within
/// `tol` and its one-sided quotients agree, either within `tol` or with a
/// gap that shrank by at least a quarter over the last halving. A kink of
/// `functionals o f` at `x` keeps the one-sided gap constant and is flagged.
pub(crate) fn central_pairings<G>(
    f: &MapOracle,
    x: &[f64],
    nu: &[f64],
    schedule: &StepSchedule,
    tol: f64,
    functionals: G,
) -> Result<(Vec<f64>, Vec<bool>)>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let nu_norm = check_direction(nu)?;
    f.require_clearance(x, schedule.max_step() * nu_norm)?;
    let center = functionals(&f.eval_raw(x));
    let mut central = Vec::with_capacity(schedule.steps().len());
    let mut one_sided_gaps = Vec::with_capacity(schedule.steps().len());
    for &h in schedule.steps() {
        let plus = functionals(&f.eval_raw(&shifted(x, nu, h)));
        let minus = functionals(&f.eval_raw(&shifted(x, nu, -h)));
        central.push(
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
        one_sided_gaps.push(
            plus.iter()
                .zip(&minus)
                .zip(&center)
                .map(|((a, b), c)| ((a - c) - (c - b)).abs() / h)
                .collect::<Vec<f64>>(),
        );
    }
    let m = central.len();
    let converged = (0..center.len())
        .map(|i| {
            if m == 1 {
                return one_sided_gaps[0][i] <= tol;
            }
            let cauchy = (central[m - 1][i] - central[m - 2][i]).abs() <= tol;
            let gap = one_sided_gaps[m - 1][i];
            cauchy && (gap <= tol || gap <= 0.75 * one_sided_gaps[m - 2][i])
        })
        .collect();
    Ok((central.pop().unwrap_or_default(), converged))
}

pub fn truncated_weak_weak_star_derivative(
    f: &MapOracle,
    gauge: &GaugeSequence,
    x: &[f64],
    nu: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<TruncatedFunctional> {
    if gauge.space() != f.target() {
        return Err(Error::invalid(format!(
            "gauge lives on {} but the map targets {}",
            gauge.space().id(),
            f.target().id()
        )));
    }
    let k = gauge.len();
    let (pairings, converged) =
        central_pairings(f, x, nu, schedule, tol, |y| gauge.embed_raw(y, k))?;
    Ok(TruncatedFunctional {
        pairings,
        converged,
        gauge_id: gauge_fingerprint(gauge),
    })
}

/// `max_k |<phi_k, w>|`.
pub fn truncated_norm(w: &TruncatedFunctional) -> f64 {
    w.pairings.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Truncated partial derivatives `d°_j f(x)` along each coordinate axis.
pub fn truncated_partials(
    f: &MapOracle,
    gauge: &GaugeSequence,
    x: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<Vec<TruncatedFunctional>> {
    let n = f.domain().dim();
    (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            truncated_weak_weak_star_derivative(f, gauge, x, &e, schedule, tol)
        })
        .collect()
}
