//! Metric differentials as max-of-absolute-linear-forms seminorms.
//!
//! Row `k` of a fitted seminorm is the gradient of `phi_k o f` at the
//! origin point, so `sigma(nu) = max_k |g_k . nu|` is the gauge-truncated
//! norm of `sum_j d°_j f(x) nu_j`.

use rayon::prelude::*;
use serde::Serialize;

use crate::derivatives::{
    metric_directional_derivative, truncated_partials, MapOracle, StepSchedule,
    TruncatedFunctional,
};
use crate::error::{Error, Result};
use crate::gauge::GaugeSequence;

/// Scalars used by the standard homogeneity check.
pub const STANDARD_SCALARS: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seminorm {
    forms: Vec<Vec<f64>>,
    origin: Vec<f64>,
}

impl Seminorm {
    pub fn new(forms: Vec<Vec<f64>>, origin: Vec<f64>) -> Result<Self> {
        let n = origin.len();
        if let Some(bad) = forms.iter().find(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        if forms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("seminorm rows must be finite"));
        }
        Ok(Seminorm { forms, origin })
    }

    pub fn forms(&self) -> &[Vec<f64>] {
        &self.forms
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// `max_k |g_k . nu|`; zero when there are no rows.
    pub fn eval(&self, nu: &[f64]) -> f64 {
        self.forms.iter().fold(0.0_f64, |acc, row| {
            let dot = row.iter().zip(nu).fold(0.0, |s, (g, v)| s + g * v);
            acc.max(dot.abs())
        })
    }

    /// Seminorm built from the first `k` rows.
    pub fn prefix(&self, k: usize) -> Seminorm {
        Seminorm {
            forms: self.forms[..k.min(self.forms.len())].to_vec(),
            origin: self.origin.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FittedSeminorm {
    pub seminorm: Seminorm,
    /// Truncated partials `d°_j f(x)`, one per axis.
    pub partials: Vec<TruncatedFunctional>,
    /// Rows with at least one non-converged partial entry.
    pub nonconverged_rows: Vec<usize>,
}

impl FittedSeminorm {
    /// `sum_j d°_j f(x) nu_j` as a truncated functional.
    pub fn functional_along(&self, nu: &[f64]) -> Result<TruncatedFunctional> {
        TruncatedFunctional::linear_combination(&self.partials, nu)
    }
}

pub fn fit_metric_differential(
    f: &MapOracle,
    gauge: &GaugeSequence,
    x: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<FittedSeminorm> {
    let partials = truncated_partials(f, gauge, x, schedule, tol)?;
    let k = gauge.len();
    let forms = (0..k)
        .map(|row| partials.iter().map(|p| p.pairings[row]).collect())
        .collect();
    let nonconverged_rows = (0..k)
        .filter(|&row| partials.iter().any(|p| !p.converged[row]))
        .collect();
    Ok(FittedSeminorm {
        seminorm: Seminorm::new(forms, x.to_vec())?,
        partials,
        nonconverged_rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub radius: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderReport {
    pub rows: Vec<ResidualRow>,
    /// Residuals never increase along the radius schedule.
    pub decreasing: bool,
    pub final_residual: f64,
}

/// `max_nu |d(f(x + r nu), f(x)) - sigma(r nu)| / r` per radius.
pub fn first_order_residual<S>(
    f: &MapOracle,
    sigma: S,
    x: &[f64],
    radii: &[f64],
    fan: &[Vec<f64>],
) -> Result<FirstOrderReport>
where
    S: Fn(&[f64]) -> f64 + Sync,
{
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii[0] <= 0.0 {
        return Err(Error::invalid("radii must be positive and strictly decreasing"));
    }
    let reach = fan
        .iter()
        .map(|v| crate::fan::euclid_norm(v))
        .fold(0.0, f64::max);
    f.require_clearance(x, radii[0] * reach)?;
    let fx = f.eval_raw(x);
    let rows: Vec<ResidualRow> = radii
        .iter()
        .map(|&r| {
            let max_residual = fan
                .par_iter()
                .map(|nu| {
                    let y: Vec<f64> = x.iter().zip(nu).map(|(a, v)| a + r * v).collect();
                    let scaled: Vec<f64> = nu.iter().map(|v| r * v).collect();
                    (f.target().dist(&f.eval_raw(&y), &fx) - sigma(&scaled)).abs() / r
                })
                .reduce(|| 0.0, f64::max);
            ResidualRow {
                radius: r,
                max_residual,
            }
        })
        .collect();
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].max_residual <= w[0].max_residual);
    let final_residual = rows[rows.len() - 1].max_residual;
    Ok(FirstOrderReport {
        rows,
        decreasing,
        final_residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomDefects {
    /// `max |sigma(t nu) - |t| sigma(nu)|`.
    pub homogeneity: f64,
    /// `max(0, sigma(nu + mu) - sigma(nu) - sigma(mu))`.
    pub subadditivity: f64,
    pub min_value: f64,
}

/// Axiom defects of any candidate seminorm over sampled directions.
pub fn seminorm_axiom_check<S>(sigma: S, directions: &[Vec<f64>], scalars: &[f64]) -> AxiomDefects
where
    S: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = directions.iter().map(|v| sigma(v)).collect();
    let mut homogeneity = 0.0_f64;
    for (nu, s) in directions.iter().zip(&values) {
        for &t in scalars {
            let scaled: Vec<f64> = nu.iter().map(|v| t * v).collect();
            homogeneity = homogeneity.max((sigma(&scaled) - t.abs() * s).abs());
        }
    }
    let subadditivity = (0..directions.len())
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0_f64;
            for j in 0..directions.len() {
                let sum: Vec<f64> = directions[i]
                    .iter()
                    .zip(&directions[j])
                    .map(|(a, b)| a + b)
                    .collect();
                worst = worst.max(sigma(&sum) - values[i] - values[j]);
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    AxiomDefects {
        homogeneity,
        subadditivity,
        min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionGap {
    pub direction: Vec<f64>,
    pub sigma: f64,
    pub metric_derivative: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub gaps: Vec<DirectionGap>,
    pub max_gap: f64,
    pub nonconverged: usize,
}

/// Compares `sigma` with independently estimated metric derivatives.
pub fn directional_consistency<S>(
    f: &MapOracle,
    sigma: S,
    x: &[f64],
    fan: &[Vec<f64>],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<ConsistencyReport>
where
    S: Fn(&[f64]) -> f64 + Sync,
{
    let gaps = fan
        .par_iter()
        .map(|nu| {
            let md = metric_directional_derivative(f, x, nu, schedule, tol)?;
            Ok(DirectionGap {
                direction: nu.clone(),
                sigma: sigma(nu),
                metric_derivative: md.value,
                converged: md.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gap = gaps
        .iter()
        .map(|g| (g.sigma - g.metric_derivative).abs())
        .fold(0.0, f64::max);
    let nonconverged = gaps.iter().filter(|g| !g.converged).count();
    Ok(ConsistencyReport {
        gaps,
        max_gap,
        nonconverged,
    })
}
