use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Grid, GridFunction};
use super::norm::{w1p_norm, SobolevNormReport};
use crate::derivatives::{
    truncated_norm, truncated_partials, MapOracle, StepSchedule, DEFAULT_HALVINGS,
};
use crate::error::{Error, Result};
use crate::gauge::GaugeSequence;
use crate::spaces::{MetricSpace, Point};

pub(crate) fn radial_truncation_raw(space: &MetricSpace, v: &[f64], radius: f64) -> Vec<f64> {
    let norm = space.norm_raw(v).unwrap_or(0.0);
    if norm <= radius {
        v.to_vec()
    } else {
        let mut w: Vec<f64> = v.iter().map(|x| radius * x / norm).collect();
        while space.norm_raw(&w).unwrap_or(0.0) > radius {
            w.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
        }
        w
    }
}

/// Radial retraction onto the closed ball of radius `radius`.
pub fn radial_truncation(space: &MetricSpace, v: &Point, radius: f64) -> Result<Point> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("truncation radius must be positive"));
    }
    space.norm(v)?;
    Ok(Point::new(radial_truncation_raw(space, v.coords(), radius)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReshetnyakReport {
    pub checked_nodes: usize,
    pub violating_nodes: usize,
    /// `max(|grad(phi_k o f)| - g)` over checked nodes and functionals.
    pub max_violation: f64,
    pub excluded_nonconverged: usize,
    pub excluded_boundary: usize,
    /// `g*(x) = (sum_j ‖d°_j f(x)‖^2)^(1/2)` on the candidate's grid.
    pub canonical: GridFunction,
    /// `g >= g* - tol` on every checked node.
    pub dominates_canonical: bool,
}

/// Checks `|grad(phi_k o f)(x)| <= g(x) + tol` for every gauge functional.
pub fn reshetnyak_gradient_check(
    f: &MapOracle,
    candidate: &GridFunction,
    gauge: &GaugeSequence,
    tol: f64,
) -> Result<ReshetnyakReport> {
    let grid = candidate.grid();
    if grid.dim() != f.domain().dim() {
        return Err(Error::DimensionMismatch {
            expected: f.domain().dim(),
            actual: grid.dim(),
        });
    }
    enum Node {
        Boundary,
        Nonconverged,
        Checked { worst: f64, canonical: f64 },
    }
    let nodes: Vec<usize> = grid.active_nodes().collect();
    let outcomes = nodes
        .par_iter()
        .map(|&i| {
            let x = grid.node(i);
            if f.domain().clearance(&x) <= 0.0 {
                return Ok(Node::Boundary);
            }
            let schedule = StepSchedule::for_point(f.domain(), &x, 1.0, DEFAULT_HALVINGS)?;
            let partials = truncated_partials(f, gauge, &x, &schedule, tol)?;
            if partials.iter().any(|p| p.diagnostic_failed()) {
                return Ok(Node::Nonconverged);
            }
            let g = candidate.values()[i];
            let worst = (0..gauge.len())
                .map(|k| {
                    let grad = partials
                        .iter()
                        .map(|p| p.pairings[k] * p.pairings[k])
                        .sum::<f64>()
                        .sqrt();
                    grad - g
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let canonical = partials
                .iter()
                .map(|p| truncated_norm(p).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(Node::Checked { worst, canonical })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report_canonical = vec![0.0; grid.len()];
    let (mut checked, mut violating, mut nonconverged, mut boundary) = (0, 0, 0, 0);
    let mut max_violation = f64::NEG_INFINITY;
    let mut dominates = true;
    for (&i, outcome) in nodes.iter().zip(outcomes) {
        match outcome {
            Node::Boundary => boundary += 1,
            Node::Nonconverged => nonconverged += 1,
            Node::Checked { worst, canonical } => {
                checked += 1;
                if worst > tol {
                    violating += 1;
                }
                max_violation = max_violation.max(worst);
                report_canonical[i] = canonical;
                if candidate.values()[i] < canonical - tol {
                    dominates = false;
                }
            }
        }
    }
    Ok(ReshetnyakReport {
        checked_nodes: checked,
        violating_nodes: violating,
        max_violation,
        excluded_nonconverged: nonconverged,
        excluded_boundary: boundary,
        canonical: GridFunction::new(grid.clone(), report_canonical)?,
        dominates_canonical: dominates,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct W1pRow {
    pub h: f64,
    pub norm: SobolevNormReport,
    /// Ball nodes whose shift `x + h nu` left the domain.
    pub excluded_nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct W1pReport {
    pub p: f64,
    pub rows: Vec<W1pRow>,
    pub nonincreasing: bool,
    pub final_value: f64,
}

/// `eta_h(nu) = d(f(x + h nu), f(x)) / h - sigma(nu)` on the ball grid.
pub fn difference_quotient_field<S>(
    f: &MapOracle,
    sigma: &S,
    x: &[f64],
    h: f64,
    ball: &Grid,
) -> Result<(GridFunction, usize)>
where
    S: Fn(&[f64]) -> f64 + Sync,
{
    let mut grid = ball.clone();
    let mut excluded = 0;
    grid.restrict(|nu| {
        let y: Vec<f64> = x.iter().zip(nu).map(|(a, v)| a + h * v).collect();
        f.domain().contains(&y)
    });
    excluded += ball.active_count() - grid.active_count();
    let fx = f.eval_raw(x);
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !grid.is_active(i) {
                return 0.0;
            }
            let nu = grid.node(i);
            let y: Vec<f64> = x.iter().zip(&nu).map(|(a, v)| a + h * v).collect();
            f.target().dist(&f.eval_raw(&y), &fx) / h - sigma(&nu)
        })
        .collect();
    Ok((GridFunction::new(grid, values)?, excluded))
}

pub fn w1p_differentiability_check<S>(
    f: &MapOracle,
    sigma: S,
    x: &[f64],
    p: f64,
    h_schedule: &StepSchedule,
    ball: &Grid,
) -> Result<W1pReport>
where
    S: Fn(&[f64]) -> f64 + Sync,
{
    if ball.dim() != f.domain().dim() {
        return Err(Error::DimensionMismatch {
            expected: f.domain().dim(),
            actual: ball.dim(),
        });
    }
    f.require_clearance(x, h_schedule.max_step())?;
    let rows = h_schedule
        .steps()
        .iter()
        .map(|&h| {
            let (eta, excluded_nodes) = difference_quotient_field(f, &sigma, x, h, ball)?;
            Ok(W1pRow {
                h,
                norm: w1p_norm(&eta, p)?,
                excluded_nodes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = rows.windows(2).all(|w| w[1].norm.total <= w[0].norm.total);
    let final_value = rows[rows.len() - 1].norm.total;
    Ok(W1pReport {
        p,
        rows,
        nonincreasing,
        final_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivatives::DomainBox;
    use crate::gauge::build_kuratowski_gauge;
    use crate::spaces::Exponent;

    fn diag() -> MapOracle {
        MapOracle::new(
            "diag",
            DomainBox::cube(2, -1.0, 1.0).unwrap(),
            MetricSpace::euclidean(2).unwrap(),
            |x| vec![x[0], 2.0 * x[1]],
        )
    }

    #[test]
    fn truncation_basics() {
        let s = MetricSpace::euclidean(2).unwrap();
        let v = Point::new(vec![0.0, 2.0]);
        assert_eq!(radial_truncation(&s, &v, 1.0).unwrap().coords(), &[0.0, 1.0]);
        let w = Point::new(vec![0.3, 0.4]);
        assert_eq!(radial_truncation(&s, &w, 1.0).unwrap(), w);
        let snow = MetricSpace::snowflake(&s, 0.5).unwrap();
        assert!(matches!(radial_truncation(&snow, &w, 1.0), Err(Error::NotNormed(_))));
        assert!(radial_truncation(&s, &w, 0.0).is_err());
    }

    #[test]
    fn operator_norm_majorant_has_no_violations() {
        let f = diag();
        let g = Grid::over_box(f.domain(), 0.25).unwrap();
        let gauge = build_kuratowski_gauge(f.target(), &f.lattice_image(4).unwrap()).unwrap();
        let cand = GridFunction::constant(&g, 2.0).unwrap();
        let r = reshetnyak_gradient_check(&f, &cand, &gauge, 1e-6).unwrap();
        assert_eq!(r.violating_nodes, 0);
        assert!(r.checked_nodes > 0);
        // canonical candidate is sqrt(1 + 4) > 2
        assert!(!r.dominates_canonical);
        let r = reshetnyak_gradient_check(&f, &GridFunction::constant(&g, 2.5).unwrap(), &gauge, 1e-6)
            .unwrap();
        assert!(r.dominates_canonical);

        let zero = GridFunction::constant(&g, 0.0).unwrap();
        let r = reshetnyak_gradient_check(&f, &zero, &gauge, 1e-6).unwrap();
        assert!(r.violating_nodes * 2 > r.checked_nodes);
    }

    #[test]
    fn l1_curve_unit_majorant() {
        let cells = 128;
        let target = MetricSpace::discretized_lebesgue(cells, Exponent::Finite(1.0), 1.0).unwrap();
        let f = MapOracle::new("l1", DomainBox::cube(1, 0.0, 1.0).unwrap(), target, move |t| {
            let w = 1.0 / cells as f64;
            (0..cells).map(|i| ((t[0] - i as f64 * w) / w).clamp(0.0, 1.0)).collect()
        });
        let g = Grid::over_box(f.domain(), 1.0 / 16.0).unwrap();
        let gauge = build_kuratowski_gauge(f.target(), &f.lattice_image(9).unwrap()).unwrap();
        let r = reshetnyak_gradient_check(&f, &GridFunction::constant(&g, 1.0).unwrap(), &gauge, 1e-6)
            .unwrap();
        assert_eq!(r.violating_nodes, 0);
    }

    #[test]
    fn linear_map_quotient_field_vanishes() {
        let f = diag();
        let ball = Grid::unit_ball(2, 32).unwrap();
        let s = StepSchedule::geometric(0.2, 3).unwrap();
        let sigma = |nu: &[f64]| (nu[0] * nu[0] + 4.0 * nu[1] * nu[1]).sqrt();
        for p in [1.0, 2.0] {
            let r = w1p_differentiability_check(&f, sigma, &[0.1, 0.2], p, &s, &ball).unwrap();
            assert!(r.final_value <= 1e-10);
            assert!(r.rows.iter().all(|row| row.excluded_nodes == 0));
        }
        assert!(matches!(
            w1p_differentiability_check(&f, sigma, &[0.9, 0.0], 1.0, &s, &ball),
            Err(Error::Clearance { .. })
        ));
    }
}
