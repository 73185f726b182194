use serde::Serialize;

use super::{truncated_norm, truncated_partials, DomainBox, MapOracle, StepSchedule};
use crate::error::{Error, Result};
use crate::gauge::GaugeSequence;

#[derive(Clone, Debug, Serialize)]
pub struct LocalityRow {
    pub point: Vec<f64>,
    /// `|‖d°_j f1‖ - ‖d°_j f2‖|` per axis.
    pub axis_mismatch: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalityReport {
    pub premise_samples: usize,
    pub rows: Vec<LocalityRow>,
    /// Test points within one step of the region boundary.
    pub excluded: Vec<Vec<f64>>,
    pub max_mismatch: f64,
}

/// Compares truncated partial norms of two maps that agree on `region`.
#[allow(clippy::too_many_arguments)]
pub fn locality_check(
    f1: &MapOracle,
    f2: &MapOracle,
    region: &DomainBox,
    gauge: &GaugeSequence,
    points: &[Vec<f64>],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<LocalityReport> {
    if f1.domain() != f2.domain() || f1.target() != f2.target() {
        return Err(Error::invalid("maps must share domain and target"));
    }
    let mut premise: Vec<Vec<f64>> = region.lattice(9);
    premise.extend(points.iter().filter(|x| region.contains(x)).cloned());
    for y in &premise {
        let a = f1.eval(y)?;
        let b = f2.eval(y)?;
        if f1.target().dist(a.coords(), b.coords()) != 0.0 {
            return Err(Error::Premise(format!("maps differ at {y:?} inside the region")));
        }
    }

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for x in points {
        if region.clearance(x) < schedule.max_step() {
            excluded.push(x.clone());
            continue;
        }
        let d1 = truncated_partials(f1, gauge, x, schedule, tol)?;
        let d2 = truncated_partials(f2, gauge, x, schedule, tol)?;
        let axis_mismatch = d1
            .iter()
            .zip(&d2)
            .map(|(a, b)| (truncated_norm(a) - truncated_norm(b)).abs())
            .collect();
        rows.push(LocalityRow {
            point: x.clone(),
            axis_mismatch,
        });
    }
    let max_mismatch = rows
        .iter()
        .flat_map(|r| r.axis_mismatch.iter().copied())
        .fold(0.0, f64::max);
    Ok(LocalityReport {
        premise_samples: premise.len(),
        rows,
        excluded,
        max_mismatch,
    })
}
