use serde::Serialize;

use super::grid::GridFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolevNormReport {
    pub p: f64,
    pub lp_part: f64,
    pub gradient_parts: Vec<f64>,
    /// `lp_part + sum(gradient_parts)`.
    pub total: f64,
}

/// Discrete partial derivative along `axis`: central differences where
/// both neighbours are active, one-sided otherwise, zero for isolated nodes.
pub fn partial_derivative(u: &GridFunction, axis: usize) -> Result<GridFunction> {
    let grid = u.grid();
    if axis >= grid.dim() {
        return Err(Error::invalid(format!("axis {axis} out of range")));
    }
    let h = grid.spacing();
    let v = u.values();
    let values = (0..grid.len())
        .map(|i| {
            if !grid.is_active(i) {
                return 0.0;
            }
            match (grid.neighbor(i, axis, false), grid.neighbor(i, axis, true)) {
                (Some(a), Some(b)) => (v[b] - v[a]) / (2.0 * h),
                (None, Some(b)) => (v[b] - v[i]) / h,
                (Some(a), None) => (v[i] - v[a]) / h,
                (None, None) => 0.0,
            }
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// Cell-volume weighted `L^p` norm over active nodes.
pub fn lp_norm(u: &GridFunction, p: f64) -> f64 {
    let grid = u.grid();
    let w = grid.cell_volume();
    let sum: f64 = grid
        .active_nodes()
        .map(|i| u.values()[i].abs().powf(p))
        .sum();
    (w * sum).powf(1.0 / p)
}

pub fn w1p_norm(u: &GridFunction, p: f64) -> Result<SobolevNormReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("Sobolev exponent {p} outside [1, inf)")));
    }
    if u.grid().shape().iter().any(|&s| s < 3) {
        return Err(Error::invalid("grid needs at least 3 nodes per axis"));
    }
    let lp_part = lp_norm(u, p);
    let gradient_parts = (0..u.grid().dim())
        .map(|j| partial_derivative(u, j).map(|d| lp_norm(&d, p)))
        .collect::<Result<Vec<_>>>()?;
    let total = lp_part + gradient_parts.iter().sum::<f64>();
    Ok(SobolevNormReport {
        p,
        lp_part,
        gradient_parts,
        total,
    })
}
