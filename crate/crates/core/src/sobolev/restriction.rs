use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Grid, GridFunction};
use super::maximal::maximal_function;
use crate::derivatives::MapOracle;
use crate::error::{Error, Result};
use crate::spaces::MetricSpace;

/// Tabulation of a map on the active nodes of a grid.
#[derive(Clone, Debug)]
pub struct SampledMap {
    grid: Grid,
    target: MetricSpace,
    images: Vec<Vec<f64>>,
}

impl SampledMap {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn target(&self) -> &MetricSpace {
        &self.target
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i]
    }
}

impl MapOracle {
    pub fn tabulate(&self, grid: &Grid) -> Result<SampledMap> {
        let images = (0..grid.len())
            .map(|i| {
                if grid.is_active(i) {
                    self.eval(&grid.node(i)).map(|p| p.into_coords())
                } else {
                    Ok(Vec::new())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledMap {
            grid: grid.clone(),
            target: self.target().clone(),
            images,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionResult {
    pub t: f64,
    pub kept_nodes: Vec<usize>,
    /// Nodes of `E_t = {Mh >= t}`.
    pub excluded_nodes: Vec<usize>,
    pub empirical_lipschitz_constant: f64,
    pub measure_excluded: f64,
    /// `constant^p * measure_excluded`.
    pub lipschitz_measure_product: f64,
    /// Every node was excluded.
    pub degenerate: bool,
}

/// Restriction with a precomputed maximal function `mh`.
pub fn restrict_with_maximal(
    sampled: &SampledMap,
    mh: &GridFunction,
    t: f64,
    p: f64,
) -> Result<RestrictionResult> {
    if !(t > 0.0) {
        return Err(Error::invalid("threshold t must be positive"));
    }
    let grid = sampled.grid();
    if mh.grid() != grid {
        return Err(Error::invalid("majorant lives on another grid"));
    }
    let (excluded_nodes, kept_nodes): (Vec<usize>, Vec<usize>) =
        grid.active_nodes().partition(|&i| mh.values()[i] >= t);
    let nodes: Vec<Vec<f64>> = kept_nodes.iter().map(|&i| grid.node(i)).collect();
    let target = sampled.target();
    let constant = (0..kept_nodes.len())
        .into_par_iter()
        .map(|a| {
            let mut best = 0.0_f64;
            for b in (a + 1)..kept_nodes.len() {
                let r = nodes[a]
                    .iter()
                    .zip(&nodes[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let d = target.dist(sampled.image(kept_nodes[a]), sampled.image(kept_nodes[b]));
                best = best.max(d / r);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    let measure_excluded = excluded_nodes.len() as f64 * grid.cell_volume();
    Ok(RestrictionResult {
        t,
        degenerate: kept_nodes.is_empty(),
        kept_nodes,
        excluded_nodes,
        empirical_lipschitz_constant: constant,
        measure_excluded,
        lipschitz_measure_product: constant.powf(p) * measure_excluded,
    })
}

pub fn lipschitz_restriction(
    sampled: &SampledMap,
    majorant: &GridFunction,
    t: f64,
    p: f64,
) -> Result<RestrictionResult> {
    check_majorant(majorant)?;
    let mh = maximal_function(majorant)?;
    restrict_with_maximal(sampled, &mh, t, p)
}

/// Restrictions over a threshold schedule sharing one maximal function.
pub fn restriction_schedule(
    sampled: &SampledMap,
    majorant: &GridFunction,
    thresholds: &[f64],
    p: f64,
) -> Result<Vec<RestrictionResult>> {
    check_majorant(majorant)?;
    let mh = maximal_function(majorant)?;
    thresholds
        .iter()
        .map(|&t| restrict_with_maximal(sampled, &mh, t, p))
        .collect()
}

fn check_majorant(h: &GridFunction) -> Result<()> {
    if h.values().iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("majorant must be nonnegative"));
    }
    Ok(())
}
