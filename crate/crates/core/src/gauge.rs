//! Kuratowski gauge sequences: 1-Lipschitz functionals vanishing at the
//! base point whose pairwise sup recovers the distance on their sample.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spaces::{MetricSpace, Point};

/// `x -> d(anchor, x) - d(anchor, z0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeFunctional {
    anchor: Point,
    offset: f64,
}

impl GaugeFunctional {
    pub fn new(space: &MetricSpace, anchor: Point) -> Result<Self> {
        let offset = space.distance(&anchor, space.base_point())?;
        Ok(GaugeFunctional { anchor, offset })
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub(crate) fn eval_raw(&self, space: &MetricSpace, x: &[f64]) -> f64 {
        space.dist(self.anchor.coords(), x) - self.offset
    }
}

/// Ordered gauge `(phi_1, ..., phi_K)` over one space.
#[derive(Clone, Debug, Serialize)]
pub struct GaugeSequence {
    space: MetricSpace,
    functionals: Vec<GaugeFunctional>,
}

/// Anchors are taken from `sample` in insertion order.
pub fn build_kuratowski_gauge(space: &MetricSpace, sample: &[Point]) -> Result<GaugeSequence> {
    if sample.is_empty() {
        return Err(Error::invalid("gauge sample is empty"));
    }
    let functionals = sample
        .iter()
        .map(|x| GaugeFunctional::new(space, x.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(GaugeSequence {
        space: space.clone(),
        functionals,
    })
}

impl GaugeSequence {
    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn functionals(&self) -> &[GaugeFunctional] {
        &self.functionals
    }

    pub fn anchors(&self) -> impl Iterator<Item = &Point> {
        self.functionals.iter().map(GaugeFunctional::anchor)
    }

    /// Gauge restricted to its first `k` functionals.
    pub fn prefix(&self, k: usize) -> Result<GaugeSequence> {
        self.check_count(k)?;
        Ok(GaugeSequence {
            space: self.space.clone(),
            functionals: self.functionals[..k].to_vec(),
        })
    }

    pub fn evaluate(&self, k: usize, x: &Point) -> Result<f64> {
        self.space.check_point(x)?;
        let phi = self
            .functionals
            .get(k)
            .ok_or_else(|| Error::invalid(format!("functional index {k} out of range")))?;
        Ok(phi.eval_raw(&self.space, x.coords()))
    }

    /// Truncated Kuratowski embedding `x -> (phi_1(x), ..., phi_K(x))`.
    pub fn embed(&self, x: &Point, k: usize) -> Result<Vec<f64>> {
        self.check_count(k)?;
        self.space.check_point(x)?;
        Ok(self.embed_raw(x.coords(), k))
    }

    pub(crate) fn embed_raw(&self, x: &[f64], k: usize) -> Vec<f64> {
        self.functionals[..k]
            .iter()
            .map(|phi| phi.eval_raw(&self.space, x))
            .collect()
    }

    pub fn gauge_distance(&self, x: &Point, y: &Point, k: usize) -> Result<f64> {
        let ex = self.embed(x, k)?;
        let ey = self.embed(y, k)?;
        Ok(ex
            .iter()
            .zip(&ey)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }

    fn check_count(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::invalid("gauge truncation K must be positive"));
        }
        if k > self.len() {
            return Err(Error::invalid(format!(
                "gauge truncation K = {k} exceeds gauge length {}",
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub k: usize,
    /// `max (d - gauge_distance) / d` over the audited pairs.
    pub max_relative_underestimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeAudit {
    pub rows: Vec<AuditRow>,
    /// Indices of coincident pairs left out of the audit.
    pub skipped_pairs: Vec<usize>,
}

pub fn gauge_quality_audit(
    gauge: &GaugeSequence,
    pairs: &[(Point, Point)],
    k_schedule: &[usize],
) -> Result<GaugeAudit> {
    let space = gauge.space();
    let mut skipped_pairs = Vec::new();
    let mut usable = Vec::new();
    for (i, (x, y)) in pairs.iter().enumerate() {
        let d = space.distance(x, y)?;
        if d == 0.0 {
            skipped_pairs.push(i);
        } else {
            usable.push((x, y, d));
        }
    }
    let rows = k_schedule
        .iter()
        .map(|&k| {
            let mut worst = 0.0_f64;
            for (x, y, d) in &usable {
                let g = gauge.gauge_distance(x, y, k)?;
                worst = worst.max((d - g) / d);
            }
            Ok(AuditRow {
                k,
                max_relative_underestimate: worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaugeAudit {
        rows,
        skipped_pairs,
    })
}
