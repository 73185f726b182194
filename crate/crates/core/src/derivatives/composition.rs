use serde::Serialize;

use super::{
    central_pairings, gauge_fingerprint, truncated_weak_weak_star_derivative,
    MapOracle, StepSchedule, TruncatedFunctional,
};
use crate::error::{Error, Result};
use crate::gauge::GaugeSequence;
use crate::sobolev::radial_truncation_raw;
use crate::spaces::{Exponent, MetricSpace};

/// Catalog of Lipschitz maps `psi: X -> Y` used to post-compose scenarios.
#[derive(Clone, Debug)]
pub enum TargetMap {
    Identity,
    /// `v -> c v` on a normed space.
    Scale(f64),
    /// Radial retraction onto the closed ball of the given radius.
    RadialTruncation { radius: f64 },
    /// Isometric shift; moves the base point, so it is rejected by
    /// [`composition_check`].
    Translate(Vec<f64>),
    /// Truncated Kuratowski embedding into `lp(K, inf)`.
    Kuratowski(GaugeSequence),
}

impl TargetMap {
    pub fn name(&self) -> String {
        match self {
            TargetMap::Identity => "identity".into(),
            TargetMap::Scale(c) => format!("scale({c})"),
            TargetMap::RadialTruncation { radius } => format!("radial_truncation({radius})"),
            TargetMap::Translate(_) => "translate".into(),
            TargetMap::Kuratowski(g) => format!("kuratowski({})", g.len()),
        }
    }

    /// Declared Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match self {
            TargetMap::Scale(c) => c.abs(),
            TargetMap::RadialTruncation { .. } => 2.0,
            _ => 1.0,
        }
    }

    pub fn output_space(&self, source: &MetricSpace) -> Result<MetricSpace> {
        self.validate(source)?;
        match self {
            TargetMap::Kuratowski(g) => MetricSpace::lp(g.len(), Exponent::Infinity),
            _ => Ok(source.clone()),
        }
    }

    fn validate(&self, source: &MetricSpace) -> Result<()> {
        match self {
            TargetMap::Identity => Ok(()),
            TargetMap::Scale(c) if !c.is_finite() => Err(Error::invalid("non-finite scale")),
            TargetMap::RadialTruncation { radius } if !(*radius > 0.0) => {
                Err(Error::invalid("truncation radius must be positive"))
            }
            TargetMap::Scale(_) | TargetMap::RadialTruncation { .. } => {
                if source.is_normed() {
                    Ok(())
                } else {
                    Err(Error::NotNormed(source.id()))
                }
            }
            TargetMap::Translate(shift) => {
                if !source.is_normed() {
                    return Err(Error::NotNormed(source.id()));
                }
                if shift.len() != source.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: source.dim(),
                        actual: shift.len(),
                    });
                }
                Ok(())
            }
            TargetMap::Kuratowski(g) => {
                if g.space() != source {
                    return Err(Error::invalid("embedding gauge lives on another space"));
                }
                Ok(())
            }
        }
    }

    pub(crate) fn apply_raw(&self, source: &MetricSpace, v: &[f64]) -> Vec<f64> {
        match self {
            TargetMap::Identity => v.to_vec(),
            TargetMap::Scale(c) => v.iter().map(|x| c * x).collect(),
            TargetMap::RadialTruncation { radius } => radial_truncation_raw(source, v, *radius),
            TargetMap::Translate(shift) => v.iter().zip(shift).map(|(a, b)| a + b).collect(),
            TargetMap::Kuratowski(g) => g.embed_raw(v, g.len()),
        }
    }
}

impl MapOracle {
    /// `psi o f`, with the Lipschitz bound multiplied through when known.
    pub fn compose(&self, psi: &TargetMap) -> Result<MapOracle> {
        let source = self.target().clone();
        let target = psi.output_space(&source)?;
        let inner = self.clone();
        let outer = psi.clone();
        let composed = self.rewrap(
            format!("{}.{}", psi.name(), self.name()),
            target,
            move |x| outer.apply_raw(&source, &inner.eval_raw(x)),
        );
        Ok(match self.lipschitz_bound() {
            Some(l) => composed.with_lipschitz_bound(l * psi.lipschitz()),
            None => composed,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub map: String,
    /// `max_k |<phi_k, d(psi o f)> - <phi_k o psi, d f>|`.
    pub identity_defect: f64,
    pub composed_norm: f64,
    pub source_norm: f64,
    pub lipschitz: f64,
    /// `max(0, composed_norm - Lip(psi) * source_norm)`.
    pub inequality_defect: f64,
    /// Pairings left out because a finite-difference diagnostic failed.
    pub excluded_entries: usize,
    /// Some pairing on each side converged.
    pub converged: bool,
}

/// Checks the chain identity for pairings and the Lipschitz norm bound.
///
/// The left-hand side differentiates the composed oracle against the
/// target gauge; the right-hand side differentiates `f` against the pulled
/// back functionals `phi_k o psi`.
#[allow(clippy::too_many_arguments)]
pub fn composition_check(
    f: &MapOracle,
    psi: &TargetMap,
    source_gauge: &GaugeSequence,
    target_gauge: &GaugeSequence,
    x: &[f64],
    nu: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<CompositionReport> {
    let source = f.target();
    let image_of_base = psi.apply_raw(source, source.base_point().coords());
    let out_space = psi.output_space(source)?;
    if out_space.dist(&image_of_base, out_space.base_point().coords()) != 0.0 {
        return Err(Error::invalid(format!(
            "{} does not map the base point to the base point",
            psi.name()
        )));
    }
    let composed = f.compose(psi)?;
    let lhs = truncated_weak_weak_star_derivative(&composed, target_gauge, x, nu, schedule, tol)?;

    let k = target_gauge.len();
    let (pulled, pulled_converged) = central_pairings(f, x, nu, schedule, tol, |v| {
        target_gauge.embed_raw(&psi.apply_raw(source, v), k)
    })?;
    let rhs = TruncatedFunctional {
        pairings: pulled,
        converged: pulled_converged,
        gauge_id: gauge_fingerprint(target_gauge),
    };
    let both: Vec<bool> = lhs
        .converged
        .iter()
        .zip(&rhs.converged)
        .map(|(a, b)| *a && *b)
        .collect();
    let identity_defect = lhs
        .pairings
        .iter()
        .zip(&rhs.pairings)
        .zip(&both)
        .filter(|(_, ok)| **ok)
        .fold(0.0_f64, |acc, ((a, b), _)| acc.max((a - b).abs()));

    let base = truncated_weak_weak_star_derivative(f, source_gauge, x, nu, schedule, tol)?;
    let composed_norm = lhs.converged_norm();
    let source_norm = base.converged_norm();
    let lipschitz = psi.lipschitz();
    let paired = both.iter().filter(|b| **b).count();
    Ok(CompositionReport {
        map: psi.name(),
        identity_defect,
        composed_norm,
        source_norm,
        lipschitz,
        inequality_defect: (composed_norm - lipschitz * source_norm).max(0.0),
        excluded_entries: (both.len() - paired) + (base.len() - base.converged_count()),
        converged: paired > 0 && base.converged_count() > 0,
    })
}
