//! Metric differentials of Sobolev and Lipschitz maps into metric spaces,
//! computed numerically.

pub mod derivatives;
pub mod error;
pub mod fan;
pub mod gauge;
pub mod lab;
pub mod linear_target;
pub mod seminorm;
pub mod sobolev;
pub mod spaces;

pub use derivatives::{
    metric_directional_derivative, truncated_norm, truncated_weak_weak_star_derivative,
    DerivativeEstimate, DomainBox, MapOracle, StepSchedule, TargetMap, TruncatedFunctional,
};
pub use error::{Error, Result};
pub use gauge::{build_kuratowski_gauge, gauge_quality_audit, GaugeSequence};
pub use linear_target::{dual_gradient, md_from_dual, DualRole, DualTestSet};
pub use seminorm::{fit_metric_differential, FittedSeminorm, Seminorm};
pub use spaces::{Exponent, MetricSpace, Point, SpaceKind};
