//! Discrete Sobolev machinery on cell-centred grids.

mod checks;
mod grid;
mod maximal;
mod norm;
mod restriction;

pub use checks::{
    difference_quotient_field, radial_truncation, reshetnyak_gradient_check,
    w1p_differentiability_check, ReshetnyakReport, W1pReport, W1pRow,
};
pub(crate) use checks::radial_truncation_raw;
pub use grid::{Grid, GridFunction};
pub use maximal::maximal_function;
pub use norm::{lp_norm, partial_derivative, w1p_norm, SobolevNormReport};
pub use restriction::{
    lipschitz_restriction, restrict_with_maximal, restriction_schedule, RestrictionResult,
    SampledMap,
};
