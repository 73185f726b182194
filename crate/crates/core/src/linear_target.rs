//! Normed targets: gradients against dual test functionals and recovery of
//! the metric differential as a sup over normalized dual pairings.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::derivatives::{central_pairings, MapOracle, StepSchedule};
use crate::error::{Error, Result};
use crate::fan::euclid_norm;
use crate::spaces::{MetricSpace, SpaceKind};

/// Which gradient a test set exercises; the numerics coincide in finite
/// dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualRole {
    /// Functionals from `V*` acting on `f: Omega -> V` (bidual gradient).
    Bidual,
    /// Predual vectors acting on `f: Omega -> V*` (dual gradient).
    Dual,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualFunctional {
    pub coeffs: Vec<f64>,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualTestSet {
    space: MetricSpace,
    functionals: Vec<DualFunctional>,
    pub role: DualRole,
}

impl DualTestSet {
    pub fn new(space: &MetricSpace, coeffs: Vec<Vec<f64>>, role: DualRole) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("empty dual test set"));
        }
        let functionals = coeffs
            .into_iter()
            .map(|c| {
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("dual coefficients must be finite"));
                }
                let norm = space.dual_norm(&c)?;
                if !(norm > 0.0) {
                    return Err(Error::invalid("dual functional has zero norm"));
                }
                Ok(DualFunctional { coeffs: c, norm })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DualTestSet {
            space: space.clone(),
            functionals,
            role,
        })
    }

    /// Coordinate functionals `e_k*`.
    pub fn coordinate(space: &MetricSpace) -> Result<Self> {
        let m = space.dim();
        let coeffs = (0..m)
            .map(|k| {
                let mut c = vec![0.0; m];
                c[k] = 1.0;
                c
            })
            .collect();
        Self::new(space, coeffs, DualRole::Bidual)
    }

    /// `count` equispaced unit directions over a half circle (2D targets).
    pub fn circle(space: &MetricSpace, count: usize) -> Result<Self> {
        if space.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: space.dim(),
            });
        }
        let coeffs = (0..count)
            .map(|i| {
                let theta = std::f64::consts::PI * i as f64 / count as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        Self::new(space, coeffs, DualRole::Bidual)
    }

    /// Gaussian directions from a seeded generator.
    pub fn random_unit(space: &MetricSpace, count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = space.dim();
        let coeffs = (0..count)
            .map(|_| {
                let v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                let n = euclid_norm(&v).max(f64::MIN_POSITIVE);
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        Self::new(space, coeffs, DualRole::Bidual)
    }

    /// Indicators of `pieces` equal subintervals of a discretized Lebesgue
    /// space, each of unit sup norm.
    pub fn step_functions(space: &MetricSpace, pieces: usize) -> Result<Self> {
        let cells = match space.kind() {
            SpaceKind::DiscretizedLebesgue { cells, .. } => *cells,
            _ => return Err(Error::invalid("step functionals need a discretized Lebesgue space")),
        };
        if pieces == 0 || cells % pieces != 0 {
            return Err(Error::invalid(format!("{pieces} pieces do not split {cells} cells")));
        }
        let width = cells / pieces;
        let coeffs = (0..pieces)
            .map(|j| (0..cells).map(|i| if i / width == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(space, coeffs, DualRole::Bidual)
    }

    pub fn with_role(mut self, role: DualRole) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    pub fn functionals(&self) -> &[DualFunctional] {
        &self.functionals
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    /// Union of two test sets on the same space.
    pub fn extend(&self, other: &DualTestSet) -> Result<DualTestSet> {
        if self.space != other.space {
            return Err(Error::invalid("test sets live on different spaces"));
        }
        let mut functionals = self.functionals.clone();
        functionals.extend(other.functionals.iter().cloned());
        Ok(DualTestSet {
            space: self.space.clone(),
            functionals,
            role: self.role,
        })
    }

    fn pair_all(&self, v: &[f64]) -> Vec<f64> {
        self.functionals
            .iter()
            .map(|d| self.space.pairing(&d.coeffs, v).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Rows `<v*_k, d_j f(x)>`, `K x n`.
#[derive(Clone, Debug, Serialize)]
pub struct DualGradient {
    pub rows: Vec<Vec<f64>>,
    pub converged: Vec<Vec<bool>>,
}

impl DualGradient {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().flatten().all(|c| *c)
    }
}

pub fn dual_gradient(
    f: &MapOracle,
    duals: &DualTestSet,
    x: &[f64],
    schedule: &StepSchedule,
    tol: f64,
) -> Result<DualGradient> {
    if duals.space() != f.target() {
        return Err(Error::invalid("dual test set lives on another space"));
    }
    if !f.target().is_normed() {
        return Err(Error::NotNormed(f.target().id()));
    }
    let n = f.domain().dim();
    let columns = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            central_pairings(f, x, &e, schedule, tol, |v| duals.pair_all(v))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = duals.len();
    let rows = (0..k)
        .map(|r| columns.iter().map(|(vals, _)| vals[r]).collect())
        .collect();
    let converged = (0..k)
        .map(|r| columns.iter().map(|(_, c)| c[r]).collect())
        .collect();
    Ok(DualGradient { rows, converged })
}

/// `max_k |row_k . nu| / ‖v*_k‖`.
pub fn md_from_dual(gradient: &DualGradient, duals: &DualTestSet, nu: &[f64]) -> Result<f64> {
    if euclid_norm(nu) == 0.0 {
        return Err(Error::invalid("direction must be nonzero"));
    }
    if gradient.rows.len() != duals.len() {
        return Err(Error::DimensionMismatch {
            expected: duals.len(),
            actual: gradient.rows.len(),
        });
    }
    Ok(gradient
        .rows
        .iter()
        .zip(duals.functionals())
        .fold(0.0_f64, |acc, (row, d)| {
            let dot: f64 = row.iter().zip(nu).map(|(g, v)| g * v).sum();
            acc.max(dot.abs() / d.norm)
        }))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingResidualRow {
    pub radius: f64,
    pub max_residual: f64,
    /// Worst residual per functional at this radius.
    pub per_functional: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakStarReport {
    pub rows: Vec<PairingResidualRow>,
}

/// `|<v*, f(x + r nu) - f(x)> - r row . nu| / (r ‖v*‖)`, maximized over the
/// fan for each functional and radius.
pub fn weak_star_residual(
    f: &MapOracle,
    gradient: &DualGradient,
    duals: &DualTestSet,
    x: &[f64],
    radii: &[f64],
    fan: &[Vec<f64>],
) -> Result<WeakStarReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii[0] <= 0.0 {
        return Err(Error::invalid("radii must be positive and strictly decreasing"));
    }
    let reach = fan.iter().map(|v| euclid_norm(v)).fold(0.0, f64::max);
    f.require_clearance(x, radii[0] * reach)?;
    let fx = f.eval_raw(x);
    let base = duals.pair_all(&fx);
    let rows = radii
        .iter()
        .map(|&r| {
            let per_direction: Vec<Vec<f64>> = fan
                .par_iter()
                .map(|nu| {
                    let y: Vec<f64> = x.iter().zip(nu).map(|(a, v)| a + r * v).collect();
                    let moved = duals.pair_all(&f.eval_raw(&y));
                    gradient
                        .rows
                        .iter()
                        .zip(duals.functionals())
                        .enumerate()
                        .map(|(k, (row, d))| {
                            let lin: f64 = row.iter().zip(nu).map(|(g, v)| g * v).sum();
                            ((moved[k] - base[k]) - r * lin).abs() / (r * d.norm)
                        })
                        .collect()
                })
                .collect();
            let per_functional: Vec<f64> = (0..duals.len())
                .map(|k| per_direction.iter().map(|d| d[k]).fold(0.0, f64::max))
                .collect();
            PairingResidualRow {
                radius: r,
                max_residual: per_functional.iter().copied().fold(0.0, f64::max),
                per_functional,
            }
        })
        .collect();
    Ok(WeakStarReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivatives::DomainBox;
    use crate::spaces::Exponent;

    fn diag() -> MapOracle {
        MapOracle::new(
            "diag",
            DomainBox::cube(2, -1.0, 1.0).unwrap(),
            MetricSpace::euclidean(2).unwrap(),
            |x| vec![x[0], 2.0 * x[1]],
        )
    }

    fn l1_curve(cells: usize) -> MapOracle {
        let target = MetricSpace::discretized_lebesgue(cells, Exponent::Finite(1.0), 1.0).unwrap();
        MapOracle::new("l1", DomainBox::cube(1, 0.0, 1.0).unwrap(), target, move |t| {
            let w = 1.0 / cells as f64;
            (0..cells).map(|i| ((t[0] - i as f64 * w) / w).clamp(0.0, 1.0)).collect()
        })
    }

    #[test]
    fn coordinate_duals_reproduce_matrix() {
        let f = diag();
        let d = DualTestSet::coordinate(f.target()).unwrap();
        let x = [0.3, -0.1];
        let s = StepSchedule::for_point(f.domain(), &x, 1.0, 8).unwrap();
        let g = dual_gradient(&f, &d, &x, &s, 1e-9).unwrap();
        let a = [[1.0, 0.0], [0.0, 2.0]];
        for k in 0..2 {
            for j in 0..2 {
                assert!((g.rows[k][j] - a[k][j]).abs() <= 1e-9);
            }
        }
        assert_eq!(md_from_dual(&g, &d, &[0.0, 1.0]).unwrap(), g.rows[1][1].abs());
        assert!((md_from_dual(&g, &d, &[0.0, 1.0]).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_map_zero_gradient() {
        let f = MapOracle::new(
            "c",
            DomainBox::cube(2, 0.0, 1.0).unwrap(),
            MetricSpace::euclidean(3).unwrap(),
            |_| vec![1.0, 2.0, 3.0],
        );
        let d = DualTestSet::random_unit(f.target(), 5, 3).unwrap();
        let s = StepSchedule::geometric(0.01, 4).unwrap();
        let g = dual_gradient(&f, &d, &[0.5, 0.5], &s, 1e-9).unwrap();
        assert!(g.rows.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(md_from_dual(&g, &d, &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn step_functional_derivative_is_its_value() {
        // d/dt int_0^t s = s(t) at continuity points of s
        let f = l1_curve(256);
        let d = DualTestSet::step_functions(f.target(), 4).unwrap();
        for (t, piece) in [(0.1, 0), (0.3, 1), (0.6, 2), (0.9, 3)] {
            let s = StepSchedule::for_point(f.domain(), &[t], 1.0, 8).unwrap();
            let g = dual_gradient(&f, &d, &[t], &s, 1e-6).unwrap();
            for k in 0..4 {
                let expected = if k == piece { 1.0 } else { 0.0 };
                assert!((g.rows[k][0] - expected).abs() < 1e-9, "t={t} k={k}");
            }
            assert!((md_from_dual(&g, &d, &[1.0]).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn enlarging_the_set_never_lowers_the_sup() {
        let f = diag();
        let x = [0.2, 0.1];
        let s = StepSchedule::for_point(f.domain(), &x, 1.0, 8).unwrap();
        let small = DualTestSet::coordinate(f.target()).unwrap();
        let big = small.extend(&DualTestSet::random_unit(f.target(), 16, 9).unwrap()).unwrap();
        let gs = dual_gradient(&f, &small, &x, &s, 1e-9).unwrap();
        let gb = dual_gradient(&f, &big, &x, &s, 1e-9).unwrap();
        for nu in crate::fan::standard_fan(2) {
            assert!(md_from_dual(&gb, &big, &nu).unwrap() >= md_from_dual(&gs, &small, &nu).unwrap());
        }
    }

    #[test]
    fn linear_map_has_no_pairing_residual() {
        let f = diag();
        let d = DualTestSet::circle(f.target(), 8).unwrap();
        let x = [0.0, 0.0];
        let s = StepSchedule::for_point(f.domain(), &x, 1.0, 8).unwrap();
        let g = dual_gradient(&f, &d, &x, &s, 1e-9).unwrap();
        let r = weak_star_residual(&f, &g, &d, &x, &[0.5, 0.25], &crate::fan::standard_fan(2)).unwrap();
        assert!(r.rows.iter().all(|row| row.max_residual < 1e-9));
    }

    #[test]
    fn step_functions_need_matching_space() {
        let e = MetricSpace::euclidean(2).unwrap();
        assert!(DualTestSet::step_functions(&e, 2).is_err());
        let l = MetricSpace::discretized_lebesgue(12, Exponent::Finite(1.0), 1.0).unwrap();
        assert!(DualTestSet::step_functions(&l, 5).is_err());
    }
}
