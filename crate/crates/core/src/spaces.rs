//! Pointed metric spaces realized as distance oracles over real vectors.
//!
//! Every space in the catalog stores its points as flat `f64` coordinate
//! vectors. The base point is always the zero vector, so Lipschitz
//! functionals built against it vanish at the origin of each linear space.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integrability exponent; `Infinity` selects the max norm exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = String;

    fn try_from(repr: ExponentRepr) -> std::result::Result<Self, String> {
        match repr {
            ExponentRepr::Number(p) if p.is_infinite() && p > 0.0 => Ok(Exponent::Infinity),
            ExponentRepr::Number(p) if p >= 1.0 => Ok(Exponent::Finite(p)),
            ExponentRepr::Number(p) => Err(format!("exponent {p} is below 1")),
            ExponentRepr::Text(s) if matches!(s.as_str(), "inf" | "infinity") => {
                Ok(Exponent::Infinity)
            }
            ExponentRepr::Text(s) => Err(format!("unrecognized exponent `{s}`")),
        }
    }
}

impl From<Exponent> for ExponentRepr {
    fn from(p: Exponent) -> Self {
        match p {
            Exponent::Finite(p) => ExponentRepr::Number(p),
            Exponent::Infinity => ExponentRepr::Text("inf".into()),
        }
    }
}

impl Exponent {
    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Exponent::Finite(p) if !(p >= 1.0 && p.is_finite()) => {
                Err(Error::invalid(format!("exponent {p} outside [1, inf]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

/// Weighted `l^p` norm of `values` with uniform cell weight.
pub(crate) fn weighted_norm(values: impl Iterator<Item = f64>, p: Exponent, weight: f64) -> f64 {
    match p {
        Exponent::Infinity => values.fold(0.0, |acc, v| acc.max(v.abs())),
        Exponent::Finite(p) if p == 1.0 => weight * values.map(f64::abs).sum::<f64>(),
        Exponent::Finite(p) if p == 2.0 => {
            (weight * values.map(|v| v * v).sum::<f64>()).sqrt()
        }
        Exponent::Finite(p) => (weight * values.map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p),
    }
}

/// A point of some catalog space, stored as its coordinate vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    fn check_finite(&self) -> Result<()> {
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

impl From<&[f64]> for Point {
    fn from(coords: &[f64]) -> Self {
        Point(coords.to_vec())
    }
}

/// Descriptor of a catalog metric space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean {
        dim: usize,
    },
    Lp {
        dim: usize,
        p: Exponent,
    },
    /// Piecewise-constant functions on `[0, length]` with `cells` equal cells;
    /// the norm uses cell weight `length / cells`.
    DiscretizedLebesgue {
        cells: usize,
        p: Exponent,
        length: f64,
    },
    /// `d(x, y) = d_base(x, y)^alpha`.
    Snowflake {
        base: Box<SpaceKind>,
        alpha: f64,
    },
    /// Concatenated coordinates with the max of the factor distances.
    ProductMax {
        factors: Vec<SpaceKind>,
    },
}

impl SpaceKind {
    pub fn dim(&self) -> usize {
        match self {
            SpaceKind::Euclidean { dim } | SpaceKind::Lp { dim, .. } => *dim,
            SpaceKind::DiscretizedLebesgue { cells, .. } => *cells,
            SpaceKind::Snowflake { base, .. } => base.dim(),
            SpaceKind::ProductMax { factors } => factors.iter().map(SpaceKind::dim).sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SpaceKind::Euclidean { dim } if *dim == 0 => Err(Error::invalid("dimension 0")),
            SpaceKind::Lp { dim, p } => {
                if *dim == 0 {
                    return Err(Error::invalid("dimension 0"));
                }
                p.validate()
            }
            SpaceKind::DiscretizedLebesgue { cells, p, length } => {
                if *cells == 0 {
                    return Err(Error::invalid("zero cells"));
                }
                if !(*length > 0.0 && length.is_finite()) {
                    return Err(Error::invalid(format!("interval length {length}")));
                }
                p.validate()
            }
            SpaceKind::Snowflake { base, alpha } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(Error::invalid(format!("snowflake exponent {alpha} outside (0, 1]")));
                }
                base.validate()
            }
            SpaceKind::ProductMax { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("product of zero factors"));
                }
                factors.iter().try_for_each(SpaceKind::validate)
            }
            SpaceKind::Euclidean { .. } => Ok(()),
        }
    }

    fn raw_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff = x.iter().zip(y).map(|(a, b)| a - b);
        match self {
            SpaceKind::Euclidean { .. } => weighted_norm(diff, Exponent::Finite(2.0), 1.0),
            SpaceKind::Lp { p, .. } => weighted_norm(diff, *p, 1.0),
            SpaceKind::DiscretizedLebesgue { cells, p, length } => {
                weighted_norm(diff, *p, length / *cells as f64)
            }
            SpaceKind::Snowflake { base, alpha } => {
                let d = base.raw_distance(x, y);
                if *alpha == 1.0 {
                    d
                } else {
                    d.powf(*alpha)
                }
            }
            SpaceKind::ProductMax { factors } => {
                let mut offset = 0;
                let mut best = 0.0_f64;
                for factor in factors {
                    let m = factor.dim();
                    let d = factor.raw_distance(&x[offset..offset + m], &y[offset..offset + m]);
                    best = best.max(d);
                    offset += m;
                }
                best
            }
        }
    }

    fn raw_norm(&self, v: &[f64]) -> Option<f64> {
        match self {
            SpaceKind::Snowflake { .. } => None,
            SpaceKind::ProductMax { factors } => {
                let mut offset = 0;
                let mut best = 0.0_f64;
                for factor in factors {
                    let m = factor.dim();
                    best = best.max(factor.raw_norm(&v[offset..offset + m])?);
                    offset += m;
                }
                Some(best)
            }
            _ => Some(self.raw_distance(v, &vec![0.0; v.len()])),
        }
    }

    fn raw_pairing(&self, coeffs: &[f64], v: &[f64]) -> Option<f64> {
        match self {
            SpaceKind::Snowflake { .. } => None,
            SpaceKind::DiscretizedLebesgue { cells, length, .. } => {
                let w = length / *cells as f64;
                Some(w * coeffs.iter().zip(v).map(|(c, x)| c * x).sum::<f64>())
            }
            SpaceKind::ProductMax { factors } => {
                let mut offset = 0;
                let mut total = 0.0;
                for factor in factors {
                    let m = factor.dim();
                    total += factor
                        .raw_pairing(&coeffs[offset..offset + m], &v[offset..offset + m])?;
                    offset += m;
                }
                Some(total)
            }
            _ => Some(coeffs.iter().zip(v).map(|(c, x)| c * x).sum()),
        }
    }

    fn raw_dual_norm(&self, coeffs: &[f64]) -> Option<f64> {
        let c = coeffs.iter().copied();
        match self {
            SpaceKind::Snowflake { .. } => None,
            SpaceKind::Euclidean { .. } => Some(weighted_norm(c, Exponent::Finite(2.0), 1.0)),
            SpaceKind::Lp { p, .. } => Some(weighted_norm(c, p.conjugate(), 1.0)),
            SpaceKind::DiscretizedLebesgue { cells, p, length } => {
                Some(weighted_norm(c, p.conjugate(), length / *cells as f64))
            }
            // dual of a max-norm product is the sum of factor dual norms
            SpaceKind::ProductMax { factors } => {
                let mut offset = 0;
                let mut total = 0.0;
                for factor in factors {
                    let m = factor.dim();
                    total += factor.raw_dual_norm(&coeffs[offset..offset + m])?;
                    offset += m;
                }
                Some(total)
            }
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Euclidean { dim } => write!(f, "euclidean({dim})"),
            SpaceKind::Lp { dim, p } => write!(f, "lp({dim},{p})"),
            SpaceKind::DiscretizedLebesgue { cells, p, length } => {
                write!(f, "discretized_lebesgue({cells},{p},{length})")
            }
            SpaceKind::Snowflake { base, alpha } => write!(f, "snowflake({base},{alpha})"),
            SpaceKind::ProductMax { factors } => {
                f.write_str("product_max(")?;
                for (i, factor) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{factor}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A pointed metric space `(X, d, z0)` with `z0` the zero vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSpace {
    kind: SpaceKind,
    base_point: Point,
}

impl MetricSpace {
    pub fn new(kind: SpaceKind) -> Result<Self> {
        kind.validate()?;
        let base_point = Point::zeros(kind.dim());
        Ok(MetricSpace { kind, base_point })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(SpaceKind::Euclidean { dim })
    }

    pub fn lp(dim: usize, p: Exponent) -> Result<Self> {
        Self::new(SpaceKind::Lp { dim, p })
    }

    pub fn discretized_lebesgue(cells: usize, p: Exponent, length: f64) -> Result<Self> {
        Self::new(SpaceKind::DiscretizedLebesgue { cells, p, length })
    }

    pub fn snowflake(base: &MetricSpace, alpha: f64) -> Result<Self> {
        Self::new(SpaceKind::Snowflake {
            base: Box::new(base.kind.clone()),
            alpha,
        })
    }

    pub fn product_max(factors: &[MetricSpace]) -> Result<Self> {
        Self::new(SpaceKind::ProductMax {
            factors: factors.iter().map(|s| s.kind.clone()).collect(),
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn base_point(&self) -> &Point {
        &self.base_point
    }

    /// Textual identifier, e.g. `lp(3,inf)`.
    pub fn id(&self) -> String {
        self.kind.to_string()
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        x.check_finite()
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.kind.raw_distance(x.coords(), y.coords()))
    }

    /// Distance on raw coordinates; callers guarantee membership.
    pub(crate) fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        self.kind.raw_distance(x, y)
    }

    pub(crate) fn norm_raw(&self, v: &[f64]) -> Option<f64> {
        self.kind.raw_norm(v)
    }

    pub fn is_normed(&self) -> bool {
        self.kind.raw_norm(self.base_point.coords()).is_some()
    }

    pub fn norm(&self, v: &Point) -> Result<f64> {
        self.check_point(v)?;
        self.kind
            .raw_norm(v.coords())
            .ok_or_else(|| Error::NotNormed(self.id()))
    }

    /// Bilinear pairing of a dual representative with a point.
    pub fn pairing(&self, coeffs: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dual(coeffs)?;
        self.kind
            .raw_pairing(coeffs, v)
            .ok_or_else(|| Error::NotNormed(self.id()))
    }

    /// Operator norm of the functional `v -> pairing(coeffs, v)`.
    pub fn dual_norm(&self, coeffs: &[f64]) -> Result<f64> {
        self.check_dual(coeffs)?;
        self.kind
            .raw_dual_norm(coeffs)
            .ok_or_else(|| Error::NotNormed(self.id()))
    }

    fn check_dual(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: coeffs.len(),
            });
        }
        Ok(())
    }
}

/// Worst axiom defects found on a finite sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub points: usize,
    pub max_identity_defect: f64,
    pub max_symmetry_defect: f64,
    /// `max(0, d(x,z) - d(x,y) - d(y,z))` over all ordered triples.
    pub max_triangle_defect: f64,
}

pub fn validate_metric_axioms(space: &MetricSpace, sample: &[Point]) -> Result<AxiomReport> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    for x in sample {
        space.check_point(x)?;
    }
    let n = sample.len();
    let table: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| space.dist(sample[i].coords(), sample[j].coords()))
                .collect()
        })
        .collect();

    let mut identity = 0.0_f64;
    let mut symmetry = 0.0_f64;
    for i in 0..n {
        identity = identity.max(table[i][i].abs());
        for j in 0..n {
            symmetry = symmetry.max((table[i][j] - table[j][i]).abs());
        }
    }
    let triangle = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0_f64;
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max(table[i][k] - table[i][j] - table[j][k]);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);

    Ok(AxiomReport {
        points: n,
        max_identity_defect: identity,
        max_symmetry_defect: symmetry,
        max_triangle_defect: triangle,
    })
}
