use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::{euclid_norm, line_sequence, van_der_corput};
use crate::spaces::{MetricSpace, Point};

/// Closed axis-aligned box; interior points are the differentiation sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid("box bounds must be nonempty and equally long"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid("box requires finite lower < upper on every axis"));
        }
        Ok(DomainBox { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Distance from `x` to the box boundary, negative outside.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Tensor grid with `per_axis` equispaced nodes per axis including the
    /// endpoints, row-major with the last axis fastest.
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; n];
                for j in (0..n).rev() {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    let t = if per_axis == 1 {
                        0.5
                    } else {
                        i as f64 / (per_axis - 1) as f64
                    };
                    x[j] = self.lower[j] + t * (self.upper[j] - self.lower[j]);
                }
                x
            })
            .collect()
    }
}

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Evaluable map `f: box -> X`.
#[derive(Clone)]
pub struct MapOracle {
    name: String,
    domain: DomainBox,
    target: MetricSpace,
    eval: MapFn,
    lipschitz_bound: Option<f64>,
}

impl fmt::Debug for MapOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapOracle")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("target", &self.target.id())
            .field("lipschitz_bound", &self.lipschitz_bound)
            .finish()
    }
}

impl MapOracle {
    pub fn new<F>(name: impl Into<String>, domain: DomainBox, target: MetricSpace, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        MapOracle {
            name: name.into(),
            domain,
            target,
            eval: Arc::new(eval),
            lipschitz_bound: None,
        }
    }

    pub fn with_lipschitz_bound(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn target(&self) -> &MetricSpace {
        &self.target
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn eval(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                actual: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::invalid(format!("{x:?} lies outside the domain of {}", self.name)));
        }
        let y = Point::new((self.eval)(x));
        self.target.check_point(&y)?;
        Ok(y)
    }

    pub(crate) fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// Same map with a different evaluation rule and target.
    pub(crate) fn rewrap<F>(&self, name: String, target: MetricSpace, eval: F) -> MapOracle
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        MapOracle {
            name,
            domain: self.domain.clone(),
            target,
            eval: Arc::new(eval),
            lipschitz_bound: None,
        }
    }

    /// Clearance check shared by every finite-difference engine.
    pub fn require_clearance(&self, x: &[f64], reach: f64) -> Result<()> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                actual: x.len(),
            });
        }
        let clearance = self.domain.clearance(x);
        if clearance < reach || clearance <= 0.0 {
            return Err(Error::Clearance {
                clearance,
                required: reach,
            });
        }
        Ok(())
    }

    /// Images of the nodes of `domain.lattice(per_axis)`.
    pub fn lattice_image(&self, per_axis: usize) -> Result<Vec<Point>> {
        self.domain
            .lattice(per_axis)
            .iter()
            .map(|x| self.eval(x))
            .collect()
    }

    /// Images of `count` points on a sphere of radius `radius` around `x`,
    /// one per direction of a nested line sequence. In 1D the radii vary
    /// so that anchors stay distinct.
    pub fn ring_image(&self, x: &[f64], radius: f64, count: usize) -> Result<Vec<Point>> {
        self.require_clearance(x, radius)?;
        let n = self.domain.dim();
        line_sequence(n, count)
            .into_iter()
            .enumerate()
            .map(|(i, dir)| {
                let r = if n == 1 {
                    radius * (1.0 - 0.5 * van_der_corput(i / 2))
                } else {
                    radius
                };
                let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + r * d).collect();
                self.eval(&y)
            })
            .collect()
    }

    /// Largest `d(f(x), f(y)) / |x - y|` over distinct sample pairs.
    pub fn empirical_lipschitz(&self, sample: &[Vec<f64>]) -> Result<f64> {
        let images = sample
            .iter()
            .map(|x| self.eval(x))
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0.0_f64;
        for i in 0..sample.len() {
            for j in (i + 1)..sample.len() {
                let dx: Vec<f64> = sample[i].iter().zip(&sample[j]).map(|(a, b)| a - b).collect();
                let r = euclid_norm(&dx);
                if r > 0.0 {
                    let d = self.target.dist(images[i].coords(), images[j].coords());
                    best = best.max(d / r);
                }
            }
        }
        Ok(best)
    }
}
