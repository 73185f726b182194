use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::Serialize;

use crate::derivatives::DomainBox;
use crate::error::{Error, Result};

/// Cell-centred lattice with cubic cells of side `spacing`, optionally
/// masked (e.g. to a ball). Nodes are stored row-major, last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    active: Vec<bool>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(format!("grid spacing {spacing}")));
        }
        if origin.len() != shape.len() || shape.is_empty() || shape.contains(&0) {
            return Err(Error::invalid("grid shape must be nonempty and match the origin"));
        }
        let total = shape.iter().product();
        Ok(Grid {
            origin,
            spacing,
            shape,
            active: vec![true; total],
        })
    }

    /// Cell centres of a box split into cubes of side `spacing`.
    pub fn over_box(domain: &DomainBox, spacing: f64) -> Result<Self> {
        let mut shape = Vec::with_capacity(domain.dim());
        let mut origin = Vec::with_capacity(domain.dim());
        for (lo, hi) in domain.lower().iter().zip(domain.upper()) {
            let len = hi - lo;
            let cells = (len / spacing).round();
            if cells < 1.0 || ((cells * spacing) - len).abs() > 1e-9 * len {
                return Err(Error::invalid(format!(
                    "spacing {spacing} does not tile an axis of length {len}"
                )));
            }
            shape.push(cells as usize);
            origin.push(lo + 0.5 * spacing);
        }
        Self::new(origin, spacing, shape)
    }

    /// Cell centres of `[-1, 1]^n` with `cells_per_axis` cells per axis,
    /// restricted to the closed unit ball.
    pub fn unit_ball(n: usize, cells_per_axis: usize) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::invalid("zero cells"));
        }
        let spacing = 2.0 / cells_per_axis as f64;
        let mut grid = Self::new(vec![-1.0 + 0.5 * spacing; n], spacing, vec![cells_per_axis; n])?;
        grid.restrict(|x| x.iter().map(|v| v * v).sum::<f64>() <= 1.0);
        Ok(grid)
    }

    /// Deactivates nodes failing `keep`.
    pub fn restrict(&mut self, keep: impl Fn(&[f64]) -> bool) {
        for i in 0..self.active.len() {
            if self.active[i] && !keep(&self.node(i)) {
                self.active[i] = false;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.active[i])
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            idx[j] = i % self.shape[j];
            i /= self.shape[j];
        }
        idx
    }

    pub fn node(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .zip(&self.origin)
            .map(|(k, o)| o + *k as f64 * self.spacing)
            .collect()
    }

    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Active neighbour of node `i` one step along `axis` in direction `sign`.
    pub(crate) fn neighbor(&self, i: usize, axis: usize, forward: bool) -> Option<usize> {
        let k = (i / self.stride(axis)) % self.shape[axis];
        let j = if forward {
            (k + 1 < self.shape[axis]).then(|| i + self.stride(axis))
        } else {
            (k > 0).then(|| i - self.stride(axis))
        }?;
        self.active[j].then_some(j)
    }
}

/// Real values attached to the nodes of a grid; inactive nodes hold 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !grid.is_active(i) {
                *v = 0.0;
            }
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| if grid.is_active(i) { f(&grid.node(i)) } else { 0.0 })
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::from_fn(grid, |_| c)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("grid functions live on different grids"));
        }
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    /// Header `x1,...,xn,value`, one row per active node.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header: Vec<String> = (1..=self.grid.dim()).map(|j| format!("x{j}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for i in self.grid.active_nodes() {
            let mut row: Vec<String> = self.grid.node(i).iter().map(|v| v.to_string()).collect();
            row.push(self.values[i].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv): the lattice is recovered
    /// from the coordinates and absent nodes become inactive.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let n = r.headers()?.len().checked_sub(1).filter(|n| *n > 0).ok_or_else(|| {
            Error::invalid("grid CSV needs at least one coordinate column and a value column")
        })?;
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for record in r.records() {
            let record = record?;
            let parsed = record
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::invalid(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            let value = parsed[n];
            rows.push((parsed[..n].to_vec(), value));
        }
        if rows.is_empty() {
            return Err(Error::invalid("grid CSV has no rows"));
        }
        let mut origin = vec![f64::INFINITY; n];
        let mut top = vec![f64::NEG_INFINITY; n];
        let mut spacing = f64::INFINITY;
        for j in 0..n {
            let mut coords: Vec<f64> = rows.iter().map(|(x, _)| x[j]).collect();
            coords.sort_by(f64::total_cmp);
            origin[j] = coords[0];
            top[j] = coords[coords.len() - 1];
            for w in coords.windows(2) {
                let d = w[1] - w[0];
                if d > 1e-12 {
                    spacing = spacing.min(d);
                }
            }
        }
        if !spacing.is_finite() {
            spacing = 1.0;
        }
        let shape: Vec<usize> = (0..n)
            .map(|j| ((top[j] - origin[j]) / spacing).round() as usize + 1)
            .collect();
        let mut grid = Grid::new(origin.clone(), spacing, shape.clone())?;
        let mut values = vec![0.0; grid.len()];
        let mut present = BTreeSet::new();
        for (x, v) in rows {
            let mut idx = 0;
            for j in 0..n {
                let k = ((x[j] - origin[j]) / spacing).round();
                idx = idx * shape[j] + k as usize;
            }
            values[idx] = v;
            present.insert(idx);
        }
        for i in 0..grid.len() {
            grid.active[i] = present.contains(&i);
        }
        Self::new(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_grid_is_cell_centred() {
        let d = DomainBox::cube(2, 0.0, 1.0).unwrap();
        let g = Grid::over_box(&d, 0.25).unwrap();
        assert_eq!(g.shape(), &[4, 4]);
        assert_eq!(g.node(0), vec![0.125, 0.125]);
        assert_eq!(g.node(1), vec![0.125, 0.375]);
        assert!((g.cell_volume() * g.active_count() as f64 - 1.0).abs() < 1e-15);
        assert!(Grid::over_box(&d, 0.3).is_err());
    }

    #[test]
    fn neighbours_respect_edges_and_mask() {
        let g = Grid::unit_ball(2, 4).unwrap();
        // corner cell centres (+-0.75, +-0.75) lie outside the unit ball
        assert!(!g.is_active(0));
        let i = 5; // (-0.25, -0.25)
        assert_eq!(g.neighbor(i, 0, false), Some(1));
        assert_eq!(g.neighbor(i, 1, false), Some(4));
        assert_eq!(g.neighbor(1, 0, false), None);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::unit_ball(2, 6).unwrap();
        let u = GridFunction::from_fn(&g, |x| x[0] - 2.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,value\n"));
        let back = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.grid().active_count(), g.active_count());
        for i in back.grid().active_nodes() {
            let x = back.grid().node(i);
            assert!((back.values()[i] - (x[0] - 2.0 * x[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = Grid::new(vec![0.0], 1.0, vec![3]).unwrap();
        assert!(GridFunction::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
