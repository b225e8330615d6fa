//! Uniform grids on the unit interval and unit square, and scalar fields
//! sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid including the boundary points.
///
/// `intervals` is the number of cells per dimension, so each dimension
/// carries `intervals + 1` points `k / intervals`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    intervals: usize,
}

impl Grid {
    pub fn line(intervals: usize) -> Result<Self> {
        Self::new(1, intervals)
    }

    pub fn square(intervals: usize) -> Result<Self> {
        Self::new(2, intervals)
    }

    pub fn new(dim: usize, intervals: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if intervals < 2 {
            return Err(Error::invalid("grid needs at least two intervals"));
        }
        Ok(Grid { dim, intervals })
    }

    /// Default 1D resolution: 2^12 + 1 points.
    pub fn default_line() -> Self {
        Grid {
            dim: 1,
            intervals: 1 << 12,
        }
    }

    /// Default 2D resolution: 2^9 + 1 points per dimension.
    pub fn default_square() -> Self {
        Grid {
            dim: 2,
            intervals: 1 << 9,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn points_per_dim(&self) -> usize {
        self.intervals + 1
    }

    /// Interior points per dimension.
    pub fn interior_per_dim(&self) -> usize {
        self.intervals - 1
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_dim().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of the multi-index `(i, j)`; `j` is ignored in 1D.
    pub fn index(&self, i: usize, j: usize) -> usize {
        match self.dim {
            1 => i,
            _ => i * self.points_per_dim() + j,
        }
    }

    /// Coordinates of the point with flat index `k` (second entry is 0 in 1D).
    pub fn point(&self, k: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [k as f64 * h, 0.0],
            _ => {
                let p = self.points_per_dim();
                [(k / p) as f64 * h, (k % p) as f64 * h]
            }
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let last = self.intervals;
        match self.dim {
            1 => k == 0 || k == last,
            _ => {
                let p = self.points_per_dim();
                let (i, j) = (k / p, k % p);
                i == 0 || j == 0 || i == last || j == last
            }
        }
    }

    /// Trapezoid weights; they are positive and sum to the domain volume 1.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let p = self.points_per_dim();
        let w1: Vec<f64> = (0..p).map(|i| if i == 0 || i == p - 1 { 0.5 * h } else { h }).collect();
        match self.dim {
            1 => w1,
            _ => {
                let mut w = Vec::with_capacity(p * p);
                for wi in &w1 {
                    for wj in &w1 {
                        w.push(wi * wj);
                    }
                }
                w
            }
        }
    }

    /// Copies interior values into a dense array of `interior_per_dim()^dim`
    /// entries (row-major in 2D).
    pub fn interior_of(&self, values: &[f64]) -> Vec<f64> {
        let p = self.points_per_dim();
        let n = self.interior_per_dim();
        match self.dim {
            1 => values[1..=n].to_vec(),
            _ => {
                let mut out = Vec::with_capacity(n * n);
                for i in 1..=n {
                    out.extend_from_slice(&values[i * p + 1..i * p + 1 + n]);
                }
                out
            }
        }
    }

    /// Inverse of [`Grid::interior_of`]; boundary entries are zero.
    pub fn from_interior(&self, interior: &[f64]) -> Vec<f64> {
        let p = self.points_per_dim();
        let n = self.interior_per_dim();
        let mut out = vec![0.0; self.len()];
        match self.dim {
            1 => out[1..=n].copy_from_slice(interior),
            _ => {
                for i in 1..=n {
                    out[i * p + 1..i * p + 1 + n].copy_from_slice(&interior[(i - 1) * n..i * n]);
                }
            }
        }
        out
    }
}

/// Values of a scalar field on every point of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with another function on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::invalid(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// L² norm by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Samples on a coarser grid whose nodes are a subset of this one's.
    pub fn restrict(&self, coarse: Grid) -> Result<Self> {
        let (fine, c) = (self.grid.intervals(), coarse.intervals());
        if coarse.dim() != self.grid.dim() || c == 0 || fine % c != 0 {
            return Err(Error::invalid(format!(
                "grid with {c} intervals is not a coarsening of one with {fine}"
            )));
        }
        let stride = fine / c;
        let p = self.grid.points_per_dim();
        let values = (0..coarse.len())
            .map(|k| match coarse.dim() {
                1 => self.values[k * stride],
                _ => {
                    let q = coarse.points_per_dim();
                    self.values[(k / q) * stride * p + (k % q) * stride]
                }
            })
            .collect();
        Ok(GridFunction { grid: coarse, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation at `x` (1D grids only).
    pub fn interpolate_1d(&self, x: f64) -> f64 {
        let n = self.grid.intervals();
        let t = (x.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (t.floor() as usize).min(n - 1);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}
