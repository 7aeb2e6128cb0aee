//! Uniform meshes and vector-valued samples on them.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Uniform mesh `t_k = a + k h`, `k = 0..=n_cells`, on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::Domain(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        if n_cells < 2 {
            return Err(Error::Domain(format!("n_cells = {n_cells} must be at least 2")));
        }
        Ok(Self { a, b, n_cells })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.n_cells as f64
    }

    /// Node `k`; the last node is `b` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_cells {
            self.b
        } else {
            self.a + k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|k| self.node(k))
    }

    pub fn cell_midpoint(&self, k: usize) -> f64 {
        0.5 * (self.node(k) + self.node(k + 1))
    }

    /// Index of the node equal to `t` up to a relative tolerance, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let s = (t - self.a) / self.step();
        let k = s.round();
        if k < 0.0 || k > self.n_cells as f64 {
            return None;
        }
        let k = k as usize;
        ((self.node(k) - t).abs() <= 1e-9 * self.step()).then_some(k)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}]/{} vs [{}, {}]/{}",
                self.a, self.b, self.n_cells, other.a, other.b, other.n_cells
            )))
        }
    }
}

/// Samples of an `R^dim`-valued function at every node of a grid.
///
/// Row `k` holds the value at node `t_k`. When a `GridFn` stands for a
/// piecewise-constant function (a control, a Caputo derivative), row `k`
/// is its value on the cell `[t_k, t_{k+1})`; the last row is then only the
/// left limit at `b` and does not enter any integral.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridFn {
    /// Builds from row-major values of shape `n_nodes × dim`.
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if values.len() != grid.n_nodes() * dim {
            return Err(Error::Dimension {
                expected: grid.n_nodes() * dim,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite sample at node {}, component {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.n_nodes() * dim],
        }
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let values = (0..grid.n_nodes()).flat_map(|_| value.iter().copied()).collect();
        Self {
            grid,
            dim: value.len(),
            values,
        }
    }

    /// Samples `f(t)` at every node; `f` writes into a `dim`-slice.
    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.n_nodes() * dim];
        for (k, row) in values.chunks_exact_mut(dim).enumerate() {
            f(grid.node(k), row);
        }
        Self::new(grid, dim, values)
    }

    /// Scalar convenience for `dim = 1`.
    pub fn from_scalar_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, 1, |t, row| row[0] = f(t))
    }

    pub(crate) fn from_raw(grid: Grid, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes() * dim);
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Component `i` across all nodes.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    /// The first `n_cells` rows: one value per cell.
    pub(crate) fn cell_values(&self) -> &[f64] {
        &self.values[..self.grid.n_cells() * self.dim]
    }

    /// Largest Euclidean norm over nodes.
    pub fn sup_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &GridFn) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(self
            .rows()
            .zip(other.rows())
            .map(|(a, b)| distance(a, b))
            .fold(0.0, f64::max))
    }

    /// `sum_k h |f_k|` over cells, with the left-value convention.
    pub fn l1_norm_cells(&self) -> f64 {
        let h = self.grid.step();
        self.cell_values().chunks_exact(self.dim).map(|r| h * norm(r)).sum()
    }
}

impl Serialize for GridFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = self.rows().collect();
        let t: Vec<f64> = self.grid.nodes().collect();
        let mut st = s.serialize_struct("GridFn", 3)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("t", &t)?;
        st.serialize_field("values", &rows)?;
        st.end()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
