//! Cell-centred rectangular grids in one or two dimensions and scalar fields
//! over them.
//!
//! Cells are stored row-major with `x` varying fastest. A one-dimensional grid
//! is represented with a single row of unit height, so cell volumes and
//! integrals come out right without special cases.

mod io;
mod solver;
mod stencil;

pub use io::{read_field_csv, write_field_csv, write_pgm, PgmScale};
pub use solver::{apply_diffusion_operator, solve_implicit_diffusion, SOLVER_TOLERANCE};
pub use stencil::{laplacian_neumann, taxis_divergence, FaceRule};

use crate::error::{Error, Result};

/// Round-off tolerated below zero in fields that must stay nonnegative.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    extent: [f64; 2],
    cells: [usize; 2],
}

impl Grid {
    pub fn new(extent: &[f64], cells: &[usize]) -> Result<Self> {
        let dim = extent.len();
        if !(dim == 1 || dim == 2) || cells.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected 1 or 2 axes, got {} extents and {} cell counts",
                extent.len(),
                cells.len()
            )));
        }
        for (axis, (&len, &n)) in extent.iter().zip(cells).enumerate() {
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidGrid(format!("extent {len} on axis {axis}")));
            }
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {n} cells, at least 3 required"
                )));
            }
        }
        let mut grid = Grid {
            dim,
            extent: [extent[0], 1.0],
            cells: [cells[0], 1],
        };
        if dim == 2 {
            grid.extent[1] = extent[1];
            grid.cells[1] = cells[1];
        }
        Ok(grid)
    }

    pub fn new_1d(length: f64, cells: usize) -> Result<Self> {
        Self::new(&[length], &[cells])
    }

    pub fn new_2d(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    /// Number of rows; 1 for one-dimensional grids.
    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Total measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extent().iter().product()
    }

    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    /// Cell-centre coordinates; `y` is 0 on one-dimensional grids.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let x = (i as f64 + 0.5) * self.spacing(0);
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.spacing(1)
        } else {
            0.0
        };
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at cell centres.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
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
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn ensure_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Midpoint quadrature of the field over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `integral(field^p)` for a nonnegative field. Values within
    /// [`NEGATIVE_TOLERANCE`] below zero count as zero.
    pub fn lp_integral(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(crate::error::domain(format!("exponent p = {p} must be >= 1")));
        }
        let mut sum = 0.0;
        for (index, &value) in self.values.iter().enumerate() {
            if value < -NEGATIVE_TOLERANCE {
                return Err(Error::NegativeValue { index, value });
            }
            sum += value.max(0.0).powf(p);
        }
        Ok(sum * self.grid.cell_volume())
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Discrete inner product weighted by the cell volume.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }
}

pub fn integral(field: &ScalarField) -> f64 {
    field.integral()
}

pub fn lp_integral(field: &ScalarField, p: f64) -> Result<f64> {
    field.lp_integral(p)
}

pub fn linf_norm(field: &ScalarField) -> f64 {
    field.linf_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(Grid::new_1d(1.0, 2).is_err());
        assert!(Grid::new_2d(1.0, -1.0, 4, 4).is_err());
        assert!(Grid::new(&[1.0, 1.0, 1.0], &[3, 3, 3]).is_err());
        let g = Grid::new_2d(2.0, 1.0, 4, 5).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g.cell_volume() * 20.0 - g.measure()).abs() < 1e-15);
        assert_eq!(g.measure(), 2.0);
    }

    #[test]
    fn integral_examples() {
        for n in [3, 7, 32] {
            let g = Grid::new_2d(1.0, 1.0, n, n).unwrap();
            assert!((ScalarField::constant(g, 1.0).integral() - 1.0).abs() < 1e-14);
        }
        let g = Grid::new_2d(2.0, 1.0, 10, 6).unwrap();
        assert!((ScalarField::constant(g, 2.0).integral() - 4.0).abs() < 1e-14);
        let g = Grid::new_1d(1.0, 256).unwrap();
        let s = ScalarField::from_fn(g, |x, _| (PI * x).sin());
        assert!((s.integral() - 2.0 / PI).abs() < 1e-4);
    }

    #[test]
    fn lp_examples() {
        let g = Grid::new_2d(1.0, 1.0, 5, 5).unwrap();
        let c = ScalarField::constant(g, 2.0);
        assert!((c.lp_integral(3.0).unwrap() - 8.0).abs() < 1e-13);
        let f = ScalarField::from_fn(g, |x, y| x + y * y);
        assert!((f.lp_integral(1.0).unwrap() - f.integral()).abs() < 1e-15);
        let g = Grid::new_2d(3.0, 0.5, 4, 4).unwrap();
        let c = ScalarField::constant(g, 1.7);
        assert!((c.lp_integral(2.5).unwrap() - 1.7f64.powf(2.5) * 1.5).abs() < 1e-13);

        let mut neg = ScalarField::zeros(g);
        neg.values_mut()[3] = -1e-3;
        assert!(matches!(neg.lp_integral(2.0), Err(Error::NegativeValue { index: 3, .. })));
        neg.values_mut()[3] = -1e-14;
        assert_eq!(neg.lp_integral(2.0).unwrap(), 0.0);
    }

    #[test]
    fn linf_examples() {
        let g = Grid::new_2d(1.0, 1.0, 4, 4).unwrap();
        assert_eq!(ScalarField::constant(g, 5.0).linf_norm(), 5.0);
        assert_eq!(ScalarField::zeros(g).linf_norm(), 0.0);
        let mut f = ScalarField::zeros(g);
        f.values_mut()[6] = 9.0;
        assert_eq!(f.linf_norm(), 9.0);
    }
}
