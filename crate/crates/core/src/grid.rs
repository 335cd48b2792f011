//! Uniform square grid, cell-centered fields, and the discrete operators
//! shared by the rest of the solver.
//!
//! Fields are stored row-major: cell `(i, j)` lives at `j * nx + i`, with
//! `j = 0` the bottom row. All boundaries are zero-flux; the Laplacian uses
//! mirror ghost cells and face fluxes on the domain boundary are exactly 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3x3 cells, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("cell size must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("boundary face {axis}[{index}] carries nonzero flux {value}")]
    NonzeroBoundaryFlux {
        axis: &'static str,
        index: usize,
        value: f64,
    },
    #[error("field shape does not match grid")]
    ShapeMismatch,
}

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
    origin: Point,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self, GridError> {
        Self::with_origin(nx, ny, h, Point::default())
    }

    pub fn with_origin(nx: usize, ny: usize, h: f64, origin: Point) -> Result<Self, GridError> {
        if nx < 3 || ny < 3 {
            return Err(GridError::TooSmall { nx, ny });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::BadSpacing(h));
        }
        Ok(Grid { nx, ny, h, origin })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn ly(&self) -> f64 {
        self.ny as f64 * self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// True when `p` lies in the closed domain rectangle.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.lx()
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.ly()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid,
    values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field2D {
            grid: *grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch);
        }
        Ok(Field2D {
            grid: *grid,
            values,
        })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(Point) -> f64) -> Self {
        let values = grid.cells().map(|(i, j)| f(grid.cell_center(i, j))).collect();
        Field2D {
            grid: *grid,
            values,
        }
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = value;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Cellwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Field2D {
        debug_assert_eq!(self.values.len(), other.values.len());
        Field2D {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// First non-finite cell, if any.
    pub fn find_nonfinite(&self) -> Option<(usize, usize, f64)> {
        self.values
            .iter()
            .position(|x| !x.is_finite())
            .map(|k| (k % self.grid.nx, k / self.grid.nx, self.values[k]))
    }
}

/// Face-normal quantities on a staggered layout.
///
/// `x_faces[j * (nx + 1) + i]` is the vertical face on the left of cell
/// `(i, j)`; `y_faces[j * nx + i]` is the horizontal face below it. Positive
/// values point right / up. Boundary faces are always 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFluxes {
    grid: Grid,
    pub x_faces: Vec<f64>,
    pub y_faces: Vec<f64>,
}

impl FaceFluxes {
    pub fn zeros(grid: &Grid) -> Self {
        FaceFluxes {
            grid: *grid,
            x_faces: vec![0.0; (grid.nx + 1) * grid.ny],
            y_faces: vec![0.0; grid.nx * (grid.ny + 1)],
        }
    }

    /// Fills every interior face from two closures: `fx(i, j)` for the face
    /// between cells `(i-1, j)` and `(i, j)`, `fy(i, j)` for the face between
    /// `(i, j-1)` and `(i, j)`.
    pub fn from_interior(
        grid: &Grid,
        mut fx: impl FnMut(usize, usize) -> f64,
        mut fy: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut out = Self::zeros(grid);
        let (nx, ny) = (grid.nx, grid.ny);
        for j in 0..ny {
            for i in 1..nx {
                out.x_faces[j * (nx + 1) + i] = fx(i, j);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                out.y_faces[j * nx + i] = fy(i, j);
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x_faces[j * (self.grid.nx + 1) + i]
    }

    #[inline]
    pub fn y(&self, i: usize, j: usize) -> f64 {
        self.y_faces[j * self.grid.nx + i]
    }

    #[inline]
    pub fn x_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.x_faces[j * (self.grid.nx + 1) + i]
    }

    #[inline]
    pub fn y_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.y_faces[j * self.grid.nx + i]
    }

    /// Face-wise `self - other`.
    pub fn sub(&self, other: &FaceFluxes) -> FaceFluxes {
        FaceFluxes {
            grid: self.grid,
            x_faces: self
                .x_faces
                .iter()
                .zip(&other.x_faces)
                .map(|(a, b)| a - b)
                .collect(),
            y_faces: self
                .y_faces
                .iter()
                .zip(&other.y_faces)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Largest absolute face value.
    pub fn max_abs(&self) -> f64 {
        self.x_faces
            .iter()
            .chain(&self.y_faces)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest per-cell sum of outward-pointing face values. Treating the
    /// faces as velocities, this bounds the fraction of a cell that upwind
    /// transport can remove per unit time (times `1/h`).
    pub fn max_outflow_sum(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut worst: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let out = (-self.x(i, j)).max(0.0)
                    + self.x(i + 1, j).max(0.0)
                    + (-self.y(i, j)).max(0.0)
                    + self.y(i, j + 1).max(0.0);
                worst = worst.max(out);
            }
        }
        worst
    }

    pub fn check_boundary(&self) -> Result<(), GridError> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for j in 0..ny {
            for i in [0, nx] {
                let value = self.x(i, j);
                if value != 0.0 {
                    return Err(GridError::NonzeroBoundaryFlux {
                        axis: "x",
                        index: j * (nx + 1) + i,
                        value,
                    });
                }
            }
        }
        for j in [0, ny] {
            for i in 0..nx {
                let value = self.y(i, j);
                if value != 0.0 {
                    return Err(GridError::NonzeroBoundaryFlux {
                        axis: "y",
                        index: j * nx + i,
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Five-point Laplacian with homogeneous Neumann (mirror) boundaries.
pub fn laplacian(f: &Field2D) -> Field2D {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let inv_h2 = 1.0 / (g.h * g.h);
    let v = &f.values;
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = v[k];
            let east = if i + 1 < nx { v[k + 1] } else { c };
            let west = if i > 0 { v[k - 1] } else { c };
            let north = if j + 1 < ny { v[k + nx] } else { c };
            let south = if j > 0 { v[k - nx] } else { c };
            out[k] = ((east - c) + (west - c) + (north - c) + (south - c)) * inv_h2;
        }
    }
    Field2D {
        grid: g,
        values: out,
    }
}

/// Per-cell `(Fx[i+1,j] - Fx[i,j] + Fy[i,j+1] - Fy[i,j]) / h`.
///
/// Rejects fluxes with nonzero boundary faces, since those would leak mass.
pub fn divergence(fluxes: &FaceFluxes) -> Result<Field2D, GridError> {
    fluxes.check_boundary()?;
    Ok(divergence_unchecked(fluxes))
}

pub(crate) fn divergence_unchecked(fluxes: &FaceFluxes) -> Field2D {
    let g = fluxes.grid;
    let (nx, ny) = (g.nx, g.ny);
    let inv_h = 1.0 / g.h;
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let net = (fluxes.x(i + 1, j) - fluxes.x(i, j)) + (fluxes.y(i, j + 1) - fluxes.y(i, j));
            out[j * nx + i] = net * inv_h;
        }
    }
    Field2D {
        grid: g,
        values: out,
    }
}

/// `h² Σ f`, summed row by row in storage order.
pub fn total_mass(f: &Field2D) -> f64 {
    let h = f.grid.h;
    f.values.iter().sum::<f64>() * h * h
}

/// Bilinear interpolation between the four cell centers around `p`.
///
/// Points outside the hull of cell centers are clamped onto it, so the
/// outermost half cell reads as the boundary cell values.
pub fn interp_bilinear(f: &Field2D, p: Point) -> f64 {
    let g = f.grid;
    let max_x = (g.nx - 1) as f64;
    let max_y = (g.ny - 1) as f64;
    // continuous index space: cell center (i, j) sits at (i, j)
    let sx = ((p.x - g.origin.x) / g.h - 0.5).clamp(0.0, max_x);
    let sy = ((p.y - g.origin.y) / g.h - 0.5).clamp(0.0, max_y);
    let i0 = (sx.floor() as usize).min(g.nx - 2);
    let j0 = (sy.floor() as usize).min(g.ny - 2);
    let tx = sx - i0 as f64;
    let ty = sy - j0 as f64;
    let f00 = f.get(i0, j0);
    let f10 = f.get(i0 + 1, j0);
    let f01 = f.get(i0, j0 + 1);
    let f11 = f.get(i0 + 1, j0 + 1);
    let bottom = f00 + tx * (f10 - f00);
    let top = f01 + tx * (f11 - f01);
    bottom + ty * (top - bottom)
}
