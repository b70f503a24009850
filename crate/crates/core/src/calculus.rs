//! Discrete calculus on [`Grid`] fields.
//!
//! Cell-centred operators use second-order central stencils, with one-sided
//! second-order stencils at reflecting walls. Staggered operators
//! ([`forward_difference`], [`face_divergence`]) work on face-centred data
//! and are exactly conservative: the face divergence of any flux sums to
//! zero on a periodic grid and on a reflecting grid with closed walls.

use std::f64::consts::PI;

use crate::error::{EdError, Result};
use crate::field::{Centering, ScalarField, VectorField};
use crate::grid::Grid;

/// Wrap an angle to `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Central derivative of `values` along `d` at `cell`.
#[inline]
fn central(grid: &Grid, values: &[f64], cell: usize, d: usize) -> f64 {
    let h = grid.spacing(d);
    match (grid.neighbor(cell, d, false), grid.neighbor(cell, d, true)) {
        (Some(l), Some(r)) => (values[r] - values[l]) / (2.0 * h),
        (None, Some(r)) => {
            let s = grid.stride(d);
            (-3.0 * values[cell] + 4.0 * values[r] - values[r + s]) / (2.0 * h)
        }
        (Some(l), None) => {
            let s = grid.stride(d);
            (3.0 * values[cell] - 4.0 * values[l] + values[l - s]) / (2.0 * h)
        }
        (None, None) => 0.0,
    }
}

/// Cell-centred gradient.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let mut out = VectorField::zeros(grid, Centering::Cell);
    for d in 0..grid.dim() {
        let comp = out.component_mut(d);
        for (cell, slot) in comp.iter_mut().enumerate() {
            *slot = central(grid, f.values(), cell, d);
        }
    }
    out
}

/// Cell-centred divergence of a cell-centred vector field. On periodic grids
/// this is minus the adjoint of [`gradient`].
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    if v.centering() != Centering::Cell {
        return Err(EdError::Invalid(
            "divergence expects a cell-centred field; use face_divergence".into(),
        ));
    }
    let grid = v.grid();
    let mut out = vec![0.0; grid.len()];
    for d in 0..grid.dim() {
        let comp = v.component(d);
        for (cell, slot) in out.iter_mut().enumerate() {
            *slot += central(grid, comp, cell, d);
        }
    }
    ScalarField::from_values(grid, out)
}

/// Compact (3-point per dimension) Laplacian. Reflecting walls use a mirror
/// ghost cell, i.e. zero normal derivative.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let vals = f.values();
    let mut out = vec![0.0; grid.len()];
    for d in 0..grid.dim() {
        let h2 = grid.spacing(d).powi(2);
        for (cell, slot) in out.iter_mut().enumerate() {
            let c = vals[cell];
            let l = grid.neighbor(cell, d, false).map_or(c, |i| vals[i]);
            let r = grid.neighbor(cell, d, true).map_or(c, |i| vals[i]);
            *slot += (l - 2.0 * c + r) / h2;
        }
    }
    ScalarField::from_values(grid, out).expect("laplacian of a finite field is finite")
}

/// `sum_i f_i * dV`, summed in cell order so the result is reproducible.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Forward differences on faces: `(f[i+e_d] - f[i]) / dx_d`; zero on walls.
pub fn forward_difference(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let vals = f.values();
    let mut out = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        let h = grid.spacing(d);
        let comp = out.component_mut(d);
        for (cell, slot) in comp.iter_mut().enumerate() {
            if let Some(r) = grid.neighbor(cell, d, true) {
                *slot = (vals[r] - vals[cell]) / h;
            }
        }
    }
    out
}

/// Divergence of a face-centred flux: `sum_d (F[i] - F[i-e_d]) / dx_d`.
/// Wall faces are treated as closed.
pub fn face_divergence(flux: &VectorField) -> Result<ScalarField> {
    if flux.centering() != Centering::Face {
        return Err(EdError::Invalid(
            "face_divergence expects a face-centred field".into(),
        ));
    }
    let grid = flux.grid();
    let mut out = vec![0.0; grid.len()];
    for d in 0..grid.dim() {
        let h = grid.spacing(d);
        let comp = flux.component(d);
        for (cell, slot) in out.iter_mut().enumerate() {
            let right = if grid.neighbor(cell, d, true).is_some() {
                comp[cell]
            } else {
                0.0
            };
            let left = grid.neighbor(cell, d, false).map_or(0.0, |l| comp[l]);
            *slot += (right - left) / h;
        }
    }
    ScalarField::from_values(grid, out)
}

/// Interpolate a cell-centred vector field onto faces (mean of the two
/// adjacent cells). Wall faces are zero.
pub fn cell_to_face(v: &VectorField) -> VectorField {
    if v.centering() == Centering::Face {
        return v.clone();
    }
    let grid = v.grid();
    let mut out = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        let src = v.component(d).to_vec();
        let comp = out.component_mut(d);
        for (cell, slot) in comp.iter_mut().enumerate() {
            if let Some(r) = grid.neighbor(cell, d, true) {
                *slot = 0.5 * (src[cell] + src[r]);
            }
        }
    }
    out
}

/// Average face values back to cell centres. At reflecting walls the single
/// interior face is used.
pub fn face_to_cell(v: &VectorField) -> VectorField {
    if v.centering() == Centering::Cell {
        return v.clone();
    }
    let grid = v.grid();
    let mut out = VectorField::zeros(grid, Centering::Cell);
    for d in 0..grid.dim() {
        let src = v.component(d).to_vec();
        let comp = out.component_mut(d);
        for (cell, slot) in comp.iter_mut().enumerate() {
            let right = grid.neighbor(cell, d, true).map(|_| src[cell]);
            let left = grid.neighbor(cell, d, false).map(|l| src[l]);
            *slot = match (left, right) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 0.0,
            };
        }
    }
    out
}
