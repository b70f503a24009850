//! Rectangular lattices of up to three dimensions.
//!
//! Cells are stored flat in row-major order (last dimension fastest). Cell
//! `i` along dimension `d` has its centre at `(i + 1/2) * dx_d`, so the
//! domain is `[0, L_d)` in every direction.
//!
//! Staggered quantities (gauge connections, face velocities, fluxes) are
//! stored on the "forward face" of each cell: entry `i` in dimension `d`
//! lives between cell `i` and its `+d` neighbour. On reflecting grids the
//! last face in each direction is a wall and carries nothing.

use std::fmt;
use std::str::FromStr;

use crate::error::{EdError, Result};

pub const MAX_DIM: usize = 3;
pub const MIN_POINTS: usize = 8;
/// Default cap on the total number of cells.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Reflecting,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Reflecting => f.write_str("reflecting"),
        }
    }
}

impl FromStr for Boundary {
    type Err = EdError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "reflecting" => Ok(Boundary::Reflecting),
            other => Err(EdError::Parse(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<usize>,
    lengths: Vec<f64>,
    boundary: Boundary,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(points: Vec<usize>, lengths: Vec<f64>, boundary: Boundary) -> Result<Self> {
        Self::with_budget(points, lengths, boundary, DEFAULT_CELL_BUDGET)
    }

    pub fn with_budget(
        points: Vec<usize>,
        lengths: Vec<f64>,
        boundary: Boundary,
        budget: usize,
    ) -> Result<Self> {
        let dim = points.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(EdError::Invalid(format!(
                "grid dimension must be 1..=3, got {dim}"
            )));
        }
        if lengths.len() != dim {
            return Err(EdError::Invalid(format!(
                "{dim} point counts but {} lengths",
                lengths.len()
            )));
        }
        if let Some(n) = points.iter().find(|n| **n < MIN_POINTS) {
            return Err(EdError::Invalid(format!(
                "need at least {MIN_POINTS} points per dimension, got {n}"
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(EdError::Invalid(format!(
                "lengths must be positive, got {l}"
            )));
        }
        let total = points
            .iter()
            .try_fold(1usize, |acc, n| acc.checked_mul(*n))
            .ok_or_else(|| EdError::Invalid("cell count overflows".into()))?;
        if total > budget {
            return Err(EdError::Invalid(format!(
                "{total} cells exceeds budget {budget}"
            )));
        }
        let mut strides = vec![1; dim];
        for d in (0..dim.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * points[d + 1];
        }
        Ok(Self {
            points,
            lengths,
            boundary,
            strides,
        })
    }

    /// One-dimensional convenience constructor.
    pub fn line(n: usize, length: f64, boundary: Boundary) -> Result<Self> {
        Self::new(vec![n], vec![length], boundary)
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.lengths[d] / self.points[d] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, d: usize) -> usize {
        self.strides[d]
    }

    /// Coordinate index of `cell` along dimension `d`.
    #[inline]
    pub fn coord(&self, cell: usize, d: usize) -> usize {
        (cell / self.strides[d]) % self.points[d]
    }

    pub fn coords(&self, cell: usize) -> [usize; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for (d, slot) in c.iter_mut().enumerate().take(self.dim()) {
            *slot = self.coord(cell, d);
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Neighbour of `cell` one step along `d` (`forward` = +d). `None` at a
    /// reflecting wall.
    #[inline]
    pub fn neighbor(&self, cell: usize, d: usize, forward: bool) -> Option<usize> {
        let i = self.coord(cell, d);
        let n = self.points[d];
        let s = self.strides[d];
        match (forward, self.boundary) {
            (true, _) if i + 1 < n => Some(cell + s),
            (true, Boundary::Periodic) => Some(cell + s - n * s),
            (false, _) if i > 0 => Some(cell - s),
            (false, Boundary::Periodic) => Some(cell + (n - 1) * s),
            _ => None,
        }
    }

    /// True when the forward face of `cell` along `d` crosses the periodic
    /// seam (last cell to first cell).
    #[inline]
    pub fn is_seam_face(&self, cell: usize, d: usize) -> bool {
        self.is_periodic() && self.coord(cell, d) + 1 == self.points[d]
    }

    /// Centre of `cell` along `d`.
    #[inline]
    pub fn position(&self, cell: usize, d: usize) -> f64 {
        (self.coord(cell, d) as f64 + 0.5) * self.spacing(d)
    }

    pub fn centre(&self, cell: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for (d, slot) in x.iter_mut().enumerate().take(self.dim()) {
            *slot = self.position(cell, d);
        }
        x
    }

    /// Map a position back into the domain: wrap on periodic grids, mirror on
    /// reflecting grids. Returns the number of mirror reflections applied and
    /// whether a clamp was still needed afterwards.
    pub fn fold_position(&self, x: &mut [f64]) -> (usize, bool) {
        let mut reflections = 0;
        let mut clamped = false;
        for (d, xd) in x.iter_mut().enumerate().take(self.dim()) {
            let l = self.lengths[d];
            match self.boundary {
                Boundary::Periodic => {
                    *xd = xd.rem_euclid(l);
                    if *xd >= l {
                        *xd = 0.0;
                    }
                }
                Boundary::Reflecting => {
                    if *xd < 0.0 {
                        *xd = -*xd;
                        reflections += 1;
                    }
                    if *xd > l {
                        *xd = 2.0 * l - *xd;
                        reflections += 1;
                    }
                    if !(0.0..=l).contains(xd) {
                        *xd = xd.clamp(0.0, l);
                        clamped = true;
                    }
                }
            }
        }
        (reflections, clamped)
    }

    /// Cell containing position `x` (positions are assumed folded).
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for d in 0..self.dim() {
            let n = self.points[d];
            let i = ((x[d] / self.spacing(d)).floor().max(0.0) as usize).min(n - 1);
            idx += i * self.strides[d];
        }
        idx
    }

    /// Minimal displacement from `a` to `b` along `d` (wrapped on periodic grids).
    #[inline]
    pub fn displacement(&self, a: f64, b: f64, d: usize) -> f64 {
        let mut dx = b - a;
        if self.is_periodic() {
            let l = self.lengths[d];
            dx -= l * (dx / l).round();
        }
        dx
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(EdError::GridMismatch(format!("{self} vs {other}")))
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dim())?;
        for n in &self.points {
            write!(f, " {n}")?;
        }
        for l in &self.lengths {
            write!(f, " {l:.16e}")?;
        }
        write!(f, " {}", self.boundary)
    }
}
