use num_complex::Complex64;

use crate::error::{EdError, Result};
use crate::grid::Grid;

/// Real value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

/// Where the components of a [`VectorField`] live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// At cell centres.
    Cell,
    /// On the forward face of each cell in the component's own direction.
    Face,
}

/// One real value per cell per dimension, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    centering: Centering,
    values: Vec<f64>,
}

/// Complex value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    for (i, v) in values.into_iter().enumerate() {
        if !v.is_finite() {
            return Err(EdError::NonFinite(format!("{what} entry {i} = {v}")));
        }
    }
    Ok(())
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(EdError::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        check_finite(values.iter().copied(), "scalar field")?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Sample `f` at every cell centre.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|c| f(&grid.centre(c)[..d])).collect();
        Self {
            grid: grid.clone(),
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

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid, centering: Centering) -> Self {
        Self {
            grid: grid.clone(),
            centering,
            values: vec![0.0; grid.len() * grid.dim()],
        }
    }

    pub fn from_components(
        grid: &Grid,
        centering: Centering,
        components: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(EdError::GridMismatch(
                "vector components do not match grid".into(),
            ));
        }
        let values: Vec<f64> = components.into_iter().flatten().collect();
        check_finite(values.iter().copied(), "vector field")?;
        Ok(Self {
            grid: grid.clone(),
            centering,
            values,
        })
    }

    /// Uniform vector `v` at every location.
    pub fn uniform(grid: &Grid, centering: Centering, v: &[f64]) -> Self {
        let mut out = Self::zeros(grid, centering);
        for (d, vd) in v.iter().enumerate().take(grid.dim()) {
            out.component_mut(d).fill(*vd);
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn component(&self, d: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[d * n..(d + 1) * n]
    }

    pub fn component_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[d * n..(d + 1) * n]
    }

    #[inline]
    pub fn get(&self, d: usize, cell: usize) -> f64 {
        self.values[d * self.grid.len() + cell]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zip_map(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        if self.centering != other.centering {
            return Err(EdError::GridMismatch(
                "vector fields with different centering".into(),
            ));
        }
        Ok(Self {
            grid: self.grid.clone(),
            centering: self.centering,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(EdError::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        check_finite(values.iter().flat_map(|z| [z.re, z.im]), "complex field")?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|c| f(&grid.centre(c)[..d])).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn density(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// `sum |psi|^2 dV`, accumulated in cell order.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
