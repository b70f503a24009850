//! The e-phase-space point (rho, Phi) and the density floor policy.

use crate::calculus::integrate;
use crate::error::{EdError, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

/// Floor relative to the uniform density `1 / volume`. Cells below it are
/// clamped wherever a log or a division by rho is needed.
pub const DENSITY_FLOOR_REL: f64 = 1e-12;

/// Tolerance on `integrate(rho) = 1` accepted as normalized input.
pub const NORMALIZATION_TOL: f64 = 1e-8;

pub fn density_floor(grid: &Grid) -> f64 {
    DENSITY_FLOOR_REL / grid.volume()
}

/// Count of clamped cells produced by [`clamp_to_floor`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FloorReport {
    pub clamped: usize,
    pub first_cell: Option<usize>,
}

impl FloorReport {
    pub fn triggered(&self) -> bool {
        self.clamped > 0
    }

    pub fn merge(&mut self, other: FloorReport) {
        self.clamped += other.clamped;
        self.first_cell = self.first_cell.or(other.first_cell);
    }
}

/// Error naming the first cell whose density is below the floor.
pub fn check_floor(rho: &ScalarField) -> Result<()> {
    let floor = density_floor(rho.grid());
    match rho.values().iter().position(|v| !(*v >= floor)) {
        Some(cell) => Err(EdError::BelowFloor {
            cell,
            value: rho.values()[cell],
            floor,
        }),
        None => Ok(()),
    }
}

pub fn clamp_to_floor(rho: &ScalarField) -> (ScalarField, FloorReport) {
    let floor = density_floor(rho.grid());
    let mut report = FloorReport::default();
    let clamped = rho
        .values()
        .iter()
        .enumerate()
        .map(|(cell, v)| {
            if *v >= floor {
                *v
            } else {
                report.clamped += 1;
                report.first_cell.get_or_insert(cell);
                floor
            }
        })
        .collect();
    (
        ScalarField::from_values(rho.grid(), clamped).expect("floor keeps values finite"),
        report,
    )
}

pub fn check_normalized(rho: &ScalarField, tol: f64) -> Result<()> {
    let integral = integrate(rho);
    if (integral - 1.0).abs() > tol || !integral.is_finite() {
        Err(EdError::NotNormalized { integral })
    } else {
        Ok(())
    }
}

/// Normalize a nonnegative density to unit integral.
pub fn normalized(rho: &ScalarField) -> Result<ScalarField> {
    let total = integrate(rho);
    if !(total > 0.0 && total.is_finite()) {
        return Err(EdError::Invalid(format!(
            "cannot normalize density with integral {total}"
        )));
    }
    Ok(rho.scaled(1.0 / total))
}

/// A point of e-phase space: density rho and phase Phi on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub rho: ScalarField,
    pub phase: ScalarField,
}

impl EnsembleState {
    pub fn new(rho: ScalarField, phase: ScalarField) -> Result<Self> {
        rho.grid().check_same(phase.grid())?;
        Ok(Self { rho, phase })
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }
}
