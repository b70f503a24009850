//! Gauge data: the angle field chi, the connection A and the seam twist.
//!
//! The connection is face-centred: `A_d[i]` is the line average of `A_d`
//! over the forward face of cell `i`, so `A_d[i] * dx_d` is the lattice link
//! angle. A gauge function gamma then shifts `A_d[i]` by the exact forward
//! difference of gamma and every gauge-covariant quantity built from links
//! transforms exactly, not just to O(dx^2).
//!
//! `seam_twist[d]` is the jump in `Phi / hbar` when a path crosses the
//! periodic seam of dimension `d`. It is zero for single-valued phases and
//! `2 pi beta nu` for a phase built from an angle with winding `nu` and a
//! non-integer multiplier `beta` (the covering-space representation).

use num_complex::Complex64;

use crate::calculus::{forward_difference, wrap_angle};
use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::field::{Centering, ScalarField, VectorField};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeConfig {
    pub chi: ScalarField,
    pub connection: VectorField,
    pub seam_twist: Vec<f64>,
}

impl GaugeConfig {
    /// chi = 0, A = 0, no twist.
    pub fn trivial(grid: &Grid) -> Self {
        Self {
            chi: ScalarField::zeros(grid),
            connection: VectorField::zeros(grid, Centering::Face),
            seam_twist: vec![0.0; grid.dim()],
        }
    }

    pub fn new(chi: ScalarField, connection: VectorField) -> Result<Self> {
        chi.grid().check_same(connection.grid())?;
        if connection.centering() != Centering::Face {
            return Err(EdError::Invalid(
                "gauge connection must be face-centred".into(),
            ));
        }
        let d = chi.grid().dim();
        Ok(Self {
            chi: chi.map(wrap_angle),
            connection,
            seam_twist: vec![0.0; d],
        })
    }

    /// An angle winding `nu` times along `axis` (stored wrapped), A = 0.
    pub fn winding(grid: &Grid, axis: usize, nu: i64) -> Self {
        let l = grid.lengths()[axis];
        let chi = ScalarField::from_fn(grid, |x| {
            wrap_angle(2.0 * std::f64::consts::PI * nu as f64 * x[axis] / l)
        });
        Self {
            chi,
            ..Self::trivial(grid)
        }
    }

    /// Uniform connection, chi = 0.
    pub fn uniform_connection(grid: &Grid, a: &[f64]) -> Self {
        Self {
            connection: VectorField::uniform(grid, Centering::Face, a),
            ..Self::trivial(grid)
        }
    }

    pub fn with_seam_twist(mut self, twist: Vec<f64>) -> Self {
        self.seam_twist = twist;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.chi.grid()
    }

    /// Gauge-invariant corrected derivative `d chi - A` on faces, with the
    /// chi difference branch-corrected to `(-pi, pi]`. Wall faces are zero.
    pub fn corrected_derivative(&self) -> VectorField {
        let grid = self.grid();
        let chi = self.chi.values();
        let mut out = VectorField::zeros(grid, Centering::Face);
        for d in 0..grid.dim() {
            let h = grid.spacing(d);
            let a = self.connection.component(d).to_vec();
            let comp = out.component_mut(d);
            for (cell, slot) in comp.iter_mut().enumerate() {
                if let Some(r) = grid.neighbor(cell, d, true) {
                    *slot = wrap_angle(chi[r] - chi[cell]) / h - a[cell];
                }
            }
        }
        out
    }

    /// Angle added to a forward phase difference across the face of `cell`
    /// along `d`: `-beta_d A dx_d`, plus the seam twist on seam faces.
    #[inline]
    pub fn link_angle(&self, k: &Constants, cell: usize, d: usize) -> f64 {
        let grid = self.grid();
        let mut a = -k.betas[d] * self.connection.get(d, cell) * grid.spacing(d);
        if grid.is_seam_face(cell, d) {
            a += self.seam_twist[d];
        }
        a
    }

    /// Lattice parallel transporter bringing the forward neighbour's value
    /// back to `cell`.
    #[inline]
    pub fn hop(&self, k: &Constants, cell: usize, d: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.link_angle(k, cell, d))
    }

    /// Apply the gauge function gamma: `chi -> chi + gamma (mod 2 pi)`,
    /// `A -> A + forward_difference(gamma)`.
    pub fn transformed(&self, gamma: &ScalarField) -> Result<Self> {
        self.grid().check_same(gamma.grid())?;
        let chi = self.chi.zip_map(gamma, |c, g| wrap_angle(c + g))?;
        let connection = self
            .connection
            .zip_map(&forward_difference(gamma), |a, dg| a + dg)?;
        Ok(Self {
            chi,
            connection,
            seam_twist: self.seam_twist.clone(),
        })
    }
}
