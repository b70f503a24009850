//! Density dynamics in differential form: drift, osmotic and current
//! velocities, the phase that packages them, and conservative
//! finite-volume updates of the continuity equation.
//!
//! All velocities live on faces. The osmotic flux uses the logarithmic mean
//! of the two neighbouring densities, which makes `rho u` equal to the
//! diffusive flux `-(hbar / 2m) d rho` exactly; the drift-diffusion and the
//! continuity forms of the density rate then agree to rounding.

use crate::calculus::{face_divergence, wrap_angle};
use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::field::{Centering, ScalarField, VectorField};
use crate::gauge::GaugeConfig;
use crate::grid::Grid;
use crate::state::{check_floor, clamp_to_floor, FloorReport};

/// Largest accepted `max|v| dt / dx`.
pub const CFL_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDecomposition {
    pub drift: VectorField,
    pub osmotic: VectorField,
    pub current: VectorField,
}

impl VelocityDecomposition {
    /// `max |current - (drift + osmotic)|` over all faces.
    pub fn consistency_residual(&self) -> f64 {
        let sum = self
            .drift
            .zip_map(&self.osmotic, |b, u| b + u)
            .expect("same layout");
        sum.zip_map(&self.current, |s, v| (s - v).abs())
            .expect("same layout")
            .max_abs()
    }
}

/// Logarithmic mean `(a - b) / (ln a - ln b)`, continuous at `a = b`.
#[inline]
pub fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let t = b / a - 1.0;
    if t.abs() < 1e-4 {
        a * (1.0 + t * (0.5 - t * (1.0 / 12.0 - t / 24.0)))
    } else {
        (b - a) / (b / a).ln()
    }
}

/// Phase increment `Phi_j - Phi_i` across each face in units of hbar,
/// including the seam twist, before any connection term.
fn phase_increment(
    phase: &ScalarField,
    gauge: &GaugeConfig,
    hbar: f64,
    cell: usize,
    d: usize,
    r: usize,
) -> f64 {
    let mut inc = (phase.values()[r] - phase.values()[cell]) / hbar;
    if phase.grid().is_seam_face(cell, d) {
        inc += gauge.seam_twist[d];
    }
    inc
}

fn decompose(
    rho: &ScalarField,
    phase: &ScalarField,
    gauge: &GaugeConfig,
    k: &Constants,
) -> Result<VelocityDecomposition> {
    let grid = rho.grid();
    grid.check_same(phase.grid())?;
    grid.check_same(gauge.grid())?;
    k.validate(grid.dim())?;
    let corrected = gauge.corrected_derivative();
    let chi = gauge.chi.values();
    let ln_s: Vec<f64> = rho.values().iter().map(|r| 0.5 * r.ln()).collect();
    let mut drift = VectorField::zeros(grid, Centering::Face);
    let mut osmotic = VectorField::zeros(grid, Centering::Face);
    let mut current = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        let h = grid.spacing(d);
        let scale = k.hbar / k.masses[d];
        let beta = k.betas[d];
        for cell in 0..grid.len() {
            let Some(r) = grid.neighbor(cell, d, true) else {
                continue;
            };
            let inc = phase_increment(phase, gauge, k.hbar, cell, d, r);
            let dchi = wrap_angle(chi[r] - chi[cell]);
            let dln = ln_s[r] - ln_s[cell];
            // Increment of the drift potential phi = Phi/hbar - beta chi + ln rho^(1/2).
            let dphi = wrap_angle(inc - beta * dchi) + dln;
            drift.component_mut(d)[cell] = scale * (dphi / h + beta * corrected.get(d, cell));
            osmotic.component_mut(d)[cell] = -scale * dln / h;
            let a = gauge.connection.get(d, cell);
            current.component_mut(d)[cell] = scale * wrap_angle(inc - beta * a * h) / h;
        }
    }
    Ok(VelocityDecomposition {
        drift,
        osmotic,
        current,
    })
}

/// Drift, osmotic and current velocities of the state `(rho, Phi)`.
pub fn current_velocity(
    rho: &ScalarField,
    phase: &ScalarField,
    gauge: &GaugeConfig,
    k: &Constants,
) -> Result<VelocityDecomposition> {
    check_floor(rho)?;
    decompose(rho, phase, gauge, k)
}

/// As [`current_velocity`], clamping sub-floor cells and reporting them.
pub fn current_velocity_clamped(
    rho: &ScalarField,
    phase: &ScalarField,
    gauge: &GaugeConfig,
    k: &Constants,
) -> Result<(VelocityDecomposition, FloorReport)> {
    let (clamped, report) = clamp_to_floor(rho);
    Ok((decompose(&clamped, phase, gauge, k)?, report))
}

/// `Phi = hbar (phi + beta chi - ln rho^(1/2))`.
pub fn phase_from_constraints(
    phi: &ScalarField,
    gauge: &GaugeConfig,
    rho: &ScalarField,
    k: &Constants,
) -> Result<ScalarField> {
    let grid = rho.grid();
    grid.check_same(phi.grid())?;
    grid.check_same(gauge.grid())?;
    check_floor(rho)?;
    let beta = k.uniform_beta()?;
    let vals = (0..grid.len())
        .map(|i| {
            k.hbar * (phi.values()[i] + beta * gauge.chi.values()[i] - 0.5 * rho.values()[i].ln())
        })
        .collect();
    ScalarField::from_values(grid, vals)
}

fn flux_divergence_rate(flux: VectorField) -> ScalarField {
    face_divergence(&flux).expect("face flux").map(|v| -v)
}

/// `d rho / dt = -div(rho b) + (hbar / 2m) laplacian(rho)` with face drift `b`.
pub fn rate_drift_diffusion(
    rho: &ScalarField,
    drift: &VectorField,
    k: &Constants,
) -> Result<ScalarField> {
    let grid = rho.grid();
    grid.check_same(drift.grid())?;
    if drift.centering() != Centering::Face {
        return Err(EdError::Invalid("drift must be face-centred".into()));
    }
    let r = rho.values();
    let mut flux = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        let h = grid.spacing(d);
        let diff = 0.5 * k.hbar / k.masses[d];
        for cell in 0..grid.len() {
            if let Some(j) = grid.neighbor(cell, d, true) {
                flux.component_mut(d)[cell] =
                    log_mean(r[cell], r[j]) * drift.get(d, cell) - diff * (r[j] - r[cell]) / h;
            }
        }
    }
    Ok(flux_divergence_rate(flux))
}

/// `d rho / dt = -div(rho v)` with the current velocity.
pub fn rate_continuity(rho: &ScalarField, vel: &VelocityDecomposition) -> Result<ScalarField> {
    let grid = rho.grid();
    grid.check_same(vel.current.grid())?;
    let r = rho.values();
    let mut flux = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        for cell in 0..grid.len() {
            if let Some(j) = grid.neighbor(cell, d, true) {
                flux.component_mut(d)[cell] = log_mean(r[cell], r[j]) * vel.current.get(d, cell);
            }
        }
    }
    Ok(flux_divergence_rate(flux))
}

fn cfl_ratio(grid: &Grid, v: &VectorField, dt: f64) -> f64 {
    (0..grid.dim())
        .map(|d| v.component(d).iter().fold(0.0f64, |m, x| m.max(x.abs())) * dt / grid.spacing(d))
        .fold(0.0, f64::max)
}

/// One explicit conservative step of the continuity equation. The drift
/// flux is upwinded; the osmotic flux uses the logarithmic-mean density.
pub fn fp_step(rho: &ScalarField, vel: &VelocityDecomposition, dt: f64) -> Result<ScalarField> {
    let grid = rho.grid();
    grid.check_same(vel.current.grid())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EdError::Invalid(format!("dt must be > 0, got {dt}")));
    }
    let ratio = cfl_ratio(grid, &vel.current, dt).max(cfl_ratio(grid, &vel.drift, dt));
    if ratio > CFL_LIMIT {
        return Err(EdError::Cfl {
            ratio,
            limit: CFL_LIMIT,
        });
    }
    let r = rho.values();
    let mut flux = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        for cell in 0..grid.len() {
            if let Some(j) = grid.neighbor(cell, d, true) {
                let b = vel.drift.get(d, cell);
                let upwind = if b >= 0.0 { r[cell] } else { r[j] };
                flux.component_mut(d)[cell] =
                    upwind * b + log_mean(r[cell], r[j]) * vel.osmotic.get(d, cell);
            }
        }
    }
    let div = face_divergence(&flux)?;
    let out: Vec<f64> = r
        .iter()
        .zip(div.values())
        .map(|(a, f)| a - dt * f)
        .collect();
    ScalarField::from_values(grid, out)
}

/// Explicit drift-diffusion stepper for a fixed face drift with
/// Scharfetter-Gummel fluxes: exact for piecewise-constant drift, reduces to
/// upwinding at large cell Peclet number and keeps rho nonnegative under
/// the stability bound.
#[derive(Debug, Clone)]
pub struct DriftDiffusion {
    drift: VectorField,
    coeff: Vec<f64>,
}

/// `z / (e^z - 1)`.
#[inline]
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-6 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

impl DriftDiffusion {
    pub fn new(drift: &VectorField, k: &Constants) -> Result<Self> {
        if drift.centering() != Centering::Face {
            return Err(EdError::Invalid("drift must be face-centred".into()));
        }
        k.validate(drift.grid().dim())?;
        let coeff = (0..drift.grid().dim())
            .map(|d| 0.5 * k.hbar / k.masses[d])
            .collect();
        Ok(Self {
            drift: drift.clone(),
            coeff,
        })
    }

    /// Largest stable explicit step.
    pub fn max_stable_dt(&self) -> f64 {
        let grid = self.drift.grid();
        let mut rate = 0.0;
        for d in 0..grid.dim() {
            let h = grid.spacing(d);
            let bmax = self
                .drift
                .component(d)
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            rate += 2.0 * self.coeff[d] / (h * h) + bmax / h;
        }
        1.0 / rate
    }

    pub fn step(&self, rho: &ScalarField, dt: f64) -> Result<ScalarField> {
        let grid = rho.grid();
        grid.check_same(self.drift.grid())?;
        let limit = self.max_stable_dt();
        if dt > limit {
            return Err(EdError::Cfl {
                ratio: dt / limit,
                limit: 1.0,
            });
        }
        let r = rho.values();
        let mut flux = VectorField::zeros(grid, Centering::Face);
        for d in 0..grid.dim() {
            let h = grid.spacing(d);
            let dc = self.coeff[d];
            for cell in 0..grid.len() {
                if let Some(j) = grid.neighbor(cell, d, true) {
                    let pe = self.drift.get(d, cell) * h / dc;
                    flux.component_mut(d)[cell] =
                        dc / h * (bernoulli(-pe) * r[cell] - bernoulli(pe) * r[j]);
                }
            }
        }
        let div = face_divergence(&flux)?;
        let out: Vec<f64> = r
            .iter()
            .zip(div.values())
            .map(|(a, f)| a - dt * f)
            .collect();
        ScalarField::from_values(grid, out)
    }
}
