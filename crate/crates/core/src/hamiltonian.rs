//! The e-Hamiltonian, its functional derivatives, the Hamilton flow of
//! `(rho, Phi)` and the gauge-covariant Schrodinger solver.
//!
//! Both coordinate systems share one lattice energy. With `s = rho^(1/2)`,
//! `c_d = hbar^2 / (2 m_d dx_d^2)` and the face angle
//! `delta = (Phi_j - Phi_i) / hbar + link`,
//!
//! ```text
//! H = dV sum_i [ sum_faces c_d ((s_j - s_i)^2 + 2 s_i s_j (1 - cos delta)) + rho_i V_i ]
//!   = dV sum_i [ sum_faces c_d |hop psi_j - psi_i|^2 + V_i |psi_i|^2 ]
//! ```
//!
//! The first line is the kinetic plus quantum-potential energy in real
//! coordinates, the second the covariant kinetic energy of `psi`. They are
//! equal term by term, so the Hamilton flow and the Schrodinger equation on
//! the lattice are the same dynamics and differ only by time stepping.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::calculus::integrate;
use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::field::{Centering, ComplexField, ScalarField, VectorField};
use crate::gauge::GaugeConfig;
use crate::grid::{Boundary, Grid, MAX_DIM};
use crate::state::{check_normalized, EnsembleState, NORMALIZATION_TOL};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Scalar potential in energy units.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub v: ScalarField,
}

impl Potential {
    pub fn new(v: ScalarField) -> Result<Self> {
        if !v.is_finite() {
            return Err(EdError::NonFinite("potential".into()));
        }
        Ok(Self { v })
    }

    pub fn zero(grid: &Grid) -> Self {
        Self {
            v: ScalarField::zeros(grid),
        }
    }

    pub fn constant(grid: &Grid, v0: f64) -> Self {
        Self {
            v: ScalarField::constant(grid, v0),
        }
    }

    /// `1/2 m_d omega^2 (x_d - c_d)^2` summed over dimensions.
    pub fn harmonic(grid: &Grid, k: &Constants, omega: f64, centre: &[f64]) -> Self {
        let v = ScalarField::from_fn(grid, |x| {
            x.iter()
                .enumerate()
                .map(|(d, xd)| 0.5 * k.masses[d] * omega * omega * (xd - centre[d]).powi(2))
                .sum()
        });
        Self { v }
    }

    /// Square barrier of the given height and width along dimension 0.
    pub fn barrier(grid: &Grid, height: f64, width: f64, centre: f64) -> Self {
        let v = ScalarField::from_fn(grid, |x| {
            if (x[0] - centre).abs() <= 0.5 * width {
                height
            } else {
                0.0
            }
        });
        Self { v }
    }

    pub fn max_abs(&self) -> f64 {
        self.v.max_abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CrankNicolson,
    SplitStepSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub steps: usize,
}

impl EvolverConfig {
    pub fn new(dt: f64, scheme: Scheme, steps: usize) -> Self {
        Self { dt, scheme, steps }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EdError::Invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.scheme == Scheme::SplitStepSpectral && grid.boundary() != Boundary::Periodic {
            return Err(EdError::Invalid(
                "split-step spectral needs a periodic grid".into(),
            ));
        }
        Ok(())
    }
}

/// `hbar^2 / (2 m_d dx_d^2)`.
#[inline]
fn kinetic_coeff(k: &Constants, grid: &Grid, d: usize) -> f64 {
    let h = grid.spacing(d);
    k.hbar * k.hbar / (2.0 * k.masses[d] * h * h)
}

fn check_density(rho: &ScalarField) -> Result<()> {
    if let Some(cell) = rho
        .values()
        .iter()
        .position(|r| !(*r >= 0.0) || !r.is_finite())
    {
        return Err(EdError::Node {
            cell,
            value: rho.values()[cell],
        });
    }
    Ok(())
}

/// Face angle `(Phi_j - Phi_i) / hbar + link`.
#[inline]
fn face_angle(
    phase: &[f64],
    gauge: &GaugeConfig,
    k: &Constants,
    i: usize,
    j: usize,
    d: usize,
) -> f64 {
    (phase[j] - phase[i]) / k.hbar + gauge.link_angle(k, i, d)
}

/// The e-Hamiltonian in `(rho, Phi)` coordinates.
pub fn e_hamiltonian(
    state: &EnsembleState,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
) -> Result<f64> {
    let grid = state.grid();
    grid.check_same(gauge.grid())?;
    grid.check_same(pot.v.grid())?;
    k.validate(grid.dim())?;
    check_density(&state.rho)?;
    check_normalized(&state.rho, NORMALIZATION_TOL)?;
    let rho = state.rho.values();
    let phase = state.phase.values();
    let s: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let mut total = 0.0;
    for i in 0..grid.len() {
        let mut e = rho[i] * pot.v.values()[i];
        for d in 0..grid.dim() {
            if let Some(j) = grid.neighbor(i, d, true) {
                let delta = face_angle(phase, gauge, k, i, j, d);
                let c = kinetic_coeff(k, grid, d);
                e += c * ((s[j] - s[i]).powi(2) + 2.0 * s[i] * s[j] * (1.0 - delta.cos()));
            }
        }
        total += e;
    }
    Ok(total * grid.cell_volume())
}

/// `H psi` with the covariant lattice kinetic operator.
pub fn apply_hamiltonian(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
) -> ComplexField {
    let grid = psi.grid();
    let p = psi.values();
    let mut out: Vec<Complex64> = p.iter().zip(pot.v.values()).map(|(z, v)| z * v).collect();
    for d in 0..grid.dim() {
        let c = kinetic_coeff(k, grid, d);
        for i in 0..grid.len() {
            if let Some(j) = grid.neighbor(i, d, true) {
                let hop = gauge.hop(k, i, d);
                // Face (i, j) contributes c |hop psi_j - psi_i|^2.
                out[i] += c * (p[i] - hop * p[j]);
                out[j] += c * (p[j] - hop.conj() * p[i]);
            }
        }
    }
    ComplexField::from_values(grid, out).expect("finite input gives finite output")
}

/// `<psi, H psi>` as a complex number; the imaginary part measures the
/// hermiticity defect.
pub fn energy_expectation(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
) -> Result<Complex64> {
    let grid = psi.grid();
    grid.check_same(gauge.grid())?;
    grid.check_same(pot.v.grid())?;
    k.validate(grid.dim())?;
    let hpsi = apply_hamiltonian(psi, gauge, pot, k);
    let sum: Complex64 = psi
        .values()
        .iter()
        .zip(hpsi.values())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum * grid.cell_volume())
}

/// The e-Hamiltonian in complex coordinates. Errors if `psi` is not
/// normalized or the expectation value is not real within `1e-10`.
pub fn e_hamiltonian_complex(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
) -> Result<f64> {
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORMALIZATION_TOL || !norm.is_finite() {
        return Err(EdError::NotNormalized { integral: norm });
    }
    let e = energy_expectation(psi, gauge, pot, k)?;
    if e.im.abs() > 1e-10 * e.re.abs().max(1.0) {
        return Err(EdError::NonFinite(format!(
            "energy has imaginary part {:.3e}",
            e.im
        )));
    }
    Ok(e.re)
}

/// Covariant derivative `(d - i beta A) psi` along `d`, centred on cells:
/// `(hop_+ psi_{i+1} - conj(hop_-) psi_{i-1}) / (2 dx)`, one-sided at walls.
pub fn covariant_derivative(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    k: &Constants,
    d: usize,
) -> Result<ComplexField> {
    let grid = psi.grid();
    grid.check_same(gauge.grid())?;
    if d >= grid.dim() {
        return Err(EdError::Invalid(format!("dimension {d} out of range")));
    }
    let h = grid.spacing(d);
    let p = psi.values();
    let out = (0..grid.len())
        .map(|i| {
            let fwd = grid.neighbor(i, d, true).map(|j| gauge.hop(k, i, d) * p[j]);
            let bwd = grid
                .neighbor(i, d, false)
                .map(|l| gauge.hop(k, l, d).conj() * p[l]);
            match (bwd, fwd) {
                (Some(b), Some(f)) => (f - b) / (2.0 * h),
                (None, Some(f)) => (f - p[i]) / h,
                (Some(b), None) => (p[i] - b) / h,
                (None, None) => Complex64::new(0.0, 0.0),
            }
        })
        .collect();
    ComplexField::from_values(grid, out)
}

/// Lattice probability current on faces, `J = hbar s_i s_j sin(delta) / (m dx)`.
pub fn lattice_current(state: &EnsembleState, gauge: &GaugeConfig, k: &Constants) -> VectorField {
    let grid = state.grid();
    let rho = state.rho.values();
    let phase = state.phase.values();
    let mut j_field = VectorField::zeros(grid, Centering::Face);
    for d in 0..grid.dim() {
        let scale = k.hbar / (k.masses[d] * grid.spacing(d));
        for i in 0..grid.len() {
            if let Some(j) = grid.neighbor(i, d, true) {
                let delta = face_angle(phase, gauge, k, i, j, d);
                j_field.component_mut(d)[i] = scale * (rho[i] * rho[j]).sqrt() * delta.sin();
            }
        }
    }
    j_field
}

/// `delta H / delta Phi = -div J`, which is `d rho / dt`.
pub fn delta_h_delta_phase(
    state: &EnsembleState,
    gauge: &GaugeConfig,
    k: &Constants,
) -> ScalarField {
    let flux = lattice_current(state, gauge, k);
    crate::calculus::face_divergence(&flux)
        .expect("face flux")
        .map(|v| -v)
}

/// `delta H / delta rho = sum_faces c_d (1 - (s_j / s_i) cos delta) + V`,
/// which is `-d Phi / dt`. Errors at nodes.
pub fn delta_h_delta_rho(
    state: &EnsembleState,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
) -> Result<ScalarField> {
    let grid = state.grid();
    let rho = state.rho.values();
    if let Some(cell) = rho.iter().position(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(EdError::Node {
            cell,
            value: rho[cell],
        });
    }
    let phase = state.phase.values();
    let s: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let mut out = pot.v.values().to_vec();
    for d in 0..grid.dim() {
        let c = kinetic_coeff(k, grid, d);
        for i in 0..grid.len() {
            if let Some(j) = grid.neighbor(i, d, true) {
                let cd = face_angle(phase, gauge, k, i, j, d).cos();
                out[i] += c * (1.0 - s[j] / s[i] * cd);
                out[j] += c * (1.0 - s[i] / s[j] * cd);
            }
        }
    }
    ScalarField::from_values(grid, out)
}

/// Warning text when `dt max|V| / hbar` exceeds 0.1.
pub fn accuracy_warning(pot: &Potential, cfg: &EvolverConfig, k: &Constants) -> Option<String> {
    let r = cfg.dt * pot.max_abs() / k.hbar;
    (r > 0.1).then(|| format!("dt max|V| / hbar = {r:.3} exceeds 0.1; phases of the potential term are under-resolved"))
}

/// Solve a tridiagonal system in place. `lower[k]` couples row k to k-1,
/// `upper[k]` row k to k+1.
fn solve_tridiagonal(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut beta = diag[0];
    if beta.norm() == 0.0 {
        return Err(EdError::LinearSolve("zero pivot".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta.norm() == 0.0 || !beta.re.is_finite() {
            return Err(EdError::LinearSolve(format!("zero pivot at row {i}")));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c[i] * next;
    }
    Ok(())
}

/// Solve a cyclic tridiagonal system (corners `top_right` = A[0][n-1],
/// `bottom_left` = A[n-1][0]) by Sherman-Morrison.
fn solve_cyclic(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    top_right: Complex64,
    bottom_left: Complex64,
    rhs: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= bottom_left * top_right / gamma;
    solve_tridiagonal(lower, &bb, upper, rhs)?;
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = bottom_left;
    solve_tridiagonal(lower, &bb, upper, &mut u)?;
    let fact =
        (rhs[0] + top_right * rhs[n - 1] / gamma) / (1.0 + u[0] + top_right * u[n - 1] / gamma);
    for (x, z) in rhs.iter_mut().zip(&u) {
        *x -= fact * z;
    }
    Ok(())
}

/// Crank-Nicolson factor for the part of H acting along `d` (with
/// `v_share` of the potential) over time `tau`, applied line by line.
fn cn_factor(
    psi: &mut [Complex64],
    grid: &Grid,
    gauge: &GaugeConfig,
    v: &[f64],
    v_share: f64,
    k: &Constants,
    d: usize,
    tau: f64,
) -> Result<()> {
    let n = grid.points()[d];
    let stride = grid.stride(d);
    let c = kinetic_coeff(k, grid, d);
    let a = I * (tau / (2.0 * k.hbar));
    let periodic = grid.is_periodic();
    let mut lower = vec![Complex64::new(0.0, 0.0); n];
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    let mut upper = vec![Complex64::new(0.0, 0.0); n];
    let mut hop = vec![Complex64::new(0.0, 0.0); n];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut hline = vec![Complex64::new(0.0, 0.0); n];
    for start in 0..grid.len() {
        if grid.coord(start, d) != 0 {
            continue;
        }
        for kk in 0..n {
            let cell = start + kk * stride;
            line[kk] = psi[cell];
            hop[kk] = gauge.hop(k, cell, d);
        }
        // H along the line: diagonal c * (#faces) + share of V,
        // H[k][k+1] = -c hop_k, H[k+1][k] = -c conj(hop_k).
        for kk in 0..n {
            let cell = start + kk * stride;
            let faces = if periodic {
                2.0
            } else if kk == 0 || kk == n - 1 {
                1.0
            } else {
                2.0
            };
            let hd = c * faces + v_share * v[cell];
            diag[kk] = Complex64::new(1.0, 0.0) + a * hd;
            let mut h = hd * line[kk];
            if kk + 1 < n {
                h -= c * hop[kk] * line[kk + 1];
            } else if periodic {
                h -= c * hop[kk] * line[0];
            }
            if kk > 0 {
                h -= c * hop[kk - 1].conj() * line[kk - 1];
            } else if periodic {
                h -= c * hop[n - 1].conj() * line[n - 1];
            }
            hline[kk] = line[kk] - a * h;
        }
        for kk in 0..n {
            upper[kk] = if kk + 1 < n {
                -a * c * hop[kk]
            } else {
                Complex64::new(0.0, 0.0)
            };
            lower[kk] = if kk > 0 {
                -a * c * hop[kk - 1].conj()
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        if periodic {
            let top_right = -a * c * hop[n - 1].conj();
            let bottom_left = -a * c * hop[n - 1];
            solve_cyclic(&lower, &diag, &upper, top_right, bottom_left, &mut hline)?;
        } else {
            solve_tridiagonal(&lower, &diag, &upper, &mut hline)?;
        }
        for kk in 0..n {
            psi[start + kk * stride] = hline[kk];
        }
    }
    Ok(())
}

fn crank_nicolson(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
    dt: f64,
) -> Result<ComplexField> {
    let grid = psi.grid();
    let dim = grid.dim();
    let share = 1.0 / dim as f64;
    let mut p = psi.values().to_vec();
    let v = pot.v.values();
    if dim == 1 {
        cn_factor(&mut p, grid, gauge, v, 1.0, k, 0, dt)?;
    } else {
        // Symmetric product: half steps outward, full step on the last axis.
        for d in 0..dim - 1 {
            cn_factor(&mut p, grid, gauge, v, share, k, d, 0.5 * dt)?;
        }
        cn_factor(&mut p, grid, gauge, v, share, k, dim - 1, dt)?;
        for d in (0..dim - 1).rev() {
            cn_factor(&mut p, grid, gauge, v, share, k, d, 0.5 * dt)?;
        }
    }
    ComplexField::from_values(grid, p)
}

fn uniform_connection(gauge: &GaugeConfig) -> Option<[f64; MAX_DIM]> {
    let grid = gauge.grid();
    let mut a = [0.0; MAX_DIM];
    for (d, slot) in a.iter_mut().enumerate().take(grid.dim()) {
        let comp = gauge.connection.component(d);
        let first = comp[0];
        if comp
            .iter()
            .any(|x| (x - first).abs() > 1e-14 * first.abs().max(1.0))
        {
            return None;
        }
        *slot = first;
    }
    Some(a)
}

fn fft_axes(data: &mut [Complex64], grid: &Grid, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    for d in 0..grid.dim() {
        let n = grid.points()[d];
        let stride = grid.stride(d);
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..grid.len() {
            if grid.coord(start, d) != 0 {
                continue;
            }
            for (kk, slot) in line.iter_mut().enumerate() {
                *slot = data[start + kk * stride];
            }
            fft.process(&mut line);
            for (kk, v) in line.iter().enumerate() {
                data[start + kk * stride] = *v;
            }
        }
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

fn split_step(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
    dt: f64,
) -> Result<ComplexField> {
    let grid = psi.grid();
    let a = uniform_connection(gauge)
        .ok_or_else(|| EdError::Invalid("split-step spectral needs a uniform connection".into()))?;
    let dim = grid.dim();
    let half_v: Vec<Complex64> = pot
        .v
        .values()
        .iter()
        .map(|v| Complex64::from_polar(1.0, -0.5 * dt * v / k.hbar))
        .collect();
    // Twisted boundary psi(x + L) = e^{i tau} psi(x): factor the twist out.
    let twist: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let ang: f64 = (0..dim)
                .map(|d| gauge.seam_twist[d] * grid.position(i, d) / grid.lengths()[d])
                .sum();
            Complex64::from_polar(1.0, -ang)
        })
        .collect();
    let mut p: Vec<Complex64> = psi
        .values()
        .iter()
        .zip(&half_v)
        .zip(&twist)
        .map(|((z, h), t)| z * h * t)
        .collect();
    fft_axes(&mut p, grid, false);
    for (i, z) in p.iter_mut().enumerate() {
        let mut e = 0.0;
        for d in 0..dim {
            let n = grid.points()[d];
            let l = grid.lengths()[d];
            let idx = grid.coord(i, d);
            let wave = if idx <= n / 2 {
                idx as f64
            } else {
                idx as f64 - n as f64
            };
            let kd =
                (2.0 * std::f64::consts::PI * wave + gauge.seam_twist[d]) / l - k.betas[d] * a[d];
            e += k.hbar * kd * kd / (2.0 * k.masses[d]);
        }
        *z *= Complex64::from_polar(1.0, -e * dt);
    }
    fft_axes(&mut p, grid, true);
    for ((z, h), t) in p.iter_mut().zip(&half_v).zip(&twist) {
        *z *= h * t.conj();
    }
    ComplexField::from_values(grid, p)
}

fn schrodinger_signed(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    cfg: &EvolverConfig,
    k: &Constants,
    dt: f64,
) -> Result<ComplexField> {
    let grid = psi.grid();
    grid.check_same(gauge.grid())?;
    grid.check_same(pot.v.grid())?;
    k.validate(grid.dim())?;
    cfg.validate(grid)?;
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(EdError::NotNormalized { integral: norm });
    }
    match cfg.scheme {
        Scheme::CrankNicolson => crank_nicolson(psi, gauge, pot, k, dt),
        Scheme::SplitStepSpectral => split_step(psi, gauge, pot, k, dt),
    }
}

/// Advance `psi` by `cfg.dt` under `i hbar d psi / dt = H psi`.
pub fn schrodinger_step(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    cfg: &EvolverConfig,
    k: &Constants,
) -> Result<ComplexField> {
    schrodinger_signed(psi, gauge, pot, cfg, k, cfg.dt)
}

/// Advance `psi` by `-cfg.dt`; the exact inverse of [`schrodinger_step`].
pub fn schrodinger_step_reverse(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    cfg: &EvolverConfig,
    k: &Constants,
) -> Result<ComplexField> {
    schrodinger_signed(psi, gauge, pot, cfg, k, -cfg.dt)
}

const FLOW_ITERATIONS: usize = 100;

/// One leapfrog step of `d rho/dt = dH/dPhi`, `d Phi/dt = -dH/drho`: half
/// step in Phi, full step in rho, half step in Phi. Aborts at nodes.
pub fn hamilton_flow_step(
    state: &EnsembleState,
    gauge: &GaugeConfig,
    pot: &Potential,
    cfg: &EvolverConfig,
    k: &Constants,
) -> Result<EnsembleState> {
    let grid = state.grid();
    grid.check_same(gauge.grid())?;
    grid.check_same(pot.v.grid())?;
    k.validate(grid.dim())?;
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(EdError::Invalid(format!("dt must be > 0, got {}", cfg.dt)));
    }
    // Generalized Stormer-Verlet: H depends on both rho and Phi, so the two
    // implicit half-stages are solved by fixed-point iteration.
    let half = 0.5 * cfg.dt;
    let converged = |a: &ScalarField, b: &ScalarField| {
        let scale = a.max_abs().max(1e-300);
        a.values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| (x - y).abs() <= 1e-14 * scale)
    };
    let mut mid = state.clone();
    for it in 0..=FLOW_ITERATIONS {
        let dh_rho = delta_h_delta_rho(&mid, gauge, pot, k)?;
        let phase = state.phase.zip_map(&dh_rho, |p, g| p - half * g)?;
        let done = converged(&phase, &mid.phase);
        mid.phase = phase;
        if done {
            break;
        }
        if it == FLOW_ITERATIONS {
            return Err(EdError::NonFinite(
                "Hamilton flow phase stage did not converge".into(),
            ));
        }
    }
    let rate0 = delta_h_delta_phase(&mid, gauge, k);
    let mut next = mid.clone();
    for it in 0..=FLOW_ITERATIONS {
        let rate1 = delta_h_delta_phase(&next, gauge, k);
        let mut rho = state.rho.clone();
        for (i, r) in rho.values_mut().iter_mut().enumerate() {
            *r += half * (rate0.values()[i] + rate1.values()[i]);
        }
        if let Some(cell) = rho.values().iter().position(|r| !(*r > 0.0)) {
            return Err(EdError::Node {
                cell,
                value: rho.values()[cell],
            });
        }
        if !rho.is_finite() {
            return Err(EdError::NonFinite("Hamilton flow density".into()));
        }
        let done = converged(&rho, &next.rho);
        next.rho = rho;
        if done {
            break;
        }
        if it == FLOW_ITERATIONS {
            return Err(EdError::NonFinite(
                "Hamilton flow density stage did not converge".into(),
            ));
        }
    }
    let dh_rho = delta_h_delta_rho(&next, gauge, pot, k)?;
    let phase = next.phase.zip_map(&dh_rho, |p, g| p - half * g)?;
    Ok(EnsembleState {
        rho: next.rho,
        phase,
    })
}

/// Lowest eigenstate of the 1-D lattice Hamiltonian by shifted inverse
/// iteration. Returns the normalized state and its energy.
pub fn ground_state_1d(
    grid: &Grid,
    gauge: &GaugeConfig,
    pot: &Potential,
    k: &Constants,
) -> Result<(ComplexField, f64)> {
    if grid.dim() != 1 {
        return Err(EdError::Invalid("ground_state_1d needs a 1-D grid".into()));
    }
    grid.check_same(gauge.grid())?;
    grid.check_same(pot.v.grid())?;
    k.validate(1)?;
    let n = grid.len();
    let c = kinetic_coeff(k, grid, 0);
    let periodic = grid.is_periodic();
    let v = pot.v.values();
    // H - sigma with sigma one unit below min V, so the matrix is positive definite.
    let sigma = v.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hop: Vec<Complex64> = (0..n).map(|i| gauge.hop(k, i, 0)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let diag: Vec<Complex64> = (0..n)
        .map(|i| {
            let faces = if periodic || (i > 0 && i + 1 < n) {
                2.0
            } else {
                1.0
            };
            Complex64::new(c * faces + v[i] - sigma, 0.0)
        })
        .collect();
    let upper: Vec<Complex64> = (0..n)
        .map(|i| if i + 1 < n { -c * hop[i] } else { zero })
        .collect();
    let lower: Vec<Complex64> = (0..n)
        .map(|i| if i > 0 { -c * hop[i - 1].conj() } else { zero })
        .collect();
    let dx = grid.cell_volume();
    let normalize = |x: &mut Vec<Complex64>| {
        let norm = (x.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
        x.iter_mut().for_each(|z| *z /= norm);
    };
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 1e-3 * (i as f64).sin(), 0.0))
        .collect();
    normalize(&mut x);
    for _ in 0..10_000 {
        let prev = x.clone();
        if periodic {
            solve_cyclic(
                &lower,
                &diag,
                &upper,
                -c * hop[n - 1].conj(),
                -c * hop[n - 1],
                &mut x,
            )?;
        } else {
            solve_tridiagonal(&lower, &diag, &upper, &mut x)?;
        }
        normalize(&mut x);
        // Compare up to the global phase picked up by this iteration.
        let overlap: Complex64 = prev.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        let rot = overlap.conj() / overlap.norm();
        let change = prev
            .iter()
            .zip(&x)
            .map(|(a, b)| (b * rot - a).norm())
            .fold(0.0, f64::max);
        if change <= 1e-14 * x.iter().map(|z| z.norm()).fold(0.0, f64::max) {
            // Fix the global phase so psi is real and positive at its peak.
            let peak = x
                .iter()
                .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
                .copied()
                .unwrap_or(zero);
            let rot = peak.conj() / peak.norm();
            let psi = ComplexField::from_values(grid, x.iter().map(|z| z * rot).collect())?;
            let e = energy_expectation(&psi, gauge, pot, k)?.re;
            return Ok((psi, e));
        }
    }
    Err(EdError::LinearSolve(
        "inverse iteration did not converge".into(),
    ))
}

/// Second moment about the mean along dimension `d`.
pub fn density_variance(rho: &ScalarField, d: usize) -> f64 {
    let grid = rho.grid();
    let total = integrate(rho);
    let dv = grid.cell_volume();
    let r = rho.values();
    let mean: f64 = (0..grid.len())
        .map(|i| grid.position(i, d) * r[i])
        .sum::<f64>()
        * dv
        / total;
    (0..grid.len())
        .map(|i| (grid.position(i, d) - mean).powi(2) * r[i])
        .sum::<f64>()
        * dv
        / total
}
