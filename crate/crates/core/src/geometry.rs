//! Geometry of e-phase space: the metric G, complex structure J, symplectic
//! form Omega, Poisson brackets, complex coordinates and the metric induced
//! on configuration space.
//!
//! Integrals over x are lattice sums times the cell volume, and functional
//! derivatives are per-cell partial derivatives divided by the cell volume.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::field::{ComplexField, ScalarField};
use crate::gauge::GaugeConfig;
use crate::grid::{Grid, MAX_DIM};
use crate::rng::derive_seed;
use crate::state::{check_floor, EnsembleState};

/// A displacement `(delta rho, delta Phi)` at a point of e-phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub delta_rho: ScalarField,
    pub delta_phi: ScalarField,
}

impl TangentVector {
    pub fn new(delta_rho: ScalarField, delta_phi: ScalarField) -> Result<Self> {
        delta_rho.grid().check_same(delta_phi.grid())?;
        Ok(Self {
            delta_rho,
            delta_phi,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            delta_rho: ScalarField::zeros(grid),
            delta_phi: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.delta_rho.grid()
    }

    /// Whether the displacement preserves normalization, `sum delta rho dV = 0`.
    pub fn is_constraint_tangent(&self, tol: f64) -> bool {
        crate::calculus::integrate(&self.delta_rho).abs() <= tol
    }

    /// Remove the mean of `delta rho` so the vector preserves normalization.
    pub fn projected(&self) -> Self {
        let n = self.delta_rho.values().len() as f64;
        let mean = self.delta_rho.values().iter().sum::<f64>() / n;
        Self {
            delta_rho: self.delta_rho.map(|v| v - mean),
            delta_phi: self.delta_phi.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            delta_rho: self.delta_rho.scaled(-1.0),
            delta_phi: self.delta_phi.scaled(-1.0),
        }
    }
}

/// Diagonal components of the metric: `hbar / 2 rho` and `2 rho / hbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDiag {
    pub rho_weight: ScalarField,
    pub phi_weight: ScalarField,
}

impl MetricDiag {
    pub fn new(rho: &ScalarField, k: &Constants) -> Result<Self> {
        check_floor(rho)?;
        Ok(Self {
            rho_weight: rho.map(|r| k.hbar / (2.0 * r)),
            phi_weight: rho.map(|r| 2.0 * r / k.hbar),
        })
    }
}

fn same_grid(v: &TangentVector, u: &TangentVector, rho: &ScalarField) -> Result<()> {
    v.grid().check_same(u.grid())?;
    v.grid().check_same(rho.grid())
}

/// `G[v, u] = int dx [ hbar/(2 rho) drho_v drho_u + 2 rho/hbar dPhi_v dPhi_u ]`.
pub fn metric_length(
    v: &TangentVector,
    u: &TangentVector,
    rho: &ScalarField,
    k: &Constants,
) -> Result<f64> {
    same_grid(v, u, rho)?;
    let g = MetricDiag::new(rho, k)?;
    let sum: f64 = (0..rho.values().len())
        .map(|i| {
            g.rho_weight.values()[i] * v.delta_rho.values()[i] * u.delta_rho.values()[i]
                + g.phi_weight.values()[i] * v.delta_phi.values()[i] * u.delta_phi.values()[i]
        })
        .sum();
    Ok(sum * rho.grid().cell_volume())
}

/// `J (drho, dPhi) = ((2 rho / hbar) dPhi, -(hbar / 2 rho) drho)`.
pub fn apply_complex_structure(
    v: &TangentVector,
    rho: &ScalarField,
    k: &Constants,
) -> Result<TangentVector> {
    v.grid().check_same(rho.grid())?;
    let g = MetricDiag::new(rho, k)?;
    Ok(TangentVector {
        delta_rho: v.delta_phi.zip_map(&g.phi_weight, |p, w| w * p)?,
        delta_phi: v.delta_rho.zip_map(&g.rho_weight, |r, w| -w * r)?,
    })
}

/// `Omega[v, u] = int dx (drho_v dPhi_u - drho_u dPhi_v)`.
pub fn symplectic_form(v: &TangentVector, u: &TangentVector) -> Result<f64> {
    v.grid().check_same(u.grid())?;
    let sum: f64 = (0..v.delta_rho.values().len())
        .map(|i| {
            v.delta_rho.values()[i] * u.delta_phi.values()[i]
                - u.delta_rho.values()[i] * v.delta_phi.values()[i]
        })
        .sum();
    Ok(sum * v.grid().cell_volume())
}

/// `psi = rho^(1/2) exp(i Phi / hbar)`.
pub fn to_complex(state: &EnsembleState, k: &Constants) -> ComplexField {
    let vals = state
        .rho
        .values()
        .iter()
        .zip(state.phase.values())
        .map(|(r, p)| Complex64::from_polar(r.max(0.0).sqrt(), p / k.hbar))
        .collect();
    ComplexField::from_values(state.grid(), vals).expect("finite state gives finite psi")
}

/// `rho = |psi|^2`, `Phi = hbar arg psi` in `(-pi hbar, pi hbar]`, without a
/// floor check (the phase of a vanishing amplitude is reported as 0).
pub fn polar_parts(psi: &ComplexField, k: &Constants) -> EnsembleState {
    let grid = psi.grid();
    let rho = psi.density();
    let phase = ScalarField::from_values(
        grid,
        psi.values()
            .iter()
            .map(|z| {
                if z.norm_sqr() > 0.0 {
                    k.hbar * z.arg()
                } else {
                    0.0
                }
            })
            .collect(),
    )
    .expect("finite psi gives finite phase");
    EnsembleState { rho, phase }
}

/// Inverse of [`to_complex`]; errors where `|psi|^2` is below the floor and
/// the phase is undefined.
pub fn from_complex(psi: &ComplexField, k: &Constants) -> Result<EnsembleState> {
    let st = polar_parts(psi, k);
    check_floor(&st.rho)?;
    Ok(st)
}

/// `delta psi = (drho / (2 rho^(1/2)) + i rho^(1/2) dPhi / hbar) exp(i Phi / hbar)`.
pub fn tangent_to_complex(
    v: &TangentVector,
    state: &EnsembleState,
    k: &Constants,
) -> Result<ComplexField> {
    v.grid().check_same(state.grid())?;
    check_floor(&state.rho)?;
    let vals = (0..state.grid().len())
        .map(|i| {
            let s = state.rho.values()[i].sqrt();
            let e = Complex64::from_polar(1.0, state.phase.values()[i] / k.hbar);
            Complex64::new(
                v.delta_rho.values()[i] / (2.0 * s),
                s * v.delta_phi.values()[i] / k.hbar,
            ) * e
        })
        .collect();
    ComplexField::from_values(state.grid(), vals)
}

/// `2 hbar Re int dx conj(dpsi_v) dpsi_u`, the metric in complex coordinates.
pub fn complex_metric(dv: &ComplexField, du: &ComplexField, k: &Constants) -> Result<f64> {
    dv.grid().check_same(du.grid())?;
    let sum: f64 = dv
        .values()
        .iter()
        .zip(du.values())
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    Ok(2.0 * k.hbar * sum * dv.grid().cell_volume())
}

/// Central-difference functional derivatives `dF/drho_i / dV`, `dF/dPhi_i / dV`
/// with steps scaled to each cell value.
fn functional_gradient<T, F>(f: &F, state: &EnsembleState) -> Result<(Vec<T>, Vec<T>)>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Div<f64, Output = T>,
    F: Fn(&EnsembleState) -> T,
{
    let grid = state.grid();
    let dv = grid.cell_volume();
    let n = grid.len();
    let mut work = state.clone();
    let mut d_rho = Vec::with_capacity(n);
    let mut d_phi = Vec::with_capacity(n);
    for i in 0..n {
        let r = state.rho.values()[i];
        let h = 1e-6 * r.abs().max(1e-3);
        work.rho.values_mut()[i] = r + h;
        let plus = f(&work);
        work.rho.values_mut()[i] = r - h;
        let minus = f(&work);
        work.rho.values_mut()[i] = r;
        d_rho.push((plus - minus) / (2.0 * h * dv));

        let p = state.phase.values()[i];
        let h = 1e-6 * p.abs().max(1.0);
        work.phase.values_mut()[i] = p + h;
        let plus = f(&work);
        work.phase.values_mut()[i] = p - h;
        let minus = f(&work);
        work.phase.values_mut()[i] = p;
        d_phi.push((plus - minus) / (2.0 * h * dv));
    }
    Ok((d_rho, d_phi))
}

/// `{F1, F2} = int dx (dF1/drho dF2/dPhi - dF1/dPhi dF2/drho)` with
/// functional derivatives by central differences.
pub fn poisson_bracket<F1, F2>(f1: F1, f2: F2, state: &EnsembleState) -> Result<f64>
where
    F1: Fn(&EnsembleState) -> f64,
    F2: Fn(&EnsembleState) -> f64,
{
    let (a_r, a_p) = functional_gradient(&f1, state)?;
    let (b_r, b_p) = functional_gradient(&f2, state)?;
    let dv = state.grid().cell_volume();
    let sum: f64 = (0..a_r.len())
        .map(|i| a_r[i] * b_p[i] - a_p[i] * b_r[i])
        .sum::<f64>()
        * dv;
    if !sum.is_finite() {
        return Err(EdError::NonFinite("Poisson bracket".into()));
    }
    Ok(sum)
}

/// [`poisson_bracket`] for complex-valued functionals, extended bilinearly.
pub fn poisson_bracket_complex<F1, F2>(f1: F1, f2: F2, state: &EnsembleState) -> Result<Complex64>
where
    F1: Fn(&EnsembleState) -> Complex64,
    F2: Fn(&EnsembleState) -> Complex64,
{
    let (a_r, a_p) = functional_gradient(&f1, state)?;
    let (b_r, b_p) = functional_gradient(&f2, state)?;
    let dv = state.grid().cell_volume();
    let sum: Complex64 = (0..a_r.len())
        .map(|i| a_r[i] * b_p[i] - a_p[i] * b_r[i])
        .sum::<Complex64>()
        * dv;
    if !(sum.re.is_finite() && sum.im.is_finite()) {
        return Err(EdError::NonFinite("Poisson bracket".into()));
    }
    Ok(sum)
}

/// Per-cell symmetric D x D matrix field.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedMetric {
    grid: Grid,
    values: Vec<[[f64; MAX_DIM]; MAX_DIM]>,
}

impl InducedMetric {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, cell: usize) -> &[[f64; MAX_DIM]; MAX_DIM] {
        &self.values[cell]
    }

    /// `int dx m^{AB} h_AB`.
    pub fn contract_inverse_mass(&self, k: &Constants) -> f64 {
        let dim = self.grid.dim();
        self.values
            .iter()
            .map(|h| (0..dim).map(|d| h[d][d] / k.masses[d]).sum::<f64>())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// Smallest eigenvalue over all cells (PSD check).
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.grid.dim();
        self.values
            .iter()
            .map(|h| min_eig(h, dim))
            .fold(f64::INFINITY, f64::min)
    }
}

fn min_eig(h: &[[f64; MAX_DIM]; MAX_DIM], dim: usize) -> f64 {
    match dim {
        1 => h[0][0],
        2 => {
            let tr = h[0][0] + h[1][1];
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
        }
        _ => {
            // Symmetric 3x3: trigonometric closed form.
            let p1 = h[0][1].powi(2) + h[0][2].powi(2) + h[1][2].powi(2);
            let q = (h[0][0] + h[1][1] + h[2][2]) / 3.0;
            let p2 =
                (h[0][0] - q).powi(2) + (h[1][1] - q).powi(2) + (h[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            if p == 0.0 {
                return q;
            }
            let b = |i: usize, j: usize| (h[i][j] - if i == j { q } else { 0.0 }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
        }
    }
}

/// `h_AB = 1/2 rho (dPhi - A)_A (dPhi - A)_B + hbar^2 / (8 rho) d_A rho d_B rho`.
///
/// Built from face quantities `a = (s_j - s_i)/dx` and
/// `b = 2 (s_i s_j)^(1/2) sin(delta/2) / dx`, averaged over the forward and
/// backward faces in every combination, so each cell's matrix is a sum of
/// rank-one terms (hence PSD) and `int m^{AB} h_AB` equals the kinetic plus
/// quantum part of the lattice e-Hamiltonian.
pub fn induced_config_metric(
    state: &EnsembleState,
    gauge: &GaugeConfig,
    k: &Constants,
) -> Result<InducedMetric> {
    let grid = state.grid();
    grid.check_same(gauge.grid())?;
    k.validate(grid.dim())?;
    check_floor(&state.rho)?;
    let dim = grid.dim();
    let s: Vec<f64> = state.rho.values().iter().map(|r| r.sqrt()).collect();
    let phase = state.phase.values();
    // Face values (a, b) per dimension; zero on walls.
    let mut fa = vec![vec![0.0; grid.len()]; dim];
    let mut fb = vec![vec![0.0; grid.len()]; dim];
    for d in 0..dim {
        let h = grid.spacing(d);
        for i in 0..grid.len() {
            if let Some(j) = grid.neighbor(i, d, true) {
                let delta = (phase[j] - phase[i]) / k.hbar + gauge.link_angle(k, i, d);
                fa[d][i] = (s[j] - s[i]) / h;
                fb[d][i] = 2.0 * (s[i] * s[j]).sqrt() * (0.5 * delta).sin() / h;
            }
        }
    }
    let combos = 1usize << dim;
    let scale = 0.5 * k.hbar * k.hbar / combos as f64;
    let values = (0..grid.len())
        .map(|i| {
            let mut m = [[0.0; MAX_DIM]; MAX_DIM];
            for c in 0..combos {
                let mut a = [0.0; MAX_DIM];
                let mut b = [0.0; MAX_DIM];
                for d in 0..dim {
                    let face = if c >> d & 1 == 0 {
                        Some(i)
                    } else {
                        grid.neighbor(i, d, false)
                    };
                    if let Some(f) = face {
                        a[d] = fa[d][f];
                        b[d] = fb[d][f];
                    }
                }
                for x in 0..dim {
                    for y in 0..dim {
                        m[x][y] += scale * (a[x] * a[y] + b[x] * b[y]);
                    }
                }
            }
            m
        })
        .collect();
    Ok(InducedMetric {
        grid: grid.clone(),
        values,
    })
}

/// Outcome of restricting a spherically symmetric metric to the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexReport {
    /// Max relative deviation of the restricted length from `(b/4) sum drho^2 / rho`.
    pub residual: f64,
    /// Max relative spread of restricted lengths over several values of `a`.
    pub a_dependence: f64,
    /// Ratio restricted / (b sum drho^2 / rho); the overall scale, 1/4.
    pub scale: f64,
    pub trials: usize,
}

/// `dl^2 = (a - b)(sum xi dxi)^2 + |rho| b sum dxi^2` with `xi = rho^(1/2)`.
fn spherical_length(a: f64, b: f64, rho: &[f64], drho: &[f64]) -> f64 {
    let norm: f64 = rho.iter().sum();
    let mut radial = 0.0;
    let mut round = 0.0;
    for (r, d) in rho.iter().zip(drho) {
        let xi = r.sqrt();
        let dxi = d / (2.0 * xi);
        radial += xi * dxi;
        round += dxi * dxi;
    }
    (a - b) * radial * radial + norm * b * round
}

/// Sample points and normalization-preserving displacements on a
/// `nu`-simplex and compare the restricted spherically symmetric metric
/// with the Fisher form.
pub fn simplex_reduction_check(
    a_val: f64,
    b_val: f64,
    nu: usize,
    trials: usize,
    seed: u64,
) -> Result<SimplexReport> {
    if !(a_val > 0.0 && b_val > 0.0) || nu < 3 || trials == 0 {
        return Err(EdError::Invalid(
            "need a, b > 0, nu >= 3 and trials >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "simplex"));
    let mut residual: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let mut scale = 0.0;
    for _ in 0..trials {
        let raw: Vec<f64> = (0..nu).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let rho: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let mut drho: Vec<f64> = (0..nu).map(|_| rng.gen_range(-1.0..1.0) * 1e-2).collect();
        let mean = drho.iter().sum::<f64>() / nu as f64;
        drho.iter_mut().for_each(|d| *d -= mean);
        let fisher: f64 = rho.iter().zip(&drho).map(|(r, d)| d * d / r).sum();
        let restricted = spherical_length(a_val, b_val, &rho, &drho);
        residual = residual.max((restricted - 0.25 * b_val * fisher).abs() / (b_val * fisher));
        scale = restricted / (b_val * fisher);
        let others: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|a| spherical_length(*a, b_val, &rho, &drho))
            .collect();
        for o in &others {
            spread = spread.max((o - restricted).abs() / restricted);
        }
    }
    Ok(SimplexReport {
        residual,
        a_dependence: spread,
        scale,
        trials,
    })
}

/// One line of the geometry audit table.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditLine {
    pub identity: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl AuditLine {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Random normalized state and tangent vectors for the audit.
fn random_state(grid: &Grid, rng: &mut ChaCha8Rng) -> EnsembleState {
    let n = grid.len();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    let total: f64 = raw.iter().sum::<f64>() * grid.cell_volume();
    let rho =
        ScalarField::from_values(grid, raw.iter().map(|r| r / total).collect()).expect("finite");
    let phase = ScalarField::from_values(grid, (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .expect("finite");
    EnsembleState { rho, phase }
}

fn random_tangent(grid: &Grid, rng: &mut ChaCha8Rng) -> TangentVector {
    let n = grid.len();
    let dr = ScalarField::from_values(grid, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("finite");
    let dp = ScalarField::from_values(grid, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("finite");
    TangentVector {
        delta_rho: dr,
        delta_phi: dp,
    }
    .projected()
}

fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// The e-phase geometry identity suite over `states` random states on
/// grids of the given sizes (1-D, periodic, length 1).
pub fn geometry_audit(
    sizes: &[usize],
    states: usize,
    seed: u64,
    k: &Constants,
) -> Result<Vec<AuditLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "geometry-audit"));
    let mut j2: f64 = 0.0;
    let mut g_inv: f64 = 0.0;
    let mut o_inv: f64 = 0.0;
    let mut lowering: f64 = 0.0;
    let mut complex: f64 = 0.0;
    let mut bracket: f64 = 0.0;
    let mut grids = Vec::new();
    for &n in sizes {
        grids.push(Grid::line(n, 1.0, crate::grid::Boundary::Periodic)?);
    }
    for t in 0..states {
        let grid = &grids[t % grids.len()];
        let st = random_state(grid, &mut rng);
        let v = random_tangent(grid, &mut rng);
        let u = random_tangent(grid, &mut rng);
        let jv = apply_complex_structure(&v, &st.rho, k)?;
        let ju = apply_complex_structure(&u, &st.rho, k)?;
        let jjv = apply_complex_structure(&jv, &st.rho, k)?;
        let scale = v.delta_rho.max_abs().max(v.delta_phi.max_abs());
        j2 = j2.max(
            max_abs_diff(&jjv.delta_rho, &v.neg().delta_rho)
                .max(max_abs_diff(&jjv.delta_phi, &v.neg().delta_phi))
                / scale,
        );
        let g = metric_length(&v, &u, &st.rho, k)?;
        g_inv = g_inv.max(relative(metric_length(&jv, &ju, &st.rho, k)?, g));
        let o = symplectic_form(&v, &u)?;
        o_inv = o_inv.max(relative(symplectic_form(&jv, &ju)?, o));
        lowering = lowering.max(relative(metric_length(&v, &ju, &st.rho, k)?, o));
        let dv = tangent_to_complex(&v, &st, k)?;
        let du = tangent_to_complex(&u, &st, k)?;
        complex = complex.max(relative(complex_metric(&dv, &du, k)?, g));
        if t < 4 {
            let dv_cell = grid.cell_volume();
            for (i, j) in [(0usize, 0usize), (1, 1), (0, 2)] {
                let b = poisson_bracket(|s| s.rho.values()[i], |s| s.phase.values()[j], &st)?;
                let expected = if i == j { 1.0 / dv_cell } else { 0.0 };
                bracket = bracket.max((b - expected).abs() * dv_cell);
            }
        }
    }
    Ok(vec![
        AuditLine {
            identity: "J^2 = -1",
            residual: j2,
            tolerance: 1e-12,
        },
        AuditLine {
            identity: "G J-invariance",
            residual: g_inv,
            tolerance: 1e-10,
        },
        AuditLine {
            identity: "Omega J-invariance",
            residual: o_inv,
            tolerance: 1e-10,
        },
        AuditLine {
            identity: "Omega = G(., J .)",
            residual: lowering,
            tolerance: 1e-10,
        },
        AuditLine {
            identity: "canonical {rho_i, Phi_j} = delta_ij / dV",
            residual: bracket,
            tolerance: 1e-6,
        },
        AuditLine {
            identity: "G = 2 hbar Re <dpsi, dpsi>",
            residual: complex,
            tolerance: 1e-10,
        },
    ])
}

/// Plain-text table: identity, residual, tolerance, verdict.
pub fn format_audit(lines: &[AuditLine]) -> String {
    let mut out = format!(
        "{:<44} {:>12} {:>10}  {}\n",
        "identity", "residual", "tolerance", "result"
    );
    for l in lines {
        out.push_str(&format!(
            "{:<44} {:>12.3e} {:>10.1e}  {}\n",
            l.identity,
            l.residual,
            l.tolerance,
            if l.passed() { "PASS" } else { "FAIL" }
        ));
    }
    out
}
