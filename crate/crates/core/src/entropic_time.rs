//! Entropic time: densities propagated instant by instant through the step
//! kernel, and the Bayes-reversed kernel that runs the other way.

use rayon::prelude::*;

use crate::calculus::{face_to_cell, integrate};
use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Boundary, Grid};
use crate::kernel::DriftSources;
use crate::state::{check_normalized, NORMALIZATION_TOL};

/// Kernel support in standard deviations.
pub const SUPPORT_SIGMAS: f64 = 6.0;

/// Row-stochastic transition matrix `P(x_j | x_i)` stored by rows, with a
/// column index for fast propagation. Masked rows are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    grid: Grid,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    masked: Vec<usize>,
}

/// Central moments of one kernel row along one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Weights of a sampled 1-D Gaussian on the lattice along `d`, starting at
/// coordinate `c`. Returns `(coordinate, weight)` pairs, normalized.
fn gaussian_weights(grid: &Grid, d: usize, c: usize, mean: f64, sigma: f64) -> Vec<(usize, f64)> {
    let n = grid.points()[d] as i64;
    let h = grid.spacing(d);
    let reach = ((SUPPORT_SIGMAS * sigma + mean.abs()) / h).ceil() as i64;
    let mut acc = vec![0.0; n as usize];
    for o in -reach..=reach {
        let s = o as f64 * h - mean;
        if s.abs() > SUPPORT_SIGMAS * sigma {
            continue;
        }
        let t = c as i64 + o;
        let idx = match grid.boundary() {
            Boundary::Periodic => t.rem_euclid(n),
            Boundary::Reflecting if (0..n).contains(&t) => t,
            Boundary::Reflecting => continue,
        };
        acc[idx as usize] += (-0.5 * s * s / (sigma * sigma)).exp();
    }
    let total: f64 = acc.iter().sum();
    acc.iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| (i, w / total))
        .collect()
}

impl DiscreteKernel {
    /// Build from explicit rows. Every non-masked row must be a probability
    /// vector within `1e-12`.
    pub fn from_rows(
        grid: &Grid,
        rows: Vec<Vec<(usize, f64)>>,
        masked: Vec<usize>,
    ) -> Result<Self> {
        if rows.len() != grid.len() {
            return Err(EdError::GridMismatch(format!(
                "{} rows for {} cells",
                rows.len(),
                grid.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.is_empty() && masked.binary_search(&i).is_ok() {
                continue;
            }
            let mut sum = 0.0;
            for &(j, p) in row {
                if j >= grid.len() || !(p >= 0.0) || !p.is_finite() {
                    return Err(EdError::Invalid(format!("row {i}: bad entry ({j}, {p})")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(EdError::Invalid(format!("row {i} sums to {sum:.17e}")));
            }
        }
        let mut cols = vec![Vec::new(); grid.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                cols[j].push((i, p));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            rows,
            cols,
            masked,
        })
    }

    /// Gaussian kernel with mean shift `b dt` and variance
    /// `hbar dt / m_d`, sampled at cell centres and truncated at six sigma.
    /// Face-centred drift is averaged to cells first.
    pub fn gaussian(drift: &VectorField, dt: f64, k: &Constants) -> Result<Self> {
        let grid = drift.grid();
        k.validate(grid.dim())?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EdError::Invalid(format!("dt must be > 0, got {dt}")));
        }
        let b = face_to_cell(drift);
        let dim = grid.dim();
        let sigma: Vec<f64> = (0..dim)
            .map(|d| (k.hbar * dt / k.masses[d]).sqrt())
            .collect();
        let rows: Vec<Vec<(usize, f64)>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let coords = grid.coords(i);
                let mut row = vec![(0usize, 1.0f64)];
                for d in 0..dim {
                    let w = gaussian_weights(grid, d, coords[d], b.get(d, i) * dt, sigma[d]);
                    let stride = grid.stride(d);
                    row = row
                        .iter()
                        .flat_map(|&(idx, p)| {
                            w.iter().map(move |&(c, q)| (idx + c * stride, p * q))
                        })
                        .collect();
                }
                let total: f64 = row.iter().map(|(_, p)| p).sum();
                row.iter_mut().for_each(|(_, p)| *p /= total);
                row.sort_unstable_by_key(|(j, _)| *j);
                row
            })
            .collect();
        Self::from_rows(grid, rows, Vec::new())
    }

    /// The step kernel generated by drift sources (face drift averaged to cells).
    pub fn from_drift(src: &DriftSources, dt: f64, k: &Constants) -> Result<Self> {
        Self::gaussian(&src.face_drift(k), dt, k)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Rows removed because their normalizing density vanished.
    pub fn masked(&self) -> &[usize] {
        &self.masked
    }

    pub fn row_moments(&self, i: usize, d: usize) -> Option<RowMoments> {
        let row = &self.rows[i];
        if row.is_empty() {
            return None;
        }
        let origin = self.grid.position(i, d);
        let disp: Vec<(f64, f64)> = row
            .iter()
            .map(|&(j, p)| {
                (
                    self.grid.displacement(origin, self.grid.position(j, d), d),
                    p,
                )
            })
            .collect();
        let mean: f64 = disp.iter().map(|(x, p)| x * p).sum();
        let central = |k: i32| {
            disp.iter()
                .map(|(x, p)| (x - mean).powi(k) * p)
                .sum::<f64>()
        };
        let var = central(2);
        Some(RowMoments {
            mean,
            variance: var,
            skewness: central(3) / var.powf(1.5),
            excess_kurtosis: central(4) / (var * var) - 3.0,
        })
    }
}

/// Largest excess kurtosis a forward (Gaussian) row can show from lattice
/// sampling and six-sigma truncation alone. The sampling term is the first
/// aliased Fourier mode of `x^4 g(x)`, of size `(2 pi r)^4 exp(-2 pi^2 r^2)`
/// with `r = sigma / dx`.
pub fn forward_kurtosis_bound(grid: &Grid, dt: f64, k: &Constants) -> f64 {
    (0..grid.dim())
        .map(|d| {
            let r = (k.hbar * dt / k.masses[d]).sqrt() / grid.spacing(d);
            let kr = 2.0 * std::f64::consts::PI * r;
            1e-3 + 4.0 * (1.0 + kr.powi(4)) * (-0.5 * kr * kr).exp()
        })
        .fold(0.0, f64::max)
}

/// `rho'(x_j) = sum_i P(x_j | x_i) rho(x_i)`.
pub fn evolve_density_ck(rho: &ScalarField, kern: &DiscreteKernel) -> Result<ScalarField> {
    rho.grid().check_same(&kern.grid)?;
    check_normalized(rho, NORMALIZATION_TOL)?;
    Ok(apply_kernel(rho, kern))
}

fn apply_kernel(rho: &ScalarField, kern: &DiscreteKernel) -> ScalarField {
    let r = rho.values();
    let out: Vec<f64> = kern
        .cols
        .par_iter()
        .map(|col| col.iter().map(|&(i, p)| p * r[i]).sum::<f64>())
        .collect();
    ScalarField::from_values(rho.grid(), out).expect("kernel output of a finite density is finite")
}

/// Iterate the kernel `steps` times.
pub fn evolve_density_ck_steps(
    rho: &ScalarField,
    kern: &DiscreteKernel,
    steps: usize,
) -> Result<ScalarField> {
    let mut cur = rho.clone();
    for _ in 0..steps {
        cur = evolve_density_ck(&cur, kern)?;
    }
    Ok(cur)
}

/// `P(x_i | x'_j) = rho_t(x_i) P(x'_j | x_i) / rho_t2(x'_j)`, one row per
/// later cell j. Rows whose `rho_t2` vanishes are masked.
pub fn reverse_kernel_bayes(
    rho_t: &ScalarField,
    rho_t2: &ScalarField,
    kern: &DiscreteKernel,
) -> Result<DiscreteKernel> {
    rho_t.grid().check_same(&kern.grid)?;
    rho_t2.grid().check_same(&kern.grid)?;
    let r = rho_t.values();
    let r2 = rho_t2.values();
    let mut masked = Vec::new();
    let rows: Vec<Vec<(usize, f64)>> = kern
        .cols
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let denom = r2[j];
            if !(denom > 0.0) {
                masked.push(j);
                return Vec::new();
            }
            let mut row: Vec<(usize, f64)> =
                col.iter().map(|&(i, p)| (i, r[i] * p / denom)).collect();
            // Remove the rounding of rho_t2 so each row is stochastic to 1e-12.
            let s: f64 = row.iter().map(|(_, p)| p).sum();
            if s > 0.0 {
                row.iter_mut().for_each(|(_, p)| *p /= s);
                row.retain(|(_, p)| *p > 0.0);
            }
            if row.is_empty() {
                masked.push(j);
            }
            row
        })
        .collect();
    DiscreteKernel::from_rows(&kern.grid, rows, masked)
}

/// Probability carried out of the masked cells of a reverse kernel; zero
/// when nothing was masked.
pub fn masked_mass(rho_t2: &ScalarField, rev: &DiscreteKernel) -> f64 {
    rev.masked.iter().map(|j| rho_t2.values()[*j]).sum::<f64>() * rho_t2.grid().cell_volume()
}

/// Apply a reverse kernel to the later density; returns the reconstructed
/// earlier density.
pub fn reconstruct_earlier(rho_t2: &ScalarField, rev: &DiscreteKernel) -> Result<ScalarField> {
    rho_t2.grid().check_same(&rev.grid)?;
    let out = apply_kernel(rho_t2, rev);
    let total = integrate(&out);
    if !total.is_finite() {
        return Err(EdError::NonFinite("reconstructed density".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Centering;
    use crate::state::normalized;

    fn gauss(g: &Grid, mu: f64, s: f64) -> ScalarField {
        normalized(&ScalarField::from_fn(g, |x| {
            (-(x[0] - mu).powi(2) / (2.0 * s * s)).exp()
        }))
        .unwrap()
    }

    fn free_kernel(g: &Grid, dt: f64) -> DiscreteKernel {
        DiscreteKernel::gaussian(
            &VectorField::zeros(g, Centering::Face),
            dt,
            &Constants::unit(g.dim()),
        )
        .unwrap()
    }

    fn variance(rho: &ScalarField) -> f64 {
        let g = rho.grid();
        let h = g.cell_volume();
        let m: f64 = (0..g.len())
            .map(|i| g.position(i, 0) * rho.values()[i] * h)
            .sum();
        (0..g.len())
            .map(|i| (g.position(i, 0) - m).powi(2) * rho.values()[i] * h)
            .sum()
    }

    #[test]
    fn uniform_stays_uniform() {
        let g = Grid::line(64, 4.0, Boundary::Periodic).unwrap();
        let rho = ScalarField::constant(&g, 0.25);
        let out = evolve_density_ck(&rho, &free_kernel(&g, 0.01)).unwrap();
        assert!(out.values().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn delta_gives_row() {
        let g = Grid::line(32, 4.0, Boundary::Reflecting).unwrap();
        let kern = free_kernel(&g, 0.02);
        let mut v = vec![0.0; 32];
        v[5] = 1.0 / g.cell_volume();
        let out = evolve_density_ck(&ScalarField::from_values(&g, v).unwrap(), &kern).unwrap();
        for &(j, p) in kern.row(5) {
            assert!((out.values()[j] * g.cell_volume() - p).abs() < 1e-15);
        }
    }

    #[test]
    fn heat_kernel_variance() {
        let g = Grid::line(200, 6.0, Boundary::Periodic).unwrap();
        let s0 = 0.3;
        let mut rho = gauss(&g, 3.0, s0);
        let v0 = variance(&rho);
        let kern = free_kernel(&g, 0.01);
        rho = evolve_density_ck_steps(&rho, &kern, 10).unwrap();
        let expected = s0 * s0 + 0.1;
        assert!((variance(&rho) - expected).abs() / expected < 0.01);
        assert!((variance(&rho) - v0 - 0.1).abs() < 1e-8);
    }

    #[test]
    fn conserves_probability_over_many_steps() {
        let g = Grid::line(64, 4.0, Boundary::Reflecting).unwrap();
        let b = VectorField::uniform(&g, Centering::Face, &[0.8]);
        let kern = DiscreteKernel::gaussian(&b, 0.005, &Constants::unit(1)).unwrap();
        let mut rho = gauss(&g, 1.0, 0.3);
        for _ in 0..1000 {
            let next = evolve_density_ck(&rho, &kern).unwrap();
            assert!((integrate(&next) - integrate(&rho)).abs() < 1e-10);
            assert!(next.values().iter().all(|v| *v >= 0.0));
            rho = next;
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let g = Grid::line(16, 1.0, Boundary::Periodic).unwrap();
        assert!(matches!(
            evolve_density_ck(&ScalarField::constant(&g, 2.0), &free_kernel(&g, 0.01)),
            Err(EdError::NotNormalized { .. })
        ));
    }

    #[test]
    fn reverse_of_uniform_is_forward() {
        let g = Grid::line(48, 3.0, Boundary::Periodic).unwrap();
        let kern = free_kernel(&g, 0.01);
        let rho = ScalarField::constant(&g, 1.0 / 3.0);
        let rho2 = evolve_density_ck(&rho, &kern).unwrap();
        let rev = reverse_kernel_bayes(&rho, &rho2, &kern).unwrap();
        for i in 0..g.len() {
            let fwd: std::collections::HashMap<usize, f64> = kern.row(i).iter().copied().collect();
            for &(j, p) in rev.row(i) {
                assert!((p - fwd[&j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reverse_means_point_to_peak() {
        // Oracle: brute-force Bayes with a dense matrix.
        let g = Grid::line(64, 4.0, Boundary::Periodic).unwrap();
        let kern = free_kernel(&g, 0.02);
        let rho = gauss(&g, 2.0, 0.4);
        let rho2 = evolve_density_ck(&rho, &kern).unwrap();
        let rev = reverse_kernel_bayes(&rho, &rho2, &kern).unwrap();
        let n = g.len();
        let mut dense = vec![vec![0.0; n]; n];
        for (i, row) in dense.iter_mut().enumerate() {
            for &(j, p) in kern.row(i) {
                row[j] = p;
            }
        }
        for j in 0..n {
            let z: f64 = (0..n).map(|i| rho.values()[i] * dense[i][j]).sum();
            for &(i, p) in rev.row(j) {
                assert!((p - rho.values()[i] * dense[i][j] / z).abs() < 1e-12);
            }
        }
        for j in [20, 24, 40, 44] {
            let m = rev.row_moments(j, 0).unwrap().mean;
            let towards = 2.0 - g.position(j, 0);
            assert!(m * towards > 0.0, "cell {j} mean {m}");
        }
    }

    #[test]
    fn forward_then_reverse_reconstructs() {
        let g = Grid::line(64, 4.0, Boundary::Reflecting).unwrap();
        let b = VectorField::uniform(&g, Centering::Face, &[0.5]);
        let kern = DiscreteKernel::gaussian(&b, 0.02, &Constants::unit(1)).unwrap();
        let rho = normalized(&ScalarField::from_fn(&g, |x| {
            1.0 + (2.0 * x[0]).sin().powi(2)
        }))
        .unwrap();
        let rho2 = evolve_density_ck(&rho, &kern).unwrap();
        let rev = reverse_kernel_bayes(&rho, &rho2, &kern).unwrap();
        assert!(rev.masked().is_empty());
        let back = reconstruct_earlier(&rho2, &rev).unwrap();
        for (a, b) in back.values().iter().zip(rho.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reverse_rows_of_step_density_are_skewed() {
        let g = Grid::line(128, 4.0, Boundary::Periodic).unwrap();
        let dt = 0.01;
        let kern = free_kernel(&g, dt);
        let rho = normalized(&ScalarField::from_fn(&g, |x| {
            if x[0] < 2.0 {
                1.0
            } else {
                0.01
            }
        }))
        .unwrap();
        let rho2 = evolve_density_ck(&rho, &kern).unwrap();
        let rev = reverse_kernel_bayes(&rho, &rho2, &kern).unwrap();
        let bound = forward_kurtosis_bound(&g, dt, &Constants::unit(1));
        let j = g.cell_of(&[2.0]);
        let f = kern.row_moments(j, 0).unwrap();
        let r = rev.row_moments(j, 0).unwrap();
        assert!(f.excess_kurtosis.abs() <= bound);
        assert!(r.skewness.abs() > 10.0 * f.skewness.abs().max(1e-6));
        assert!(r.excess_kurtosis.abs() > bound);
    }

    #[test]
    fn forward_rows_gaussian_within_bound() {
        let g = Grid::line(256, 10.0, Boundary::Periodic).unwrap();
        let k = Constants::unit(1);
        for dt in [1e-3, 1e-2] {
            let b = VectorField::uniform(&g, Centering::Face, &[1.3]);
            let kern = DiscreteKernel::gaussian(&b, dt, &k).unwrap();
            let bound = forward_kurtosis_bound(&g, dt, &k);
            for i in [0, 100, 255] {
                let m = kern.row_moments(i, 0).unwrap();
                assert!(m.excess_kurtosis.abs() <= bound, "{}", m.excess_kurtosis);
                // Aliasing of the sampled Gaussian: first Fourier mode.
                let s = dt.sqrt();
                let kr = 2.0 * std::f64::consts::PI * s / g.spacing(0);
                let alias = 4.0 * (-0.5 * kr * kr).exp();
                // Six-sigma truncation removes 2 (6 phi(6) + Q(6)) < 1e-7 of the variance.
                assert!((m.variance - dt).abs() <= dt * (kr * kr * alias + 1e-7));
                assert!((m.mean - 1.3 * dt).abs() <= s * (kr * alias + 1e-8));
            }
        }
    }

    #[test]
    fn masks_empty_columns() {
        let g = Grid::line(32, 4.0, Boundary::Reflecting).unwrap();
        let kern = free_kernel(&g, 0.001);
        let mut v = vec![0.0; 32];
        v[3] = 1.0 / g.cell_volume();
        let rho = ScalarField::from_values(&g, v).unwrap();
        let rho2 = evolve_density_ck(&rho, &kern).unwrap();
        let rev = reverse_kernel_bayes(&rho, &rho2, &kern).unwrap();
        assert!(!rev.masked().is_empty());
        assert_eq!(masked_mass(&rho2, &rev), 0.0);
        let back = reconstruct_earlier(&rho2, &rev).unwrap();
        assert!((back.values()[3] - rho.values()[3]).abs() < 1e-10 * rho.values()[3]);
    }
}
