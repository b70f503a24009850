//! Information metric of configuration space estimated from the short-step
//! kernel, and the mass tensor it defines.

use rayon::prelude::*;

use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::kernel::{transition_kernel, DriftSources};
use crate::rng::{NormalSource, StreamFamily};

pub const MIN_FISHER_SAMPLES: usize = 10_000;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct MassTensor {
    pub diag: Vec<f64>,
    pub inverse_diag: Vec<f64>,
}

pub fn mass_tensor(k: &Constants, dt: f64) -> Result<MassTensor> {
    k.validate(k.masses.len())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EdError::Invalid(format!("dt must be > 0, got {dt}")));
    }
    Ok(MassTensor {
        diag: k.masses.clone(),
        inverse_diag: k.masses.iter().map(|m| 1.0 / m).collect(),
    })
}

/// Monte Carlo estimate of `C E[d_A log P d_B log P]` with per-entry
/// standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherEstimate {
    pub matrix: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub samples: usize,
}

impl FisherEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// `(hbar dt / C) gamma`, which should reproduce the mass tensor.
    pub fn implied_masses(&self, k: &Constants, dt: f64) -> Vec<Vec<f64>> {
        let f = k.hbar * dt / k.info_scale_for(dt);
        self.matrix
            .iter()
            .map(|row| row.iter().map(|v| v * f).collect())
            .collect()
    }
}

/// Sample the transition kernel from `x` and average outer products of the
/// analytic location score. The sampling streams are addressed by `seed`.
pub fn fisher_metric_estimate(
    x: &[f64],
    src: &DriftSources,
    dt: f64,
    k: &Constants,
    n_samples: usize,
    seed: u64,
) -> Result<FisherEstimate> {
    if n_samples < MIN_FISHER_SAMPLES {
        return Err(EdError::Invalid(format!(
            "need at least {MIN_FISHER_SAMPLES} samples, got {n_samples}"
        )));
    }
    let dim = src.grid().dim();
    k.validate(dim)?;
    if x.len() != dim {
        return Err(EdError::Invalid(format!(
            "point has {} coordinates, grid has {dim}",
            x.len()
        )));
    }
    let kern = transition_kernel(x, src, dt, k)?;
    let scale = k.info_scale_for(dt);
    let sd: Vec<f64> = kern.covariance_diag.iter().map(|v| v.sqrt()).collect();
    let mean = kern.mean();
    let family = StreamFamily::new(seed, "fisher");
    let chunks = n_samples.div_ceil(CHUNK);
    // Per chunk: sums of s_A s_B and (s_A s_B)^2, flattened D x D.
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut src = family.at(c as u64, 0, NormalSource::words_for(dim));
            let mut y = vec![0.0; dim];
            let mut s = vec![0.0; dim];
            let mut acc = vec![0.0; dim * dim];
            let mut acc2 = vec![0.0; dim * dim];
            for _ in (c * CHUNK)..((c + 1) * CHUNK).min(n_samples) {
                for d in 0..dim {
                    y[d] = mean[d] + sd[d] * src.normal();
                }
                kern.location_score(&y, &mut s);
                for a in 0..dim {
                    for b in 0..dim {
                        let p = s[a] * s[b];
                        acc[a * dim + b] += p;
                        acc2[a * dim + b] += p * p;
                    }
                }
            }
            (acc, acc2)
        })
        .reduce(
            || (vec![0.0; dim * dim], vec![0.0; dim * dim]),
            |(mut a, mut a2), (b, b2)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a2.iter_mut().zip(&b2).for_each(|(x, y)| *x += y);
                (a, a2)
            },
        );
    let n = n_samples as f64;
    let mut matrix = vec![vec![0.0; dim]; dim];
    let mut std_error = vec![vec![0.0; dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            let m = sum[a * dim + b] / n;
            let var = (sum_sq[a * dim + b] / n - m * m).max(0.0);
            matrix[a][b] = scale * m;
            std_error[a][b] = scale * (var / (n - 1.0)).sqrt();
        }
    }
    // Symmetrize (entries are equal up to rounding) and require positive definiteness.
    for a in 0..dim {
        for b in 0..a {
            let v = 0.5 * (matrix[a][b] + matrix[b][a]);
            matrix[a][b] = v;
            matrix[b][a] = v;
        }
    }
    if !is_positive_definite(&matrix) {
        return Err(EdError::Degenerate(
            "Fisher metric estimate is not positive definite".into(),
        ));
    }
    Ok(FisherEstimate {
        matrix,
        std_error,
        samples: n_samples,
    })
}

fn is_positive_definite(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = m[i][j] - (0..j).map(|q| l[i][q] * l[j][q]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}
