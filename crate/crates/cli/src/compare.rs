//! Walker histograms against densities.

use ed_core::calculus::integrate;
use ed_core::kernel::WalkerEnsemble;
use ed_core::{EdError, Result, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// `int |hist - rho| dx` with both normalized.
    pub l1: f64,
    /// Largest Kolmogorov-Smirnov distance between cell-binned marginals.
    pub ks: f64,
}

/// Normalized histogram of walker positions on the grid of `like`.
pub fn histogram(w: &WalkerEnsemble, like: &ScalarField) -> Result<ScalarField> {
    let grid = like.grid();
    if w.is_empty() {
        return Err(EdError::EmptyEnsemble);
    }
    if w.dim() != grid.dim() {
        return Err(EdError::GridMismatch(format!(
            "walkers of dimension {} on a {}-d grid",
            w.dim(),
            grid.dim()
        )));
    }
    let mut counts = vec![0.0; grid.len()];
    let mut x = vec![0.0; grid.dim()];
    for i in 0..w.len() {
        x.copy_from_slice(w.walker(i));
        grid.fold_position(&mut x);
        counts[grid.cell_of(&x)] += 1.0;
    }
    let scale = 1.0 / (w.len() as f64 * grid.cell_volume());
    ScalarField::from_values(grid, counts.into_iter().map(|c| c * scale).collect())
}

pub fn compare_ensembles(w: &WalkerEnsemble, rho: &ScalarField) -> Result<Comparison> {
    let hist = histogram(w, rho)?;
    let grid = rho.grid();
    let total = integrate(rho);
    if !(total > 0.0) {
        return Err(EdError::Invalid("reference density has no mass".into()));
    }
    let dv = grid.cell_volume();
    let l1 = hist
        .values()
        .iter()
        .zip(rho.values())
        .map(|(h, r)| (h - r / total).abs())
        .sum::<f64>()
        * dv;
    let mut ks: f64 = 0.0;
    for d in 0..grid.dim() {
        let n = grid.points()[d];
        let mut mh = vec![0.0; n];
        let mut mr = vec![0.0; n];
        for i in 0..grid.len() {
            let c = grid.coord(i, d);
            mh[c] += hist.values()[i] * dv;
            mr[c] += rho.values()[i] * dv / total;
        }
        let (mut ch, mut cr) = (0.0, 0.0);
        for c in 0..n {
            ch += mh[c];
            cr += mr[c];
            ks = ks.max((ch - cr).abs());
        }
    }
    Ok(Comparison { l1, ks })
}
