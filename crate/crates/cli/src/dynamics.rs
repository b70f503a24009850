//! The three routes to the same density evolution, run side by side:
//! iterated step kernels, Fokker-Planck stepping, and Schrodinger /
//! Hamilton flow, plus walkers driven by the velocities of psi.

use ed_core::calculus::integrate;
use ed_core::entropic_time::{evolve_density_ck_steps, DiscreteKernel};
use ed_core::fokker_planck::{current_velocity_clamped, DriftDiffusion};
use ed_core::geometry::polar_parts;
use ed_core::hamiltonian::{
    e_hamiltonian, e_hamiltonian_complex, hamilton_flow_step, schrodinger_step, EvolverConfig,
    Potential,
};
use ed_core::kernel::{advance_ensemble, DriftSources, StaggeredDrift, WalkerEnsemble};
use ed_core::state::FloorReport;
use ed_core::{ComplexField, Constants, GaugeConfig, Result, ScalarField, VectorField};

use crate::compare::compare_ensembles;
use crate::config::WalkerVelocity;

/// `int |a - b| dx`.
pub fn l1_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    Ok(integrate(&a.zip_map(b, |x, y| (x - y).abs())?))
}

/// Face velocity that moves walkers for the state `psi`.
pub fn walker_velocity(
    psi: &ComplexField,
    gauge: &GaugeConfig,
    k: &Constants,
    which: WalkerVelocity,
) -> Result<(VectorField, FloorReport)> {
    let st = polar_parts(psi, k);
    let (vel, report) = current_velocity_clamped(&st.rho, &st.phase, gauge, k)?;
    let field = match which {
        WalkerVelocity::Drift => vel.drift,
        WalkerVelocity::Current => vel.current,
    };
    Ok((field, report))
}

/// One Euler-Maruyama step of the walkers under the velocity of `psi`.
pub fn step_walkers(
    w: &WalkerEnsemble,
    psi: &ComplexField,
    gauge: &GaugeConfig,
    k: &Constants,
    dt: f64,
    which: WalkerVelocity,
) -> Result<(WalkerEnsemble, FloorReport)> {
    let (field, report) = walker_velocity(psi, gauge, k, which)?;
    let drift = StaggeredDrift::new(field)?;
    Ok((advance_ensemble(w, &drift, psi.grid(), dt, k)?, report))
}

/// Iterate the discrete step kernel and the Fokker-Planck stepper from the
/// same density under the same drift sources; return both final densities.
pub fn ck_and_fp(
    rho0: &ScalarField,
    src: &DriftSources,
    dt: f64,
    steps: usize,
    k: &Constants,
) -> Result<(ScalarField, ScalarField)> {
    let kern = DiscreteKernel::from_drift(src, dt, k)?;
    let ck = evolve_density_ck_steps(rho0, &kern, steps)?;
    let fp = DriftDiffusion::new(&src.face_drift(k), k)?;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        rho = fp.step(&rho, dt)?;
    }
    Ok((ck, rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowComparison {
    /// L1 distance between the flow density and |psi|^2 at the end.
    pub l1: f64,
    /// Relative e-Hamiltonian drift of the Hamilton flow.
    pub flow_energy_drift: f64,
    /// Relative e-Hamiltonian drift of the Schrodinger evolution.
    pub schrodinger_energy_drift: f64,
}

/// Evolve `psi0` by the Schrodinger equation and its polar form by the
/// Hamilton flow for `steps` steps.
pub fn flow_vs_schrodinger(
    psi0: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    cfg: &EvolverConfig,
    steps: usize,
    k: &Constants,
) -> Result<FlowComparison> {
    let mut psi = psi0.clone();
    let mut st = polar_parts(psi0, k);
    let e_flow0 = e_hamiltonian(&st, gauge, pot, k)?;
    let e_psi0 = e_hamiltonian_complex(psi0, gauge, pot, k)?;
    for _ in 0..steps {
        psi = schrodinger_step(&psi, gauge, pot, cfg, k)?;
        st = hamilton_flow_step(&st, gauge, pot, cfg, k)?;
    }
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    Ok(FlowComparison {
        l1: l1_distance(&st.rho, &psi.density())?,
        flow_energy_drift: rel(e_hamiltonian(&st, gauge, pot, k)?, e_flow0),
        schrodinger_energy_drift: rel(e_hamiltonian_complex(&psi, gauge, pot, k)?, e_psi0),
    })
}

/// Sample `m` walkers from |psi0|^2, move them with the chosen velocity of
/// the evolving psi, and return the final L1 distance to |psi|^2.
#[allow(clippy::too_many_arguments)]
pub fn walkers_vs_schrodinger(
    psi0: &ComplexField,
    gauge: &GaugeConfig,
    pot: &Potential,
    cfg: &EvolverConfig,
    steps: usize,
    k: &Constants,
    m: usize,
    seed: u64,
    which: WalkerVelocity,
) -> Result<f64> {
    let mut psi = psi0.clone();
    let mut w = WalkerEnsemble::sample_from_density(&psi.density(), m, seed)?;
    for _ in 0..steps {
        w = step_walkers(&w, &psi, gauge, k, cfg.dt, which)?.0;
        psi = schrodinger_step(&psi, gauge, pot, cfg, k)?;
    }
    Ok(compare_ensembles(&w, &psi.density())?.l1)
}
