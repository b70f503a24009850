//! Scenario runs: Schrodinger evolution with trajectory diagnostics, field
//! snapshots and an optional walker ensemble.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ed_core::gauge_winding::{winding_of_complex, Loop};
use ed_core::hamiltonian::{density_variance, e_hamiltonian_complex, schrodinger_step};
use ed_core::kernel::WalkerEnsemble;
use ed_core::snapshot::{complex_to_string, ensemble_to_string};
use ed_core::ComplexField;

use crate::dynamics::step_walkers;
use crate::error::CliResult;
use crate::scenario::Scenario;

pub const TRAJECTORY_HEADER: &str = "step,time,norm,energy,variance,winding_residual";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
    pub variance: f64,
    pub winding_residual: Option<f64>,
}

impl TrajectoryRow {
    fn csv(&self) -> String {
        let w = self
            .winding_residual
            .map(|r| format!("{r:.16e}"))
            .unwrap_or_default();
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.step, self.time, self.norm, self.energy, self.variance, w
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub rows: Vec<TrajectoryRow>,
    pub psi: ComplexField,
    pub walkers: Option<WalkerEnsemble>,
    /// Cells clamped to the density floor while computing walker velocities.
    pub floor_clamps: usize,
}

fn diagnostics(
    s: &Scenario,
    psi: &ComplexField,
    step: usize,
    ring: Option<&Loop>,
) -> CliResult<TrajectoryRow> {
    let winding_residual = match ring {
        Some(lp) => Some(winding_of_complex(psi, lp, &s.gauge.seam_twist)?.residual),
        None => None,
    };
    Ok(TrajectoryRow {
        step,
        time: step as f64 * s.evolver.dt,
        norm: psi.norm_sqr(),
        energy: e_hamiltonian_complex(psi, &s.gauge, &s.potential, &s.constants)?,
        variance: density_variance(&psi.density(), 0),
        winding_residual,
    })
}

/// Run the scenario, writing into `out_dir`:
/// `config.toml` (echo), `trajectory.csv`, `fields/psi_<step>.dat` and, with
/// walkers, `ensemble/walkers_<step>.dat`. Outputs depend only on the
/// configuration and seed.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> CliResult<RunSummary> {
    fs::create_dir_all(out_dir.join("fields"))?;
    fs::write(out_dir.join("config.toml"), &s.echo)?;
    let ring = if s.grid.is_periodic() {
        Some(Loop::axis_cycle(&s.grid, 0, 0)?)
    } else {
        None
    };
    let mut walkers = if s.ensemble_size > 0 {
        fs::create_dir_all(out_dir.join("ensemble"))?;
        Some(WalkerEnsemble::sample_from_density(
            &s.psi0.density(),
            s.ensemble_size,
            s.seed,
        )?)
    } else {
        None
    };
    let write_snapshots =
        |step: usize, psi: &ComplexField, w: Option<&WalkerEnsemble>| -> CliResult<()> {
            fs::write(
                out_dir.join(format!("fields/psi_{step:06}.dat")),
                complex_to_string(psi, &s.gauge.seam_twist),
            )?;
            if let Some(w) = w {
                fs::write(
                    out_dir.join(format!("ensemble/walkers_{step:06}.dat")),
                    ensemble_to_string(w),
                )?;
            }
            Ok(())
        };

    let mut psi = s.psi0.clone();
    let mut rows = vec![diagnostics(s, &psi, 0, ring.as_ref())?];
    let mut floor_clamps = 0;
    write_snapshots(0, &psi, walkers.as_ref())?;
    for step in 1..=s.evolver.steps {
        if let Some(w) = &walkers {
            let (next, report) = step_walkers(
                w,
                &psi,
                &s.gauge,
                &s.constants,
                s.evolver.dt,
                s.walker_velocity,
            )?;
            floor_clamps += report.clamped;
            walkers = Some(next);
        }
        psi = schrodinger_step(&psi, &s.gauge, &s.potential, &s.evolver, &s.constants)?;
        rows.push(diagnostics(s, &psi, step, ring.as_ref())?);
        if step % s.output_every == 0 || step == s.evolver.steps {
            write_snapshots(step, &psi, walkers.as_ref())?;
        }
    }

    let mut csv = String::from(TRAJECTORY_HEADER);
    csv.push('\n');
    for r in &rows {
        let _ = writeln!(csv, "{}", r.csv());
    }
    fs::write(out_dir.join("trajectory.csv"), csv)?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        rows,
        psi,
        walkers,
        floor_clamps,
    })
}
