//! Subcommand bodies. Each returns the text to print so the binary stays a
//! thin argument parser.

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use ed_core::gauge_winding::{format_winding_report, winding_number, winding_of_complex, Loop};
use ed_core::geometry::{format_audit, geometry_audit};
use ed_core::snapshot::{read_ensemble, read_field, FieldSnapshot};
use ed_core::{EdError, ScalarField};

use crate::compare::compare_ensembles;
use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::run::run_scenario;
use crate::scenario::Scenario;

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<String> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.scenario.seed = seed;
    }
    let s = Scenario::from_config(&cfg)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&s.name));
    let summary = run_scenario(&s, &dir)?;
    let last = summary.rows.last().expect("at least the initial row");
    let mut text = format!(
        "{}: {} steps, t = {:.6}, norm = {:.12}, energy = {:.12}\n",
        s.name, last.step, last.time, last.norm, last.energy
    );
    if let Some(r) = last.winding_residual {
        let _ = writeln!(text, "winding residual = {r:.3e}");
    }
    if summary.floor_clamps > 0 {
        let _ = writeln!(
            text,
            "warning: {} density-floor clamps while computing walker velocities",
            summary.floor_clamps
        );
    }
    let _ = writeln!(text, "outputs in {}", summary.out_dir.display());
    Ok(text)
}

fn density_of(snap: FieldSnapshot) -> ScalarField {
    match snap {
        FieldSnapshot::Real(rho) => rho,
        FieldSnapshot::Complex { psi, .. } => psi.density(),
    }
}

pub fn compare(ensemble: &Path, field: &Path) -> CliResult<String> {
    let w = read_ensemble(open(ensemble)?)?;
    let rho = density_of(read_field(open(field)?)?);
    let c = compare_ensembles(&w, &rho)?;
    Ok(format!(
        "walkers = {}\nl1 = {:.16e}\nks = {:.16e}\n",
        w.len(),
        c.l1,
        c.ks
    ))
}

/// Runs the geometry identity suite on 100 random states over line grids
/// from the configured cell count up to four times it.
pub fn audit_geometry(config: &Path) -> CliResult<(String, bool)> {
    let cfg = ScenarioConfig::load(config)?;
    let s = Scenario::from_config(&cfg)?;
    let n = s.grid.points()[0];
    let sizes = [n, 2 * n, 4 * n];
    let k = ed_core::Constants::unit(1).with_hbar(s.constants.hbar);
    let lines = geometry_audit(&sizes, 100, s.seed, &k)?;
    let ok = lines.iter().all(|l| l.passed());
    Ok((format_audit(&lines), ok))
}

/// Winding around every fundamental cycle along `axis`. Complex files are
/// read with their seam twist; real files hold `Phi / hbar` directly.
pub fn winding(field: &Path, axis: usize) -> CliResult<(String, bool)> {
    let snap = read_field(open(field)?)?;
    let grid = snap.grid().clone();
    if axis >= grid.dim() {
        return Err(EdError::Invalid(format!(
            "axis {axis} out of range for a {}-d field",
            grid.dim()
        ))
        .into());
    }
    let mut rows = Vec::new();
    for cell in 0..grid.len() {
        if grid.coord(cell, axis) != 0 {
            continue;
        }
        let lp = Loop::axis_cycle(&grid, axis, cell)?;
        let w = match &snap {
            FieldSnapshot::Real(theta) => winding_number(theta, &lp)?,
            FieldSnapshot::Complex { psi, seam_twist } => winding_of_complex(psi, &lp, seam_twist)?,
        };
        rows.push((format!("axis{axis}@{cell}"), w));
    }
    let ok = rows.iter().all(|(_, w)| w.single_valued());
    Ok((format_winding_report(&rows), ok))
}
