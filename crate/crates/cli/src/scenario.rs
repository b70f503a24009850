//! Turning a configuration into grids, fields and solver settings.

use std::f64::consts::PI;

use ed_core::hamiltonian::{ground_state_1d, EvolverConfig, Potential, Scheme};
use ed_core::{Boundary, ComplexField, Constants, EdError, GaugeConfig, Grid};
use num_complex::Complex64;

use crate::config::{PotentialKind, Preset, ScenarioConfig, SchemeName, WalkerVelocity};
use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub output_every: usize,
    pub grid: Grid,
    pub constants: Constants,
    pub psi0: ComplexField,
    pub gauge: GaugeConfig,
    pub potential: Potential,
    pub evolver: EvolverConfig,
    pub ensemble_size: usize,
    pub walker_velocity: WalkerVelocity,
    /// The configuration echo written next to the outputs.
    pub echo: String,
}

fn per_dim(v: &[f64], dim: usize, default: f64, what: &str) -> CliResult<Vec<f64>> {
    match v.len() {
        0 => Ok(vec![default; dim]),
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v.to_vec()),
        n => Err(EdError::Invalid(format!("{what}: expected 1 or {dim} values, got {n}")).into()),
    }
}

fn normalize(psi: ComplexField) -> CliResult<ComplexField> {
    let n = psi.norm_sqr();
    if !(n > 0.0 && n.is_finite()) {
        return Err(EdError::Degenerate("initial state has zero norm".into()).into());
    }
    Ok(psi.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
}

impl Scenario {
    pub fn from_config(cfg: &ScenarioConfig) -> CliResult<Self> {
        let boundary: Boundary = cfg.grid.boundary.parse()?;
        let grid = Grid::new(cfg.grid.points.clone(), cfg.grid.lengths.clone(), boundary)?;
        let dim = grid.dim();
        let cc = &cfg.constants;
        let constants = Constants {
            hbar: cc.hbar,
            c: cc.c,
            masses: per_dim(&cc.masses, dim, 1.0, "constants.masses")?,
            betas: per_dim(&cc.betas, dim, 0.0, "constants.betas")?,
            info_scale: cc.info_scale,
        };
        constants.validate(dim)?;
        let middle: Vec<f64> = grid.lengths().iter().map(|l| 0.5 * l).collect();

        let g = &cfg.gauge;
        let mut gauge = if g.chi_winding != 0 {
            GaugeConfig::winding(&grid, 0, g.chi_winding)
        } else {
            GaugeConfig::trivial(&grid)
        };
        if !g.connection.is_empty() {
            let a = per_dim(&g.connection, dim, 0.0, "gauge.connection")?;
            gauge.connection = GaugeConfig::uniform_connection(&grid, &a).connection;
        }
        let mut twist = per_dim(&g.seam_twist, dim, 0.0, "gauge.seam_twist")?;

        let p = &cfg.potential;
        let pcentre = if p.centre.is_empty() {
            middle.clone()
        } else {
            per_dim(&p.centre, dim, 0.0, "potential.centre")?
        };
        let potential = match p.kind {
            PotentialKind::None => Potential::zero(&grid),
            PotentialKind::Harmonic => {
                Potential::harmonic(&grid, &constants, p.omega.unwrap_or(1.0), &pcentre)
            }
            PotentialKind::Barrier => Potential::barrier(&grid, p.height, p.width, pcentre[0]),
            PotentialKind::Constant => Potential::constant(&grid, p.value),
        };

        let ini = &cfg.initial;
        let centre = if ini.centre.is_empty() {
            middle.clone()
        } else {
            per_dim(&ini.centre, dim, 0.0, "initial.centre")?
        };
        let kw = per_dim(&ini.wavenumber, dim, 0.0, "initial.wavenumber")?;
        let psi0 = match ini.preset {
            Preset::Gaussian => {
                if !(ini.sigma > 0.0) {
                    return Err(EdError::Invalid(format!(
                        "initial.sigma must be > 0, got {}",
                        ini.sigma
                    ))
                    .into());
                }
                let s2 = ini.sigma * ini.sigma;
                normalize(ComplexField::from_fn(&grid, |x| {
                    let (mut amp, mut ph) = (0.0, 0.0);
                    for d in 0..x.len() {
                        amp -= (x[d] - centre[d]).powi(2) / (4.0 * s2);
                        ph += kw[d] * x[d];
                    }
                    Complex64::from_polar(amp.exp(), ph)
                }))?
            }
            Preset::Uniform => {
                normalize(ComplexField::from_fn(&grid, |_| Complex64::new(1.0, 0.0)))?
            }
            Preset::PlaneWave => normalize(ComplexField::from_fn(&grid, |x| {
                Complex64::from_polar(1.0, x.iter().zip(&kw).map(|(a, b)| a * b).sum())
            }))?,
            Preset::HoGround => {
                let trap = Potential::harmonic(&grid, &constants, ini.omega, &centre);
                if dim == 1 {
                    ground_state_1d(&grid, &gauge, &trap, &constants)?.0
                } else {
                    normalize(ComplexField::from_fn(&grid, |x| {
                        let amp: f64 = (0..x.len())
                            .map(|d| {
                                -constants.masses[d] * ini.omega * (x[d] - centre[d]).powi(2)
                                    / (2.0 * constants.hbar)
                            })
                            .sum();
                        Complex64::new(amp.exp(), 0.0)
                    }))?
                }
            }
            Preset::RingWinding => {
                if !grid.is_periodic() {
                    return Err(
                        EdError::Invalid("ring_winding needs a periodic grid".into()).into(),
                    );
                }
                // Phase beta nu theta on the covering space; the branch
                // mismatch 2 pi beta nu goes into the seam twist.
                let beta = constants.uniform_beta()?;
                let l = grid.lengths()[0];
                let turns = beta * ini.nu as f64;
                twist[0] += 2.0 * PI * turns;
                normalize(ComplexField::from_fn(&grid, |x| {
                    let theta = 2.0 * PI * x[0] / l;
                    Complex64::from_polar(1.0 + ini.modulation * theta.cos(), turns * theta)
                }))?
            }
        };
        gauge = gauge.with_seam_twist(twist);

        let scheme = match cfg.evolver.scheme {
            SchemeName::CrankNicolson => Scheme::CrankNicolson,
            SchemeName::SplitStep => Scheme::SplitStepSpectral,
        };
        let evolver = EvolverConfig::new(cfg.evolver.dt, scheme, cfg.evolver.steps);
        evolver.validate(&grid)?;
        if cfg.scenario.output_every == 0 {
            return Err(EdError::Invalid("scenario.output_every must be >= 1".into()).into());
        }
        Ok(Self {
            name: cfg.scenario.name.clone(),
            seed: cfg.scenario.seed,
            output_every: cfg.scenario.output_every,
            grid,
            constants,
            psi0,
            gauge,
            potential,
            evolver,
            ensemble_size: cfg.ensemble.size,
            walker_velocity: cfg.ensemble.velocity,
            echo: cfg.echo(),
        })
    }
}
