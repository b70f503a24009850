//! Entropic dynamics on a lattice: max-entropy step kernels, entropic time,
//! Fokker-Planck evolution, the e-phase space geometry, Hamiltonian flow and
//! gauge winding checks.

pub mod calculus;
pub mod constants;
pub mod entropic_time;
pub mod error;
pub mod field;
pub mod fokker_planck;
pub mod gauge;
pub mod gauge_winding;
pub mod geometry;
pub mod grid;
pub mod hamiltonian;
pub mod info_metric;
pub mod kernel;
pub mod rng;
pub mod snapshot;
pub mod state;

pub use constants::Constants;
pub use error::{EdError, Result};
pub use field::{Centering, ComplexField, ScalarField, VectorField};
pub use gauge::GaugeConfig;
pub use grid::{Boundary, Grid};
