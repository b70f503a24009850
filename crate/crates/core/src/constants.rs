use crate::error::{EdError, Result};

/// Physical constants shared by every module.
///
/// Masses and charge multipliers are stored per grid dimension: each
/// dimension is one configuration-space coordinate, so a single particle
/// in D dimensions repeats its mass D times and two particles on a line
/// use D = 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub c: f64,
    pub masses: Vec<f64>,
    pub betas: Vec<f64>,
    /// Scale of the information metric. `None` means `hbar * dt`, which makes
    /// the mass tensor equal the literal masses.
    pub info_scale: Option<f64>,
}

impl Constants {
    /// Unit constants (hbar = c = 1, unit masses, beta = 0) for `dim` coordinates.
    pub fn unit(dim: usize) -> Self {
        Self {
            hbar: 1.0,
            c: 1.0,
            masses: vec![1.0; dim],
            betas: vec![0.0; dim],
            info_scale: None,
        }
    }

    pub fn with_masses(mut self, masses: Vec<f64>) -> Self {
        self.masses = masses;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        let d = self.masses.len();
        self.betas = vec![beta; d];
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(EdError::Invalid(format!(
                "hbar must be > 0, got {}",
                self.hbar
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(EdError::Invalid(format!("c must be > 0, got {}", self.c)));
        }
        if self.masses.len() != dim || self.betas.len() != dim {
            return Err(EdError::Invalid(format!(
                "expected {dim} masses and betas, got {} and {}",
                self.masses.len(),
                self.betas.len()
            )));
        }
        if let Some(m) = self.masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(EdError::Invalid(format!("masses must be > 0, got {m}")));
        }
        if self.betas.iter().any(|b| !b.is_finite()) {
            return Err(EdError::Invalid("betas must be finite".into()));
        }
        if let Some(cs) = self.info_scale {
            if !(cs > 0.0 && cs.is_finite()) {
                return Err(EdError::Invalid(format!(
                    "info scale C must be > 0, got {cs}"
                )));
            }
        }
        Ok(())
    }

    /// Information-metric scale C for step duration `dt`.
    pub fn info_scale_for(&self, dt: f64) -> f64 {
        self.info_scale.unwrap_or(self.hbar * dt)
    }

    /// The single charge multiplier used where a configuration-space angle
    /// chi-bar = beta * chi is needed. Requires all betas to agree.
    pub fn uniform_beta(&self) -> Result<f64> {
        let b0 = self.betas.first().copied().unwrap_or(0.0);
        if self.betas.iter().all(|b| *b == b0) {
            Ok(b0)
        } else {
            Err(EdError::Invalid(
                "a scalar chi-bar field requires equal betas in every dimension".into(),
            ))
        }
    }
}
