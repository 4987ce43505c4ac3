//! Physical coefficients and forcing descriptors.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use crate::domains;
use crate::error::{CbfError, Result};
use crate::field::{taylor_green, GridSpec, SpectralField};
use crate::operators::{check_exponent, gaussian_vortex};

/// Body force, described analytically or by coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    /// `(A sin(k y), 0)` with `k` in units of `2 pi / L`.
    Kolmogorov { wavenumber: i64, amplitude: f64 },
    TaylorGreen { amplitude: f64 },
    /// Vortex with Gaussian stream function centred in the cell.
    Vortex { width: f64, amplitude: f64 },
    /// Field read from a `CBF1` dump.
    File(PathBuf),
    Coefficients(SpectralField),
    /// `base` multiplied by the indicator of the centred disc of radius `radius`.
    Masked { base: Box<ForcingSpec>, radius: f64 },
}

impl ForcingSpec {
    /// Projected forcing coefficients on `grid`.
    pub fn realize(&self, grid: &Arc<GridSpec>) -> Result<SpectralField> {
        let f = match self {
            ForcingSpec::Zero => SpectralField::zeros(grid),
            ForcingSpec::Kolmogorov { wavenumber, amplitude } => {
                let k = *wavenumber;
                if k < 1 || k >= (grid.n() / 2) as i64 {
                    return Err(CbfError::Config(format!(
                        "forcing wavenumber {k} is not resolved on N = {}",
                        grid.n()
                    )));
                }
                let s = 2.0 * std::f64::consts::PI / grid.period() * k as f64;
                let a = *amplitude;
                SpectralField::from_fn(grid, move |_, y| (a * (s * y).sin(), 0.0))
            }
            ForcingSpec::TaylorGreen { amplitude } => taylor_green(grid, *amplitude),
            ForcingSpec::Vortex { width, amplitude } => {
                if !(*width > 0.0) {
                    return Err(CbfError::Config(format!("vortex width must be positive, got {width}")));
                }
                gaussian_vortex(grid, *width, *amplitude)
            }
            ForcingSpec::File(path) => {
                let file = File::open(path)?;
                let f = SpectralField::read_cbf1(BufReader::new(file), grid.pad_factor())?;
                if !f.grid().same_as(grid) {
                    return Err(CbfError::GridMismatch);
                }
                // rebind onto the shared grid instance
                SpectralField::from_coeffs(grid, f.ux().to_vec(), f.uy().to_vec())?
            }
            ForcingSpec::Coefficients(f) => {
                if !f.grid().same_as(grid) {
                    return Err(CbfError::GridMismatch);
                }
                SpectralField::from_coeffs(grid, f.ux().to_vec(), f.uy().to_vec())?
            }
            ForcingSpec::Masked { base, radius } => {
                let raw = base.realize(grid)?;
                domains::mask_disc(&raw, *radius)
            }
        };
        Ok(f.project())
    }

    pub fn masked(self, radius: f64) -> ForcingSpec {
        ForcingSpec::Masked { base: Box::new(self), radius }
    }
}

/// Coefficients of the momentum equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: u32,
    pub forcing: ForcingSpec,
}

impl PhysParams {
    pub fn new(mu: f64, alpha: f64, beta: f64, r: u32, forcing: ForcingSpec) -> Result<Self> {
        let p = Self { mu, alpha, beta, r, forcing };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(CbfError::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(CbfError::Config(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(CbfError::Config(format!("beta must be nonnegative, got {}", self.beta)));
        }
        check_exponent(self.r)
    }

    pub fn with_forcing(&self, forcing: ForcingSpec) -> Self {
        Self { forcing, ..self.clone() }
    }
}
