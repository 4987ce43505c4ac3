//! Pseudo-spectral solver and diagnostics for the two-dimensional convective
//! Brinkman-Forchheimer equations on the periodic square.

pub mod diagnostics;
pub mod domains;
pub mod error;
mod fft;
pub mod field;
pub mod integrator;
pub mod lyapunov;
pub mod operators;
pub mod par;
pub mod params;

pub use error::{CbfError, Result};
pub use field::{make_grid, random_divfree_field, taylor_green, GridSpec, PhysicalField, Resolution, SpectralField};
pub use integrator::{simulate, CflPolicy, Model, RunRecord, StepperConfig};
pub use params::{ForcingSpec, PhysParams};
pub use rustfft::num_complex::Complex64;
