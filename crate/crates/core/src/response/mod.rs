//! Voltage response: transfer function, time integration and harvested energy.

mod frf;
pub mod ode;
mod simulate;
mod spectral;

pub use frf::{frf, frf_full, linear_grid, reduced_response, FrfCurve};
pub use ode::{Dopri5, Tolerances};
pub use simulate::{load_energy, simulate_samples, SimResult, SimSummary};
pub use spectral::{energy_spectral, PowerSpectrum};

use crate::error::Result;
use crate::excitation::AccelerationWindow;
use crate::modal::ReducedModel;
use crate::scalar::Float;

/// Time-domain response to an acceleration window.
pub fn simulate<T: Float>(reduced: &ReducedModel<T>, accel: &AccelerationWindow, tol: Tolerances) -> Result<SimResult> {
    simulate_samples(reduced, &accel.samples, accel.sample_rate, tol)
}

/// Spectral energy estimate for an acceleration window.
pub fn window_energy_spectral<T: Float>(reduced: &ReducedModel<T>, accel: &AccelerationWindow) -> f64 {
    energy_spectral(reduced, &accel.samples, accel.sample_rate)
}
