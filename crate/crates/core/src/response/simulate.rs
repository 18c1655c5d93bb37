use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ode::{Dopri5, Tolerances};
use crate::error::Result;
use crate::modal::ReducedModel;
use crate::scalar::Float;

/// Time-domain voltage output of one device under one record.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// [s]
    pub time: Vec<f64>,
    /// `v_p` [V]
    pub voltage: Vec<f64>,
    /// Energy dissipated in the load [J].
    pub energy: f64,
    /// [V]
    pub peak_voltage: f64,
}

/// Summary written next to a simulated voltage trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub energy_j: f64,
    pub peak_voltage_v: f64,
    pub design_hash: String,
    pub window_id: String,
}

impl SimResult {
    pub fn summary(&self, design_hash: &str, window_id: &str) -> SimSummary {
        SimSummary {
            energy_j: self.energy,
            peak_voltage_v: self.peak_voltage,
            design_hash: design_hash.to_string(),
            window_id: window_id.to_string(),
        }
    }

    /// Writes `time_s,voltage_v` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "time_s,voltage_v")?;
        for (t, v) in self.time.iter().zip(&self.voltage) {
            writeln!(out, "{t},{v}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `int v^2 / R dt` by the trapezoid rule on a uniform grid.
pub fn load_energy(voltage: &[f64], dt: f64, resistance: f64) -> f64 {
    if voltage.len() < 2 {
        return 0.0;
    }
    let interior: f64 = voltage[1..voltage.len() - 1].iter().map(|v| v * v).sum();
    let ends = (voltage[0].powi(2) + voltage[voltage.len() - 1].powi(2)) * 0.5;
    (interior + ends) * dt / resistance
}

/// Integrates the reduced electromechanical equations from rest under the
/// sampled base acceleration, linearly interpolated between samples. State
/// layout is `[eta, eta_dot, v_p]`.
pub fn simulate_samples<T: Float>(reduced: &ReducedModel<T>, samples: &[f64], rate: f64, tol: Tolerances) -> Result<SimResult> {
    let k = reduced.num_modes();
    let dt = 1.0 / rate;
    if let Some(&top) = reduced.omega.last() {
        let f_top = top.as_f64() / (2.0 * std::f64::consts::PI);
        if rate < 10.0 * f_top {
            log::warn!("sample rate {rate} Hz under-resolves retained mode at {f_top:.2} Hz");
        }
    }
    let time: Vec<f64> = (0..samples.len()).map(|i| i as f64 * dt).collect();
    let mut voltage = Vec::with_capacity(samples.len());
    if samples.is_empty() {
        return Ok(SimResult {
            time,
            voltage,
            energy: 0.0,
            peak_voltage: 0.0,
        });
    }

    let stiff = reduced.stiffness_diag();
    let damp = reduced.damping_diag();
    let theta: Vec<T> = reduced.coupling.iter().copied().collect();
    let force: Vec<T> = reduced.force.iter().copied().collect();
    let inv_c = T::ONE / reduced.capacitance;
    let inv_r = T::ONE / reduced.load_resistance;

    let mut y = vec![T::ZERO; 2 * k + 1];
    let mut stepper = Dopri5::<T>::new(2 * k + 1, tol);
    voltage.push(0.0);
    for i in 0..samples.len() - 1 {
        let t0 = T::lit(time[i]);
        let t1 = T::lit(time[i + 1]);
        let a0 = T::lit(samples[i]);
        let slope = T::lit((samples[i + 1] - samples[i]) * rate);
        let mut rhs = |t: T, y: &[T], dy: &mut [T]| {
            let a = a0 + slope * (t - t0);
            let v = y[2 * k];
            let mut current = T::ZERO;
            for m in 0..k {
                let eta = y[m];
                let vel = y[k + m];
                dy[m] = vel;
                dy[k + m] = -damp[m] * vel - stiff[m] * eta + theta[m] * v + force[m] * a;
                current += theta[m] * vel;
            }
            dy[2 * k] = -(v * inv_r + current) * inv_c;
        };
        stepper.integrate(&mut rhs, t0, t1, &mut y)?;
        voltage.push(y[2 * k].as_f64());
    }
    let r = reduced.load_resistance.as_f64();
    let energy = load_energy(&voltage, dt, r);
    let peak_voltage = voltage.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SimResult {
        time,
        voltage,
        energy,
        peak_voltage,
    })
}
