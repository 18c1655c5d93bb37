//! Particle-swarm search for the shape that harvests the most energy from a
//! given acceleration record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excitation::AccelerationWindow;
use crate::femodel::{build_device, AssemblyOptions, MaterialSet, MeshSettings, DEFAULT_LOAD_RESISTANCE};
use crate::geometry::{design_bounds, ShapeParams, DEFAULT_ASPECT, DEFAULT_THICKNESS};
use crate::modal::{solve_modes, ReducedModel, DEFAULT_MODES};
use crate::response::{simulate, PowerSpectrum, Tolerances};

/// Relative gap between the spectral and time-domain energies above which a
/// result carries a warning.
pub const DISCREPANCY_LIMIT: f64 = 0.10;

/// What happens to a particle that leaves the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundHandling {
    /// Position clamped to the violated bound, velocity component zeroed.
    #[default]
    Clamp,
    /// Position mirrored back into the box, velocity component reversed.
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub bounds: BoundHandling,
    /// Stop once the best value improves by less than this fraction over
    /// `stall_iterations` iterations.
    pub tolerance: f64,
    pub stall_iterations: usize,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm: 20,
            iterations: 50,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            bounds: BoundHandling::Clamp,
            tolerance: 1e-4,
            stall_iterations: 10,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm < 2 {
            return Err(Error::Validation(format!("swarm size {} < 2", self.swarm)));
        }
        if self.iterations == 0 {
            return Err(Error::Validation("iteration count must be positive".into()));
        }
        if !(self.inertia > 0.0 && self.inertia < 1.0) {
            return Err(Error::Validation(format!("inertia {} outside (0, 1)", self.inertia)));
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return Err(Error::Validation("acceleration coefficients must be positive".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Validation("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of a bare swarm run.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best value after initialization and after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Maximizes `objective` over the box `[lower, upper]`.
///
/// Failed evaluations (`None` or non-finite values) count as `-inf`.
/// Particles of one iteration are evaluated in parallel; all random draws
/// happen on the calling thread, so the run is reproducible for a seed.
pub fn maximize<F>(objective: F, lower: &[f64], upper: &[f64], config: &PsoConfig) -> Result<SwarmOutcome>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    config.validate()?;
    let dim = lower.len();
    if dim == 0 || upper.len() != dim || lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
        return Err(Error::Argument("search box is empty or malformed".into()));
    }
    let span: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut pos: Vec<Vec<f64>> = (0..config.swarm)
        .map(|_| (0..dim).map(|d| lower[d] + rng.random::<f64>() * span[d]).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..config.swarm)
        .map(|_| (0..dim).map(|d| (rng.random::<f64>() - 0.5) * 0.2 * span[d]).collect())
        .collect();

    let score = |xs: &[Vec<f64>]| -> Vec<f64> {
        xs.par_iter()
            .map(|x| match objective(x) {
                Some(v) if !v.is_nan() => v,
                _ => {
                    log::warn!("objective failed at {x:?}");
                    f64::NEG_INFINITY
                }
            })
            .collect()
    };

    let mut values = score(&pos);
    let mut evaluations = config.swarm;
    let mut personal = pos.clone();
    let mut personal_val = values.clone();
    let mut g = argmax(&personal_val);
    let mut best = personal[g].clone();
    let mut best_val = personal_val[g];
    let mut trace = vec![best_val];

    for _ in 0..config.iterations {
        for p in 0..config.swarm {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let mut v = config.inertia * vel[p][d]
                    + config.cognitive * r1 * (personal[p][d] - pos[p][d])
                    + config.social * r2 * (best[d] - pos[p][d]);
                v = v.clamp(-span[d], span[d]);
                let mut x = pos[p][d] + v;
                match config.bounds {
                    BoundHandling::Clamp => {
                        if x < lower[d] || x > upper[d] {
                            x = x.clamp(lower[d], upper[d]);
                            v = 0.0;
                        }
                    }
                    BoundHandling::Reflect => {
                        if x < lower[d] {
                            x = (2.0 * lower[d] - x).min(upper[d]);
                            v = -v;
                        } else if x > upper[d] {
                            x = (2.0 * upper[d] - x).max(lower[d]);
                            v = -v;
                        }
                    }
                }
                pos[p][d] = x;
                vel[p][d] = v;
            }
        }
        values = score(&pos);
        evaluations += config.swarm;
        for p in 0..config.swarm {
            if values[p] > personal_val[p] {
                personal_val[p] = values[p];
                personal[p].clone_from(&pos[p]);
            }
        }
        g = argmax(&personal_val);
        if personal_val[g] > best_val {
            best_val = personal_val[g];
            best.clone_from(&personal[g]);
        }
        trace.push(best_val);

        let n = trace.len();
        if n > config.stall_iterations {
            let old = trace[n - 1 - config.stall_iterations];
            if old.is_finite() && best_val - old <= config.tolerance * old.abs() {
                break;
            }
        }
    }

    Ok(SwarmOutcome {
        best,
        value: best_val,
        trace,
        evaluations,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Device model settings shared by every candidate shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub materials: MaterialSet,
    pub mesh: MeshSettings,
    pub assembly: AssemblyOptions,
    pub load_resistance: f64,
    pub modes: usize,
    /// Aspect ratio W/L, held fixed.
    pub aspect: f64,
    /// Total thickness [m], held fixed.
    pub thickness: f64,
    /// Upper limit on spectral bands used by the search objective.
    pub spectral_bands: usize,
    pub tolerances: Tolerances,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            materials: MaterialSet::default(),
            mesh: MeshSettings::default(),
            assembly: AssemblyOptions::default(),
            load_resistance: DEFAULT_LOAD_RESISTANCE,
            modes: DEFAULT_MODES,
            aspect: DEFAULT_ASPECT,
            thickness: DEFAULT_THICKNESS,
            spectral_bands: 4096,
            tolerances: Tolerances::default(),
        }
    }
}

impl ModelSettings {
    pub fn validate(&self) -> Result<()> {
        self.materials.validate()?;
        if !(self.load_resistance > 0.0) {
            return Err(Error::Validation("load resistance must be positive".into()));
        }
        if self.modes == 0 {
            return Err(Error::Validation("at least one mode is required".into()));
        }
        if !(self.aspect > 0.0 && self.thickness > 0.0) {
            return Err(Error::Validation("aspect and thickness must be positive".into()));
        }
        Ok(())
    }

    /// Shape for a design vector `[L, l, H]`.
    pub fn shape(&self, x: [f64; 3]) -> Result<ShapeParams> {
        ShapeParams::from_design(x, self.aspect, self.thickness)
    }

    /// Builds and reduces the device of a shape.
    pub fn analyze(&self, shape: &ShapeParams) -> Result<ReducedModel<f64>> {
        let dims = shape.expand::<f64>()?;
        let model = build_device(&dims, &self.materials, &self.mesh, self.load_resistance, &self.assembly)?;
        solve_modes(&model, self.modes.min(model.num_free()))
    }
}

/// Best shape found for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best: ShapeParams,
    /// Spectral energy estimate of the best shape [J].
    pub objective: f64,
    /// Time-domain energy of the best shape [J].
    pub time_domain_energy: Option<f64>,
    pub fundamental_hz: f64,
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub window_id: String,
    pub location: String,
    pub start_time: f64,
    pub warning: Option<String>,
}

impl OptResult {
    /// Relative gap between the time-domain and spectral energies.
    pub fn discrepancy(&self) -> Option<f64> {
        self.time_domain_energy.map(|e| (e - self.objective).abs() / e.abs().max(f64::MIN_POSITIVE))
    }

    /// Writes the trace as `iteration,best_energy_j`.
    pub fn write_trace_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "best_energy_j"])?;
        for (i, v) in self.trace.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spectral-energy objective of a window, reusable across shapes.
pub struct WindowObjective<'a> {
    settings: &'a ModelSettings,
    spectrum: PowerSpectrum,
}

impl<'a> WindowObjective<'a> {
    pub fn new(window: &AccelerationWindow, settings: &'a ModelSettings) -> Self {
        let spectrum = PowerSpectrum::from_samples(&window.samples, window.sample_rate).coarsened(settings.spectral_bands);
        Self { settings, spectrum }
    }

    pub fn energy(&self, x: [f64; 3]) -> Result<f64> {
        let shape = self.settings.shape(x)?;
        let reduced = self.settings.analyze(&shape)?;
        Ok(self.spectrum.energy(&reduced))
    }
}

/// Searches the design box for the window's best shape and re-scores it in
/// the time domain.
pub fn optimize(window: &AccelerationWindow, config: &PsoConfig, settings: &ModelSettings) -> Result<OptResult> {
    optimize_with(window, config, settings, true)
}

/// As [`optimize`]; `verify = false` skips the time-domain re-score.
pub fn optimize_with(window: &AccelerationWindow, config: &PsoConfig, settings: &ModelSettings, verify: bool) -> Result<OptResult> {
    window.validate()?;
    if window.is_empty() {
        return Err(Error::Argument(format!("window {} has no samples", window.id())));
    }
    settings.validate()?;
    let objective = WindowObjective::new(window, settings);
    let (lower, upper) = design_bounds();
    let outcome = maximize(
        |x| match objective.energy([x[0], x[1], x[2]]) {
            Ok(e) => Some(e),
            Err(e) => {
                log::warn!("design {x:?} failed: {e}");
                None
            }
        },
        &lower,
        &upper,
        config,
    )?;
    if !outcome.value.is_finite() {
        return Err(Error::Validation(format!("no feasible design for window {}", window.id())));
    }
    let best = settings.shape([outcome.best[0], outcome.best[1], outcome.best[2]])?;
    let reduced = settings.analyze(&best)?;
    let time_domain_energy = if verify {
        Some(simulate(&reduced, window, settings.tolerances)?.energy)
    } else {
        None
    };
    let mut result = OptResult {
        best,
        objective: outcome.value,
        time_domain_energy,
        fundamental_hz: reduced.fundamental_hz(),
        trace: outcome.trace,
        evaluations: outcome.evaluations,
        window_id: window.id(),
        location: window.location.clone(),
        start_time: window.start_time,
        warning: None,
    };
    if let Some(d) = result.discrepancy() {
        if d > DISCREPANCY_LIMIT {
            let msg = format!("spectral and time-domain energies differ by {:.1}%", 100.0 * d);
            log::warn!("{}: {msg}", result.window_id);
            result.warning = Some(msg);
        }
    }
    Ok(result)
}

/// Failure of one window in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    /// Ordered by window start time.
    pub results: Vec<OptResult>,
    pub failures: Vec<WindowFailure>,
}

/// Optimizes every window of one location in parallel.
///
/// Every window runs with the configured seed, so identical windows yield
/// identical designs.
pub fn optimize_all(windows: &[AccelerationWindow], config: &PsoConfig, settings: &ModelSettings, verify: bool) -> Result<BatchResult> {
    if let Some(first) = windows.first() {
        if let Some(w) = windows.iter().find(|w| w.location != first.location) {
            return Err(Error::Argument(format!("window {} is not at location {}", w.id(), first.location)));
        }
    }
    let mut order: Vec<&AccelerationWindow> = windows.iter().collect();
    order.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));
    let outcomes: Vec<_> = order.par_iter().map(|w| optimize_with(w, config, settings, verify)).collect();
    let mut batch = BatchResult::default();
    for (w, outcome) in order.iter().zip(outcomes) {
        match outcome {
            Ok(r) => batch.results.push(r),
            Err(e) => batch.failures.push(WindowFailure {
                window_id: w.id(),
                error: e.to_string(),
            }),
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(target: [f64; 3]) -> impl Fn(&[f64]) -> Option<f64> + Sync {
        move |x| Some(-x.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    #[test]
    fn finds_sphere_optimum() {
        let (lo, hi) = design_bounds();
        let target = [0.27, 0.63, 0.18];
        let cfg = PsoConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        let out = maximize(sphere(target), &lo, &hi, &cfg).unwrap();
        for d in 0..3 {
            assert!((out.best[d] - target[d]).abs() < 1e-3, "{:?}", out.best);
        }
        assert_eq!(out.trace.len(), 51);
    }

    #[test]
    fn trace_is_monotone_and_seeded() {
        let (lo, hi) = design_bounds();
        let f = |x: &[f64]| Some((7.0 * x[0]).sin() * (3.0 * x[1]).cos() + x[2]);
        let cfg = PsoConfig {
            seed: 11,
            ..Default::default()
        };
        let a = maximize(f, &lo, &hi, &cfg).unwrap();
        let b = maximize(f, &lo, &hi, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        for d in 0..3 {
            assert!(a.best[d] >= lo[d] && a.best[d] <= hi[d]);
        }
    }

    #[test]
    fn failed_particles_do_not_abort() {
        let (lo, hi) = design_bounds();
        let f = |x: &[f64]| if x[0] < 0.3 { None } else { Some(-x[0]) };
        let out = maximize(f, &lo, &hi, &PsoConfig::default()).unwrap();
        assert!((out.best[0] - 0.3).abs() < 1e-2);
    }

    #[test]
    fn reflect_keeps_particles_inside() {
        let (lo, hi) = design_bounds();
        let cfg = PsoConfig {
            bounds: BoundHandling::Reflect,
            ..Default::default()
        };
        let out = maximize(sphere([0.5, 1.0, 0.45]), &lo, &hi, &cfg).unwrap();
        for d in 0..3 {
            assert!(out.best[d] >= lo[d] && out.best[d] <= hi[d]);
        }
    }

    #[test]
    fn config_validation() {
        let bad = PsoConfig {
            swarm: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PsoConfig {
            inertia: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_batch() {
        let out = optimize_all(&[], &PsoConfig::default(), &ModelSettings::default(), false).unwrap();
        assert!(out.results.is_empty() && out.failures.is_empty());
    }
}
