use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::window::AccelerationWindow;
use crate::error::{Error, Result};

/// Sensor position on the deck with optional mode-shape ordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLocation {
    pub id: String,
    /// Distance from the left support [m].
    pub position: f64,
    /// Per-mode ordinates; sinusoidal shapes are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinates: Option<Vec<f64>>,
}

/// Modal model of a simply supported deck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BridgeModel {
    /// [m]
    pub span: f64,
    /// Natural frequencies [Hz], ascending.
    pub frequencies: Vec<f64>,
    /// Modal damping ratios, one per mode.
    pub damping: Vec<f64>,
    /// Generalized mass of every mode [kg].
    pub modal_mass: f64,
    pub sensors: Vec<SensorLocation>,
}

fn default_modal_mass() -> f64 {
    1.2e5
}

impl Default for BridgeModel {
    fn default() -> Self {
        Self {
            span: 60.0,
            frequencies: vec![2.01, 3.51],
            damping: vec![0.02, 0.02],
            modal_mass: default_modal_mass(),
            sensors: vec![
                SensorLocation {
                    id: "midspan".into(),
                    position: 30.0,
                    ordinates: None,
                },
                SensorLocation {
                    id: "quarter".into(),
                    position: 15.0,
                    ordinates: None,
                },
                SensorLocation {
                    id: "support".into(),
                    position: 3.0,
                    ordinates: None,
                },
            ],
        }
    }
}

impl BridgeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0) {
            return Err(Error::Validation("bridge span must be positive".into()));
        }
        if self.frequencies.is_empty() || self.frequencies.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::Validation("bridge frequencies must be positive".into()));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("bridge frequencies must ascend".into()));
        }
        if self.damping.len() != self.frequencies.len() || self.damping.iter().any(|z| !(*z > 0.0 && *z < 1.0)) {
            return Err(Error::Validation("one damping ratio in (0, 1) per mode required".into()));
        }
        if !(self.modal_mass > 0.0) {
            return Err(Error::Validation("modal mass must be positive".into()));
        }
        for s in &self.sensors {
            if !(0.0..=self.span).contains(&s.position) {
                return Err(Error::Validation(format!("sensor {} outside the span", s.id)));
            }
            if let Some(o) = &s.ordinates {
                if o.len() != self.frequencies.len() || o.iter().any(|v| v.abs() > 1.0) {
                    return Err(Error::Validation(format!("sensor {} needs one ordinate in [-1, 1] per mode", s.id)));
                }
            }
        }
        Ok(())
    }

    pub fn num_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Ordinate of mode `m` (0-based) at distance `x` along the deck.
    pub fn shape(&self, m: usize, x: f64) -> f64 {
        if !(0.0..=self.span).contains(&x) {
            return 0.0;
        }
        ((m + 1) as f64 * PI * x / self.span).sin()
    }

    pub fn sensor(&self, id: &str) -> Option<&SensorLocation> {
        self.sensors.iter().find(|s| s.id == id)
    }

    /// Mode ordinates at a sensor.
    pub fn ordinates(&self, id: &str) -> Result<Vec<f64>> {
        let s = self.sensor(id).ok_or_else(|| Error::Argument(format!("unknown sensor `{id}`")))?;
        Ok(match &s.ordinates {
            Some(o) => o.clone(),
            None => (0..self.num_modes()).map(|m| self.shape(m, s.position)).collect(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let b: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        b.validate()?;
        Ok(b)
    }
}

/// Vehicle stream crossing the deck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficSpec {
    /// [vehicles/hour]
    pub arrival_rate: f64,
    /// [m/s]
    pub speed_range: (f64, f64),
    /// Static axle-group load [N].
    pub load_range: (f64, f64),
    pub seed: u64,
    /// Amplitude of the dynamic wheel load as a fraction of the static load.
    #[serde(default = "default_dynamic_fraction")]
    pub dynamic_fraction: f64,
    /// Frequency band of the dynamic wheel load [Hz].
    #[serde(default = "default_bounce_band")]
    pub bounce_band: (f64, f64),
    /// RMS of white measurement noise [m/s^2].
    #[serde(default = "default_noise")]
    pub noise_rms: f64,
}

fn default_dynamic_fraction() -> f64 {
    0.15
}

fn default_bounce_band() -> (f64, f64) {
    (1.5, 4.5)
}

fn default_noise() -> f64 {
    0.005
}

impl TrafficSpec {
    pub fn with_rate(arrival_rate: f64, seed: u64) -> Self {
        Self {
            arrival_rate,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_range = |(a, b): (f64, f64)| a > 0.0 && b >= a && b.is_finite();
        if !(self.arrival_rate >= 0.0 && self.arrival_rate.is_finite()) {
            return Err(Error::Validation("arrival rate must be non-negative".into()));
        }
        if !ok_range(self.speed_range) || !ok_range(self.load_range) || !ok_range(self.bounce_band) {
            return Err(Error::Validation("traffic ranges must be positive and ordered".into()));
        }
        if !(self.dynamic_fraction >= 0.0 && self.noise_rms >= 0.0) {
            return Err(Error::Validation("dynamic fraction and noise must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for TrafficSpec {
    fn default() -> Self {
        Self {
            arrival_rate: 10.0,
            speed_range: (8.0, 16.0),
            load_range: (5.0e4, 2.0e5),
            seed: 0,
            dynamic_fraction: default_dynamic_fraction(),
            bounce_band: default_bounce_band(),
            noise_rms: default_noise(),
        }
    }
}

/// One sampled vehicle crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehiclePass {
    /// Entry time [s] from the window start.
    pub entry: f64,
    pub speed: f64,
    pub load: f64,
    /// True when travelling from the right support.
    pub reverse: bool,
    bounce: Vec<(f64, f64)>,
}

const BOUNCE_TONES: usize = 6;

impl VehiclePass {
    fn sample<R: Rng>(rng: &mut R, entry: f64, traffic: &TrafficSpec) -> Self {
        let speed = rng.random_range(traffic.speed_range.0..=traffic.speed_range.1);
        let load = rng.random_range(traffic.load_range.0..=traffic.load_range.1);
        let reverse = rng.random_bool(0.5);
        let bounce = (0..BOUNCE_TONES)
            .map(|_| {
                (
                    rng.random_range(traffic.bounce_band.0..=traffic.bounce_band.1),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        Self {
            entry,
            speed,
            load,
            reverse,
            bounce,
        }
    }

    fn exit(&self, span: f64) -> f64 {
        self.entry + span / self.speed
    }

    /// Position on the deck and total wheel load at time `t`, if on the deck.
    fn state(&self, t: f64, span: f64, dynamic_fraction: f64) -> Option<(f64, f64)> {
        if t < self.entry || t > self.exit(span) {
            return None;
        }
        let s = (t - self.entry) * self.speed;
        let x = if self.reverse { span - s } else { s };
        let norm = (BOUNCE_TONES as f64).sqrt();
        let dynamic: f64 = self.bounce.iter().map(|(f, p)| (2.0 * PI * f * (t - self.entry) + p).sin()).sum::<f64>() / norm;
        Some((x, self.load * (1.0 + dynamic_fraction * dynamic)))
    }
}

/// Exact discretization of `q'' + 2 z w q' + w^2 q = u(t)` for `u` linear over one step.
struct OscillatorStep {
    phi: nalgebra::Matrix2<f64>,
    gamma0: nalgebra::Vector2<f64>,
    gamma1: nalgebra::Vector2<f64>,
    omega: f64,
    zeta: f64,
}

impl OscillatorStep {
    fn new(freq_hz: f64, zeta: f64, dt: f64) -> Self {
        let omega = 2.0 * PI * freq_hz;
        // augmented state [q, q', u, u']
        #[rustfmt::skip]
        let a = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            -omega * omega, -2.0 * zeta * omega, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0,
        ) * dt;
        let e = a.exp();
        Self {
            phi: e.fixed_view::<2, 2>(0, 0).into_owned(),
            gamma0: e.fixed_view::<2, 1>(0, 2).into_owned(),
            gamma1: e.fixed_view::<2, 1>(0, 3).into_owned(),
            omega,
            zeta,
        }
    }
}

/// Synthesized window together with the vehicles that produced it.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub window: AccelerationWindow,
    pub vehicles: Vec<VehiclePass>,
}

/// Bridge acceleration at a sensor under random traffic.
pub fn synthesize(bridge: &BridgeModel, traffic: &TrafficSpec, location: &str, start_time: f64, duration: f64, rate: f64) -> Result<AccelerationWindow> {
    Ok(synthesize_with_log(bridge, traffic, location, start_time, duration, rate)?.window)
}

/// As [`synthesize`], also returning the sampled vehicle passes.
pub fn synthesize_with_log(
    bridge: &BridgeModel,
    traffic: &TrafficSpec,
    location: &str,
    start_time: f64,
    duration: f64,
    rate: f64,
) -> Result<SynthOutput> {
    bridge.validate()?;
    traffic.validate()?;
    if !(duration > 0.0 && rate > 0.0) {
        return Err(Error::Validation("duration and sample rate must be positive".into()));
    }
    let ordinates = bridge.ordinates(location)?;
    let mut rng = ChaCha8Rng::seed_from_u64(traffic.seed);

    let mut vehicles = Vec::new();
    if traffic.arrival_rate > 0.0 {
        let gaps = Exp::new(traffic.arrival_rate / 3600.0).map_err(|e| Error::Validation(e.to_string()))?;
        let mut t = gaps.sample(&mut rng);
        while t < duration {
            vehicles.push(VehiclePass::sample(&mut rng, t, traffic));
            t += gaps.sample(&mut rng);
        }
    }

    let n = (duration * rate).round() as usize;
    let dt = 1.0 / rate;
    let modes: Vec<OscillatorStep> = bridge
        .frequencies
        .iter()
        .zip(&bridge.damping)
        .map(|(&f, &z)| OscillatorStep::new(f, z, dt))
        .collect();
    let nm = modes.len();

    let modal_forces = |t: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|x| *x = 0.0);
        for v in &vehicles {
            if let Some((x, p)) = v.state(t, bridge.span, traffic.dynamic_fraction) {
                for (m, o) in out.iter_mut().enumerate() {
                    *o += p * bridge.shape(m, x) / bridge.modal_mass;
                }
            }
        }
    };

    let mut q = vec![nalgebra::Vector2::<f64>::zeros(); nm];
    let mut u0 = vec![0.0; nm];
    let mut u1 = vec![0.0; nm];
    modal_forces(0.0, &mut u0);
    let noise = Normal::new(0.0, traffic.noise_rms.max(0.0)).map_err(|e| Error::Validation(e.to_string()))?;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let acc: f64 = (0..nm)
            .map(|m| {
                let s = &modes[m];
                let qdd = u0[m] - 2.0 * s.zeta * s.omega * q[m][1] - s.omega * s.omega * q[m][0];
                ordinates[m] * qdd
            })
            .sum();
        let eps = if traffic.noise_rms > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        samples.push(acc + eps);
        modal_forces((i + 1) as f64 * dt, &mut u1);
        for m in 0..nm {
            let s = &modes[m];
            let slope = (u1[m] - u0[m]) / dt;
            q[m] = s.phi * q[m] + s.gamma0 * u0[m] + s.gamma1 * slope;
        }
        std::mem::swap(&mut u0, &mut u1);
    }
    Ok(SynthOutput {
        window: AccelerationWindow {
            location: location.to_string(),
            start_time,
            sample_rate: rate,
            samples,
        },
        vehicles,
    })
}
