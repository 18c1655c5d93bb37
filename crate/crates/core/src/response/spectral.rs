use rustfft::{num_complex::Complex as FftComplex, FftPlanner};

use super::frf::reduced_response;
use crate::modal::ReducedModel;
use crate::scalar::Float;

/// One-sided power of a record, weighted so that
/// `sum_k power_k |H(f_k)|^2 / R_l` is the load energy of the steady-state
/// response (discrete Parseval identity).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    /// Evaluation frequency per band [Hz].
    pub frequencies: Vec<f64>,
    /// [m^2 s^-3]
    pub power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn from_samples(samples: &[f64], rate: f64) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                frequencies: Vec::new(),
                power: Vec::new(),
            };
        }
        let mut buf: Vec<FftComplex<f64>> = samples.iter().map(|&x| FftComplex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let dt = 1.0 / rate;
        let scale = dt / n as f64;
        let half = n / 2;
        let mut frequencies = Vec::with_capacity(half + 1);
        let mut power = Vec::with_capacity(half + 1);
        for (k, c) in buf.iter().enumerate().take(half + 1) {
            // bins k and n - k pair up, except DC and an even-length Nyquist bin
            let pair = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            frequencies.push(k as f64 * rate / n as f64);
            power.push(pair * scale * c.norm_sqr());
        }
        Self { frequencies, power }
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Merges adjacent bins into at most `max_bands` bands, each evaluated at
    /// its power-weighted mean frequency. Bins without power are dropped.
    pub fn coarsened(&self, max_bands: usize) -> Self {
        if self.len() <= max_bands || max_bands == 0 {
            return self.without_empty();
        }
        let per = self.len().div_ceil(max_bands);
        let mut frequencies = Vec::with_capacity(max_bands);
        let mut power = Vec::with_capacity(max_bands);
        for (fs, ps) in self.frequencies.chunks(per).zip(self.power.chunks(per)) {
            let total: f64 = ps.iter().sum();
            if total > 0.0 {
                let centre = fs.iter().zip(ps).map(|(f, p)| f * p).sum::<f64>() / total;
                frequencies.push(centre);
                power.push(total);
            }
        }
        Self { frequencies, power }
    }

    fn without_empty(&self) -> Self {
        let (frequencies, power) = self
            .frequencies
            .iter()
            .zip(&self.power)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&f, &p)| (f, p))
            .unzip();
        Self { frequencies, power }
    }

    /// Steady-state load energy of a device driven by this record [J].
    pub fn energy<T: Float>(&self, reduced: &ReducedModel<T>) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let sum: f64 = self
            .frequencies
            .iter()
            .zip(&self.power)
            .map(|(&f, &p)| match reduced_response(reduced, T::lit(two_pi * f)) {
                Some(h) => p * h.norm_sqr().as_f64(),
                None => 0.0,
            })
            .sum();
        sum / reduced.load_resistance.as_f64()
    }
}

/// Frequency-domain estimate of the load energy for a record.
pub fn energy_spectral<T: Float>(reduced: &ReducedModel<T>, samples: &[f64], rate: f64) -> f64 {
    PowerSpectrum::from_samples(samples, rate).energy(reduced)
}
