use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::window::AccelerationWindow;

/// One-sided amplitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// [Hz]
    pub frequencies: Vec<f64>,
    /// [m/s^2]
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    /// Bin nearest to `freq`.
    pub fn bin(&self, freq: f64) -> usize {
        if self.frequencies.len() < 2 {
            return 0;
        }
        let df = self.frequencies[1] - self.frequencies[0];
        ((freq / df).round() as usize).min(self.frequencies.len() - 1)
    }

    /// Largest amplitude within `half_width` Hz of `freq`.
    pub fn peak_near(&self, freq: f64, half_width: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .filter(|(f, _)| (**f - freq).abs() <= half_width)
            .fold(0.0, |m, (_, a)| m.max(*a))
    }

    /// Frequency of the largest amplitude above `min_freq`.
    pub fn dominant(&self, min_freq: f64) -> Option<f64> {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .filter(|(f, _)| **f >= min_freq)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(f, _)| *f)
    }
}

/// Hann-windowed one-sided amplitude spectrum. A unit-amplitude tone centred
/// on a bin reports 1.0 there.
pub fn spectrum(window: &AccelerationWindow) -> Spectrum {
    amplitude_spectrum(&window.samples, window.sample_rate)
}

pub fn amplitude_spectrum(samples: &[f64], rate: f64) -> Spectrum {
    let n = samples.len();
    if n < 2 {
        return Spectrum {
            frequencies: vec![0.0; n],
            amplitudes: vec![0.0; n],
        };
    }
    // periodic Hann
    let hann: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let gain: f64 = hann.iter().sum();
    let mut buf: Vec<Complex<f64>> = samples.iter().zip(&hann).map(|(x, w)| Complex::new(x * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let frequencies = (0..=half).map(|k| k as f64 * rate / n as f64).collect();
    let amplitudes = (0..=half)
        .map(|k| {
            let scale = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            scale * buf[k].norm() / gain
        })
        .collect();
    Spectrum { frequencies, amplitudes }
}
