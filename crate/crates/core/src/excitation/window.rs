use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default window length [s].
pub const DEFAULT_WINDOW_SECONDS: f64 = 3600.0;

/// Uniformly sampled base acceleration at one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelerationWindow {
    /// Sensor label.
    pub location: String,
    /// Start time of the first sample [s] from the start of the record.
    pub start_time: f64,
    /// [Hz]
    pub sample_rate: f64,
    /// [m/s^2]
    pub samples: Vec<f64>,
}

impl AccelerationWindow {
    pub fn new(location: impl Into<String>, start_time: f64, sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        let w = Self {
            location: location.into(),
            start_time,
            sample_rate,
            samples,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Validation(format!("sample rate {} must be positive", self.sample_rate)));
        }
        if let Some(i) = self.samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data {
                row: i + 1,
                msg: "non-finite acceleration".into(),
            });
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Stable identifier `<location>@<start seconds>`.
    pub fn id(&self) -> String {
        format!("{}@{}", self.location, self.start_time)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Writes the window as `time_s,accel_ms2` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "time_s,accel_ms2")?;
        let dt = 1.0 / self.sample_rate;
        for (i, a) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", self.start_time + i as f64 * dt, a)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Joins windows of the same rate back to back.
    pub fn concatenate(windows: &[AccelerationWindow]) -> Option<AccelerationWindow> {
        let first = windows.first()?;
        let samples = windows.iter().flat_map(|w| w.samples.iter().copied()).collect();
        Some(AccelerationWindow {
            location: first.location.clone(),
            start_time: first.start_time,
            sample_rate: first.sample_rate,
            samples,
        })
    }
}

/// Windows cut from an ingested record plus what was dropped.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub windows: Vec<AccelerationWindow>,
    pub sample_rate: f64,
    /// Trailing samples that did not fill a window.
    pub discarded: usize,
    pub warnings: Vec<String>,
}

/// Reads an acceleration CSV and cuts it into windows of `window_seconds`.
///
/// Two layouts are accepted: a `time_s,accel_ms2` header followed by
/// uniformly spaced rows, or a `sample_rate_hz,<rate>` metadata line followed
/// by an `accel_ms2` header and one value per row. Row numbers in errors
/// count data rows from 1.
pub fn ingest_csv(path: impl AsRef<Path>, location: &str, window_seconds: f64) -> Result<Ingested> {
    let file = std::fs::File::open(path)?;
    ingest_reader(BufReader::new(file), location, window_seconds)
}

const MAX_JITTER: f64 = 1e-6;

pub fn ingest_reader<R: BufRead>(reader: R, location: &str, window_seconds: f64) -> Result<Ingested> {
    if !(window_seconds > 0.0) {
        return Err(Error::Validation("window duration must be positive".into()));
    }
    let mut lines = reader.lines();
    let mut first = next_nonempty(&mut lines)?.ok_or_else(|| Error::Format("empty acceleration file".into()))?;
    let mut meta_rate = None;
    if first.trim_start().starts_with("sample_rate_hz") {
        let value = first
            .split(',')
            .nth(1)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("bad metadata line `{first}`")))?;
        if !(value > 0.0) {
            return Err(Error::Format(format!("sample rate {value} must be positive")));
        }
        meta_rate = Some(value);
        first = next_nonempty(&mut lines)?.ok_or_else(|| Error::Format("missing header".into()))?;
    }
    let header: Vec<String> = first.split(',').map(|s| s.trim().to_string()).collect();
    let timed = match header.as_slice() {
        [t, a] if t == "time_s" && a == "accel_ms2" => true,
        [a] if a == "accel_ms2" && meta_rate.is_some() => false,
        _ => {
            return Err(Error::Format(format!(
                "expected header `time_s,accel_ms2` (or `accel_ms2` after sample_rate_hz), got `{first}`"
            )))
        }
    };

    let mut samples = Vec::new();
    let mut times = Vec::new();
    let mut row = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let mut fields = line.split(',');
        let parse = |s: Option<&str>, what: &str| -> Result<f64> {
            let s = s.ok_or_else(|| Error::Data {
                row,
                msg: format!("missing {what}"),
            })?;
            let v: f64 = s.trim().parse().map_err(|_| Error::Data {
                row,
                msg: format!("unparsable {what} `{}`", s.trim()),
            })?;
            if v.is_nan() || v.is_infinite() {
                return Err(Error::Data {
                    row,
                    msg: format!("non-finite {what}"),
                });
            }
            Ok(v)
        };
        if timed {
            times.push(parse(fields.next(), "time")?);
        }
        samples.push(parse(fields.next(), "acceleration")?);
    }

    let rate = match meta_rate {
        Some(r) => r,
        None => sampling_rate(&times)?,
    };
    let start = times.first().copied().unwrap_or(0.0);
    let per = (window_seconds * rate).round() as usize;
    let count = if per == 0 { 0 } else { samples.len() / per };
    let mut warnings = Vec::new();
    if count == 0 {
        let msg = format!(
            "{:.1} s of data shorter than one {window_seconds} s window; no windows produced",
            samples.len() as f64 / rate
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let windows = (0..count)
        .map(|i| AccelerationWindow {
            location: location.to_string(),
            start_time: start + i as f64 * window_seconds,
            sample_rate: rate,
            samples: samples[i * per..(i + 1) * per].to_vec(),
        })
        .collect();
    Ok(Ingested {
        windows,
        sample_rate: rate,
        discarded: samples.len() - count * per,
        warnings,
    })
}

fn next_nonempty<I: Iterator<Item = std::io::Result<String>>>(lines: &mut I) -> Result<Option<String>> {
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(Some(line));
        }
    }
    Ok(None)
}

/// Sampling rate of a monotone, uniformly spaced time column.
fn sampling_rate(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Format("need at least two samples to infer the sampling rate".into()));
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Format("time column is not increasing".into()));
    }
    for (i, w) in times.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::Format(format!("time not monotone at row {}", i + 2)));
        }
        let expected = times[0] + (i + 1) as f64 * dt;
        if (w[1] - expected).abs() > MAX_JITTER {
            return Err(Error::Format(format!(
                "non-uniform sampling at row {}: jitter {:e} s exceeds {MAX_JITTER:e} s",
                i + 2,
                (w[1] - expected).abs()
            )));
        }
    }
    Ok(1.0 / dt)
}
