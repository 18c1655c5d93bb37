use serde::{Deserialize, Serialize};

use super::window::AccelerationWindow;

/// Detection threshold on |a| for a passing vehicle [m/s^2].
pub const VEHICLE_THRESHOLD: f64 = 0.2;
/// Excursions closer than this are one vehicle [s].
pub const MERGE_GAP: f64 = 2.0;

/// Threshold-crossing vehicle counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleCounter {
    pub threshold: f64,
    pub merge_gap: f64,
}

impl Default for VehicleCounter {
    fn default() -> Self {
        Self {
            threshold: VEHICLE_THRESHOLD,
            merge_gap: MERGE_GAP,
        }
    }
}

impl VehicleCounter {
    pub fn count(&self, window: &AccelerationWindow) -> usize {
        let gap = (self.merge_gap * window.sample_rate).round() as usize;
        let mut count = 0;
        let mut last_hit: Option<usize> = None;
        for (i, a) in window.samples.iter().enumerate() {
            if a.abs() > self.threshold {
                if last_hit.is_none_or(|j| i - j > gap) {
                    count += 1;
                }
                last_hit = Some(i);
            }
        }
        count
    }
}

/// Vehicles in a window with the default threshold and merge gap.
pub fn count_vehicles(window: &AccelerationWindow) -> usize {
    VehicleCounter::default().count(window)
}

/// Hourly traffic band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrafficClass {
    Low,
    Medium,
    High,
}

/// Low for `[0, 10]`, Medium for `(10, 20]`, High above 20 vehicles/hour.
pub fn classify_traffic(per_hour: f64) -> TrafficClass {
    if per_hour <= 10.0 {
        TrafficClass::Low
    } else if per_hour <= 20.0 {
        TrafficClass::Medium
    } else {
        TrafficClass::High
    }
}

/// Vehicle count of a window scaled to one hour.
pub fn hourly_count(count: usize, window: &AccelerationWindow) -> f64 {
    let d = window.duration();
    if d > 0.0 {
        count as f64 * 3600.0 / d
    } else {
        0.0
    }
}
