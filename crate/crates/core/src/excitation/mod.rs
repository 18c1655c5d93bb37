//! Base-acceleration records: ingestion, synthesis, traffic statistics and spectra.

mod bridge;
mod spectrum;
mod traffic;
mod window;

pub use bridge::{synthesize, synthesize_with_log, BridgeModel, SensorLocation, SynthOutput, TrafficSpec, VehiclePass};
pub use spectrum::{amplitude_spectrum, spectrum, Spectrum};
pub use traffic::{classify_traffic, count_vehicles, hourly_count, TrafficClass, VehicleCounter, MERGE_GAP, VEHICLE_THRESHOLD};
pub use window::{ingest_csv, ingest_reader, AccelerationWindow, Ingested, DEFAULT_WINDOW_SECONDS};
