//! Campaign orchestration: windows per location, per-window optima,
//! clustering into candidates, evaluation over the full record, reports.

mod artifacts;
pub mod plots;
mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use artifacts::{file_hash, Artifacts, Manifest};
pub use plots::emit_plots;
pub use stages::{load_windows, run_cluster_stage, run_evaluate_stage, run_optimize_stage, run_synth_stage, write_campaign};

use crate::cluster::{select_candidates, ClusterConfig, ClusteringReport, DesignCandidate};
use crate::error::{Error, Result};
use crate::excitation::{
    classify_traffic, count_vehicles, hourly_count, ingest_csv, synthesize, AccelerationWindow, BridgeModel, SensorLocation, TrafficClass, TrafficSpec,
};
use crate::optimizer::{optimize_all, ModelSettings, OptResult, PsoConfig, WindowFailure};
use crate::response::{load_energy, simulate};

/// Note attached to every report about the evaluation record.
pub const RECORD_NOTE: &str = "candidate energies are evaluated on the back-to-back concatenation of the optimization windows";

/// Where the acceleration windows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowSource {
    Synthetic,
    /// One CSV record per location id.
    Csv { paths: BTreeMap<String, PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowPlan {
    pub count: usize,
    /// [s]
    pub duration: f64,
    /// Sampling rate of synthetic windows [Hz].
    pub sample_rate: f64,
    pub source: WindowSource,
}

impl Default for WindowPlan {
    fn default() -> Self {
        Self {
            count: 24,
            duration: 3600.0,
            sample_rate: 50.0,
            source: WindowSource::Synthetic,
        }
    }
}

/// Vehicle arrival rates per window; the list repeats if shorter than the
/// window count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficPlan {
    /// [vehicles/hour]
    pub rates: Vec<f64>,
    /// Vehicle and noise parameters shared by all windows.
    pub template: TrafficSpec,
    pub seed: u64,
}

impl Default for TrafficPlan {
    fn default() -> Self {
        Self {
            // quiet night, morning and evening peaks
            rates: vec![
                3.0, 2.0, 2.0, 2.0, 4.0, 8.0, 18.0, 28.0, 26.0, 17.0, 14.0, 15.0, 16.0, 15.0, 14.0, 16.0, 22.0, 29.0, 25.0, 16.0, 11.0, 8.0, 6.0, 4.0,
            ],
            template: TrafficSpec::default(),
            seed: 0,
        }
    }
}

impl TrafficPlan {
    /// Traffic of window `index`; every location sees the same vehicles.
    pub fn window(&self, index: usize) -> TrafficSpec {
        let mut spec = self.template.clone();
        spec.arrival_rate = if self.rates.is_empty() { spec.arrival_rate } else { self.rates[index % self.rates.len()] };
        spec.seed = mix_seed(self.seed, index as u64);
        spec
    }
}

/// SplitMix64 step, used to derive independent seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub locations: Vec<SensorLocation>,
    pub windows: WindowPlan,
    /// Deck model; its sensor list is replaced by `locations`.
    pub bridge: BridgeModel,
    pub traffic: TrafficPlan,
    pub pso: PsoConfig,
    pub clustering: ClusterConfig,
    pub model: ModelSettings,
    /// Re-score every per-window optimum in the time domain.
    pub verify_optima: bool,
    /// Also write the acceleration records of a campaign run.
    pub write_windows: bool,
    pub output: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let bridge = BridgeModel::default();
        Self {
            locations: bridge.sensors.clone(),
            windows: WindowPlan::default(),
            bridge,
            traffic: TrafficPlan::default(),
            pso: PsoConfig::default(),
            clustering: ClusterConfig::default(),
            model: ModelSettings::default(),
            verify_optima: true,
            write_windows: false,
            output: None,
        }
    }
}

impl CampaignConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.as_ref().display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Replaces every seed in the configuration.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.traffic.seed = seed;
        self.pso.seed = seed;
        self
    }

    /// Deck model with the campaign's sensors.
    pub fn bridge_model(&self) -> BridgeModel {
        let mut bridge = self.bridge.clone();
        bridge.sensors = self.locations.clone();
        bridge
    }

    /// Location ids in processing order.
    pub fn location_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.locations.iter().map(|l| l.id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn validate(&self) -> Result<()> {
        if self.locations.is_empty() {
            return Err(Error::Validation("campaign needs at least one location".into()));
        }
        let mut ids = self.location_ids();
        ids.dedup();
        if ids.len() != self.locations.len() {
            return Err(Error::Validation("location ids must be unique".into()));
        }
        if ids.iter().any(|id| id.is_empty() || id.contains(['/', '\\'])) {
            return Err(Error::Validation("location ids must be non-empty file-safe names".into()));
        }
        if self.windows.count == 0 {
            return Err(Error::Validation("window count must be positive".into()));
        }
        if !(self.windows.duration > 0.0 && self.windows.duration.is_finite()) {
            return Err(Error::Validation("window duration must be positive".into()));
        }
        match &self.windows.source {
            WindowSource::Synthetic => {
                if !(self.windows.sample_rate > 0.0) {
                    return Err(Error::Validation("sample rate must be positive".into()));
                }
                self.bridge_model().validate()?;
                self.traffic.template.validate()?;
                if self.traffic.rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                    return Err(Error::Validation("arrival rates must be non-negative".into()));
                }
            }
            WindowSource::Csv { paths } => {
                for id in &ids {
                    let path = paths.get(id).ok_or_else(|| Error::Validation(format!("no record file for location {id}")))?;
                    if !path.is_file() {
                        return Err(Error::Validation(format!("record file {} does not exist", path.display())));
                    }
                }
            }
        }
        self.pso.validate()?;
        self.model.validate()?;
        Ok(())
    }
}

/// Windows of one location according to the plan.
pub fn location_windows(config: &CampaignConfig, location: &str) -> Result<Vec<AccelerationWindow>> {
    let plan = &config.windows;
    match &plan.source {
        WindowSource::Synthetic => {
            let bridge = config.bridge_model();
            (0..plan.count)
                .into_par_iter()
                .map(|i| synthesize(&bridge, &config.traffic.window(i), location, i as f64 * plan.duration, plan.duration, plan.sample_rate))
                .collect()
        }
        WindowSource::Csv { paths } => {
            let path = paths.get(location).ok_or_else(|| Error::Validation(format!("no record file for location {location}")))?;
            let mut ingested = ingest_csv(path, location, plan.duration)?;
            if ingested.windows.is_empty() {
                return Err(Error::Validation(format!("{} holds no complete window", path.display())));
            }
            if ingested.windows.len() < plan.count {
                log::warn!("{location}: {} of {} windows available", ingested.windows.len(), plan.count);
            }
            ingested.windows.truncate(plan.count);
            Ok(ingested.windows)
        }
    }
}

/// Energies of each candidate over a record made of consecutive windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEnergy {
    /// [J]
    pub total: f64,
    /// Share of each window [J].
    pub per_window: Vec<f64>,
}

/// Simulates a candidate over the concatenated windows.
pub fn record_energy(shape: &crate::geometry::ShapeParams, windows: &[AccelerationWindow], settings: &ModelSettings) -> Result<RecordEnergy> {
    let record = AccelerationWindow::concatenate(windows).ok_or_else(|| Error::Argument("no windows to evaluate".into()))?;
    let reduced = settings.analyze(shape)?;
    let sim = simulate(&reduced, &record, settings.tolerances)?;
    let dt = 1.0 / record.sample_rate;
    let r = settings.load_resistance;
    let mut per_window = Vec::with_capacity(windows.len());
    let mut start = 0;
    for w in windows {
        // window k owns samples [start, start + len]; the shared end point
        // closes the interval so the shares add up to the total
        let end = (start + w.len()).min(sim.voltage.len() - 1);
        per_window.push(load_energy(&sim.voltage[start..=end], dt, r));
        start = end;
    }
    Ok(RecordEnergy {
        total: sim.energy,
        per_window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficRow {
    pub window_id: String,
    pub start_time: f64,
    pub vehicles: usize,
    pub per_hour: f64,
    pub class: TrafficClass,
    /// Energy of the location's best device in this window [J].
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficReport {
    pub rows: Vec<TrafficRow>,
    /// Rank correlation between vehicle count and energy.
    pub spearman: Option<f64>,
}

impl TrafficReport {
    /// Mean energy per traffic class present.
    pub fn class_means(&self) -> BTreeMap<TrafficClass, f64> {
        let mut acc: BTreeMap<TrafficClass, (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = acc.entry(r.class).or_default();
            e.0 += r.energy;
            e.1 += 1;
        }
        acc.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect()
    }
}

/// Vehicle counts, traffic classes and energies per window.
pub fn traffic_report(windows: &[AccelerationWindow], energies: &[f64]) -> Result<TrafficReport> {
    if windows.len() != energies.len() {
        return Err(Error::Argument("one energy per window required".into()));
    }
    let rows: Vec<TrafficRow> = windows
        .iter()
        .zip(energies)
        .map(|(w, &energy)| {
            let vehicles = count_vehicles(w);
            let per_hour = hourly_count(vehicles, w);
            TrafficRow {
                window_id: w.id(),
                start_time: w.start_time,
                vehicles,
                per_hour,
                class: classify_traffic(per_hour),
                energy,
            }
        })
        .collect();
    let counts: Vec<f64> = rows.iter().map(|r| r.vehicles as f64).collect();
    let spearman = spearman(&counts, energies);
    Ok(TrafficReport { rows, spearman })
}

/// Average ranks, ties sharing the mean of their positions (1-based).
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` for fewer than 3 pairs or a constant
/// series.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum LocationStatus {
    Ok,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationReport {
    pub id: String,
    /// Distance from the left support [m].
    pub position: f64,
    pub status: LocationStatus,
    pub windows: Vec<String>,
    pub optima: Vec<OptResult>,
    pub failures: Vec<WindowFailure>,
    pub clustering: Option<ClusteringReport>,
    pub candidates: Vec<DesignCandidate>,
    /// Index into `candidates`.
    pub best: Option<usize>,
    pub traffic: Option<TrafficReport>,
}

impl LocationReport {
    fn new(id: &str, position: f64) -> Self {
        Self {
            id: id.to_string(),
            position,
            status: LocationStatus::Ok,
            windows: Vec::new(),
            optima: Vec::new(),
            failures: Vec::new(),
            clustering: None,
            candidates: Vec::new(),
            best: None,
            traffic: None,
        }
    }

    pub fn best_candidate(&self) -> Option<&DesignCandidate> {
        self.best.map(|b| &self.candidates[b])
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.best_candidate().and_then(|c| c.total_energy)
    }
}

/// Candidates of all locations with similar fundamental frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateType {
    pub id: usize,
    /// Fundamental frequency of the first member [Hz].
    pub fundamental_hz: f64,
    /// `(location, candidate index)` pairs.
    pub members: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEnergy {
    pub location: String,
    pub position: f64,
    /// Best candidate energy over the record [J].
    pub energy: f64,
    pub fundamental_hz: f64,
    pub candidate_type: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    /// Sorted by location id.
    pub locations: Vec<LocationReport>,
    /// Locations with a best candidate, sorted by id.
    pub energy_table: Vec<LocationEnergy>,
    /// Location ids by descending best energy.
    pub ranking: Vec<String>,
    pub candidate_types: Vec<CandidateType>,
    pub settings: ModelSettings,
    pub notes: Vec<String>,
}

impl CampaignReport {
    pub fn location(&self, id: &str) -> Option<&LocationReport> {
        self.locations.iter().find(|l| l.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Relative frequency band within which candidates share a type.
const TYPE_TOLERANCE: f64 = 0.10;

fn candidate_types(locations: &[LocationReport]) -> Vec<CandidateType> {
    let mut all: Vec<(f64, String, usize)> = locations
        .iter()
        .flat_map(|l| l.candidates.iter().enumerate().map(move |(i, c)| (c.fundamental_hz, l.id.clone(), i)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut types: Vec<CandidateType> = Vec::new();
    for (f, loc, i) in all {
        match types.last_mut() {
            Some(t) if f <= t.fundamental_hz * (1.0 + TYPE_TOLERANCE) => t.members.push((loc, i)),
            _ => types.push(CandidateType {
                id: types.len(),
                fundamental_hz: f,
                members: vec![(loc, i)],
            }),
        }
    }
    types
}

/// Optimizes, clusters and evaluates one location.
pub fn run_location(config: &CampaignConfig, location: &SensorLocation, windows: &[AccelerationWindow]) -> LocationReport {
    let mut report = LocationReport::new(&location.id, location.position);
    report.windows = windows.iter().map(AccelerationWindow::id).collect();
    if let Err(e) = process_location(config, windows, &mut report) {
        log::error!("location {} failed: {e}", location.id);
        report.status = LocationStatus::Failed { error: e.to_string() };
    }
    report
}

fn process_location(config: &CampaignConfig, windows: &[AccelerationWindow], report: &mut LocationReport) -> Result<()> {
    let batch = optimize_all(windows, &config.pso, &config.model, config.verify_optima)?;
    report.optima = batch.results;
    report.failures = batch.failures;
    if report.optima.is_empty() {
        return Err(Error::Validation("no window produced an optimum".into()));
    }
    let (candidates, clustering) = select_candidates(&report.optima, &config.clustering, &config.model)?;
    report.clustering = Some(clustering);
    report.candidates = evaluate_candidates(candidates, windows, &config.model)?;
    report.best = best_index(&report.candidates);
    let best = report.best_candidate().expect("candidates are non-empty");
    report.traffic = Some(traffic_report(windows, &best.window_energies)?);
    Ok(())
}

/// Fills record energies of each candidate.
pub fn evaluate_candidates(candidates: Vec<DesignCandidate>, windows: &[AccelerationWindow], settings: &ModelSettings) -> Result<Vec<DesignCandidate>> {
    let mut ordered: Vec<&AccelerationWindow> = windows.iter().collect();
    ordered.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));
    let ordered: Vec<AccelerationWindow> = ordered.into_iter().cloned().collect();
    candidates
        .into_par_iter()
        .map(|mut c| {
            let e = record_energy(&c.shape, &ordered, settings)?;
            c.total_energy = Some(e.total);
            c.window_energies = e.per_window;
            Ok(c)
        })
        .collect()
}

/// Candidate with the largest record energy; ties go to the lower index.
pub fn best_index(candidates: &[DesignCandidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        let e = c.total_energy.unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|b| e > candidates[b].total_energy.unwrap_or(f64::NEG_INFINITY)) {
            best = Some(i);
        }
    }
    best
}

/// Runs every stage for every location.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    config.validate()?;
    let ids = config.location_ids();
    let locations: Vec<LocationReport> = ids
        .par_iter()
        .map(|id| {
            let loc = config.locations.iter().find(|l| &l.id == id).expect("id from config");
            match location_windows(config, id) {
                Ok(w) => run_location(config, loc, &w),
                Err(e) => {
                    let mut r = LocationReport::new(id, loc.position);
                    r.status = LocationStatus::Failed { error: e.to_string() };
                    r
                }
            }
        })
        .collect();
    Ok(assemble_report(locations, config))
}

/// Global tables from per-location results.
pub fn assemble_report(mut locations: Vec<LocationReport>, config: &CampaignConfig) -> CampaignReport {
    locations.sort_by(|a, b| a.id.cmp(&b.id));
    let types = candidate_types(&locations);
    let type_of = |loc: &str, idx: usize| types.iter().find(|t| t.members.iter().any(|(l, i)| l == loc && *i == idx)).map_or(0, |t| t.id);
    let energy_table: Vec<LocationEnergy> = locations
        .iter()
        .filter_map(|l| {
            let b = l.best?;
            let c = &l.candidates[b];
            Some(LocationEnergy {
                location: l.id.clone(),
                position: l.position,
                energy: c.total_energy?,
                fundamental_hz: c.fundamental_hz,
                candidate_type: type_of(&l.id, b),
            })
        })
        .collect();
    let mut ranked: Vec<&LocationEnergy> = energy_table.iter().collect();
    ranked.sort_by(|a, b| b.energy.total_cmp(&a.energy).then_with(|| a.location.cmp(&b.location)));
    let ranking = ranked.iter().map(|e| e.location.clone()).collect();
    CampaignReport {
        locations,
        energy_table,
        ranking,
        candidate_types: types,
        settings: config.model.clone(),
        notes: vec![RECORD_NOTE.to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[3.0, 2.0, 1.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn empty_locations_rejected() {
        let cfg = CampaignConfig {
            locations: Vec::new(),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Validation(_))));
        assert!(run_campaign(&cfg).is_err());
    }

    #[test]
    fn traffic_windows_share_vehicles_across_locations() {
        let plan = TrafficPlan::default();
        assert_eq!(plan.window(3), plan.window(3));
        assert_ne!(plan.window(3).seed, plan.window(4).seed);
        assert_eq!(plan.window(24).arrival_rate, plan.rates[0]);
    }

    #[test]
    fn default_config_round_trips() {
        let cfg = CampaignConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: CampaignConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let partial: CampaignConfig = serde_json::from_str(r#"{"windows": {"count": 3}}"#).unwrap();
        assert_eq!(partial.windows.count, 3);
        assert_eq!(partial.windows.duration, 3600.0);
    }
}
