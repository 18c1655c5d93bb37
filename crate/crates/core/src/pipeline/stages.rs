//! Stage runners that read and write artifacts in an output directory, so
//! that stages can run one at a time.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{csv_bytes, Artifacts};
use super::{
    assemble_report, best_index, evaluate_candidates, location_windows, traffic_report, CampaignConfig, CampaignReport, LocationReport, LocationStatus,
};
use crate::cluster::{select_candidates, ClusteringReport, DesignCandidate};
use crate::error::{Error, Result};
use crate::excitation::{ingest_csv, AccelerationWindow};
use crate::optimizer::{optimize_all, BatchResult};

fn windows_file(loc: &str) -> String {
    format!("windows/{loc}.csv")
}

/// Index entry of a written record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordIndex {
    pub location: String,
    pub file: String,
    pub sample_rate: f64,
    pub window_seconds: f64,
    pub windows: Vec<String>,
}

/// Writes each location's record as one `time_s,accel_ms2` CSV.
pub fn run_synth_stage(config: &CampaignConfig, out: &mut Artifacts) -> Result<()> {
    config.validate()?;
    out.begin("synth");
    let mut index = Vec::new();
    for id in config.location_ids() {
        let windows = location_windows(config, &id)?;
        let record = AccelerationWindow::concatenate(&windows).ok_or_else(|| Error::Validation(format!("no windows for {id}")))?;
        let rel = windows_file(&id);
        let path = out.root().join(&rel);
        std::fs::create_dir_all(path.parent().expect("file under windows/"))?;
        record.write_csv(&path)?;
        out.record("synth", &rel)?;
        index.push(RecordIndex {
            location: id.clone(),
            file: rel,
            sample_rate: record.sample_rate,
            window_seconds: config.windows.duration,
            windows: windows.iter().map(AccelerationWindow::id).collect(),
        });
    }
    out.write_json("synth", "windows/index.json", &index)?;
    Ok(())
}

/// Windows of a location: the record written by the synth stage when
/// present, otherwise the configured source.
pub fn load_windows(config: &CampaignConfig, root: &Path, location: &str) -> Result<Vec<AccelerationWindow>> {
    let path = root.join(windows_file(location));
    if path.is_file() {
        let mut ingested = ingest_csv(&path, location, config.windows.duration)?;
        ingested.windows.truncate(config.windows.count);
        if ingested.windows.is_empty() {
            return Err(Error::Validation(format!("{} holds no complete window", path.display())));
        }
        Ok(ingested.windows)
    } else {
        location_windows(config, location)
    }
}

/// Locations that failed in a stage, with the reason.
pub type StageFailures = Vec<(String, String)>;

fn read_json<T: for<'de> Deserialize<'de>>(root: &Path, rel: &str) -> Result<T> {
    let path = root.join(rel);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Per-window optimization for every location.
pub fn run_optimize_stage(config: &CampaignConfig, out: &mut Artifacts) -> Result<StageFailures> {
    config.validate()?;
    out.begin("optimize");
    let root = out.root().to_path_buf();
    let ids = config.location_ids();
    let batches: Vec<Result<BatchResult>> = ids
        .par_iter()
        .map(|id| {
            let windows = load_windows(config, &root, id)?;
            optimize_all(&windows, &config.pso, &config.model, config.verify_optima)
        })
        .collect();
    let mut failures = Vec::new();
    for (id, batch) in ids.iter().zip(batches) {
        match batch {
            Ok(b) => write_optima(out, id, &b)?,
            Err(e) if e.is_input() => return Err(e),
            Err(e) => failures.push((id.clone(), e.to_string())),
        }
    }
    Ok(failures)
}

fn write_optima(out: &mut Artifacts, id: &str, batch: &BatchResult) -> Result<()> {
    out.write_json("optimize", &format!("optima/{id}.json"), batch)?;
    let rows = batch
        .results
        .iter()
        .flat_map(|r| r.trace.iter().enumerate().map(move |(i, v)| vec![r.window_id.clone(), i.to_string(), format!("{v:e}")]));
    out.write_bytes("optimize", &format!("optima/{id}_traces.csv"), &csv_bytes(&["window_id", "iteration", "best_energy_j"], rows)?)?;
    Ok(())
}

fn write_clusters(out: &mut Artifacts, id: &str, report: &ClusteringReport, candidates: &[DesignCandidate]) -> Result<()> {
    out.write_json("cluster", &format!("clusters/{id}.json"), report)?;
    let rows = report.silhouettes.iter().map(|(k, s)| vec![k.to_string(), format!("{s}")]);
    out.write_bytes("cluster", &format!("clusters/{id}_silhouette.csv"), &csv_bytes(&["k", "mean_silhouette"], rows)?)?;
    out.write_json("cluster", &format!("candidates/{id}.json"), &candidates)?;
    Ok(())
}

/// Clusters the optima written by the optimize stage.
pub fn run_cluster_stage(config: &CampaignConfig, out: &mut Artifacts) -> Result<StageFailures> {
    config.validate()?;
    out.begin("cluster");
    let mut failures = Vec::new();
    for id in config.location_ids() {
        let batch: BatchResult = read_json(out.root(), &format!("optima/{id}.json"))?;
        match select_candidates(&batch.results, &config.clustering, &config.model) {
            Ok((candidates, report)) => write_clusters(out, &id, &report, &candidates)?,
            Err(e) if e.is_input() => return Err(e),
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    Ok(failures)
}

/// Evaluates the clustered candidates over each location's record and
/// writes the campaign report.
pub fn run_evaluate_stage(config: &CampaignConfig, out: &mut Artifacts) -> Result<CampaignReport> {
    config.validate()?;
    let root = out.root().to_path_buf();
    let mut locations = Vec::new();
    for loc in &config.locations {
        let id = &loc.id;
        let batch: BatchResult = read_json(&root, &format!("optima/{id}.json"))?;
        let clustering: ClusteringReport = read_json(&root, &format!("clusters/{id}.json"))?;
        let candidates: Vec<DesignCandidate> = read_json(&root, &format!("candidates/{id}.json"))?;
        let windows = load_windows(config, &root, id)?;
        let mut report = LocationReport::new(id, loc.position);
        report.windows = windows.iter().map(AccelerationWindow::id).collect();
        report.optima = batch.results;
        report.failures = batch.failures;
        report.clustering = Some(clustering);
        let evaluated = evaluate_candidates(candidates, &windows, &config.model).and_then(|c| {
            let best = best_index(&c).ok_or_else(|| Error::Validation("no candidates".into()))?;
            let traffic = traffic_report(&windows, &c[best].window_energies)?;
            Ok((c, best, traffic))
        });
        match evaluated {
            Ok((c, best, traffic)) => {
                report.candidates = c;
                report.best = Some(best);
                report.traffic = Some(traffic);
            }
            Err(e) => report.status = LocationStatus::Failed { error: e.to_string() },
        }
        locations.push(report);
    }
    let report = assemble_report(locations, config);
    write_evaluation(out, &report)?;
    Ok(report)
}

fn write_evaluation(out: &mut Artifacts, report: &CampaignReport) -> Result<()> {
    out.begin("evaluate");
    for loc in &report.locations {
        out.write_json("evaluate", &format!("evaluation/{}.json", loc.id), &loc.candidates)?;
        if let Some(t) = &loc.traffic {
            let rows = t.rows.iter().map(|r| {
                vec![
                    r.window_id.clone(),
                    format!("{}", r.start_time),
                    r.vehicles.to_string(),
                    format!("{}", r.per_hour),
                    format!("{:?}", r.class),
                    format!("{:e}", r.energy),
                ]
            });
            out.write_bytes(
                "evaluate",
                &format!("traffic/{}.csv", loc.id),
                &csv_bytes(&["window_id", "start_time_s", "vehicles", "per_hour", "class", "energy_j"], rows)?,
            )?;
        }
    }
    out.write_json("evaluate", "report.json", report)?;
    Ok(())
}

/// Writes every artifact of a finished campaign.
pub fn write_campaign(config: &CampaignConfig, report: &CampaignReport, out: &mut Artifacts) -> Result<()> {
    out.begin("optimize");
    out.begin("cluster");
    out.write_json("config", "config.json", config)?;
    for loc in &report.locations {
        let batch = BatchResult {
            results: loc.optima.clone(),
            failures: loc.failures.clone(),
        };
        write_optima(out, &loc.id, &batch)?;
        if let Some(c) = &loc.clustering {
            let mut candidates = loc.candidates.clone();
            for cand in &mut candidates {
                cand.window_energies.clear();
                cand.total_energy = None;
            }
            write_clusters(out, &loc.id, c, &candidates)?;
        }
    }
    write_evaluation(out, report)?;
    super::plots::emit_plots(report, out)?;
    Ok(())
}
