use std::collections::BTreeMap;
use std::f64::consts::PI;

use peh_core::excitation::{AccelerationWindow, SensorLocation};
use peh_core::optimizer::PsoConfig;
use peh_core::pipeline::plots::bubble_radius;
use peh_core::pipeline::{emit_plots, run_campaign, Artifacts, CampaignConfig, CampaignReport, WindowSource};
use peh_core::response::{frf, linear_grid};

fn small() -> CampaignConfig {
    let mut cfg = CampaignConfig::default();
    cfg.locations.retain(|l| l.id != "quarter");
    cfg.windows.count = 4;
    cfg.windows.duration = 300.0;
    cfg.windows.sample_rate = 20.0;
    cfg.traffic.rates = vec![30.0, 5.0, 60.0, 15.0];
    cfg.pso = PsoConfig {
        swarm: 8,
        iterations: 8,
        ..PsoConfig::default()
    };
    cfg
}

fn read_csv(path: &std::path::Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn plotted(report: &CampaignReport) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Artifacts::open(dir.path()).unwrap();
    emit_plots(report, &mut out).unwrap();
    out.finish().unwrap();
    dir
}

#[test]
fn campaign_accounts_for_every_window_and_marks_peaks() {
    let cfg = small();
    let report = run_campaign(&cfg).unwrap();
    assert_eq!(report.locations.len(), 2);
    for loc in &report.locations {
        assert_eq!(loc.windows.len(), 4);
        let mut seen: Vec<&String> = loc.optima.iter().map(|o| &o.window_id).chain(loc.failures.iter().map(|f| &f.window_id)).collect();
        seen.sort();
        let mut expected: Vec<&String> = loc.windows.iter().collect();
        expected.sort();
        assert_eq!(seen, expected, "{}", loc.id);
        let rows: Vec<&String> = loc.traffic.as_ref().unwrap().rows.iter().map(|r| &r.window_id).collect();
        assert_eq!(rows.len(), 4);
        assert!(loc.windows.iter().all(|w| rows.iter().filter(|r| **r == w).count() == 1));
        let best = loc.best_energy().unwrap();
        assert!(loc.candidates.iter().all(|c| c.total_energy.unwrap() <= best));
    }

    let dir = plotted(&report);
    for loc in &report.locations {
        let rows = read_csv(&dir.path().join(format!("plots/frf_{}.csv", loc.id)));
        for (i, c) in loc.candidates.iter().enumerate() {
            let mine: Vec<_> = rows.iter().filter(|r| r["candidate"] == i.to_string()).collect();
            let marked: Vec<f64> = mine.iter().filter(|r| r["peak"] == "1").map(|r| r["frequency_hz"].parse().unwrap()).collect();
            assert_eq!(marked.len(), 1);
            let step: f64 = mine[1]["frequency_hz"].parse::<f64>().unwrap() - mine[0]["frequency_hz"].parse::<f64>().unwrap();
            let top: f64 = mine.last().unwrap()["frequency_hz"].parse().unwrap();
            let reduced = report.settings.analyze(&c.shape).unwrap();
            let dense = frf(&reduced, &linear_grid(0.0, top, (top / 0.01) as usize + 1));
            let (f_true, _) = dense.peak().unwrap();
            assert!((marked[0] - f_true).abs() <= step + 1e-12, "{} vs {f_true}", marked[0]);
        }
    }

    let rows = read_csv(&dir.path().join("plots/energy_locations.csv"));
    let energies: Vec<f64> = rows.iter().map(|r| r["energy_j"].parse().unwrap()).collect();
    let areas: Vec<f64> = rows.iter().map(|r| r["area_px2"].parse().unwrap()).collect();
    let e_max = energies.iter().cloned().fold(0.0, f64::max);
    let a_max = areas.iter().cloned().fold(0.0, f64::max);
    for (e, a) in energies.iter().zip(&areas) {
        assert!((a / a_max - e / e_max).abs() <= 0.01 * (e / e_max), "{a} {e}");
        assert!((PI * bubble_radius(*e, e_max).powi(2) - a).abs() <= 1e-6 * a_max);
    }
}

#[test]
fn missing_candidates_draw_placeholders() {
    let cfg = small();
    let mut report = run_campaign(&cfg).unwrap();
    for loc in &mut report.locations {
        loc.candidates.clear();
        loc.best = None;
    }
    report.energy_table.clear();
    let dir = plotted(&report);
    let svg = std::fs::read_to_string(dir.path().join("plots/frf_midspan.svg")).unwrap();
    assert!(svg.contains("no candidates"));
    let svg = std::fs::read_to_string(dir.path().join("plots/energy_locations.svg")).unwrap();
    assert!(svg.contains("no candidates"));
}

#[test]
fn identical_windows_give_one_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tone.csv");
    let rate = 20.0;
    let samples: Vec<f64> = (0..4 * 600).map(|i| 0.05 * (2.0 * PI * 4.0 * i as f64 / rate).sin()).collect();
    // period 0.25 s divides the 30 s window, so every window is the same
    AccelerationWindow::new("lab", 0.0, rate, samples).unwrap().write_csv(&path).unwrap();
    let mut cfg = small();
    cfg.locations = vec![SensorLocation {
        id: "lab".into(),
        position: 30.0,
        ordinates: None,
    }];
    cfg.windows.duration = 30.0;
    cfg.windows.count = 4;
    cfg.windows.source = WindowSource::Csv {
        paths: BTreeMap::from([("lab".to_string(), path)]),
    };
    let report = run_campaign(&cfg).unwrap();
    let loc = report.location("lab").unwrap();
    assert_eq!(loc.optima.len(), 4);
    assert_eq!(loc.candidates.len(), 1);
    assert_eq!(loc.best, Some(0));
}

#[test]
fn empty_location_list_is_rejected_up_front() {
    let mut cfg = small();
    cfg.locations.clear();
    let err = run_campaign(&cfg).unwrap_err();
    assert!(err.is_input(), "{err}");
}

#[test]
fn same_config_same_report() {
    let cfg = small();
    let a = run_campaign(&cfg).unwrap().to_json().unwrap();
    let b = run_campaign(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn partial_documents_take_defaults() {
    let text = r#"{
        "locations": [{"id": "a", "position": 20.0}],
        "bridge": {"span": 50.0},
        "traffic": {"rates": [5], "template": {"noise_rms": 0.01}}
    }"#;
    let cfg: CampaignConfig = serde_json::from_str(text).unwrap();
    assert_eq!(cfg.bridge.span, 50.0);
    assert_eq!(cfg.bridge.frequencies, vec![2.01, 3.51]);
    assert_eq!(cfg.traffic.template.noise_rms, 0.01);
    assert_eq!(cfg.windows.count, 24);
    cfg.validate().unwrap();
}
