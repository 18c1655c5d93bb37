use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use peh_core::pipeline::{self, Artifacts, CampaignConfig, CampaignReport};
use peh_core::Error;

#[derive(Parser)]
#[command(name = "peh", version, about = "Shape optimization of bridge-mounted piezoelectric harvesters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Campaign configuration (JSON); defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate acceleration records for every location.
    Synth,
    /// Find the best shape for every window.
    Optimize,
    /// Group per-window optima into candidate designs.
    Cluster,
    /// Evaluate candidates over the full record and write the report.
    Evaluate,
    /// Run all stages and draw the figures.
    Campaign,
    /// Draw the figures of an existing report.
    Report,
}

enum Failure {
    Input(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input() {
            Failure::Input(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn stage_result(failures: Vec<(String, String)>) -> Result<(), Failure> {
    if failures.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = failures.iter().map(|(l, e)| format!("{l}: {e}")).collect();
    Err(Failure::Compute(format!("failed locations: {}", list.join("; "))))
}

fn report_failures(report: &CampaignReport) -> Result<(), Failure> {
    let failed: Vec<(String, String)> = report
        .locations
        .iter()
        .filter_map(|l| match &l.status {
            pipeline::LocationStatus::Ok => None,
            pipeline::LocationStatus::Failed { error } => Some((l.id.clone(), error.clone())),
        })
        .collect();
    stage_result(failed)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = cli.common;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Input("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Compute(e.to_string()))?;
    }
    let mut config = match &common.config {
        Some(path) => CampaignConfig::load(path)?,
        None => CampaignConfig::default(),
    };
    if let Some(seed) = common.seed {
        config = config.with_seed(seed);
    }
    let out = common.out.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut artifacts = Artifacts::open(&out)?;

    let result = match cli.command {
        Command::Synth => pipeline::run_synth_stage(&config, &mut artifacts).map_err(Failure::from),
        Command::Optimize => stage_result(pipeline::run_optimize_stage(&config, &mut artifacts)?),
        Command::Cluster => stage_result(pipeline::run_cluster_stage(&config, &mut artifacts)?),
        Command::Evaluate => {
            let report = pipeline::run_evaluate_stage(&config, &mut artifacts)?;
            print_ranking(&report);
            report_failures(&report)
        }
        Command::Campaign => {
            if config.write_windows {
                pipeline::run_synth_stage(&config, &mut artifacts)?;
            }
            let report = pipeline::run_campaign(&config)?;
            pipeline::write_campaign(&config, &report, &mut artifacts)?;
            print_ranking(&report);
            report_failures(&report)
        }
        Command::Report => {
            let path = out.join("report.json");
            let text = std::fs::read_to_string(&path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            let report: CampaignReport = serde_json::from_str(&text).map_err(|e| Failure::Input(e.to_string()))?;
            pipeline::emit_plots(&report, &mut artifacts).map_err(Failure::from)
        }
    };
    artifacts.finish()?;
    result
}

fn print_ranking(report: &CampaignReport) {
    for (rank, id) in report.ranking.iter().enumerate() {
        if let Some(e) = report.energy_table.iter().find(|e| &e.location == id) {
            println!("{:>2}. {:<16} {:.4e} J  f1 = {:.3} Hz", rank + 1, id, e.energy, e.fundamental_hz);
        }
    }
}
