//! `vgo simulate`: runs the circular-trajectory Monte Carlo study and writes
//! the synthetic logs next to the per-run error curves, so a `replay` of the
//! exported files reproduces the in-memory results.

use std::path::{Path, PathBuf};

use vgo_core::sim::{run_monte_carlo, synth_stream, McRun, SimConfig};

use crate::csv_io::{
    format_g17, write_gps_csv, write_truth_csv, write_vo_csv, GpsRecord, TruthRecord, VoRecord,
};
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct SimulateSettings {
    pub cfg: SimConfig,
    /// Settling threshold on the error angle, radians.
    pub threshold: f64,
    pub out_dir: PathBuf,
}

/// Files written by a simulate run.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub vo: PathBuf,
    pub gps: PathBuf,
    pub truth: PathBuf,
    pub errors: PathBuf,
    pub summary: PathBuf,
    pub runs: Vec<McRun>,
}

pub fn run(settings: &SimulateSettings) -> Result<SimulateOutput, CliError> {
    let cfg = &settings.cfg;
    let (traj, rels, vels) = synth_stream(cfg);
    let runs = run_monte_carlo(cfg);

    std::fs::create_dir_all(&settings.out_dir)?;
    let vo_path = settings.out_dir.join("vo.csv");
    let gps_path = settings.out_dir.join("gps.csv");
    let truth_path = settings.out_dir.join("truth.csv");
    let errors_path = settings.out_dir.join("errors.csv");
    let summary_path = settings.out_dir.join("summary.csv");

    let vo_rows: Vec<VoRecord> = rels
        .iter()
        .enumerate()
        .map(|(k, rel)| VoRecord {
            k: k as u64,
            t: traj[k].t,
            rel: *rel,
        })
        .collect();
    write_vo_csv(&vo_path, &vo_rows)?;

    let gps_rows: Vec<GpsRecord> = vels
        .iter()
        .enumerate()
        .map(|(k, sample)| GpsRecord {
            k: k as u64,
            sample: *sample,
        })
        .collect();
    write_gps_csv(&gps_path, &gps_rows)?;

    let truth_rows: Vec<TruthRecord> = traj
        .iter()
        .enumerate()
        .map(|(k, s)| TruthRecord {
            k: k as u64,
            t: s.t,
            r: s.r,
            p: s.p,
        })
        .collect();
    write_truth_csv(&truth_path, &truth_rows)?;

    write_error_curves(&errors_path, &traj, &runs)?;
    write_summary(&summary_path, &runs, settings.threshold)?;

    Ok(SimulateOutput {
        vo: vo_path,
        gps: gps_path,
        truth: truth_path,
        errors: errors_path,
        summary: summary_path,
        runs,
    })
}

/// Wide plot-ready table: one row per epoch, one error column per run, in
/// degrees.
fn write_error_curves(
    path: &Path,
    traj: &[vgo_core::sim::TrajectorySample],
    runs: &[McRun],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::schema(e.to_string()))?;
    let mut header = vec!["k".to_string(), "t".to_string()];
    header.extend((0..runs.len()).map(|i| format!("run{i:02}")));
    w.write_record(&header).map_err(|e| CliError::schema(e.to_string()))?;
    for (k, sample) in traj.iter().enumerate() {
        let mut rec = vec![k.to_string(), format_g17(sample.t)];
        rec.extend(runs.iter().map(|r| format_g17(r.errors[k].to_degrees())));
        w.write_record(&rec).map_err(|e| CliError::schema(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, runs: &[McRun], threshold: f64) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::schema(e.to_string()))?;
    w.write_record(["run", "init_deg", "settled", "settle_step", "final_deg"])
        .map_err(|e| CliError::schema(e.to_string()))?;
    for (i, run) in runs.iter().enumerate() {
        let settle = run.settling_step(threshold);
        w.write_record(&[
            i.to_string(),
            format_g17(run.init_error.to_degrees()),
            settle.is_some().to_string(),
            settle.map(|s| s.to_string()).unwrap_or_default(),
            format_g17(run.final_error().to_degrees()),
        ])
        .map_err(|e| CliError::schema(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One-line human summary for stdout.
pub fn describe(output: &SimulateOutput, threshold: f64) -> String {
    let settled = output
        .runs
        .iter()
        .filter(|r| r.settling_step(threshold).is_some())
        .count();
    let worst = output
        .runs
        .iter()
        .filter_map(|r| r.settling_step(threshold))
        .max();
    format!(
        "{}/{} runs settled below {:.4} deg{}; wrote {}",
        settled,
        output.runs.len(),
        threshold.to_degrees(),
        match worst {
            Some(w) if settled == output.runs.len() => format!(" (worst settling epoch {w})"),
            _ => String::new(),
        },
        output.errors.parent().unwrap_or(Path::new(".")).display()
    )
}
