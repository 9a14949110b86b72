//! `vgo analyze`: persistency-of-excitation statistics and the
//! convergence-rate bound for a GPS log.

use std::path::PathBuf;

use vgo_core::analysis::{convergence_rate, optimal_gain, pe_stats, AnalysisError, RateBound};
use vgo_core::measurement::{displacement_from_velocity, normalize_direction, VelocityMode};
use vgo_core::so3::UnitDirection;

use crate::csv_io::read_gps_csv;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct AnalyzeSettings {
    pub gps: PathBuf,
    /// Window length in samples (the horizon parameter T is `window - 1`).
    pub window: usize,
    /// When set, the report includes the rate bound for this gain and the
    /// rate-optimal gain; beta = 0 is then a hard error (exit code 3).
    pub gain: Option<f64>,
    pub velocity_mode: VelocityMode,
    pub min_norm: f64,
}

#[derive(Debug, Clone)]
pub struct AnalyzeReport {
    pub samples: usize,
    pub directions: usize,
    pub window: usize,
    pub beta: f64,
    pub pe_violated: bool,
    pub gain: Option<f64>,
    pub rate: Option<RateBound>,
    pub optimal_gain: Option<f64>,
}

pub fn run(settings: &AnalyzeSettings) -> Result<AnalyzeReport, CliError> {
    if settings.window < 2 {
        return Err(CliError::schema("--window must be at least 2 samples"));
    }
    let gps = read_gps_csv(&settings.gps)?;

    // one direction per consecutive-epoch pair of samples
    let mut dirs: Vec<UnitDirection> = Vec::with_capacity(gps.len());
    for pair in gps.windows(2) {
        if pair[1].k != pair[0].k + 1 {
            continue;
        }
        let displacement =
            displacement_from_velocity(&pair[0].sample, &pair[1].sample, settings.velocity_mode)
                .map_err(|e| CliError::schema(format!("epoch {}: {e}", pair[0].k)))?;
        if let Some(dir) = normalize_direction(&displacement, settings.min_norm) {
            dirs.push(dir);
        }
    }

    let stats = pe_stats(&dirs, settings.window - 1).map_err(|e| match e {
        AnalysisError::SequenceTooShort { len, window } => CliError::schema(format!(
            "window of {window} samples exceeds the {len} usable directions in the log"
        )),
        other => CliError::domain(other.to_string()),
    })?;

    let pe_violated = stats.beta <= 0.0;
    let (rate, best) = match settings.gain {
        None => (None, None),
        Some(l) => {
            if !(l > 0.0 && l < 2.0) {
                return Err(CliError::schema(format!(
                    "--gain must lie in (0, 2), got {l}"
                )));
            }
            if pe_violated {
                return Err(CliError::domain(
                    "PE violated (beta = 0): no convergence rate exists for this log",
                ));
            }
            let rate = convergence_rate(l, &stats).map_err(|e| CliError::domain(e.to_string()))?;
            let best = optimal_gain(&stats).map_err(|e| CliError::domain(e.to_string()))?;
            (Some(rate), Some(best))
        }
    };

    Ok(AnalyzeReport {
        samples: gps.len(),
        directions: dirs.len(),
        window: settings.window,
        beta: stats.beta,
        pe_violated,
        gain: settings.gain,
        rate,
        optimal_gain: best,
    })
}

/// The stdout table.
pub fn render(report: &AnalyzeReport) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(&format!("{k:<18} {v}\n"));
    };
    line("gps samples", report.samples.to_string());
    line("directions", report.directions.to_string());
    line(
        "window",
        format!("{} samples (T = {})", report.window, report.window - 1),
    );
    line("beta", format!("{:.6}", report.beta));
    if report.pe_violated {
        line(
            "PE violated",
            "direction constant over some window (straight-line motion)".to_string(),
        );
    }
    if let (Some(gain), Some(rate)) = (report.gain, &report.rate) {
        line("gain", format!("{gain:.6}"));
        line("gamma", format!("{:.6}", rate.gamma));
        line("alpha_bar", format!("{:.6}", rate.alpha_bar));
        line("alpha", format!("{:.8}", rate.alpha));
        if let Some(best) = report.optimal_gain {
            line("optimal gain", format!("{best:.6}"));
        }
    }
    out
}
