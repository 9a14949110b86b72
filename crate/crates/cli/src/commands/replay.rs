//! `vgo replay`: runs the observer over logged VO/GPS streams.
//!
//! Per epoch `k` the engine applies the update stage (when a direction pair
//! can be formed), emits the output row at `t_k`, then predicts through the
//! epoch's relative rotation. GPS rows are keyed by VO epoch; epochs whose
//! velocity data is missing or whose motion is below the thresholds are
//! propagation-only. In `linear` velocity mode a pair needs the bracketing
//! samples `k` and `k+1`; in `constant` mode the sample at `k` suffices (the
//! interval endpoint falls back to the next GPS or VO timestamp).

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use vgo_core::analysis::{error_rotation, optimal_gain, window_beta, PEWindowStats};
use vgo_core::measurement::{make_frame, MeasurementFrame, VelocityMode, VelocitySample};
use vgo_core::observer::{GainSpec, ObserverState};
use vgo_core::so3::{angle_of, rotation_to_euler, Rotation, UnitDirection};

use crate::csv_io::{format_g17, read_gps_csv, read_truth_csv, read_vo_csv, rotation_to_quat, TruthRecord, VoRecord};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Start at the identity: nothing is known about the initial attitude.
    #[default]
    Identity,
    /// Start at the ground-truth attitude of the first epoch (drift studies).
    Truth,
}

impl std::str::FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(InitMode::Identity),
            "truth" => Ok(InitMode::Truth),
            other => Err(format!("unknown init mode `{other}` (identity|truth)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    #[default]
    Fixed,
    /// Re-derive the scalar gain per epoch from the PE statistics of a
    /// sliding direction window.
    Optimal,
}

impl std::str::FromStr for GainMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(GainMode::Fixed),
            "optimal" => Ok(GainMode::Optimal),
            other => Err(format!("unknown gain mode `{other}` (fixed|optimal)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplaySettings {
    pub vo: PathBuf,
    pub gps: PathBuf,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub gain: GainSpec,
    pub gain_mode: GainMode,
    /// Sliding window length (samples) for `optimal` gain mode.
    pub pe_window: usize,
    pub velocity_mode: VelocityMode,
    pub min_norm: f64,
    pub min_vo_norm: f64,
    pub projection_period: u32,
    pub init: InitMode,
}

/// One output epoch: the post-update attitude at `t_k`.
#[derive(Debug, Clone, Copy)]
pub struct EpochOutput {
    pub k: u64,
    pub t: f64,
    pub attitude: Rotation,
    /// Error angle vs. the truth file, radians.
    pub error: Option<f64>,
    /// Scalar gain applied this epoch (`optimal` mode logging).
    pub gain_used: Option<f64>,
    /// Sliding-window beta behind `gain_used`, once the window is full.
    pub beta: Option<f64>,
}

pub fn run(settings: &ReplaySettings) -> Result<Vec<EpochOutput>, CliError> {
    let vo = read_vo_csv(&settings.vo)?;
    let gps: BTreeMap<u64, VelocitySample> = read_gps_csv(&settings.gps)?
        .into_iter()
        .map(|g| (g.k, g.sample))
        .collect();
    let truth = match &settings.truth {
        Some(path) => Some(read_truth_csv(path)?),
        None => None,
    };
    if settings.gain_mode == GainMode::Optimal {
        if settings.pe_window < 2 {
            return Err(CliError::schema("--pe-window must be at least 2"));
        }
        if settings.gain.as_scalar().is_none() {
            return Err(CliError::schema(
                "--gain-mode optimal requires a scalar gain (the rate machinery is scalar-only)",
            ));
        }
    }

    let init = match settings.init {
        InitMode::Identity => Rotation::identity(),
        InitMode::Truth => {
            let truth = truth.as_ref().ok_or_else(|| {
                CliError::schema("--init truth requires --truth <file>")
            })?;
            truth
                .get(&vo[0].k)
                .ok_or_else(|| {
                    CliError::schema(format!("truth file has no row for first epoch {}", vo[0].k))
                })?
                .r
        }
    };

    let mut state =
        ObserverState::with_initial(init).with_projection_period(settings.projection_period);
    let mut window: VecDeque<UnitDirection> = VecDeque::with_capacity(settings.pe_window + 1);
    let mut rows = Vec::with_capacity(vo.len());

    for (idx, row) in vo.iter().enumerate() {
        let frame = build_frame(row, idx, &vo, &gps, settings)?;
        let mut gain_used = None;
        let mut beta_used = None;
        if let Some((dir_cam, dir_ned)) = frame.pair() {
            let gain = match settings.gain_mode {
                GainMode::Fixed => settings.gain,
                GainMode::Optimal => {
                    window.push_back(dir_ned);
                    while window.len() > settings.pe_window {
                        window.pop_front();
                    }
                    let scheduled = schedule_gain(&window, settings)?;
                    beta_used = scheduled.1;
                    scheduled.0
                }
            };
            gain_used = gain.as_scalar();
            state = state.update(&dir_cam, &dir_ned, &gain);
        }
        rows.push(EpochOutput {
            k: row.k,
            t: row.t,
            attitude: *state.attitude(),
            error: truth.as_ref().and_then(|t| t.get(&row.k)).map(
                |rec: &TruthRecord| angle_of(&error_rotation(state.attitude(), &rec.r)),
            ),
            gain_used,
            beta: beta_used,
        });
        state = state.predict(&frame.rel);
    }

    write_estimate_csv(&settings.out, &rows, truth.is_some(), settings.gain_mode)?;
    Ok(rows)
}

/// Gain for the current epoch in `optimal` mode: the rate-maximizing scalar
/// for the sliding window once it is full and excited, else the configured
/// fixed gain.
fn schedule_gain(
    window: &VecDeque<UnitDirection>,
    settings: &ReplaySettings,
) -> Result<(GainSpec, Option<f64>), CliError> {
    if window.len() < settings.pe_window {
        return Ok((settings.gain, None));
    }
    let dirs: Vec<UnitDirection> = window.iter().copied().collect();
    let beta = window_beta(&dirs);
    if beta <= 0.0 {
        // no excitation in this window: keep the configured gain
        return Ok((settings.gain, Some(0.0)));
    }
    let stats = PEWindowStats::new(settings.pe_window - 1, beta);
    let l = optimal_gain(&stats).map_err(|e| CliError::domain(e.to_string()))?;
    let gain = GainSpec::scalar(l).map_err(|e| CliError::domain(e.to_string()))?;
    Ok((gain, Some(beta)))
}

/// Assembles the epoch's measurement frame from the VO row and the GPS map.
fn build_frame(
    row: &VoRecord,
    idx: usize,
    vo: &[VoRecord],
    gps: &BTreeMap<u64, VelocitySample>,
    settings: &ReplaySettings,
) -> Result<MeasurementFrame, CliError> {
    let propagation_only = MeasurementFrame {
        rel: row.rel,
        dir_cam: None,
        dir_ned: None,
    };
    let Some(v_k) = gps.get(&row.k) else {
        return Ok(propagation_only);
    };
    let v_next = gps.get(&(row.k + 1));
    let endpoint = match settings.velocity_mode {
        VelocityMode::Linear => match v_next {
            Some(v) => *v,
            None => return Ok(propagation_only),
        },
        VelocityMode::Constant => {
            // only the endpoint time is needed; fall back to the next VO row
            let t_next = v_next
                .map(|v| v.t)
                .or_else(|| vo.get(idx + 1).map(|r| r.t));
            match t_next {
                Some(t) if t > v_k.t => VelocitySample { t, v: v_k.v },
                _ => return Ok(propagation_only),
            }
        }
    };
    make_frame(
        &row.rel,
        v_k,
        &endpoint,
        settings.velocity_mode,
        settings.min_norm,
        settings.min_vo_norm,
    )
    .map_err(|e| CliError::schema(format!("epoch {}: {e}", row.k)))
}

fn write_estimate_csv(
    path: &Path,
    rows: &[EpochOutput],
    with_error: bool,
    gain_mode: GainMode,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::schema(e.to_string()))?;
    let mut header = vec!["k", "t", "qw", "qx", "qy", "qz", "roll_deg", "pitch_deg", "yaw_deg"];
    if with_error {
        header.push("err_deg");
    }
    if gain_mode == GainMode::Optimal {
        header.push("gain");
        header.push("beta");
    }
    w.write_record(&header).map_err(|e| CliError::schema(e.to_string()))?;
    for row in rows {
        let q = rotation_to_quat(&row.attitude);
        let euler = rotation_to_euler(&row.attitude);
        let mut rec = vec![row.k.to_string(), format_g17(row.t)];
        rec.extend(q.iter().map(|x| format_g17(*x)));
        rec.push(format_g17(euler.roll.to_degrees()));
        rec.push(format_g17(euler.pitch.to_degrees()));
        rec.push(format_g17(euler.yaw.to_degrees()));
        if with_error {
            rec.push(row.error.map(|e| format_g17(e.to_degrees())).unwrap_or_default());
        }
        if gain_mode == GainMode::Optimal {
            rec.push(row.gain_used.map(format_g17).unwrap_or_default());
            rec.push(row.beta.map(format_g17).unwrap_or_default());
        }
        w.write_record(&rec).map_err(|e| CliError::schema(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
