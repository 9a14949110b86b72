use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::Matrix3;

use vgo_cli::commands::{analyze, replay, simulate};
use vgo_cli::config::ConfigMap;
use vgo_cli::error::CliError;
use vgo_core::measurement::{VelocityMode, DEFAULT_MIN_NORM, DEFAULT_MIN_VO_NORM};
use vgo_core::observer::GainSpec;
use vgo_core::sim::{NoiseSpec, SimConfig};
use vgo_core::so3::DEFAULT_PROJECTION_PERIOD;

/// Settling threshold of the convergence study: 1e-3 rad.
const DEFAULT_THRESHOLD_DEG: f64 = 1e-3 * 180.0 / PI;

#[derive(Parser)]
#[command(
    name = "vgo",
    version,
    about = "Attitude estimation on SO(3) from visual odometry and GPS velocity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the circular-trajectory Monte Carlo study and export the logs.
    Simulate(SimulateArgs),
    /// Run the observer over logged vo/gps streams.
    Replay(ReplayArgs),
    /// Report persistency-of-excitation statistics and the rate bound.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Circle radius in meters [default: 50]
    #[arg(long)]
    radius: Option<f64>,
    /// Tangential speed in m/s [default: 6.283185307179586]
    #[arg(long)]
    speed: Option<f64>,
    /// Sampling interval in seconds [default: 0.1]
    #[arg(long)]
    dt: Option<f64>,
    /// Number of epochs [default: 4000]
    #[arg(long)]
    steps: Option<usize>,
    /// Number of Monte Carlo runs [default: 20]
    #[arg(long)]
    runs: Option<usize>,
    /// Maximum initial attitude error in degrees [default: 179]
    #[arg(long = "max-init-deg")]
    max_init_deg: Option<f64>,
    /// Scalar observer gain in (0, 2) [default: 0.02, matched to the
    /// reference trajectory's direction-rotation rate]
    #[arg(long)]
    gain: Option<f64>,
    /// Master seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// VO scale in meters per VO unit [default: 1]
    #[arg(long = "scale-d")]
    scale_d: Option<f64>,
    /// Relative-rotation noise sigma in degrees [default: 0]
    #[arg(long = "rot-noise-deg")]
    rot_noise_deg: Option<f64>,
    /// Translation-direction noise sigma in degrees [default: 0]
    #[arg(long = "dir-noise-deg")]
    dir_noise_deg: Option<f64>,
    /// Settling threshold in degrees [default: 0.0573 (1e-3 rad)]
    #[arg(long = "threshold-deg")]
    threshold_deg: Option<f64>,
    /// Output directory [default: sim_out]
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Flat key=value file mirroring every flag
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// vo.csv path (k,t,qw,qx,qy,qz,tx,ty,tz)
    #[arg(long)]
    vo: Option<PathBuf>,
    /// gps.csv path (k,t,vn,ve,vd)
    #[arg(long)]
    gps: Option<PathBuf>,
    /// truth.csv path (k,t,qw,qx,qy,qz,pn,pe,pd); adds the err_deg column
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output estimate.csv path [default: estimate.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scalar observer gain in (0, 2) [default: 0.5]
    #[arg(long)]
    gain: Option<f64>,
    /// Full symmetric positive-definite gain matrix: nine comma-separated
    /// row-major entries (overrides --gain)
    #[arg(long = "gain-matrix")]
    gain_matrix: Option<String>,
    /// fixed | optimal (per-window rate-maximizing scalar gain) [default: fixed]
    #[arg(long = "gain-mode")]
    gain_mode: Option<replay::GainMode>,
    /// Sliding window length in samples for --gain-mode optimal [default: 500]
    #[arg(long = "pe-window")]
    pe_window: Option<usize>,
    /// constant | linear velocity averaging [default: linear]
    #[arg(long = "velocity-mode")]
    velocity_mode: Option<VelocityMode>,
    /// Minimum NED displacement (meters) for a usable direction [default: 0.05]
    #[arg(long = "min-norm")]
    min_norm: Option<f64>,
    /// Minimum VO translation norm (VO units) [default: 1e-4]
    #[arg(long = "min-vo-norm")]
    min_vo_norm: Option<f64>,
    /// Re-orthonormalization period in compositions [default: 256]
    #[arg(long = "projection-period")]
    projection_period: Option<u32>,
    /// identity | truth initial attitude [default: identity]
    #[arg(long)]
    init: Option<replay::InitMode>,
    /// Flat key=value file mirroring every flag
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// gps.csv path (k,t,vn,ve,vd)
    #[arg(long)]
    gps: Option<PathBuf>,
    /// PE window length in samples [default: 500]
    #[arg(long)]
    window: Option<usize>,
    /// Scalar gain for the rate bound; beta = 0 then exits with code 3
    #[arg(long)]
    gain: Option<f64>,
    /// constant | linear velocity averaging [default: linear]
    #[arg(long = "velocity-mode")]
    velocity_mode: Option<VelocityMode>,
    /// Minimum NED displacement (meters) for a usable direction [default: 0.05]
    #[arg(long = "min-norm")]
    min_norm: Option<f64>,
    /// Flat key=value file mirroring every flag
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Replay(args) => run_replay(args),
        Command::Analyze(args) => run_analyze(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigMap, CliError> {
    match path {
        Some(p) => ConfigMap::load(p),
        None => Ok(ConfigMap::empty()),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg_file = load_config(&args.config)?;
    let rot_noise_deg = cfg_file.resolve(args.rot_noise_deg, "rot-noise-deg", 0.0)?;
    let dir_noise_deg = cfg_file.resolve(args.dir_noise_deg, "dir-noise-deg", 0.0)?;
    let noise = if rot_noise_deg > 0.0 || dir_noise_deg > 0.0 {
        Some(NoiseSpec {
            rot_sigma: rot_noise_deg.to_radians(),
            dir_sigma: dir_noise_deg.to_radians(),
        })
    } else {
        None
    };
    let cfg = SimConfig {
        radius: cfg_file.resolve(args.radius, "radius", 50.0)?,
        speed: cfg_file.resolve(args.speed, "speed", 2.0 * PI)?,
        dt: cfg_file.resolve(args.dt, "dt", 0.1)?,
        steps: cfg_file.resolve(args.steps, "steps", 4000)?,
        scale_d: cfg_file.resolve(args.scale_d, "scale-d", 1.0)?,
        init_error_max: cfg_file
            .resolve(args.max_init_deg, "max-init-deg", 179.0)?
            .to_radians(),
        runs: cfg_file.resolve(args.runs, "runs", 20)?,
        seed: cfg_file.resolve(args.seed, "seed", 1)?,
        gain: cfg_file.resolve(args.gain, "gain", 0.02)?,
        noise,
    };
    validate_sim(&cfg)?;
    let settings = simulate::SimulateSettings {
        cfg,
        threshold: cfg_file
            .resolve(args.threshold_deg, "threshold-deg", DEFAULT_THRESHOLD_DEG)?
            .to_radians(),
        out_dir: cfg_file.resolve(args.out_dir, "out-dir", PathBuf::from("sim_out"))?,
    };
    let output = simulate::run(&settings)?;
    println!("{}", simulate::describe(&output, settings.threshold));
    Ok(())
}

/// Flag-level validation, so bad values exit with 2 instead of panicking in
/// the simulation core.
fn validate_sim(cfg: &SimConfig) -> Result<(), CliError> {
    let positive = [
        (cfg.radius, "--radius"),
        (cfg.speed, "--speed"),
        (cfg.dt, "--dt"),
        (cfg.scale_d, "--scale-d"),
    ];
    for (value, flag) in positive {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::schema(format!("{flag} must be positive")));
        }
    }
    if cfg.steps == 0 || cfg.runs == 0 {
        return Err(CliError::schema("--steps and --runs must be positive"));
    }
    if !(cfg.gain > 0.0 && cfg.gain < 2.0) {
        return Err(CliError::schema("--gain must lie in (0, 2)"));
    }
    if !(0.0..=179.0 + 1e-9).contains(&cfg.init_error_max.to_degrees()) {
        return Err(CliError::schema("--max-init-deg must lie in [0, 179]"));
    }
    Ok(())
}

fn parse_gain_matrix(raw: &str) -> Result<GainSpec, CliError> {
    let entries: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::schema("--gain-matrix expects nine comma-separated numbers"))?;
    if entries.len() != 9 {
        return Err(CliError::schema(format!(
            "--gain-matrix expects nine entries, got {}",
            entries.len()
        )));
    }
    let m = Matrix3::from_row_slice(&entries);
    GainSpec::matrix(m).map_err(|e| CliError::schema(format!("--gain-matrix: {e}")))
}

fn run_replay(args: ReplayArgs) -> Result<(), CliError> {
    let cfg_file = load_config(&args.config)?;
    let gain = match cfg_file.resolve_opt(args.gain_matrix, "gain-matrix")? {
        Some(raw) => parse_gain_matrix(&raw)?,
        None => {
            let l = cfg_file.resolve(args.gain, "gain", 0.5)?;
            GainSpec::scalar(l).map_err(|e| CliError::schema(format!("--gain: {e}")))?
        }
    };
    let settings = replay::ReplaySettings {
        vo: cfg_file.resolve_required(args.vo, "vo")?,
        gps: cfg_file.resolve_required(args.gps, "gps")?,
        truth: cfg_file.resolve_opt(args.truth, "truth")?,
        out: cfg_file.resolve(args.out, "out", PathBuf::from("estimate.csv"))?,
        gain,
        gain_mode: cfg_file.resolve(args.gain_mode, "gain-mode", replay::GainMode::Fixed)?,
        pe_window: cfg_file.resolve(args.pe_window, "pe-window", 500)?,
        velocity_mode: cfg_file.resolve(
            args.velocity_mode,
            "velocity-mode",
            VelocityMode::Linear,
        )?,
        min_norm: cfg_file.resolve(args.min_norm, "min-norm", DEFAULT_MIN_NORM)?,
        min_vo_norm: cfg_file.resolve(args.min_vo_norm, "min-vo-norm", DEFAULT_MIN_VO_NORM)?,
        projection_period: cfg_file.resolve(
            args.projection_period,
            "projection-period",
            DEFAULT_PROJECTION_PERIOD,
        )?,
        init: cfg_file.resolve(args.init, "init", replay::InitMode::Identity)?,
    };
    let rows = replay::run(&settings)?;
    let updates = rows.iter().filter(|r| r.gain_used.is_some()).count();
    println!(
        "replayed {} epochs ({} with direction updates) -> {}",
        rows.len(),
        updates,
        settings.out.display()
    );
    if let Some(last_err) = rows.last().and_then(|r| r.error) {
        println!("terminal attitude error: {:.6} deg", last_err.to_degrees());
    }
    Ok(())
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg_file = load_config(&args.config)?;
    let settings = analyze::AnalyzeSettings {
        gps: cfg_file.resolve_required(args.gps, "gps")?,
        window: cfg_file.resolve(args.window, "window", 500)?,
        gain: cfg_file.resolve_opt(args.gain, "gain")?,
        velocity_mode: cfg_file.resolve(
            args.velocity_mode,
            "velocity-mode",
            VelocityMode::Linear,
        )?,
        min_norm: cfg_file.resolve(args.min_norm, "min-norm", DEFAULT_MIN_NORM)?,
    };
    let report = analyze::run(&settings)?;
    print!("{}", analyze::render(&report));
    Ok(())
}
