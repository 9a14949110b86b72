//! End-to-end behavior of the simulate / replay / analyze pipeline.

use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;
use vgo_cli::commands::{replay, simulate};
use vgo_cli::csv_io::{read_gps_csv, write_gps_csv};
use vgo_core::measurement::{VelocityMode, DEFAULT_MIN_NORM, DEFAULT_MIN_VO_NORM};
use vgo_core::observer::{GainSpec, ObserverState};
use vgo_core::sim::{frames_from_measurements, synth_stream, SimConfig};
use vgo_core::so3::{Rotation, DEFAULT_PROJECTION_PERIOD};

fn sim_settings(dir: &Path, cfg: SimConfig) -> simulate::SimulateSettings {
    simulate::SimulateSettings {
        cfg,
        threshold: 1e-3,
        out_dir: dir.to_path_buf(),
    }
}

fn replay_settings(dir: &Path, gain: f64) -> replay::ReplaySettings {
    replay::ReplaySettings {
        vo: dir.join("vo.csv"),
        gps: dir.join("gps.csv"),
        truth: Some(dir.join("truth.csv")),
        out: dir.join("estimate.csv"),
        gain: GainSpec::scalar(gain).unwrap(),
        gain_mode: replay::GainMode::Fixed,
        pe_window: 500,
        velocity_mode: VelocityMode::Linear,
        min_norm: DEFAULT_MIN_NORM,
        min_vo_norm: DEFAULT_MIN_VO_NORM,
        projection_period: DEFAULT_PROJECTION_PERIOD,
        init: replay::InitMode::Identity,
    }
}

fn small_cfg() -> SimConfig {
    SimConfig {
        steps: 1500,
        runs: 2,
        gain: 0.02,
        ..SimConfig::default()
    }
}

#[test]
fn replay_of_simulated_log_matches_in_memory_run() {
    let dir = TempDir::new().unwrap();
    let cfg = small_cfg();
    simulate::run(&sim_settings(dir.path(), cfg)).unwrap();

    let rows = replay::run(&replay_settings(dir.path(), cfg.gain)).unwrap();

    // mirror of the replay loop on the in-memory stream
    let (traj, rels, vels) = synth_stream(&cfg);
    let frames = frames_from_measurements(&rels, &vels, VelocityMode::Linear).unwrap();
    let gain = GainSpec::scalar(cfg.gain).unwrap();
    let mut state = ObserverState::with_initial(Rotation::identity());
    for (k, frame) in frames.iter().enumerate() {
        let (cam, ned) = frame.pair().expect("moving vehicle");
        state = state.update(&cam, &ned, &gain);
        let diff = (rows[k].attitude.matrix() - state.attitude().matrix()).norm();
        assert!(
            diff < 1e-12,
            "replay diverged from in-memory run at epoch {k}: {diff:.3e}"
        );
        state = state.predict(&frame.rel);
    }

    // terminal error against the truth after convergence
    let terminal = rows.last().unwrap().error.unwrap();
    assert!(terminal < 1e-6, "terminal error {terminal:.3e} rad");
    let _ = traj;
}

#[test]
fn missing_gps_rows_propagate_without_crashing() {
    let dir = TempDir::new().unwrap();
    let cfg = small_cfg();
    simulate::run(&sim_settings(dir.path(), cfg)).unwrap();

    // drop a mid-stream block of GPS rows
    let gps = read_gps_csv(&dir.path().join("gps.csv")).unwrap();
    let sparse: Vec<_> = gps
        .iter()
        .filter(|g| !(400..500).contains(&g.k))
        .copied()
        .collect();
    write_gps_csv(&dir.path().join("gps.csv"), &sparse).unwrap();

    let rows = replay::run(&replay_settings(dir.path(), cfg.gain)).unwrap();
    assert_eq!(rows.len(), cfg.steps);
    // epochs without bracketing velocity are propagation-only
    let updated = rows.iter().filter(|r| r.gain_used.is_some()).count();
    assert_eq!(updated, cfg.steps - 101);
    let terminal = rows.last().unwrap().error.unwrap();
    assert!(terminal < 1e-6, "terminal error {terminal:.3e} rad");
}

#[test]
fn half_rate_gps_equals_decimated_updates() {
    // GPS at half the VO rate engages the two-stage form; it must equal the
    // equal-rate run with the odd-epoch updates decimated. Constant velocity
    // mode so the direction needs only the epoch's own sample; the interval
    // endpoint falls back to the VO timestamp, which the synthetic logs
    // share with GPS.
    let dir = TempDir::new().unwrap();
    let cfg = small_cfg();
    simulate::run(&sim_settings(dir.path(), cfg)).unwrap();

    let gps = read_gps_csv(&dir.path().join("gps.csv")).unwrap();
    let half: Vec<_> = gps.iter().filter(|g| g.k % 2 == 0).copied().collect();
    let half_path = dir.path().join("gps_half.csv");
    write_gps_csv(&half_path, &half).unwrap();

    let mut settings = replay_settings(dir.path(), cfg.gain);
    settings.gps = half_path;
    settings.velocity_mode = VelocityMode::Constant;
    let rows = replay::run(&settings).unwrap();

    // equal-rate in-memory run with updates decimated to even epochs
    let (_, rels, vels) = synth_stream(&cfg);
    let gain = GainSpec::scalar(cfg.gain).unwrap();
    let mut state = ObserverState::with_initial(Rotation::identity());
    for (k, rel) in rels.iter().enumerate() {
        if k % 2 == 0 {
            let frame = vgo_core::measurement::make_frame(
                rel,
                &vels[k],
                &vels[k + 1],
                VelocityMode::Constant,
                DEFAULT_MIN_NORM,
                DEFAULT_MIN_VO_NORM,
            )
            .unwrap();
            let (cam, ned) = frame.pair().unwrap();
            state = state.update(&cam, &ned, &gain);
        }
        let diff = (rows[k].attitude.matrix() - state.attitude().matrix()).norm();
        assert!(
            diff < 1e-12,
            "half-rate replay diverged at epoch {k}: {diff:.3e}"
        );
        state = state.predict(rel);
    }
    assert_eq!(
        rows.iter().filter(|r| r.gain_used.is_some()).count(),
        cfg.steps.div_ceil(2)
    );
}

#[test]
fn optimal_gain_mode_logs_per_window_gain() {
    let dir = TempDir::new().unwrap();
    let cfg = small_cfg();
    simulate::run(&sim_settings(dir.path(), cfg)).unwrap();

    let mut settings = replay_settings(dir.path(), cfg.gain);
    settings.gain_mode = replay::GainMode::Optimal;
    settings.pe_window = 400;
    let rows = replay::run(&settings).unwrap();

    // cross-check the logged gain against the offline computation on the
    // same sliding windows
    let (_, rels, vels) = synth_stream(&cfg);
    let frames = frames_from_measurements(&rels, &vels, VelocityMode::Linear).unwrap();
    let dirs: Vec<_> = frames.iter().map(|f| f.pair().unwrap().1).collect();
    for (k, row) in rows.iter().enumerate() {
        let logged = row.gain_used.unwrap();
        if k + 1 < settings.pe_window {
            // window not full yet: fixed gain, no beta
            assert_eq!(logged, cfg.gain);
            assert!(row.beta.is_none());
        } else {
            let window = &dirs[k + 1 - settings.pe_window..=k];
            let beta = vgo_core::analysis::window_beta(window);
            let stats = vgo_core::analysis::PEWindowStats::new(settings.pe_window - 1, beta);
            let expected = vgo_core::analysis::optimal_gain(&stats).unwrap();
            assert!(
                (logged - expected).abs() < 1e-12,
                "epoch {k}: logged {logged} vs offline {expected}"
            );
            assert!((row.beta.unwrap() - beta).abs() < 1e-15);
        }
    }
}

#[test]
fn config_file_mirrors_flags() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let bin = env!("CARGO_BIN_EXE_vgo");
    let status = Command::new(bin)
        .args([
            "simulate", "--radius", "50", "--speed", "6.2832", "--dt", "0.1", "--runs", "2",
            "--steps", "400", "--max-init-deg", "90", "--gain", "0.02", "--seed", "7",
            "--out-dir", out_a.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let config = dir.path().join("sim.cfg");
    fs::write(
        &config,
        format!(
            "# mirrors the flag run\nradius=50\nspeed=6.2832\ndt=0.1\nruns=2\nsteps=400\n\
             max-init-deg=90\ngain=0.02\nseed=7\nout-dir={}\n",
            out_b.display()
        ),
    )
    .unwrap();
    let status = Command::new(bin)
        .args(["simulate", "--config", config.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    for name in ["vo.csv", "gps.csv", "truth.csv", "errors.csv", "summary.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between flag and config runs");
    }
}

#[test]
fn same_seed_produces_byte_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_vgo");
    for out in ["x", "y"] {
        let status = Command::new(bin)
            .args([
                "simulate", "--runs", "2", "--steps", "300", "--gain", "0.02", "--seed", "42",
                "--out-dir", dir.path().join(out).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["vo.csv", "gps.csv", "truth.csv", "errors.csv", "summary.csv"] {
        let a = fs::read(dir.path().join("x").join(name)).unwrap();
        let b = fs::read(dir.path().join("y").join(name)).unwrap();
        assert_eq!(a, b, "{name} not reproducible");
    }
}

#[test]
fn zero_initial_error_yields_zero_error_column() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_vgo");
    let status = Command::new(bin)
        .args([
            "simulate", "--runs", "1", "--max-init-deg", "0", "--steps", "200",
            "--out-dir", dir.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    for line in errors.lines().skip(1) {
        let err: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(err.abs() < 1e-7, "nonzero error {err}");
    }
}

#[test]
fn straight_line_log_flags_pe_violation() {
    let dir = TempDir::new().unwrap();
    let gps = dir.path().join("gps.csv");
    let mut text = String::from("k,t,vn,ve,vd\n");
    for k in 0..40 {
        text.push_str(&format!("{k},{},5,0,0\n", k as f64 * 0.1));
    }
    fs::write(&gps, text).unwrap();

    let bin = env!("CARGO_BIN_EXE_vgo");
    // without a gain: report only, exit 0, flags the violation
    let output = Command::new(bin)
        .args(["analyze", "--gps", gps.to_str().unwrap(), "--window", "10"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("PE violated"), "{stdout}");
    assert!(stdout.contains("beta"), "{stdout}");

    // a rate was demanded: numeric-domain error, exit code 3
    let output = Command::new(bin)
        .args([
            "analyze", "--gps", gps.to_str().unwrap(), "--window", "10", "--gain", "1.0",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn circle_log_analysis_reports_half_beta() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_vgo");
    let status = Command::new(bin)
        .args([
            "simulate", "--runs", "1", "--steps", "1200", "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let output = Command::new(bin)
        .args([
            "analyze", "--gps", dir.path().join("gps.csv").to_str().unwrap(),
            "--window", "500", "--gain", "1.0",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("beta               0.500000"), "{stdout}");
    assert!(stdout.contains("alpha"), "{stdout}");
}

#[test]
fn alternating_orthogonal_log_echoes_rate_formula() {
    // beta = 1/2 windows of two samples: abar = 1 - 0.5*2*1/(2+2) = 0.75
    let dir = TempDir::new().unwrap();
    let gps = dir.path().join("gps.csv");
    let mut text = String::from("k,t,vn,ve,vd\n");
    for k in 0..60 {
        let (vn, ve) = if k % 2 == 0 { (5.0, 0.0) } else { (0.0, 5.0) };
        text.push_str(&format!("{k},{},{vn},{ve},0\n", k as f64 * 0.1));
    }
    fs::write(&gps, text).unwrap();
    let bin = env!("CARGO_BIN_EXE_vgo");
    // constant velocity mode: each epoch's direction is its own sample
    // (the linear-mode midpoint of alternating orthogonal vectors would be
    // constant and yield no excitation at all)
    let output = Command::new(bin)
        .args([
            "analyze", "--gps", gps.to_str().unwrap(), "--window", "2", "--gain", "1.0",
            "--velocity-mode", "constant",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("beta               0.500000"), "{stdout}");
    assert!(stdout.contains("alpha_bar          0.750000"), "{stdout}");
}

#[test]
fn schema_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let vo = dir.path().join("vo.csv");
    fs::write(
        &vo,
        "k,t,qw,qx,qy,qz,tx,ty,tz\n0,0.0,0.9,0,0,0,0,0,0.1\n",
    )
    .unwrap();
    let gps = dir.path().join("gps.csv");
    fs::write(&gps, "k,t,vn,ve,vd\n0,0.0,5,0,0\n").unwrap();

    let bin = env!("CARGO_BIN_EXE_vgo");
    let output = Command::new(bin)
        .args([
            "replay", "--vo", vo.to_str().unwrap(), "--gps", gps.to_str().unwrap(),
            "--out", dir.path().join("est.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("quaternion norm"), "{stderr}");
}

#[test]
fn truth_initialization_starts_at_truth() {
    let dir = TempDir::new().unwrap();
    let cfg = SimConfig {
        steps: 300,
        runs: 1,
        gain: 0.02,
        ..SimConfig::default()
    };
    simulate::run(&sim_settings(dir.path(), cfg)).unwrap();
    let mut settings = replay_settings(dir.path(), cfg.gain);
    settings.init = replay::InitMode::Truth;
    let rows = replay::run(&settings).unwrap();
    // exact data and truth start: the error stays at numerical zero
    for row in &rows {
        assert!(row.error.unwrap() < 1e-9);
    }
}

#[test]
fn replay_rejects_matrix_gain_in_optimal_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = SimConfig {
        steps: 50,
        runs: 1,
        ..SimConfig::default()
    };
    simulate::run(&sim_settings(dir.path(), cfg)).unwrap();
    let mut settings = replay_settings(dir.path(), 0.5);
    settings.gain = GainSpec::matrix(nalgebra::Matrix3::identity()).unwrap();
    settings.gain_mode = replay::GainMode::Optimal;
    let err = replay::run(&settings).unwrap_err();
    assert!(matches!(err, vgo_cli::CliError::Schema(_)));
}
