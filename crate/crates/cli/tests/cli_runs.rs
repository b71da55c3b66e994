use std::fs;
use std::path::Path;
use std::process::Command;

use dkm_cli::{
    cmd_direction, cmd_predict, cmd_simulate, cmd_sweep, read_manifest, replay_command, run,
    DirectionArgs, History, IcMode, Model, NetArgs, OutArgs, PredictArgs, ReplayArgs, SimulateArgs,
    SweepArgs, TimeArgs,
};

fn small_ring() -> NetArgs {
    NetArgs {
        n: 24,
        k: 4,
        network: None,
        geometric: None,
        decay: 0.3,
        net_seed: 0,
        nu: None,
        omega_hz: 10.0,
    }
}

fn short(t_end: f64) -> TimeArgs {
    TimeArgs {
        dt: 1e-4,
        sigma: 1e-3,
        t_end,
        history: History::Constant,
    }
}

fn io(dir: &Path, workers: usize) -> OutArgs {
    OutArgs {
        out: dir.to_path_buf(),
        workers,
    }
}

fn sweep(dir: &Path, workers: usize, epsilon: Vec<f64>, seeds: u64) -> SweepArgs {
    SweepArgs {
        net: small_ring(),
        time: short(0.3),
        io: io(dir, workers),
        epsilon,
        seed: 4,
        seeds,
    }
}

fn simulate(dir: &Path, model: Model) -> SimulateArgs {
    SimulateArgs {
        net: small_ring(),
        time: short(0.3),
        io: io(dir, 1),
        model,
        epsilon: 0.5,
        seed: 4,
        ic: IcMode::Random,
        bias_amplitude: 0.8,
        bias_mode: None,
        contributions: false,
        stride: None,
    }
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let many = tmp.path().join("many");
    cmd_sweep(&sweep(&one, 1, vec![0.2, 0.5, 0.8], 3)).unwrap();
    cmd_sweep(&sweep(&many, 8, vec![0.2, 0.5, 0.8], 3)).unwrap();
    let a = fs::read_to_string(one.join("sweep.csv")).unwrap();
    let b = fs::read_to_string(many.join("sweep.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 10);
}

#[test]
fn single_cell_sweep_matches_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let sw = cmd_sweep(&sweep(&tmp.path().join("sweep"), 1, vec![0.5], 1)).unwrap();
    let row = &sw.rows[0];
    let dkm = cmd_simulate(&simulate(&tmp.path().join("dkm"), Model::Dkm)).unwrap();
    let km = cmd_simulate(&simulate(&tmp.path().join("km"), Model::Km)).unwrap();
    let cx = cmd_simulate(&simulate(&tmp.path().join("cx"), Model::Complex)).unwrap();
    assert_eq!(row.r_dkm, dkm.mean_r);
    assert_eq!(row.r_km, km.mean_r);
    assert_eq!(row.r_complex_delayed, cx.mean_r);
}

#[test]
fn simulate_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = simulate(tmp.path(), Model::Complex);
    args.contributions = true;
    let res = cmd_simulate(&args).unwrap();
    for f in [
        "trajectory.csv",
        "order_parameter.csv",
        "contributions.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,theta_0,theta_1,"));
    assert_eq!(traj.lines().count(), 302);
    let manifest = read_manifest(&tmp.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.subcommand, "simulate");
    assert_eq!(manifest.seeds, vec![4]);
    assert_eq!(manifest.outputs, res.manifest.outputs);
    assert!(manifest.outputs.contains(&"contributions.csv".to_string()));
}

#[test]
fn replay_reproduces_outputs_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let manifest = cmd_direction(&DirectionArgs {
        net: small_ring(),
        time: short(0.2),
        io: io(&first, 1),
        epsilon: 0.5,
        seed: 0,
        seeds: 3,
        ic: IcMode::Random,
        bias_amplitude: 0.8,
        threshold: 0.9,
        pos_mode: Some(2),
        neg_mode: Some(24),
    })
    .unwrap()
    .manifest;
    let second = tmp.path().join("second");
    let cmd = replay_command(&ReplayArgs {
        manifest: first.join("manifest.json"),
        out: Some(second.clone()),
        workers: None,
    })
    .unwrap();
    let again = run(&cmd).unwrap();
    assert_eq!(again.outputs, manifest.outputs);
    for f in &manifest.outputs {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn unbiased_start_on_the_wave_stays_positive() {
    let tmp = tempfile::tempdir().unwrap();
    let res = cmd_direction(&DirectionArgs {
        net: NetArgs {
            n: 100,
            k: 25,
            ..small_ring()
        },
        time: short(0.5),
        io: io(tmp.path(), 0),
        epsilon: 0.5,
        seed: 0,
        seeds: 4,
        ic: IcMode::Biased,
        bias_amplitude: 0.0,
        threshold: 0.9,
        pos_mode: None,
        neg_mode: None,
    })
    .unwrap();
    assert_eq!((res.pos_mode, res.neg_mode), (3, 99));
    assert_eq!(res.stats.positive, 1.0);
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("direction_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["positive"], 1.0);
    assert_eq!(summary["completed"], 4);
}

#[test]
fn predict_handles_ring_limits_and_files() {
    let tmp = tempfile::tempdir().unwrap();
    let res = cmd_predict(&PredictArgs {
        net: NetArgs {
            n: 100,
            k: 25,
            ..small_ring()
        },
        io: io(&tmp.path().join("ring"), 1),
        epsilon: 0.5,
        modes: 2,
        eigenvectors: true,
    })
    .unwrap();
    assert_eq!(res.leading, vec![3, 99]);
    assert!(tmp.path().join("ring/pattern_mode_3.csv").exists());
    assert!(tmp.path().join("ring/eigenvectors.csv").exists());

    let fast = cmd_predict(&PredictArgs {
        net: NetArgs {
            n: 100,
            k: 25,
            nu: Some(1e12),
            ..small_ring()
        },
        io: io(&tmp.path().join("fast"), 1),
        epsilon: 0.5,
        modes: 1,
        eigenvectors: false,
    })
    .unwrap();
    assert_eq!(fast.leading, vec![1]);
    assert!(fast.patterns[0].iter().all(|p| p.abs() < 1e-9));

    let file = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/data/four_nodes.net"
    );
    let res = cmd_predict(&PredictArgs {
        net: NetArgs {
            network: Some(file.into()),
            nu: Some(5.0),
            ..small_ring()
        },
        io: io(&tmp.path().join("file"), 1),
        epsilon: 1.0,
        modes: 4,
        eigenvectors: false,
    })
    .unwrap();
    assert_eq!(res.spectrum.n(), 4);
}

#[test]
fn failed_cells_are_flushed_and_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let status = Command::new(env!("CARGO_BIN_EXE_dkm"))
        .args([
            "sweep", "--n", "12", "--k", "2", "--t-end", "0.05", "--seeds", "2",
        ])
        .args(["--epsilon", "0.5,-1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let manifest = read_manifest(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.failed.len(), 2);
    assert!(manifest.failed[0].cell.contains("epsilon=-1"));
}

#[test]
fn bad_setup_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let file = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/data/four_nodes.net"
    );
    let out = Command::new(env!("CARGO_BIN_EXE_dkm"))
        .args(["predict", "--network", file, "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nu"));

    let ok = Command::new(env!("CARGO_BIN_EXE_dkm"))
        .args([
            "simulate", "--n", "10", "--k", "2", "--t-end", "0.01", "--model", "phaselag", "--out",
        ])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert!(ok.success());
}
