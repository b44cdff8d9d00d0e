use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use motional_gate::grid_oracle::read_frame;

const QUICK: &str = "\
trajectory.a_max = 4
trajectory.a_min = 3
trajectory.t_r = 8
trajectory.t_i = 4
basis.n_sp = 4
basis.knot_spacing = 0.02
";

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motional-gate")).args(args).output().expect("binary runs")
}

fn quick_config(dir: &Path, extra: &str) -> String {
    let p = dir.join("run.conf");
    fs::write(&p, format!("{QUICK}{extra}")).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["verify", "--out", dir.path().to_str().unwrap()]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}{}", stderr(&o));
    assert!(out.contains("pass") && !out.contains("FAIL"));
    assert!(dir.path().join("verify.csv").exists());
}

#[test]
fn config_errors_have_categories_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "mystery.key = 3\n");
    let o = cli(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config-unknown-key") && stderr(&o).contains("mystery.key"));

    let cfg = quick_config(dir.path(), "trajectory.a_min = 4.5\n");
    let o = cli(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trajectory.a_min/trajectory.a_max"), "{}", stderr(&o));

    let cfg = quick_config(dir.path(), "basis.n_sp\n");
    let o = cli(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let o = cli(&["simulate", "--preset", "fig99"]);
    assert_eq!(o.status.code(), Some(4));
    let o = cli(&["simulate", "--config", "/nonexistent/run.conf"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_is_reproducible_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = cli(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "2", "--dump-basis"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["gate.csv", "final_populations.csv", "populations_00.csv", "populations_11.csv", "sp_basis.csv", "tp_basis.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["kind"], "gate");
    assert_eq!(m["config"]["trajectory"]["a_min"], 3.0);
    assert!((m["derived"]["g"].as_f64().unwrap() - 29.33).abs() < 0.05);
    assert!((m["derived"]["duration"].as_f64().unwrap() - 20.0).abs() < 1e-12);
    assert!(m["results"]["fidelity"].as_f64().is_some());
    assert!(m["wall_time_s"].as_f64().is_some());
    let csv = fs::read_to_string(a.join("gate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().contains('e'));
}

#[test]
fn sweep_map_and_correlations_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(
        dir.path(),
        "sweep.a_t_min = 0\nsweep.a_t_max = 100\nsweep.points = 3\nmap.t_r_min = 6\nmap.t_r_max = 8\nmap.t_r_points = 2\n\
         map.a_min_min = 2.9\nmap.a_min_max = 3\nmap.a_min_points = 2\n",
    );
    let out = dir.path().join("sweep");
    let o = cli(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 4);

    let out = dir.path().join("map");
    let o = cli(&["map", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read(out.join("map.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 5);
    // a rerun resumes every point from the checkpoint and reproduces the table
    let o = cli(&["map", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["results"]["restored"], 4);
    assert_eq!(fs::read(out.join("map.csv")).unwrap(), first);

    let out = dir.path().join("corr");
    let o = cli(&["correlations", "--config", &cfg, "--out", out.to_str().unwrap(), "--input", "01"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("correlations.csv")).unwrap();
    assert!(text.starts_with("time,S_B/2,slater_rank"));
    assert!(text.lines().count() > 400);
}

#[test]
fn snapshots_write_binary_frames() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "oracle.points = 64\noracle.dt = 5e-3\noracle.frames = 6\ntrajectory.t_r = 2\ntrajectory.t_i = 1\n");
    let out = dir.path().join("snap");
    let o = cli(&["snapshots", "--config", &cfg, "--out", out.to_str().unwrap(), "--input", "00"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let frames = out.join("frames");
    for k in 0..6 {
        let bytes = fs::read(frames.join(format!("frame_{k:03}.bin"))).unwrap();
        assert_eq!(&bytes[..4], b"MTGF");
        let (grid, density) = read_frame(bytes.as_slice()).unwrap();
        assert_eq!(grid.points, 64);
        assert_eq!(grid.half_width, 10.0);
        let norm: f64 = density.iter().sum::<f64>() * grid.spacing() * grid.spacing();
        assert!((norm - 1.0).abs() < 1e-6);
    }
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(frames.join("frames.json")).unwrap()).unwrap();
    assert_eq!(index["frames"].as_array().unwrap().len(), 6);
}
