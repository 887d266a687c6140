use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vlo_core::pipeline::{export_kitti_sequence, RunConfig, SyntheticSequence};

fn vlo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn short_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let cfg = dir.join("run.cfg");
    fs::write(
        &cfg,
        format!("# short synthetic run\nsynth.length = 6\nsynth.drift_factor = 0.9\n{extra}"),
    )
    .unwrap();
    cfg
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "");
    let out = dir.path().join("out");
    let res = vlo(&[
        "simulate",
        "--config",
        path(&cfg),
        "--seed",
        "3",
        "--out",
        path(&out),
        "--mode",
        "constvel",
        "--sparse-lidar",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["trajectory_vo.txt", "trajectory_lidar.txt", "events.csv", "report.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"mode\": \"constvel\""), "{report}");
    assert!(String::from_utf8_lossy(&res.stdout).contains("frames"));

    // the estimate evaluates against itself with zero error
    let traj = out.join("trajectory_vo.txt");
    let eval_dir = dir.path().join("eval");
    let res = vlo(&["eval", path(&traj), path(&traj), "--out", path(&eval_dir)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("ATE RMSE 0.000000 m"));
    let csv = fs::read_to_string(eval_dir.join("segments.csv")).unwrap();
    assert!(csv.starts_with("start_index,length,trans_pct,rot_deg_per_m\n"));
    assert!(eval_dir.join("eval.json").exists());
}

#[test]
fn usage_errors_exit_with_1() {
    assert_eq!(code(&vlo(&[])), 1);
    assert_eq!(code(&vlo(&["simulate", "--mode", "sideways"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "synth.colour = red\n");
    let res = vlo(&["simulate", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown key"));
    assert_eq!(code(&vlo(&["--help"])), 0);
}

#[test]
fn data_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    assert_eq!(code(&vlo(&["eval", path(&missing), path(&missing)])), 2);
    assert_eq!(code(&vlo(&["kitti-import", path(&missing)])), 2);
}

#[test]
fn kitti_import_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.synthetic.length = 6.0;
    cfg.synthetic.drift_factor = 0.9;
    let seq = dir.path().join("seq");
    export_kitti_sequence(&SyntheticSequence::generate(&cfg.synthetic, 1).unwrap(), &seq).unwrap();

    let copy = dir.path().join("copy");
    let res = vlo(&[
        "kitti-import",
        path(&seq),
        "--vo",
        path(&seq.join("vo.txt")),
        "--out",
        path(&copy),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("ground truth present"));
    assert_eq!(
        fs::read(seq.join("velodyne/000003.bin")).unwrap(),
        fs::read(copy.join("velodyne/000003.bin")).unwrap()
    );

    let out = dir.path().join("out");
    let res = vlo(&[
        "run",
        "--sequence",
        path(&copy),
        "--vo",
        path(&copy.join("vo.txt")),
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("vo ATE"));
    assert!(out.join("trajectory_lidar.txt").exists());

    // a truncated scan is a data error
    fs::write(copy.join("velodyne/000002.bin"), [0u8; 5]).unwrap();
    let res = vlo(&[
        "run",
        "--sequence",
        path(&copy),
        "--vo",
        path(&copy.join("vo.txt")),
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(code(&vlo(&["kitti-import", path(&copy)])), 2);
}

#[test]
fn run_without_sequence_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&vlo(&["run", "--out", path(dir.path())])), 1);
}
