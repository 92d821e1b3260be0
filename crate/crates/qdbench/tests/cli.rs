//! Black-box tests of the `qdbench` binary: exit codes, artifact layout,
//! and diagnostics. Exit codes: 0 success, 2 config error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qdbench(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qdbench"));
    for arg in args {
        cmd.arg(arg.as_ref());
    }
    cmd.output().expect("spawn qdbench")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn smoke_run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("smoke");
    let cfg = configs_dir().join("smoke.cfg");
    let result = qdbench(&[&"run", &cfg, &"--out", &out]);
    assert!(result.status.success(), "{}", stderr_of(&result));
    for name in ["metrics.csv", "summary.csv", "archive.csv"] {
        let path = out.join(name);
        assert!(path.is_file(), "missing {name}");
        assert!(std::fs::metadata(&path).unwrap().len() > 0, "empty {name}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    qdbench_lib_parse(&metrics);
}

fn qdbench_lib_parse(metrics: &str) {
    qdbench::runner::parse_metrics_csv("metrics.csv", metrics).expect("emitted metrics re-parse");
}

#[test]
fn run_accepts_config_flag_spelling() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flagged");
    let cfg = configs_dir().join("smoke.cfg");
    let result = qdbench(&[&"run", &"--config", &cfg, &"--out", &out]);
    assert!(result.status.success(), "{}", stderr_of(&result));
    assert!(out.join("metrics.csv").is_file());
}

#[test]
fn conflicting_config_paths_exit_2() {
    let cfg = configs_dir().join("smoke.cfg");
    let other = configs_dir().join("knights/knights_me.cfg");
    let result = qdbench(&[&"run", &cfg, &"--config", &other]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
}

#[test]
fn missing_config_exits_2() {
    let result = qdbench(&[&"run", &"/nonexistent/experiment.cfg"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr_of(&result).contains("experiment.cfg"),
        "diagnostic should name the file: {}",
        stderr_of(&result)
    );
}

#[test]
fn invalid_schema_exits_2_with_key_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\ndomain = knights\nalgorithm = map_elites\nturbo = yes\n",
    )
    .unwrap();
    let result = qdbench(&[&"run", &cfg]);
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr_of(&result).contains("turbo"),
        "diagnostic should name the unknown key: {}",
        stderr_of(&result)
    );
}

#[test]
fn seed_replicate_conflict_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("seeds.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\ndomain = knights\nalgorithm = map_elites\nreplicates = 2\nseeds = 5, 6\n",
    )
    .unwrap();
    let result = qdbench(&[&"run", &cfg, &"--replicates", &"3"]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
}

#[test]
fn unwritable_out_dir_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("out");
    let cfg = configs_dir().join("smoke.cfg");
    let result = qdbench(&[&"run", &cfg, &"--out", &out]);
    assert_eq!(result.status.code(), Some(3), "{}", stderr_of(&result));
}

#[test]
fn unknown_subcommand_exits_2() {
    let result = qdbench(&[&"frobnicate"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn heatmap_renders_run_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("smoke");
    let cfg = configs_dir().join("smoke.cfg");
    let run = qdbench(&[&"run", &cfg, &"--out", &out]);
    assert!(run.status.success(), "{}", stderr_of(&run));
    let archive = out.join("archive.csv");
    let result = qdbench(&[&"heatmap", &archive]);
    assert!(result.status.success(), "{}", stderr_of(&result));
    let rendered = String::from_utf8_lossy(&result.stdout).into_owned();
    assert!(rendered.contains("occupied"), "legend missing: {rendered}");
}

#[test]
fn heatmap_missing_file_exits_2() {
    let result = qdbench(&[&"heatmap", &"/nonexistent/archive.csv"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn heatmap_malformed_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("garbled.csv");
    std::fs::write(&path, "this,is,not\na,heatmap,file\n").unwrap();
    let result = qdbench(&[&"heatmap", &path]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
}

#[test]
fn sweep_runs_each_config_into_its_own_subdir() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sweep");
    std::fs::create_dir(&dir).unwrap();
    let smoke = std::fs::read_to_string(configs_dir().join("smoke.cfg")).unwrap();
    std::fs::write(dir.join("alpha.cfg"), &smoke).unwrap();
    std::fs::write(dir.join("beta.cfg"), smoke.replace("seed = 7", "seed = 8")).unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored: not a .cfg").unwrap();
    let out = tmp.path().join("out");
    let result = qdbench(&[&"sweep", &dir, &"--out", &out]);
    assert!(result.status.success(), "{}", stderr_of(&result));
    for stem in ["alpha", "beta"] {
        assert!(
            out.join(stem).join("metrics.csv").is_file(),
            "missing {stem}"
        );
    }
    assert!(!out.join("notes").exists());
}

#[test]
fn sweep_validates_everything_before_running_anything() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sweep");
    std::fs::create_dir(&dir).unwrap();
    let smoke = std::fs::read_to_string(configs_dir().join("smoke.cfg")).unwrap();
    std::fs::write(dir.join("alpha.cfg"), &smoke).unwrap();
    std::fs::write(dir.join("zz_broken.cfg"), "[experiment]\ndomain = warp\n").unwrap();
    let out = tmp.path().join("out");
    let result = qdbench(&[&"sweep", &dir, &"--out", &out]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
    assert!(
        !out.join("alpha").exists(),
        "a valid config ran before the broken one was rejected"
    );
}

#[test]
fn empty_sweep_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sweep");
    std::fs::create_dir(&dir).unwrap();
    let result = qdbench(&[&"sweep", &dir]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
}

#[test]
fn map_outside_bounds_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let map = tmp.path().join("broken.map");
    std::fs::write(
        &map,
        "bounds 0 0 1 1\nstart 0.5 0.5 0\ngoal 0.2 0.2 0.05\nwall 0 0 2 1\n",
    )
    .unwrap();
    let cfg = tmp.path().join("maze.cfg");
    std::fs::write(
        &cfg,
        format!(
            "[experiment]\ndomain = maze_deceptive\nalgorithm = map_elites\n\
             population = 8\ngenerations = 1\nreplicates = 1\nseed = 1\n\
             [maze]\nmap = {}\n",
            map.display()
        ),
    )
    .unwrap();
    let result = qdbench(&[&"run", &cfg]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr_of(&result));
    assert!(
        stderr_of(&result).contains("wall"),
        "diagnostic should mention the wall: {}",
        stderr_of(&result)
    );
}
