//! End-to-end checks of the `antforage` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn antforage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antforage"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_sources.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A 40 x 40 version of the bundled scenario, written to `dir`.
fn small_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(bundled())
        .unwrap()
        .replace("nx = 200", "nx = 40")
        .replace("ny = 200", "ny = 40")
        .replace("h = 0.05", "h = 0.25")
        .replace("snapshot_every = 50000", "snapshot_every = 10")
        .replace("timeseries_every = 1000", "timeseries_every = 5");
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn print_defaults_emits_the_bundled_file() {
    let o = antforage(&["print-defaults"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(bundled()).unwrap());
}

#[test]
fn bundled_scenario_validates() {
    let path = bundled();
    let o = antforage(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("ok"));
}

#[test]
fn validate_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(bundled())
        .unwrap()
        .replace("alpha1 = 0.3", "alpha1 = -1.0")
        .replace("center = [5.0, 8.0]", "center = [50.0, 8.0]");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let o = antforage(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("params.out_of_range"), "{out}");
    assert!(out.contains("food.out_of_domain"), "{out}");
}

#[test]
fn malformed_config_is_rejected_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, "[grid]\nnx = 10\nny = 10\nh = 0.1\nbogus = 3\n").unwrap();
    let o = antforage(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bogus") && err.contains('5'), "{err}");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(antforage(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(antforage(&["run"]).status.code(), Some(64));
    assert_eq!(antforage(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_step_run_writes_initial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let path = bundled();
    let o = antforage(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--steps",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["steps_taken"], 0);
    assert_eq!(manifest["snapshots"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["termination"]["reason"], "completed");
    for ev in manifest["events"]["sources"].as_array().unwrap() {
        assert_eq!(ev["formation_time"], "never");
        assert_eq!(ev["depletion_time"], "never");
        assert_eq!(ev["fade_time"], "never");
    }
    let series = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(series.lines().count(), 2);
    assert!(series.starts_with("step,t,mass_u,mass_w,mass_v,mass_c,food_0,food_1,trail_0,trail_1,inflow,unloaded"));
    for field in ["u", "w", "v", "c"] {
        assert!(out.join(format!("snapshots/{field}_000000000.pgm")).is_file());
        assert!(out.join(format!("snapshots/{field}_000000000.csv")).is_file());
    }
}

#[test]
fn short_run_snapshot_cadence() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("out");
    let o = antforage(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--steps",
        "42",
        "--dt",
        "0.002",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let steps: Vec<u64> = manifest["snapshots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["step"].as_u64().unwrap())
        .collect();
    assert_eq!(steps, vec![0, 10, 20, 30, 40]);
    assert_eq!(manifest["scenario"]["run"]["dt"], 0.002);
    // rows at 0, 5, ..., 40 plus the final step
    let series = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 9 + 1);
    assert!(series.lines().last().unwrap().starts_with("42,"));
}

#[test]
fn refuses_non_empty_output_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("keep.txt"), "precious").unwrap();
    let args = ["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--steps", "1"];
    let o = antforage(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("manifest.json").exists());

    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(antforage(&forced).status.code(), Some(0));
    assert_eq!(fs::read_to_string(out.join("keep.txt")).unwrap(), "precious");
}

#[test]
fn oversized_dt_fails_with_positivity_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = bundled();
    let out = dir.path().join("out");
    // 100 times the bundled step
    let o = antforage(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--steps",
        "20",
        "--dt",
        "0.05",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("warning") && err.contains("negative density"), "{err}");
    // partial results are still written
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["termination"]["reason"], "error");
}
