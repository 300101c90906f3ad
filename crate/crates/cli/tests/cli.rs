use std::path::Path;
use std::process::{Command, Output};

const FIXED: &str = r#"
n_agents = 4
k = 3
body_radius = 0.1
flock_radius = 2.0
alpha = 1.0
v_max = 1.0
u_max = 2.0
horizon = 1.0
plan_steps = 10
sim_dt = 0.1
replan_interval = 0.5
total_time = 2.0
seed = 5
topology_mode = "fixed"

[placement]
kind = "uniform-disk"
region = 1.0
speed_max = 0.5
"#;

fn flock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flock"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn flock")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn prints_version() {
    let out = flock(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn run_writes_three_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "fixed.toml", FIXED);
    let out_dir = dir.path().join("out");
    let out = flock(&["run", &scenario, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["trajectory.csv", "events.csv", "report.txt"] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,agent,px,py,vx,vy,ux,uy,g,eta_sq,min_safety\n"));
    // 21 samples of 4 agents plus the header.
    assert_eq!(csv.lines().count(), 1 + 21 * 4);
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.contains("safety_failures: 0"));
}

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "fixed.toml", FIXED);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(flock(&["run", &scenario, "--out", a.to_str().unwrap()])
        .status
        .success());
    assert!(flock(&["run", &scenario, "--out", b.to_str().unwrap()])
        .status
        .success());
    for name in ["trajectory.csv", "events.csv", "report.txt"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn run_over_a_directory_uses_file_stems() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios");
    std::fs::create_dir(&scenarios).unwrap();
    write(&scenarios, "one.toml", FIXED);
    write(
        &scenarios,
        "two.toml",
        &FIXED.replace("seed = 5", "seed = 6"),
    );
    write(&scenarios, "notes.txt", "ignored");
    let out_dir = dir.path().join("out");
    let out = flock(&[
        "run",
        scenarios.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("one/report.txt").is_file());
    assert!(out_dir.join("two/report.txt").is_file());
    assert!(!out_dir.join("notes").exists());
}

#[test]
fn invalid_neighborhood_size_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "bad.toml", &FIXED.replace("k = 3", "k = 4"));
    let out = flock(&[
        "run",
        &scenario,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("invalid configuration `k`"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "bad.toml", &format!("flock_size = 3\n{FIXED}"));
    let out = flock(&[
        "run",
        &scenario,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("flock_size"), "{}", stderr(&out));
}

#[test]
fn overlapping_start_is_not_silent() {
    let dir = tempfile::tempdir().unwrap();
    let explicit = FIXED
        .replace("n_agents = 4", "n_agents = 2")
        .replace("k = 3", "k = 1")
        .replace(
            "[placement]\nkind = \"uniform-disk\"\nregion = 1.0\nspeed_max = 0.5\n",
            "[[initial_states]]\nid = 0\npx = 0.0\npy = 0.0\nvx = 0.0\nvy = 0.0\n\n\
         [[initial_states]]\nid = 1\npx = 0.05\npy = 0.0\nvx = 0.0\nvy = 0.0\n",
        );
    let scenario = write(dir.path(), "overlap.toml", &explicit);
    let out = flock(&[
        "run",
        &scenario,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn switch_suite_passes() {
    let out = flock(&["verify", "switch"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failed"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = flock(&["verify", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn oracle_passes() {
    let out = flock(&["oracle", "--cases", "5", "--seed", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rest-to-rest"));
    assert!(stdout.contains("PASS bvp-oracle"));
}

#[test]
fn missing_scenario_file_is_an_error() {
    let out = flock(&["run", "/nonexistent/scenario.toml", "--out", "/tmp/never"]);
    assert_eq!(out.status.code(), Some(2));
}
