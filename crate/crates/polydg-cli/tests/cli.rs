//! End-to-end tests of the `polydg` binary: exit codes, file outputs, and
//! determinism of repeated runs.

use std::path::Path;
use std::process::{Command, Output};

fn polydg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polydg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const STACK_RUN: &str = r#"
[mesh]
kind = "stack"
nx = 2
ny = 2

[space]
degree = 1

[physics]
source_amplitude = 0.5
source_period = 0.02

[time]
dt = 0.002
steps = 5

[output]
timeseries = "series.csv"
fields = "snap_{step}.txt"
snapshot_every = 5
"#;

#[test]
fn run_produces_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", STACK_RUN);
    let out = polydg(&["run", "run.toml"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let series = dir.path().join("series.csv");
    let text = std::fs::read_to_string(&series).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,Q_out,Q_sigma,P_sigma,energy");
    assert_eq!(lines.len(), 1 + 6, "header plus N+1 rows");
    assert!(dir.path().join("snap_0.txt").exists());
    assert!(dir.path().join("snap_5.txt").exists());

    // A second identical run must produce bit-identical bytes.
    let first = std::fs::read(&series).unwrap();
    let out2 = polydg(&["run", "run.toml"], dir.path());
    assert_eq!(code(&out2), 0);
    assert_eq!(first, std::fs::read(&series).unwrap());
}

#[test]
fn pocket_run_drives_flow_through_the_outlet() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[mesh]
kind = "pocket"
nx = 4
ny = 2

[space]
degree = 1

[physics]
source_amplitude = 1.0

[time]
dt = 0.01
steps = 4

[output]
timeseries = "pocket.csv"
"#;
    write(dir.path(), "pocket.toml", cfg);
    let out = polydg(&["run", "pocket.toml"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("pocket.csv")).unwrap();
    let q_out: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(q_out.iter().any(|&v| v != 0.0), "constant inflow must reach the outlet: {q_out:?}");
}

#[test]
fn invalid_config_exits_one_with_named_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[mesh]
kind = "stack"
nx = 2
ny = 2

[space]
degree = 1

[physics]
gamma = -1.0
"#;
    write(dir.path(), "bad.toml", cfg);
    let out = polydg(&["run", "bad.toml"], dir.path());
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("slip rate must be >= 0"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydg(&["run", "nope.toml"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn mms_writes_the_study_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydg(
        &[
            "mms", "--degrees", "1", "--cells", "2,4", "--dt", "1e-3", "--steps", "2", "--out",
            "study.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    assert!(text.starts_with("m,h,dofs,err,rate\n"));
    assert_eq!(text.lines().count(), 3);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("degree 1: fitted slope"));
}

#[test]
fn mms_check_window_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydg(
        &[
            "mms",
            "--degrees",
            "1",
            "--cells",
            "2,4",
            "--dt",
            "1e-3",
            "--steps",
            "1",
            "--check-window",
            "1e-6",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed"));
}

#[test]
fn bench_poisson_is_deterministic_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench-poisson",
        "--n-fine",
        "8",
        "--disks",
        "0",
        "--degrees",
        "1",
        "--agglomerates",
        "4",
        "--agg-degrees",
        "2",
        "--repeats",
        "1",
        "--no-timing",
        "--out",
        "bench.csv",
    ];
    let out = polydg(&args, dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("bench.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("mesh,elements,m,dofs,E_L2,E_H1,assembly_s,solve_s\n"));
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("standard-fine") && text.contains("agglomerated-4"));

    let out2 = polydg(&args, dir.path());
    assert_eq!(code(&out2), 0);
    assert_eq!(first, std::fs::read(dir.path().join("bench.csv")).unwrap());
}

#[test]
fn mesh_exports_and_agglomerates() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydg(
        &["mesh", "--kind", "stack", "--nx", "2", "--ny", "2", "--out", "mesh.txt"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("mesh.txt")).unwrap();
    assert!(text.starts_with("polydg-mesh v1\n"));

    let out = polydg(
        &[
            "mesh",
            "--kind",
            "inclusion",
            "--nx",
            "16",
            "--disks",
            "2",
            "--eps",
            "0.1",
            "--seed",
            "3",
            "--agglomerate",
            "5",
            "--out",
            "agg.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("5 elements"), "stdout: {stdout}");
}

#[test]
fn unknown_mesh_kind_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydg(&["mesh", "--kind", "torus", "--out", "x.txt"], dir.path());
    assert_eq!(code(&out), 1);
}
