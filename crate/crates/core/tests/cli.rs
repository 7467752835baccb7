use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermocontact"))
        .args(args)
        .output()
        .unwrap()
}

fn small_run(out: &Path) -> Output {
    cli(&[
        "run",
        "--out",
        out.to_str().unwrap(),
        "--override",
        "mesh.nx=6",
        "--override",
        "mesh.ny=6",
        "--override",
        "solver.t_end=0.1",
        "--override",
        "output.emit_vtk=true",
        "--override",
        "output.vtk_every=5",
    ])
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("reference: 10 steps"), "{stdout}");
    for f in [
        "reports.csv",
        "trajectory.csv",
        "summary.json",
        "bulk_00000.vtk",
        "bulk_00005.vtk",
        "bulk_00010.vtk",
        "contact_00010.vtk",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let reports = fs::read_to_string(dir.path().join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 12);
    assert!(reports.starts_with("step,time,psi_omega"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 10);
    assert_eq!(summary["max_box_violation"], 0.0);
    assert!(summary["max_penetration"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(small_run(a.path()).status.success());
    assert!(small_run(b.path()).status.success());
    for f in [
        "reports.csv",
        "trajectory.csv",
        "summary.json",
        "bulk_00010.vtk",
        "contact_00005.vtk",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let o = cli(&["run", "--override", "solver.mu=0"]);
    assert_eq!(o.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(record["error"], "validation");

    let o = cli(&["run", "--override", "foo=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("foo"));

    let o = cli(&["run", "--preset", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "run",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "mesh.nx=4",
        "--override",
        "mesh.ny=4",
        "--override",
        "solver.fp_max_iter=1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let record: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(record["error"], "fixed_point_no_convergence");
    assert_eq!(record["step"], 1);
}

#[test]
fn missing_config_file_exits_with_code_4() {
    let o = cli(&["run", "--config", "/nonexistent/thermocontact.toml"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["config", "--preset", "peel"]);
    assert!(o.status.success());
    let path = dir.path().join("peel.toml");
    fs::write(&path, &o.stdout).unwrap();
    let again = cli(&["config", "--config", path.to_str().unwrap()]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn study_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(
        &cfg,
        "preset = \"reference\"\n[mesh]\nnx = 5\nny = 5\n[solver]\nt_end = 0.1\n[study]\naxis = \"eps\"\nlevels = [0.1, 0.01, 0.001]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = cli(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(out.join("study.json").exists());
}

#[test]
fn study_without_section_is_a_config_error() {
    let o = cli(&["study", "--override", "mesh.nx=4"]);
    assert_eq!(o.status.code(), Some(2));
}
