use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_llg-pc"))
}

#[test]
fn mesh_statistics_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.mesh");
    let out = bin()
        .args(["mesh", "--mesh-n", "2", "--check-angle", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("vertices 27"));
    assert!(text.contains("tets 48"));
    assert!(text.contains("angle_condition true"));
    let saved = std::fs::read_to_string(&path).unwrap();
    assert!(saved.starts_with("tetmesh 27 48\n"));

    let out = bin().args(["mesh", "--mesh-file"]).arg(&path).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("vertices 27"));
}

#[test]
fn run_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let status = bin()
        .args([
            "run", "--mesh-n", "2", "--scheme", "PC2_IMEX", "--k", "0.01", "--T", "0.05", "--init", "random",
            "--seed", "4", "--pi-uniaxial", "1", "0", "0", "1", "--f", "-2", "-0.5", "0", "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,t,energy,grad_sq,mean_x,mean_y,mean_z,unit_error,predictor_iterations,wall_time"
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn identical_runs_give_identical_traces() {
    let run = || {
        let out = bin()
            .args(["run", "--mesh-n", "2", "--k", "0.02", "--T", "0.1", "--init", "random", "--seed", "8"])
            .output()
            .unwrap();
        assert!(out.status.success());
        // drop the wall-time column
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn exit_codes() {
    let config_error = bin().args(["run", "--mesh-n", "2", "--theta", "1.5"]).output().unwrap();
    assert_eq!(config_error.status.code(), Some(2));

    let hedgehog_off_origin = bin().args(["run", "--mesh-n", "2", "--init", "hedgehog"]).output().unwrap();
    assert_eq!(hedgehog_off_origin.status.code(), Some(2));

    let unstable = bin()
        .args([
            "run", "--mesh-n", "2", "--init", "random", "--theta", "0", "--k", "0.2", "--T", "20",
            "--fail-on-unstable",
        ])
        .output()
        .unwrap();
    assert_eq!(unstable.status.code(), Some(4));

    let solver = bin()
        .args(["run", "--mesh-n", "2", "--init", "random", "--k", "0.01", "--T", "0.02", "--lin-tol", "1e-30"])
        .output()
        .unwrap();
    assert_eq!(solver.status.code(), Some(3));
}

#[test]
fn converge_and_sweep_csv() {
    let out = bin()
        .args([
            "converge", "--mesh-n", "1", "--schemes", "PC2,PC1", "--k-list", "0.02,0.01", "--k-ref", "0.005",
            "--T", "0.04", "--pi-uniaxial", "1", "0", "0", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("scheme,k,err_h1,linear_iterations,max_tangency,wall_time\n"));
    assert_eq!(text.lines().count(), 5);

    let out = bin()
        .args(["sweep", "--mesh-n", "2", "--init", "hedgehog", "--center", "0", "0", "0", "--thetas", "0.5", "--ks", "0.01,0.02"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("theta,k,stable,steps_taken,verdict,error\n"));
    assert_eq!(text.lines().count(), 3);
}
