//! End-to-end tests of the command-line tool: exit codes, artifact files,
//! determinism, verification round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

static DIR_SEQ: AtomicUsize = AtomicUsize::new(0);

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "frictio-cli-{}-{}-{}",
        tag,
        std::process::id(),
        DIR_SEQ.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn frictio(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frictio"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("failed to launch frictio")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn critical_prints_the_ratio() {
    let dir = workdir("critical");
    let out = frictio(&["run", "critical", "--K", "2,1,2"], &dir);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("f_crit = 2"));

    let out = frictio(&["run", "critical", "--K", "2,0,2"], &dir);
    assert!(stdout(&out).contains("f_crit = unbounded"));
}

#[test]
fn jump_scenario_emits_jump_rows_and_verifies() {
    let dir = workdir("jump");
    let out = frictio(
        &["run", "jump-scenario", "--K", "2,1,2", "--f", "2", "--R", "1", "--m", "500", "--out", "traj.csv"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.join("traj.csv")).unwrap();
    let left_rows: Vec<&str> = csv.lines().filter(|l| l.ends_with(",1")).collect();
    assert_eq!(left_rows.len(), 1, "one jump-left row expected");
    assert!(left_rows[0].starts_with("1.0000000000"), "{}", left_rows[0]);

    std::fs::write(
        dir.join("scen.json"),
        r#"{"kind":"jump-scenario","k":[2.0,1.0,2.0],"f":2.0,"r":1.0,"m":500}"#,
    )
    .unwrap();
    let out = frictio(&["verify", "traj.csv", "scen.json"], &dir);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn verify_rejects_sign_flip() {
    let dir = workdir("flip");
    frictio(
        &["run", "jump-scenario", "--K", "2,1,2", "--f", "2", "--m", "200", "--out", "traj.csv"],
        &dir,
    );
    let csv = std::fs::read_to_string(dir.join("traj.csv")).unwrap();
    // Flip the sign of one normal reaction on the compressive ramp (the
    // first quarter is safely before the jump).
    let mut lines: Vec<String> = csv.lines().map(str::to_owned).collect();
    let target = (lines.len() / 4).max(2);
    let fields: Vec<&str> = lines[target].split(',').collect();
    let mut fixed: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
    let t_n: f64 = fields[3].parse().unwrap();
    assert!(t_n < 0.0, "expected a compressive row at {target}");
    fixed[3] = format!("{:.16e}", -t_n);
    lines[target] = fixed.join(",");
    std::fs::write(dir.join("bad.csv"), lines.join("\n") + "\n").unwrap();
    std::fs::write(
        dir.join("scen.json"),
        r#"{"kind":"jump-scenario","k":[2.0,1.0,2.0],"f":2.0,"r":1.0}"#,
    )
    .unwrap();
    let out = frictio(&["verify", "bad.csv", "scen.json"], &dir);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn verify_rejects_suppressed_jump() {
    // Replace the jump by a continuous hold: the friction cone must fail
    // just past the transition.
    let dir = workdir("nojump");
    std::fs::write(
        dir.join("scen.json"),
        r#"{"kind":"jump-scenario","k":[2.0,1.0,2.0],"f":2.0,"r":1.0}"#,
    )
    .unwrap();
    let held = "s,u_n,u_t,t_n,t_t,is_jump_left_row\n\
        0.0000000000000000e0,0.0,0.0,0.0,0.0,0\n\
        1.1000000000000000e0,0.0,0.0,-6.0e-1,-1.3e0,0\n\
        2.0000000000000000e0,0.0,0.0,-1.5e0,-4.0e0,0\n";
    std::fs::write(dir.join("held.csv"), held).unwrap();
    let out = frictio(&["verify", "held.csv", "scen.json"], &dir);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn march_on_constant_load_is_flat() {
    let dir = workdir("march");
    std::fs::write(
        dir.join("load.json"),
        r#"{"horizon":1.0,"segments":[{"t0":0.0,"t1":1.0,"f0":[0.0,0.0],"f1":[0.0,0.0]}],"jumps":[]}"#,
    )
    .unwrap();
    let out = frictio(
        &["run", "march", "--K", "2,1,2", "--f", "1", "--m", "10", "--load", "load.json", "--out", "flat.csv"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.join("flat.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let u_n: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(u_n, 0.0);
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = workdir("determinism");
    let args = [
        "run", "jump-scenario", "--K", "2,1,2", "--f", "2", "--m", "300",
        "--seed", "7", "--out", "a.csv", "--report", "a.json",
    ];
    let out = frictio(&args, &dir);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let mut args2 = args;
    args2[11] = "b.csv";
    args2[13] = "b.json";
    let out = frictio(&args2, &dir);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let a = std::fs::read(dir.join("a.csv")).unwrap();
    let b = std::fs::read(dir.join("b.csv")).unwrap();
    assert_eq!(a, b);
    let ra = std::fs::read(dir.join("a.json")).unwrap();
    let rb = std::fs::read(dir.join("b.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn incremental_and_continuum_kinds() {
    let dir = workdir("kinds");
    let out = frictio(
        &["run", "incremental", "--K", "2,1,2", "--f", "1", "--F", "2,0", "--report", "inc.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("regime=Stick"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("inc.json")).unwrap()).unwrap();
    assert_eq!(report["check"]["pass"], true);

    let out = frictio(
        &["run", "continuum-family", "--K", "2,1,2", "--f", "2", "--Ft", "3", "--report", "fam.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let fam: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fam.json")).unwrap()).unwrap();
    assert_eq!(fam["t_n_range"][0], -1.5);
    assert_eq!(fam["members"].as_array().unwrap().len(), 101);
}

#[test]
fn fem_march_writes_nodal_rows() {
    let dir = workdir("fem");
    std::fs::write(
        dir.join("mesh.json"),
        r#"{
            "nodes": [[-1.0, 0.0], [0.0, 0.0], [1.0, -1.0]],
            "triangles": [[0, 2, 1]],
            "gamma_u": [1, 2],
            "gamma_t_edges": [[2, 0]],
            "gamma_c": [{"node": 0, "gap": 0.0, "normal": [0.0, 1.0]}]
        }"#,
    )
    .unwrap();
    std::fs::write(
        dir.join("traction.json"),
        r#"{"horizon":1.0,"segments":[{"t0":0.0,"t1":1.0,"f0":[0.0,0.0],"f1":[0.3,-0.4]}],"jumps":[]}"#,
    )
    .unwrap();
    let out = frictio(
        &[
            "run", "fem-march", "--mesh", "mesh.json", "--load", "traction.json",
            "--E", "1", "--nu", "0", "--f", "0.5", "--m", "16", "--out", "nodal.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.join("nodal.csv")).unwrap();
    assert!(csv.starts_with("s,node,u_x,u_y,t_n,t_t,is_jump_left_row"));
    // Three nodes per breakpoint.
    let first_time = csv.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    let rows_at_first: usize =
        csv.lines().skip(1).filter(|l| l.starts_with(&first_time)).count();
    assert_eq!(rows_at_first, 3);
}

#[test]
fn sweep_fans_out_per_point_files() {
    let dir = workdir("sweep");
    let out = frictio(
        &[
            "run", "jump-scenario", "--K", "2,1,2", "--f", "2", "--m", "100",
            "--out", "t.csv", "--sweep", "m=100:300:3",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for i in 0..3 {
        assert!(dir.join(format!("t.p{i}.csv")).exists(), "missing t.p{i}.csv");
    }
    let text = stdout(&out);
    assert!(text.contains("[m=100 #0]"));
    assert!(text.contains("[m=300 #2]"));
}

#[test]
fn config_errors_exit_one() {
    let dir = workdir("config");
    let out = frictio(&["run", "march", "--K", "2,1,2", "--f", "1"], &dir);
    assert_eq!(out.status.code(), Some(1), "missing load must be a config error");

    std::fs::write(dir.join("broken.json"), "{\"kind\": \"march\", \"bogus\": 1}").unwrap();
    let out = frictio(&["run", "--scenario", "broken.json"], &dir);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("bogus") || err.contains("line"), "{err}");

    let out = frictio(&["run", "critical", "--K", "1,5,1"], &dir);
    assert_eq!(out.status.code(), Some(1), "indefinite stiffness rejected");
}
