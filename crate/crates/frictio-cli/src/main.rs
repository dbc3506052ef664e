//! Batch front end for the contact solvers: run scenarios, emit CSV/JSON
//! artifacts, verify trajectory files against the contact laws.
//!
//! Exit codes: 0 all checks pass, 1 configuration error, 2 residual
//! failure, 3 solver non-convergence.

mod scenario;

use std::fmt::Write as _;
use std::path::Path;

use frictio::contact::{
    check_incremental_kkt, check_quasistatic, ContactState, FrictionCoefficient, LoadPath,
    NtVec2, ResidualReport, StiffnessMatrix2, Trajectory,
};
use frictio::fem::{march_fem, ElasticMaterial, LoadMode, PlaneMesh};
use frictio::incremental::{continuum_family, solve_incremental, IncrementalError};
use frictio::march::{jump_scenario, march, MarchError, MarchReport};

use scenario::{Kind, Scenario};

const USAGE: &str = "\
usage:
  frictio run [KIND] [--scenario FILE] [flags...]
  frictio verify TRAJECTORY.csv SCENARIO.json [--tol X]

kinds: incremental | march | fem-march | jump-scenario | continuum-family | critical

flags:
  --scenario FILE     scenario file (JSON); flags override its fields
  --out FILE          trajectory output (CSV)
  --report FILE       report output (JSON)
  --K a,b,c           stiffness k_nn, k_nt, k_tt
  --f X               friction coefficient
  --R X               jump-scenario load magnitude
  --Ft X              continuum-family tangential load
  --F n,t             incremental force
  --wt X              previous tangential position
  --m N               subdivision refinement
  --samples N         continuum-family sample count
  --tol X             residual tolerance
  --seed N            random seed (recorded in reports)
  --load FILE         load path file (JSON)
  --mesh FILE         mesh file (JSON, fem-march)
  --E X --nu X        material parameters (fem-march)
  --mode M            edge-load mode: virtual-work | length-squared
  --sweep p=lo:hi:n   fan out over parameter p in {f, m, r}
  --exact             emit the closed-form trajectory (jump-scenario)

environment: FRICTIO_LOG=1 enables step logging on stderr.";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match dispatch(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

fn verbose() -> bool {
    std::env::var("FRICTIO_LOG").map(|v| !v.is_empty() && v != "0").unwrap_or(false)
}

fn log(msg: &str) {
    if verbose() {
        eprintln!("frictio: {msg}");
    }
}

struct Parsed {
    positionals: Vec<String>,
    flags: Vec<(String, String)>,
    exact: bool,
}

fn parse_args(args: &[String]) -> Result<Parsed, String> {
    let mut positionals = Vec::new();
    let mut flags = Vec::new();
    let mut exact = false;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if let Some(name) = a.strip_prefix("--") {
            if name == "exact" {
                exact = true;
                continue;
            }
            let value = it
                .next()
                .ok_or_else(|| format!("flag --{name} expects a value"))?;
            flags.push((name.to_string(), value.clone()));
        } else {
            positionals.push(a.clone());
        }
    }
    Ok(Parsed { positionals, flags, exact })
}

fn dispatch(args: &[String]) -> Result<i32, String> {
    match args.first().map(String::as_str) {
        Some("run") => cmd_run(&args[1..]),
        Some("verify") => cmd_verify(&args[1..]),
        Some("help") | Some("--help") | Some("-h") => {
            println!("{USAGE}");
            Ok(0)
        }
        Some(other) => Err(format!("unknown command `{other}`\n{USAGE}")),
        None => Err(format!("missing command\n{USAGE}")),
    }
}

fn read_to_string(path: &str) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{s}`"));
    }
    Ok([
        parts[0].trim().parse().map_err(|e| format!("`{s}`: {e}"))?,
        parts[1].trim().parse().map_err(|e| format!("`{s}`: {e}"))?,
    ])
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
    }
    Ok(out)
}

fn apply_flag(s: &mut Scenario, name: &str, value: &str) -> Result<(), String> {
    let num = |v: &str| -> Result<f64, String> { v.parse().map_err(|e| format!("`{v}`: {e}")) };
    match name {
        "K" => s.k = Some(parse_triple(value)?),
        "f" => s.f = Some(num(value)?),
        "R" => s.r = Some(num(value)?),
        "Ft" => s.f_t = Some(num(value)?),
        "F" => s.force = Some(parse_pair(value)?),
        "wt" => s.w_t = Some(num(value)?),
        "m" => s.m = Some(value.parse().map_err(|e| format!("`{value}`: {e}"))?),
        "samples" => s.samples = Some(value.parse().map_err(|e| format!("`{value}`: {e}"))?),
        "tol" => s.tol = Some(num(value)?),
        "seed" => s.seed = Some(value.parse().map_err(|e| format!("`{value}`: {e}"))?),
        "out" => s.out = Some(value.to_string()),
        "report" => s.report = Some(value.to_string()),
        "load" => s.load_file = Some(value.to_string()),
        "mesh" => s.mesh_file = Some(value.to_string()),
        "mode" => s.mode = Some(value.to_string()),
        "E" => s.material.get_or_insert_with(Default::default).e = num(value)?,
        "nu" => s.material.get_or_insert_with(Default::default).nu = num(value)?,
        "scenario" | "sweep" => {}
        other => return Err(format!("unknown flag --{other}")),
    }
    Ok(())
}

fn cmd_run(args: &[String]) -> Result<i32, String> {
    let parsed = parse_args(args)?;
    let mut s = Scenario::default();
    if let Some((_, path)) = parsed.flags.iter().find(|(n, _)| n == "scenario") {
        let text = read_to_string(path)?;
        s = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    }
    for (name, value) in &parsed.flags {
        apply_flag(&mut s, name, value)?;
    }
    if parsed.exact {
        s.exact = Some(true);
    }
    if let Some(kind) = parsed.positionals.first() {
        s.kind = Some(kind.clone());
    }
    let kind_name = s.kind.clone().ok_or("no scenario kind given")?;
    let kind = Kind::parse(&kind_name).ok_or_else(|| format!("unknown kind `{kind_name}`"))?;

    if let Some((_, spec)) = parsed.flags.iter().find(|(n, _)| n == "sweep") {
        return run_sweep(kind, &s, spec);
    }
    let (code, summary) = execute(kind, &s)?;
    println!("{summary}");
    Ok(code)
}

fn run_sweep(kind: Kind, base: &Scenario, spec: &str) -> Result<i32, String> {
    let (param, range) = spec
        .split_once('=')
        .ok_or_else(|| format!("sweep spec `{spec}` must look like p=lo:hi:n"))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("sweep range `{range}` must look like lo:hi:n"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("`{}`: {e}", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("`{}`: {e}", parts[1]))?;
    let n: usize = parts[2].parse().map_err(|e| format!("`{}`: {e}", parts[2]))?;
    if n == 0 {
        return Err("sweep needs at least one point".into());
    }

    let suffixed = |path: &str, i: usize| -> String {
        let p = Path::new(path);
        match (p.file_stem().and_then(|s| s.to_str()), p.extension().and_then(|e| e.to_str())) {
            (Some(stem), Some(ext)) => {
                p.with_file_name(format!("{stem}.p{i}.{ext}")).to_string_lossy().into_owned()
            }
            _ => format!("{path}.p{i}"),
        }
    };
    let mut points = Vec::new();
    for i in 0..n {
        let v = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        let mut s = base.clone();
        match param {
            "f" => s.f = Some(v),
            "r" => s.r = Some(v),
            "m" => s.m = Some(v.round().max(0.0) as usize),
            other => return Err(format!("sweep parameter `{other}` (use f, m or r)")),
        }
        if let Some(out) = &base.out {
            s.out = Some(suffixed(out, i));
        }
        if let Some(rep) = &base.report {
            s.report = Some(suffixed(rep, i));
        }
        points.push((i, v, s));
    }

    // One worker per point; output files are disjoint, summaries print in
    // index order afterwards.
    let results: Vec<Result<(i32, String), String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|(_, _, s)| scope.spawn(move || execute(kind, s)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut worst = 0;
    for ((i, v, _), result) in points.iter().zip(results) {
        match result {
            Ok((code, summary)) => {
                println!("[{param}={v} #{i}] {summary}");
                worst = worst.max(code);
            }
            Err(msg) => {
                eprintln!("[{param}={v} #{i}] error: {msg}");
                worst = worst.max(1);
            }
        }
    }
    Ok(worst)
}

fn stiffness_of(s: &Scenario) -> Result<StiffnessMatrix2, String> {
    let k = s.k.ok_or("missing stiffness (--K a,b,c)")?;
    StiffnessMatrix2::new(k[0], k[1], k[2]).map_err(|e| e.to_string())
}

fn friction_of(s: &Scenario) -> Result<FrictionCoefficient, String> {
    FrictionCoefficient::new(s.f.ok_or("missing friction coefficient (--f)")?)
        .map_err(|e| e.to_string())
}

fn load_of(s: &Scenario) -> Result<LoadPath, String> {
    if let Some(load) = &s.load {
        return Ok(load.clone());
    }
    if let Some(path) = &s.load_file {
        let text = read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"));
    }
    Err("missing load path (inline `load` or --load FILE)".into())
}

fn mode_of(s: &Scenario) -> Result<LoadMode, String> {
    match s.mode.as_deref() {
        None | Some("virtual-work") => Ok(LoadMode::VirtualWork),
        Some("length-squared") => Ok(LoadMode::LengthSquared),
        Some(other) => Err(format!("unknown mode `{other}` (virtual-work | length-squared)")),
    }
}

fn u0_of(s: &Scenario) -> ContactState {
    match s.u0 {
        Some([un, ut, tn, tt]) => ContactState::new(un, ut, tn, tt),
        None => ContactState::ZERO,
    }
}

fn write_file(path: &str, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{path}: {e}"))
}

fn march_exit(err: MarchError) -> Result<i32, String> {
    match err {
        MarchError::InadmissibleInitialCondition { max, .. } => {
            eprintln!("initial condition rejected (max residual {max:.3e})");
            Ok(2)
        }
        MarchError::Incremental(IncrementalError::NonConvergence { iterations }) => {
            eprintln!("incremental solver did not converge within {iterations} iterations");
            Ok(3)
        }
        other => Err(other.to_string()),
    }
}

fn summarize_march(kind: Kind, rep: &MarchReport, check: &ResidualReport, out: Option<&str>) -> String {
    let mut line = format!(
        "{}: steps={} jumps={} max_residual={:.3e} stability_constant={:.3e}",
        kind.name(),
        rep.trajectory.breakpoints().len() - 1,
        rep.jumps.len(),
        check.max_residual(),
        rep.stability_constant,
    );
    for j in &rep.jumps {
        let _ = write!(line, " jump@{:.6}(|du|={:.6})", j.time, j.magnitude);
    }
    if let Some(path) = out {
        let _ = write!(line, " -> {path}");
    }
    line
}

fn finish_march(
    kind: Kind,
    s: &Scenario,
    k: &StiffnessMatrix2,
    f: FrictionCoefficient,
    load: &LoadPath,
    rep: &MarchReport,
) -> Result<(i32, String), String> {
    let tol = s.tol.unwrap_or(1e-9);
    // The marched trajectory solves the quasi-static problem with the
    // held-value interpolant of the load exactly; that is what is checked.
    let held = load
        .piecewise_constant_interpolant(rep.trajectory.breakpoints())
        .map_err(|e| e.to_string())?;
    let check = check_quasistatic(&rep.trajectory, &held, k, f, tol).map_err(|e| e.to_string())?;
    if let Some(out) = &s.out {
        write_file(out, &rep.trajectory.to_csv())?;
    }
    if let Some(report) = &s.report {
        let json = serde_json::json!({
            "kind": kind.name(),
            "seed": s.seed.unwrap_or(0),
            "summary": rep.summary(),
            "check": check,
        });
        write_file(report, &serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?)?;
    }
    let code = if check.pass { 0 } else { 2 };
    Ok((code, summarize_march(kind, rep, &check, s.out.as_deref())))
}

fn execute(kind: Kind, s: &Scenario) -> Result<(i32, String), String> {
    match kind {
        Kind::Critical => {
            let k = stiffness_of(s)?;
            let text = match k.critical_friction().finite() {
                Some(v) => format!("f_crit = {v}"),
                None => "f_crit = unbounded".to_string(),
            };
            Ok((0, text))
        }
        Kind::Incremental => {
            let k = stiffness_of(s)?;
            let f = friction_of(s)?;
            let force = NtVec2::from(s.force.ok_or("missing force (--F n,t)")?);
            let w_t = s.w_t.unwrap_or(0.0);
            let tol = s.tol.unwrap_or(1e-10);
            let sol = match solve_incremental(&k, force, w_t, f) {
                Ok(sol) => sol,
                Err(IncrementalError::NonConvergence { iterations }) => {
                    eprintln!("no fixed point within {iterations} iterations");
                    return Ok((3, "incremental: non-convergence".into()));
                }
                Err(e) => return Err(e.to_string()),
            };
            let check = check_incremental_kkt(&k, force, w_t, f, &sol.state, tol);
            if let Some(path) = s.report.as_deref().or(s.out.as_deref()) {
                let json = serde_json::json!({
                    "kind": "incremental",
                    "solution": sol,
                    "check": check,
                });
                write_file(path, &serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?)?;
            }
            let code = if check.pass { 0 } else { 2 };
            let summary = format!(
                "incremental: u=({:.6e},{:.6e}) t=({:.6e},{:.6e}) regime={:?} unique={} max_residual={:.3e}",
                sol.state.u.n, sol.state.u.t, sol.state.t.n, sol.state.t.t,
                sol.regime, sol.unique, check.max_residual()
            );
            Ok((code, summary))
        }
        Kind::March => {
            let k = stiffness_of(s)?;
            let f = friction_of(s)?;
            let load = load_of(s)?;
            let m = s.m.unwrap_or(1000);
            log(&format!("march: m={m}, horizon={}", load.horizon()));
            let rep = match march(&k, &load, &u0_of(s), f, m) {
                Ok(rep) => rep,
                Err(e) => return march_exit(e).map(|c| (c, "march: failed".into())),
            };
            finish_march(Kind::March, s, &k, f, &load, &rep)
        }
        Kind::JumpScenario => {
            let k = stiffness_of(s)?;
            let f = friction_of(s)?;
            let r = s.r.unwrap_or(1.0);
            let (load, exact) = jump_scenario(&k, r, f).map_err(|e| e.to_string())?;
            if s.exact.unwrap_or(false) {
                let tol = s.tol.unwrap_or(1e-12);
                let check =
                    check_quasistatic(&exact, &load, &k, f, tol).map_err(|e| e.to_string())?;
                if let Some(out) = &s.out {
                    write_file(out, &exact.to_csv())?;
                }
                let code = if check.pass { 0 } else { 2 };
                let summary = format!(
                    "jump-scenario (exact): jumps=1 max_residual={:.3e}{}",
                    check.max_residual(),
                    s.out.as_deref().map(|o| format!(" -> {o}")).unwrap_or_default()
                );
                return Ok((code, summary));
            }
            let m = s.m.unwrap_or(2000);
            log(&format!("jump-scenario march: m={m}"));
            let rep = match march(&k, &load, &ContactState::ZERO, f, m) {
                Ok(rep) => rep,
                Err(e) => return march_exit(e).map(|c| (c, "jump-scenario: failed".into())),
            };
            finish_march(Kind::JumpScenario, s, &k, f, &load, &rep)
        }
        Kind::ContinuumFamily => {
            let k = stiffness_of(s)?;
            let f = friction_of(s)?;
            let f_t = s.f_t.ok_or("missing tangential load (--Ft)")?;
            let samples = s.samples.unwrap_or(101).max(2);
            let tol = s.tol.unwrap_or(1e-10);
            let family = continuum_family(&k, f, f_t).map_err(|e| e.to_string())?;
            let (lo, hi) = family.t_n_range;
            let mut worst = 0.0f64;
            let mut all_pass = true;
            let mut members = Vec::new();
            for i in 0..samples {
                let t_n = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
                let state = family.state_at(t_n);
                let check = check_incremental_kkt(&k, family.force, 0.0, f, &state, tol);
                worst = worst.max(check.max_residual());
                all_pass &= check.pass;
                members.push(serde_json::json!({ "t_n": t_n, "state": state }));
            }
            if let Some(path) = s.report.as_deref().or(s.out.as_deref()) {
                let json = serde_json::json!({
                    "kind": "continuum-family",
                    "force": family.force,
                    "t_n_range": [lo, hi],
                    "members": members,
                });
                write_file(path, &serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?)?;
            }
            let code = if all_pass { 0 } else { 2 };
            Ok((
                code,
                format!(
                    "continuum-family: F=({},{}) t_n in [{lo},{hi}] samples={samples} max_residual={worst:.3e}",
                    family.force.n, family.force.t
                ),
            ))
        }
        Kind::FemMarch => {
            let mesh_path = s.mesh_file.as_ref().ok_or("missing mesh (--mesh FILE)")?;
            let mesh: PlaneMesh = serde_json::from_str(&read_to_string(mesh_path)?)
                .map_err(|e| format!("{mesh_path}: {e}"))?;
            let mspec = s.material.as_ref().ok_or("missing material (--E, --nu)")?;
            let mat = ElasticMaterial::new(mspec.e, mspec.nu).map_err(|e| e.to_string())?;
            let f = friction_of(s)?;
            let traction = load_of(s)?;
            let m = s.m.unwrap_or(1000);
            let mode = mode_of(s)?;
            let volume = s.volume.unwrap_or([0.0, 0.0]);
            let u0 = vec![[0.0, 0.0]; mesh.nodes().len()];
            let tol = s.tol.unwrap_or(1e-9);
            log(&format!("fem-march: m={m}, nodes={}", mesh.nodes().len()));
            let rep = match march_fem(
                &mesh,
                &mat,
                &traction,
                volume,
                mode,
                &u0,
                f,
                m,
                &frictio::march::MarchOptions::default(),
            ) {
                Ok(rep) => rep,
                Err(frictio::fem::FemError::NonConvergence { iterations, residual }) => {
                    eprintln!(
                        "nodal solver stalled after {iterations} iterations (residual {residual:.3e})"
                    );
                    return Ok((3, "fem-march: non-convergence".into()));
                }
                Err(frictio::fem::FemError::InadmissibleInitialCondition { max }) => {
                    eprintln!("initial nodal state rejected (max residual {max:.3e})");
                    return Ok((2, "fem-march: inadmissible initial state".into()));
                }
                Err(e) => return Err(e.to_string()),
            };
            if let Some(out) = &s.out {
                write_file(out, &rep.to_csv())?;
            }
            let max_energy = rep.max_energy_residual();
            if let Some(report) = &s.report {
                let json = serde_json::json!({
                    "kind": "fem-march",
                    "steps": rep.times.len() - 1,
                    "jumps": rep.jumps,
                    "stability_constant": rep.stability_constant,
                    "max_energy_residual": max_energy,
                });
                write_file(report, &serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?)?;
            }
            let code = if max_energy <= tol.max(1e-9) { 0 } else { 2 };
            let mut summary = format!(
                "fem-march: steps={} jumps={} max_energy_residual={max_energy:.3e} stability_constant={:.3e}",
                rep.times.len() - 1,
                rep.jumps.len(),
                rep.stability_constant,
            );
            if let Some(out) = &s.out {
                let _ = write!(summary, " -> {out}");
            }
            Ok((code, summary))
        }
    }
}

fn cmd_verify(args: &[String]) -> Result<i32, String> {
    let parsed = parse_args(args)?;
    let [traj_path, scenario_path] = parsed.positionals.as_slice() else {
        return Err(format!("verify expects TRAJECTORY.csv SCENARIO.json\n{USAGE}"));
    };
    let mut s: Scenario = serde_json::from_str(&read_to_string(scenario_path)?)
        .map_err(|e| format!("{scenario_path}: {e}"))?;
    for (name, value) in &parsed.flags {
        apply_flag(&mut s, name, value)?;
    }
    let kind_name = s.kind.clone().ok_or("scenario has no kind")?;
    let kind = Kind::parse(&kind_name).ok_or_else(|| format!("unknown kind `{kind_name}`"))?;
    let k = stiffness_of(&s)?;
    let f = friction_of(&s)?;
    let load = match kind {
        Kind::March => load_of(&s)?,
        Kind::JumpScenario => {
            jump_scenario(&k, s.r.unwrap_or(1.0), f).map_err(|e| e.to_string())?.0
        }
        other => {
            return Err(format!(
                "verify supports march and jump-scenario trajectories, not {}",
                other.name()
            ))
        }
    };
    if load.horizon() <= 0.0 {
        return Err("load has an empty horizon".into());
    }
    let traj = Trajectory::from_csv(&read_to_string(traj_path)?).map_err(|e| e.to_string())?;
    let tol = s.tol.unwrap_or(1e-9);
    // A marched trajectory is exact for the held-value interpolant of the
    // load on its own breakpoints; a closed-form trajectory is exact for
    // the load itself. Accept either reading.
    let against_load = check_quasistatic(&traj, &load, &k, f, tol).map_err(|e| e.to_string())?;
    let held = load
        .piecewise_constant_interpolant(traj.breakpoints())
        .map_err(|e| e.to_string())?;
    let against_held = check_quasistatic(&traj, &held, &k, f, tol).map_err(|e| e.to_string())?;
    let best = if against_held.max_residual() <= against_load.max_residual() {
        against_held
    } else {
        against_load
    };
    println!(
        "verify: {} breakpoints, {} jump records, max_residual={:.3e} -> {}",
        traj.breakpoints().len(),
        traj.jumps().len(),
        best.max_residual(),
        if best.pass { "pass" } else { "FAIL" }
    );
    Ok(if best.pass { 0 } else { 2 })
}
