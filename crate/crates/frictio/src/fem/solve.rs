use serde::Serialize;

use super::mesh::{ElasticMaterial, PlaneMesh};
use super::system::{assemble, assemble_load, CoordKind, DenseSym, FemLoad, FemSystem};
use super::FemError;
use crate::contact::{FrictionCoefficient, LoadPath, ResidualReport};
use crate::march::{build_subdivision, DetectedJump};

/// Contact reaction carried by one gamma_c node, in its (n, t) frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NodeReaction {
    pub node: usize,
    pub t_n: f64,
    pub t_t: f64,
}

/// Solution of one nodal incremental problem.
#[derive(Clone, Debug)]
pub struct FemIncrementalSolution {
    /// Plane-frame displacement of every node (clamped nodes zero).
    pub displacements: Vec<[f64; 2]>,
    pub reactions: Vec<NodeReaction>,
    /// Friction bounds at the returned fixed point, one per contact node.
    pub sigmas: Vec<f64>,
    pub outer_iterations: usize,
}

const CD_TOL: f64 = 1e-13;
const CD_MAX_SWEEPS: usize = 20_000;
const OUTER_MAX_ITERS: usize = 10_000;

/// One pass of cyclic coordinate minimization of
/// `1/2 x.Ax - b.x + sum_j sigma_j |x_tj - w_j|` under `x_nj <= gap_j`.
/// Every scalar subproblem has a closed form (clamp or soft threshold).
fn cd_sweep(
    m: &DenseSym,
    b: &[f64],
    sys: &FemSystem,
    sigmas: &[f64],
    w_t: &[f64],
    freeze_tangential: bool,
    x: &mut [f64],
) -> f64 {
    let n = m.n;
    let mut worst = 0.0f64;
    for k in 0..n {
        let kind = sys.coord_kind[k];
        if freeze_tangential && matches!(kind, CoordKind::ContactTangent(_)) {
            continue;
        }
        let akk = m.at(k, k);
        let mut r = b[k];
        let row = &m.a[k * n..(k + 1) * n];
        for (l, (a, v)) in row.iter().zip(x.iter()).enumerate() {
            if l != k {
                r -= a * v;
            }
        }
        let new = match kind {
            CoordKind::ContactTangent(j) => {
                let d = r - akk * w_t[j];
                if d.abs() <= sigmas[j] {
                    w_t[j]
                } else {
                    (r - sigmas[j] * d.signum()) / akk
                }
            }
            CoordKind::ContactNormal(j) => (r / akk).min(sys.contacts()[j].gap),
            CoordKind::Free => r / akk,
        };
        worst = worst.max((new - x[k]).abs());
        x[k] = new;
    }
    worst
}

fn cd_solve(
    m: &DenseSym,
    b: &[f64],
    sys: &FemSystem,
    sigmas: &[f64],
    w_t: &[f64],
    freeze_tangential: bool,
    x: &mut [f64],
) -> Result<(), FemError> {
    let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for _ in 0..CD_MAX_SWEEPS {
        let change = cd_sweep(m, b, sys, sigmas, w_t, freeze_tangential, x);
        if change <= CD_TOL * scale {
            return Ok(());
        }
    }
    Err(FemError::NonConvergence { iterations: CD_MAX_SWEEPS, residual: f64::NAN })
}

fn reactions_of(m: &DenseSym, b: &[f64], sys: &FemSystem, x: &[f64]) -> Vec<NodeReaction> {
    let mut ax = vec![0.0; m.n];
    m.mul_vec(x, &mut ax);
    sys.contacts()
        .iter()
        .map(|c| NodeReaction {
            node: c.node,
            t_n: ax[c.dof_n] - b[c.dof_n],
            t_t: ax[c.dof_t] - b[c.dof_t],
        })
        .collect()
}

/// Solves the nodal Coulomb incremental problem on a pre-assembled system.
///
/// The stick trial (all tangential dofs held at `w_t`) is accepted whenever
/// every node's reaction lies inside its friction cone. Otherwise a fixed
/// point of the per-node bound update `sigma_j <- -f t_nj` is located: by a
/// bracketed scalar search when there is a single contact node, and by
/// damped iteration otherwise (plain for 100 iterations, then factor 0.5).
fn solve_with_system(
    sys: &FemSystem,
    b: &[f64],
    w_t: &[f64],
    f: FrictionCoefficient,
    mesh: &PlaneMesh,
    warm: Option<&[f64]>,
) -> Result<FemIncrementalSolution, FemError> {
    let nc = sys.contacts().len();
    if w_t.len() != nc {
        return Err(FemError::BadInput(format!(
            "expected {} previous tangential positions, got {}",
            nc,
            w_t.len()
        )));
    }
    let m = &sys.matrix;
    let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut x = warm.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; m.n]);

    // Stick trial.
    for (j, c) in sys.contacts().iter().enumerate() {
        x[c.dof_t] = w_t[j];
    }
    let huge = vec![f64::INFINITY; nc];
    cd_solve(m, b, sys, &huge, w_t, true, &mut x)?;
    let reactions = reactions_of(m, b, sys, &x);
    let stick_ok = reactions
        .iter()
        .all(|r| r.t_t.abs() <= -f.get() * r.t_n + 1e-12 * scale);
    if stick_ok {
        let sigmas = reactions.iter().map(|r| -f.get() * r.t_n).collect();
        return Ok(FemIncrementalSolution {
            displacements: sys.expand(mesh, &x),
            reactions,
            sigmas,
            outer_iterations: 1,
        });
    }

    if nc == 1 {
        // Scalar pressure map: bracket, scan for the first sign change of
        // P(sigma) - sigma, then bisect.
        let evals = std::cell::Cell::new(0usize);
        let pressure = |sigma: f64, x: &mut Vec<f64>| -> Result<f64, FemError> {
            evals.set(evals.get() + 1);
            cd_solve(m, b, sys, &[sigma.max(0.0)], w_t, false, x)?;
            Ok(-f.get() * reactions_of(m, b, sys, x)[0].t_n)
        };
        let p0 = pressure(0.0, &mut x)?;
        if p0 <= 1e-14 * scale {
            let reactions = reactions_of(m, b, sys, &x);
            return Ok(FemIncrementalSolution {
                displacements: sys.expand(mesh, &x),
                reactions,
                sigmas: vec![0.0],
                outer_iterations: evals.get(),
            });
        }
        let mut hi = 2.0 * p0.max(scale);
        let mut g_hi = pressure(hi, &mut x)? - hi;
        let mut doublings = 0;
        while g_hi > 0.0 && doublings < 100 {
            hi *= 2.0;
            g_hi = pressure(hi, &mut x)? - hi;
            doublings += 1;
        }
        if g_hi > 0.0 {
            return Err(FemError::NonConvergence { iterations: evals.get(), residual: g_hi });
        }
        let mut lo = 0.0;
        for j in 1..=64 {
            let s = hi * j as f64 / 64.0;
            let gs = pressure(s, &mut x)? - s;
            if gs <= 0.0 {
                hi = s;
                break;
            }
            lo = s;
        }
        while hi - lo > 1e-12 * 1.0f64.max(hi) && evals.get() < OUTER_MAX_ITERS {
            let mid = 0.5 * (lo + hi);
            let gm = pressure(mid, &mut x)? - mid;
            if gm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let sigma = hi;
        pressure(sigma, &mut x)?;
        let reactions = reactions_of(m, b, sys, &x);
        return Ok(FemIncrementalSolution {
            displacements: sys.expand(mesh, &x),
            reactions,
            sigmas: vec![sigma],
            outer_iterations: evals.get(),
        });
    }

    // Damped vector fixed point.
    let mut sigmas = vec![0.0f64; nc];
    for iter in 0..OUTER_MAX_ITERS {
        cd_solve(m, b, sys, &sigmas, w_t, false, &mut x)?;
        let reactions = reactions_of(m, b, sys, &x);
        let mut worst = 0.0f64;
        let alpha = if iter < 100 { 1.0 } else { 0.5 };
        for (j, r) in reactions.iter().enumerate() {
            let target = (-f.get() * r.t_n).max(0.0);
            worst = worst.max((target - sigmas[j]).abs());
            sigmas[j] += alpha * (target - sigmas[j]);
        }
        if worst <= 1e-12 * scale {
            return Ok(FemIncrementalSolution {
                displacements: sys.expand(mesh, &x),
                reactions,
                sigmas,
                outer_iterations: iter + 1,
            });
        }
    }
    let residual = {
        let reactions = reactions_of(m, b, sys, &x);
        reactions
            .iter()
            .zip(&sigmas)
            .map(|(r, s)| ((-f.get() * r.t_n).max(0.0) - s).abs())
            .fold(0.0f64, f64::max)
    };
    Err(FemError::NonConvergence { iterations: OUTER_MAX_ITERS, residual })
}

/// Nodal Coulomb incremental solve on a mesh: assembles the system and the
/// load, then runs the splitting of [`solve_with_system`].
pub fn solve_incremental_fem(
    mesh: &PlaneMesh,
    mat: &ElasticMaterial,
    load: &FemLoad,
    w_t: &[f64],
    f: FrictionCoefficient,
) -> Result<FemIncrementalSolution, FemError> {
    let sys = assemble(mesh, mat)?;
    let b = assemble_load(mesh, &sys, load)?;
    solve_with_system(&sys, &b, w_t, f, mesh, None)
}

/// Verifies a nodal solution against the incremental laws: equilibrium of
/// every free dof (with the reactions as the only contact forces), and the
/// Signorini, cone and flow conditions node by node.
pub fn check_fem_incremental(
    mesh: &PlaneMesh,
    mat: &ElasticMaterial,
    load: &FemLoad,
    w_t: &[f64],
    f: FrictionCoefficient,
    sol: &FemIncrementalSolution,
    tol: f64,
) -> Result<ResidualReport, FemError> {
    let sys = assemble(mesh, mat)?;
    let b = assemble_load(mesh, &sys, load)?;
    let x = sys.reduce(mesh, &sol.displacements);
    let mut ax = vec![0.0; sys.n_dofs()];
    sys.matrix.mul_vec(&x, &mut ax);

    use crate::contact::residual_parts::{cone_residual, flow_residual, signorini_residual};
    let mut eq: f64 = 0.0;
    let mut sig: f64 = 0.0;
    let mut cone: f64 = 0.0;
    let mut flow: f64 = 0.0;
    for k in 0..sys.n_dofs() {
        let reaction = sys
            .contacts()
            .iter()
            .zip(&sol.reactions)
            .find_map(|(c, r)| {
                if c.dof_n == k {
                    Some(r.t_n)
                } else if c.dof_t == k {
                    Some(r.t_t)
                } else {
                    None
                }
            })
            .unwrap_or(0.0);
        eq = eq.max((ax[k] - b[k] - reaction).abs());
    }
    for ((c, r), w) in sys.contacts().iter().zip(&sol.reactions).zip(w_t) {
        let u_n = x[c.dof_n];
        let u_t = x[c.dof_t];
        sig = sig.max(signorini_residual(u_n - c.gap, r.t_n));
        cone = cone.max(cone_residual(f, r.t_n, r.t_t));
        flow = flow.max(flow_residual(f, r.t_n, r.t_t, u_t - w));
    }
    let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(ResidualReport::from_parts(eq, sig, cone, flow, scale, tol))
}

/// Report of a nodal quasi-static march.
#[derive(Clone, Debug)]
pub struct FemMarchReport {
    pub times: Vec<f64>,
    /// Per step, plane-frame displacement of every node.
    pub displacements: Vec<Vec<[f64; 2]>>,
    pub reactions: Vec<Vec<NodeReaction>>,
    pub jumps: Vec<DetectedJump>,
    pub stability_constant: f64,
    pub energy_residuals: Vec<f64>,
    pub subdivision_times: Vec<f64>,
}

impl FemMarchReport {
    pub fn max_energy_residual(&self) -> f64 {
        self.energy_residuals.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// CSV rows `s,node,u_x,u_y,t_n,t_t,is_jump_left_row`, one row per node
    /// per breakpoint; at a jump the previous state is re-emitted first with
    /// the flag set.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("s,node,u_x,u_y,t_n,t_t,is_jump_left_row\n");
        let write_block = |s: f64, step: usize, flag: u8, out: &mut String| {
            for (node, u) in self.displacements[step].iter().enumerate() {
                let (t_n, t_t) = self.reactions[step]
                    .iter()
                    .find(|r| r.node == node)
                    .map_or((0.0, 0.0), |r| (r.t_n, r.t_t));
                let _ = writeln!(
                    out,
                    "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    s, node, u[0], u[1], t_n, t_t, flag
                );
            }
        };
        for (i, &s) in self.times.iter().enumerate() {
            if i > 0 && self.jumps.iter().any(|j| j.time == s) {
                write_block(s, i - 1, 1, &mut out);
            }
            write_block(s, i, 0, &mut out);
        }
        out
    }
}

/// Marches the mesh through a traction history: the load path's values are
/// plane-frame tractions `[T_x, T_y]` applied uniformly to every gamma_t
/// edge, on top of a constant body force. Stepping, jump detection and
/// localization mirror the 2-DOF march.
#[allow(clippy::too_many_arguments)]
pub fn march_fem(
    mesh: &PlaneMesh,
    mat: &ElasticMaterial,
    traction: &LoadPath,
    volume: [f64; 2],
    mode: crate::fem::LoadMode,
    u0: &[[f64; 2]],
    f: FrictionCoefficient,
    m: usize,
    opts: &crate::march::MarchOptions,
) -> Result<FemMarchReport, FemError> {
    let sys = assemble(mesh, mat)?;
    if u0.len() != mesh.nodes().len() {
        return Err(FemError::BadInput(format!(
            "expected {} initial nodal displacements, got {}",
            mesh.nodes().len(),
            u0.len()
        )));
    }
    let rhs = |s: f64| -> Result<Vec<f64>, FemError> {
        let mut load = FemLoad::uniform_traction(mesh, traction.value(s));
        load.volume = volume;
        load.mode = mode;
        assemble_load(mesh, &sys, &load)
    };

    // Admissibility of the initial state: equilibrated off the contact set,
    // law-abiding on it.
    let x0 = sys.reduce(mesh, u0);
    let b0 = rhs(0.0)?;
    {
        let mut ax = vec![0.0; sys.n_dofs()];
        sys.matrix.mul_vec(&x0, &mut ax);
        let scale = 1.0 + b0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut worst = 0.0f64;
        use crate::contact::residual_parts::{cone_residual, signorini_residual};
        for k in 0..sys.n_dofs() {
            if sys.contacts().iter().any(|c| c.dof_n == k || c.dof_t == k) {
                continue;
            }
            worst = worst.max((ax[k] - b0[k]).abs());
        }
        for c in sys.contacts() {
            let t_n = ax[c.dof_n] - b0[c.dof_n];
            let t_t = ax[c.dof_t] - b0[c.dof_t];
            worst = worst.max(signorini_residual(x0[c.dof_n] - c.gap, t_n));
            worst = worst.max(cone_residual(f, t_n, t_t));
        }
        if worst > opts.admissibility_tol * scale {
            return Err(FemError::InadmissibleInitialCondition { max: worst });
        }
    }

    let sub = build_subdivision(traction, m);
    let share = traction.cumulative_variation(traction.horizon()) / (m + 1) as f64;
    // Norm of the traction-to-rhs map, so the per-step variation share can
    // be expressed in force units for the jump threshold.
    let rho = {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut ux = FemLoad::uniform_traction(mesh, [1.0, 0.0]);
        ux.mode = mode;
        let mut uy = FemLoad::uniform_traction(mesh, [0.0, 1.0]);
        uy.mode = mode;
        let bx = assemble_load(mesh, &sys, &ux)?;
        let by = assemble_load(mesh, &sys, &uy)?;
        norm(&bx).max(norm(&by)).max(1e-30)
    };

    let mut times = vec![0.0];
    let mut xs = vec![x0.clone()];
    let mut displacements = vec![sys.expand(mesh, &x0)];
    let mut reactions = {
        let mut ax = vec![0.0; sys.n_dofs()];
        sys.matrix.mul_vec(&x0, &mut ax);
        vec![sys
            .contacts()
            .iter()
            .map(|c| NodeReaction {
                node: c.node,
                t_n: ax[c.dof_n] - b0[c.dof_n],
                t_t: ax[c.dof_t] - b0[c.dof_t],
            })
            .collect::<Vec<_>>()]
    };
    let mut jumps = Vec::new();
    let mut energy_residuals = Vec::new();
    let mut stability: f64 = 0.0;

    let w_of = |x: &[f64]| -> Vec<f64> { sys.contacts().iter().map(|c| x[c.dof_t]).collect() };

    let mut push_step = |s: f64,
                         sol: FemIncrementalSolution,
                         b: &[f64],
                         times: &mut Vec<f64>,
                         xs: &mut Vec<Vec<f64>>| {
        let x_new = sys.reduce(mesh, &sol.displacements);
        let x_prev = xs.last().unwrap();
        let dx: Vec<f64> = x_new.iter().zip(x_prev).map(|(a, b)| a - b).collect();
        let mut adx = vec![0.0; sys.n_dofs()];
        sys.matrix.mul_vec(&dx, &mut adx);
        let mut energy = x_new.iter().zip(&adx).map(|(a, b)| a * b).sum::<f64>()
            - b.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
        for (c, r) in sys.contacts().iter().zip(&sol.reactions) {
            energy -= r.t_n * dx[c.dof_n] + f.get() * r.t_n * dx[c.dof_t].abs();
        }
        energy_residuals.push(energy.abs());
        times.push(s);
        xs.push(x_new);
        displacements.push(sol.displacements);
        reactions.push(sol.reactions);
    };

    let diff_norm = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    for step in 1..sub.times.len() {
        let s_prev = *times.last().unwrap();
        let s_i = sub.times[step];
        let b = rhs(s_i)?;
        let b_prev = rhs(s_prev)?;
        let w = w_of(xs.last().unwrap());
        let prev_x = xs.last().unwrap().clone();
        let sol = solve_with_system(&sys, &b, &w, f, mesh, Some(&prev_x))?;

        let x_new = sys.reduce(mesh, &sol.displacements);
        let du = diff_norm(&x_new, &prev_x);
        let db = diff_norm(&b, &b_prev);
        let threshold = opts.jump_factor * (db + share * rho);
        if du > threshold {
            // Localize the transition in time by bisection.
            let (mut a, mut bt) = (s_prev, s_i);
            let mut sol_b = sol;
            let mut b_star = b.clone();
            if opts.localize_jumps {
                while bt - a > 1e-13 * 1.0f64.max(bt.abs()) {
                    let mid = 0.5 * (a + bt);
                    let b_mid = rhs(mid)?;
                    let cand = solve_with_system(&sys, &b_mid, &w, f, mesh, Some(&prev_x))?;
                    let x_mid = sys.reduce(mesh, &cand.displacements);
                    let du_mid = diff_norm(&x_mid, &prev_x);
                    let db_mid = diff_norm(&b_mid, &b_prev);
                    if du_mid > opts.jump_factor * (db_mid + share * rho) {
                        bt = mid;
                        sol_b = cand;
                        b_star = b_mid;
                    } else {
                        a = mid;
                    }
                }
            }
            let x_star = sys.reduce(mesh, &sol_b.displacements);
            let magnitude = diff_norm(&x_star, &prev_x);
            jumps.push(DetectedJump { time: bt, magnitude });
            if db > 0.0 {
                stability = stability.max(magnitude / db);
            } else {
                stability = f64::INFINITY;
            }
            let t_star = bt;
            push_step(t_star, sol_b, &b_star, &mut times, &mut xs);
            if t_star < s_i {
                let w2 = w_of(xs.last().unwrap());
                let prev2 = xs.last().unwrap().clone();
                let resumed = solve_with_system(&sys, &b, &w2, f, mesh, Some(&prev2))?;
                push_step(s_i, resumed, &b, &mut times, &mut xs);
            }
        } else {
            if db > 0.0 {
                stability = stability.max(du / db);
            } else if du > 1e-12 {
                stability = f64::INFINITY;
            }
            push_step(s_i, sol, &b, &mut times, &mut xs);
        }
    }

    Ok(FemMarchReport {
        times,
        displacements,
        reactions,
        jumps,
        stability_constant: stability,
        energy_residuals,
        subdivision_times: sub.times,
    })
}
