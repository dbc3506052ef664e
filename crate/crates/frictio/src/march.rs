//! Quasi-static evolution by variation-adaptive time stepping.
//!
//! The load history is subdivided so that every step carries (at most) an
//! equal share of the load's total variation; marching then solves one
//! incremental problem per step, assembling a right-continuous
//! piecewise-constant trajectory. Steps whose displacement increment is not
//! controlled by the load increment are flagged as jumps and localized in
//! time by bisection, which pins spontaneous transitions to the instant the
//! previous state stops being admissible.

use serde::Serialize;
use thiserror::Error;

use crate::contact::{
    check_incremental_kkt, ContactState, FrictionCoefficient, Interpolation, LoadPath,
    LoadPathError, NtVec2, ResidualReport, StiffnessMatrix2, Trajectory, TrajectoryError,
    TrajectoryJump,
};
use crate::incremental::{solve_incremental, IncrementalError};

#[derive(Debug, Error)]
pub enum MarchError {
    #[error("initial condition is not admissible for the load at s=0 (max residual {max:.3e})")]
    InadmissibleInitialCondition { max: f64, report: Box<ResidualReport> },
    #[error(transparent)]
    Incremental(#[from] IncrementalError),
    #[error(transparent)]
    Load(#[from] LoadPathError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("f={f} is below the jump threshold k_tt/k_nt={required}")]
    SubcriticalFriction { f: f64, required: f64 },
    #[error("scenario magnitude must be positive, got {0}")]
    NonPositiveMagnitude(f64),
    #[error("time reparametrization must be strictly increasing and fix 0")]
    NonMonotoneReparam,
}

/// Subdivision of `[0, S]` in which every interior interval gains at least
/// `v(S) / (m + 1)` of load variation, so the number of intervals is at most
/// `m + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subdivision {
    pub times: Vec<f64>,
    pub m: usize,
    /// Variation gained on each interval, `v(times[i+1]) - v(times[i])`.
    pub gains: Vec<f64>,
}

/// Builds the variation-equidistributed subdivision: starting from 0, each
/// next time is the largest `s` at which the cumulative load variation still
/// fits within one more share `v(S)/(m+1)`. Exact on the piecewise
/// representation (affine pieces are inverted in closed form, jump times are
/// compared directly).
pub fn build_subdivision(load: &LoadPath, m: usize) -> Subdivision {
    let horizon = load.horizon();
    let total = load.cumulative_variation(horizon);
    let delta = total / (m + 1) as f64;
    let mut times = vec![0.0];
    let mut gains = Vec::new();
    let mut v_prev = 0.0;
    let mut s_prev = 0.0;
    while s_prev < horizon {
        // Once the level reaches the total variation (up to rounding) the
        // remaining path fits in one interval; snapping avoids a spurious
        // sliver interval from accumulated shortfall.
        let level = v_prev + delta;
        let s_next = if level >= total * (1.0 - 1e-12) {
            horizon
        } else {
            load.sup_time_at_variation_level(level)
        };
        debug_assert!(s_next > s_prev || s_next >= horizon);
        let s_next = if s_next <= s_prev { horizon } else { s_next };
        let v_next = load.cumulative_variation(s_next);
        gains.push(v_next - v_prev);
        times.push(s_next);
        s_prev = s_next;
        v_prev = v_next;
    }
    Subdivision { times, m, gains }
}

/// Knobs for [`march_with_options`].
#[derive(Clone, Copy, Debug)]
pub struct MarchOptions {
    /// A step is recorded as a jump when
    /// `|du| > jump_factor * (|dF| + v(S)/(m+1))`: O(1) spontaneous
    /// transitions stand out against regular steps, whose increments shrink
    /// like the per-step variation share.
    pub jump_factor: f64,
    /// Tolerance for the admissibility check of the initial condition.
    pub admissibility_tol: f64,
    /// Refine detected jumps by bisecting in time, inserting a breakpoint at
    /// the transition instant.
    pub localize_jumps: bool,
}

impl Default for MarchOptions {
    fn default() -> Self {
        MarchOptions { jump_factor: 20.0, admissibility_tol: 1e-9, localize_jumps: true }
    }
}

/// Detected state discontinuity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectedJump {
    pub time: f64,
    /// Euclidean magnitude of the displacement jump.
    pub magnitude: f64,
}

/// Everything a march produces besides its trajectory's raw states.
#[derive(Clone, Debug)]
pub struct MarchReport {
    pub trajectory: Trajectory,
    pub jumps: Vec<DetectedJump>,
    /// Largest `|du| / |dF|` over all executed steps; infinite if some step
    /// moved under a (numerically) unchanged load.
    pub stability_constant: f64,
    /// Per-step residual of the energy identity
    /// `u.K du = F.du + t_n du_n + f t_n |du_t|`.
    pub energy_residuals: Vec<f64>,
    /// Breakpoint indices whose incremental solve reported `unique = false`.
    pub nonunique_steps: Vec<usize>,
    pub subdivision: Subdivision,
}

#[derive(Serialize)]
pub struct MarchSummary {
    pub steps: usize,
    pub jumps: Vec<DetectedJump>,
    pub stability_constant: f64,
    pub max_energy_residual: f64,
    pub energy_residuals: Vec<f64>,
    pub nonunique_steps: Vec<usize>,
}

impl MarchReport {
    pub fn max_energy_residual(&self) -> f64 {
        self.energy_residuals.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn summary(&self) -> MarchSummary {
        MarchSummary {
            steps: self.trajectory.breakpoints().len() - 1,
            jumps: self.jumps.clone(),
            stability_constant: self.stability_constant,
            max_energy_residual: self.max_energy_residual(),
            energy_residuals: self.energy_residuals.clone(),
            nonunique_steps: self.nonunique_steps.clone(),
        }
    }
}

fn value_nt(load: &LoadPath, s: f64) -> NtVec2 {
    NtVec2::from(load.value(s))
}

/// Residual of the per-step energy identity, an algebraic consequence of the
/// incremental optimality conditions.
fn energy_identity_residual(
    k: &StiffnessMatrix2,
    force: NtVec2,
    f: FrictionCoefficient,
    prev: &ContactState,
    next: &ContactState,
) -> f64 {
    let du = next.u - prev.u;
    (next.u.dot(k.mul(du))
        - force.dot(du)
        - next.t.n * du.n
        - f.get() * next.t.n * du.t.abs())
    .abs()
}

/// Marches the evolution with default options.
pub fn march(
    k: &StiffnessMatrix2,
    load: &LoadPath,
    u0: &ContactState,
    f: FrictionCoefficient,
    m: usize,
) -> Result<MarchReport, MarchError> {
    march_with_options(k, load, u0, f, m, &MarchOptions::default())
}

pub fn march_with_options(
    k: &StiffnessMatrix2,
    load: &LoadPath,
    u0: &ContactState,
    f: FrictionCoefficient,
    m: usize,
    opts: &MarchOptions,
) -> Result<MarchReport, MarchError> {
    let admissibility =
        check_incremental_kkt(k, value_nt(load, 0.0), u0.u.t, f, u0, opts.admissibility_tol);
    if !admissibility.pass {
        return Err(MarchError::InadmissibleInitialCondition {
            max: admissibility.max_residual(),
            report: Box::new(admissibility),
        });
    }

    let sub = build_subdivision(load, m);
    let share = load.cumulative_variation(load.horizon()) / (m + 1) as f64;

    let mut times = vec![0.0];
    let mut states = vec![*u0];
    let mut jump_records: Vec<TrajectoryJump> = Vec::new();
    let mut jumps = Vec::new();
    let mut energy_residuals = Vec::new();
    let mut nonunique_steps = Vec::new();
    let mut stability: f64 = 0.0;

    let scale = 1.0f64.max(load.sup_norm_inf()).max(k.norm_inf());

    let mut record_step = |s: f64,
                           sol_state: ContactState,
                           force: NtVec2,
                           force_prev: NtVec2,
                           nonunique: bool,
                           times: &mut Vec<f64>,
                           states: &mut Vec<ContactState>| {
        let prev = *states.last().unwrap();
        let du = (sol_state.u - prev.u).norm();
        let df = (force - force_prev).norm();
        if df > 0.0 {
            stability = stability.max(du / df);
        } else if du > 1e-14 * scale {
            stability = f64::INFINITY;
        }
        energy_residuals.push(energy_identity_residual(k, force, f, &prev, &sol_state));
        times.push(s);
        states.push(sol_state);
        if nonunique {
            nonunique_steps.push(states.len() - 1);
        }
    };

    for step in 1..sub.times.len() {
        let s_prev = *times.last().unwrap();
        let s_i = sub.times[step];
        let force_prev = value_nt(load, s_prev);
        let force = value_nt(load, s_i);
        let prev = *states.last().unwrap();
        let sol = solve_incremental(k, force, prev.u.t, f)?;

        let du = (sol.state.u - prev.u).norm();
        let threshold = opts.jump_factor * ((force - force_prev).norm() + share);
        if du > threshold {
            // The step moved far more than the load did: a spontaneous (or
            // load-jump-driven) transition happened somewhere in
            // ]s_prev, s_i]. Localize it.
            let (t_star, state_star) = if opts.localize_jumps {
                localize_jump(k, load, &prev, f, opts.jump_factor, share, s_prev, s_i)?
            } else {
                (s_i, sol.state)
            };
            let jump_force = value_nt(load, t_star);
            record_step(t_star, state_star, jump_force, value_nt(load, s_prev), !sol.unique, &mut times, &mut states);
            jump_records.push(TrajectoryJump { time: t_star, left: prev, right: state_star });
            jumps.push(DetectedJump {
                time: t_star,
                magnitude: (state_star.u - prev.u).norm(),
            });
            if t_star < s_i {
                // Finish the step from the post-jump state.
                let resumed = solve_incremental(k, force, state_star.u.t, f)?;
                record_step(s_i, resumed.state, force, jump_force, !resumed.unique, &mut times, &mut states);
            }
        } else {
            record_step(s_i, sol.state, force, force_prev, !sol.unique, &mut times, &mut states);
        }
    }

    let trajectory =
        Trajectory::new(times, states, jump_records, Interpolation::PiecewiseConstant)?;
    Ok(MarchReport {
        trajectory,
        jumps,
        stability_constant: stability,
        energy_residuals,
        nonunique_steps,
        subdivision: sub,
    })
}

/// Bisects `]lo, hi]` for the earliest time at which the incremental
/// solution from `prev` departs beyond the jump threshold. Returns that time
/// and the post-transition state.
fn localize_jump(
    k: &StiffnessMatrix2,
    load: &LoadPath,
    prev: &ContactState,
    f: FrictionCoefficient,
    jump_factor: f64,
    share: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, ContactState), MarchError> {
    let force_lo = value_nt(load, lo);
    let mut a = lo;
    let mut b = hi;
    let mut state_b = solve_incremental(k, value_nt(load, hi), prev.u.t, f)?.state;
    while b - a > 1e-13 * 1.0f64.max(b.abs()) {
        let mid = 0.5 * (a + b);
        let force_mid = value_nt(load, mid);
        let sol = solve_incremental(k, force_mid, prev.u.t, f)?;
        let du = (sol.state.u - prev.u).norm();
        if du > jump_factor * ((force_mid - force_lo).norm() + share) {
            b = mid;
            state_b = sol.state;
        } else {
            a = mid;
        }
    }
    Ok((b, state_b))
}

/// Closed-form benchmark: at `f >= k_tt/k_nt`, a piecewise-affine Lipschitz
/// load that forces the resting particle to jump at `s = 1`.
///
/// On `[0, 1]` the load ramps along the critical ray `(s R/f, s R)` while
/// the particle stays put with `t = -F`; past `s = 1` no admissible
/// continuation from rest exists (see [`no_continuation_witness`]) and the
/// exact solution transitions discontinuously to a sliding branch with zero
/// contact reaction. Returns the load together with the exact trajectory
/// (piecewise affine, one jump record at `s = 1`).
pub fn jump_scenario(
    k: &StiffnessMatrix2,
    r: f64,
    f: FrictionCoefficient,
) -> Result<(LoadPath, Trajectory), MarchError> {
    let crit = match k.critical_friction() {
        crate::contact::CriticalFriction::Finite(c) => c,
        crate::contact::CriticalFriction::Unbounded => {
            return Err(MarchError::SubcriticalFriction { f: f.get(), required: f64::INFINITY })
        }
    };
    if f.get() < crit {
        return Err(MarchError::SubcriticalFriction { f: f.get(), required: crit });
    }
    if !(r > 0.0) {
        return Err(MarchError::NonPositiveMagnitude(r));
    }
    let fv = f.get();
    let f1 = [r / fv, r];
    let f2 = [r / fv + 1.0, r + (fv + 1.0)];
    let load = LoadPath::new(
        2.0,
        vec![
            crate::contact::LoadSegment { t0: 0.0, t1: 1.0, f0: [0.0, 0.0], f1 },
            crate::contact::LoadSegment { t0: 1.0, t1: 2.0, f0: f1, f1: f2 },
        ],
        vec![],
    )?;

    let det = k.det();
    let u_at = |s: f64| {
        NtVec2::new(
            (r * (k.k_tt() / fv - k.k_nt()) + (k.k_tt() - k.k_nt() * (fv + 1.0)) * (s - 1.0)) / det,
            (r * (k.k_nn() - k.k_nt() / fv) + (k.k_nn() * (fv + 1.0) - k.k_nt()) * (s - 1.0)) / det,
        )
    };
    let states = vec![
        ContactState::ZERO,
        ContactState { u: u_at(1.0), t: NtVec2::ZERO },
        ContactState { u: u_at(2.0), t: NtVec2::ZERO },
    ];
    let jump = TrajectoryJump {
        time: 1.0,
        left: ContactState { u: NtVec2::ZERO, t: NtVec2::new(-r / fv, -r) },
        right: states[1],
    };
    let trajectory =
        Trajectory::new(vec![0.0, 1.0, 2.0], states, vec![jump], Interpolation::PiecewiseAffine)?;
    Ok((load, trajectory))
}

/// Demonstrates that the jump in [`jump_scenario`] is unavoidable: the
/// hypothetical continuous continuation (particle held at rest, contact
/// retained) violates the friction cone at `s = 1 + epsilon` by exactly
/// `epsilon`, so the returned report fails for every `epsilon` above the
/// checker's tolerance floor.
pub fn no_continuation_witness(
    k: &StiffnessMatrix2,
    r: f64,
    f: FrictionCoefficient,
    epsilon: f64,
) -> Result<ResidualReport, MarchError> {
    let crit = match k.critical_friction() {
        crate::contact::CriticalFriction::Finite(c) => c,
        crate::contact::CriticalFriction::Unbounded => {
            return Err(MarchError::SubcriticalFriction { f: f.get(), required: f64::INFINITY })
        }
    };
    if f.get() < crit {
        return Err(MarchError::SubcriticalFriction { f: f.get(), required: crit });
    }
    if !(r > 0.0) || !(epsilon > 0.0) {
        return Err(MarchError::NonPositiveMagnitude(r.min(epsilon)));
    }
    let fv = f.get();
    let force = NtVec2::new(r / fv + epsilon, r + (fv + 1.0) * epsilon);
    // Held at rest in contact: equilibrium forces t = -F, and with zero slip
    // the flow rule is vacuous; what fails is |t_t| <= -f t_n.
    let state = ContactState { u: NtVec2::ZERO, t: -force };
    Ok(check_incremental_kkt(k, force, 0.0, f, &state, 1e-12))
}

/// Marches the load and its reparametrized copy and reports whether the two
/// step-state sequences coincide (within `1e-12` absolute-plus-relative),
/// which they must: the subdivision is built from variation levels, and
/// variation is blind to the clock.
pub fn rate_independence_probe<M: Fn(f64) -> f64>(
    k: &StiffnessMatrix2,
    load: &LoadPath,
    u0: &ContactState,
    f: FrictionCoefficient,
    m: usize,
    reparam: M,
) -> Result<bool, MarchError> {
    if reparam(0.0) != 0.0 {
        return Err(MarchError::NonMonotoneReparam);
    }
    let mut probe_times: Vec<f64> = load
        .segments()
        .iter()
        .flat_map(|s| [s.t0, s.t1])
        .collect();
    let horizon = load.horizon();
    for i in 0..=16 {
        probe_times.push(horizon * i as f64 / 16.0);
    }
    probe_times.sort_by(f64::total_cmp);
    for w in probe_times.windows(2) {
        if w[0] < w[1] && !(reparam(w[0]) < reparam(w[1])) {
            return Err(MarchError::NonMonotoneReparam);
        }
    }
    let warped = load.reparametrize(&reparam)?;
    let a = march(k, load, u0, f, m)?;
    let b = march(k, &warped, u0, f, m)?;
    if a.trajectory.states().len() != b.trajectory.states().len() {
        return Ok(false);
    }
    let tol = 1e-12;
    Ok(a
        .trajectory
        .states()
        .iter()
        .zip(b.trajectory.states())
        .all(|(x, y)| {
            let scale = 1.0 + x.u.norm() + x.t.norm();
            (x.u - y.u).norm() + (x.t - y.t).norm() <= tol * scale
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::check_quasistatic;

    fn k() -> StiffnessMatrix2 {
        StiffnessMatrix2::new(2.0, 1.0, 2.0).unwrap()
    }

    fn fc(v: f64) -> FrictionCoefficient {
        FrictionCoefficient::new(v).unwrap()
    }

    #[test]
    fn subdivision_of_constant_load_is_trivial() {
        let load = LoadPath::constant(3.0, [1.0, 1.0]).unwrap();
        let sub = build_subdivision(&load, 10);
        assert_eq!(sub.times, vec![0.0, 3.0]);
    }

    #[test]
    fn subdivision_splits_affine_ramp_evenly() {
        let load = LoadPath::piecewise_linear(&[(0.0, [0.0, 0.0]), (1.0, [1.0, 0.0])]).unwrap();
        let sub = build_subdivision(&load, 1);
        assert_eq!(sub.times, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn subdivision_stops_at_oversized_jump() {
        let load = LoadPath::new(
            1.0,
            vec![
                crate::contact::LoadSegment { t0: 0.0, t1: 0.5, f0: [1.0, 0.0], f1: [1.0, 0.0] },
                crate::contact::LoadSegment { t0: 0.5, t1: 1.0, f0: [2.0, 0.0], f1: [2.0, 0.0] },
            ],
            vec![crate::contact::LoadJump { t: 0.5, left: [1.0, 0.0], right: [2.0, 0.0] }],
        )
        .unwrap();
        let sub = build_subdivision(&load, 3);
        assert_eq!(sub.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(sub.gains, vec![1.0, 0.0]);
    }

    #[test]
    fn subdivision_invariants_on_random_loads() {
        let rng = crate::rng::CounterRng::new(5);
        for i in 0..50u64 {
            let mut d = rng.substream(i);
            let mut pts = vec![(0.0, [d.range(-1.0, 1.0), d.range(-1.0, 1.0)])];
            let n = 2 + (d.next_u64() % 5) as usize;
            for j in 1..=n {
                pts.push((j as f64 / n as f64, [d.range(-1.0, 1.0), d.range(-1.0, 1.0)]));
            }
            let load = LoadPath::piecewise_linear(&pts).unwrap();
            for m in [0usize, 3, 17, 101] {
                let sub = build_subdivision(&load, m);
                assert!(sub.times.len() <= m + 2, "n <= m+1 intervals");
                assert_eq!(*sub.times.last().unwrap(), 1.0);
                assert!(sub.times.windows(2).all(|w| w[0] < w[1]));
                let share = load.cumulative_variation(1.0) / (m + 1) as f64;
                for g in &sub.gains[..sub.gains.len() - 1] {
                    assert!(*g >= share - 1e-12 * (1.0 + share));
                }
            }
        }
    }

    #[test]
    fn zero_load_march_stays_at_rest() {
        let load = LoadPath::constant(1.0, [0.0, 0.0]).unwrap();
        let rep = march(&k(), &load, &ContactState::ZERO, fc(1.0), 7).unwrap();
        assert!(rep.jumps.is_empty());
        for s in rep.trajectory.states() {
            assert_eq!(s.u, NtVec2::ZERO);
        }
        assert!(rep.max_energy_residual() <= 1e-10);
    }

    #[test]
    fn inadmissible_initial_condition_is_refused() {
        let load = LoadPath::constant(1.0, [0.0, 0.0]).unwrap();
        let bad = ContactState::new(1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            march(&k(), &load, &bad, fc(1.0), 7),
            Err(MarchError::InadmissibleInitialCondition { .. })
        ));
    }

    #[test]
    fn jump_scenario_closed_form_values() {
        let (load, traj) = jump_scenario(&k(), 1.0, fc(2.0)).unwrap();
        assert_eq!(load.value(1.0), [0.5, 1.0]);
        assert_eq!(load.value(2.0), [1.5, 4.0]);
        let s1 = traj.value(1.0);
        assert!((s1.u - NtVec2::new(0.0, 0.5)).norm() < 1e-15);
        let s2 = traj.value(2.0);
        assert!((s2.u - NtVec2::new(-1.0 / 3.0, 6.5 / 3.0)).norm() < 1e-14);
        // Equilibrium at the right limit of the jump: K u(1) = F(1), t = 0.
        let ku = k().mul(s1.u);
        assert!((ku - NtVec2::new(0.5, 1.0)).norm() < 1e-15);
        assert_eq!(traj.jumps().len(), 1);
        assert!((traj.jumps()[0].magnitude() - 0.5).abs() < 1e-15);

        let r = check_quasistatic(&traj, &load, &k(), fc(2.0), 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn jump_scenario_rejects_subcritical_friction() {
        assert!(matches!(
            jump_scenario(&k(), 1.0, fc(1.0)),
            Err(MarchError::SubcriticalFriction { .. })
        ));
    }

    #[test]
    fn removing_the_jump_breaks_the_laws() {
        // Forcing the state to stay continuous at s=1 (held at rest, contact
        // retained) must violate the friction cone just past 1.
        let (load, _) = jump_scenario(&k(), 1.0, fc(2.0)).unwrap();
        let eps = 0.05;
        let held = ContactState { u: NtVec2::ZERO, t: -NtVec2::from(load.value(1.0 + eps)) };
        let traj = Trajectory::new(
            vec![0.0, 1.0 + eps, 2.0],
            vec![
                ContactState::ZERO,
                held,
                ContactState { u: NtVec2::ZERO, t: -NtVec2::from(load.value(2.0)) },
            ],
            vec![],
            Interpolation::PiecewiseConstant,
        )
        .unwrap();
        let r = check_quasistatic(&traj, &load, &k(), fc(2.0), 1e-9).unwrap();
        assert!(!r.pass);
        assert!(!r.pass_friction_cone);
    }

    #[test]
    fn march_reproduces_the_jump() {
        let f = fc(2.0);
        let (load, exact) = jump_scenario(&k(), 1.0, f).unwrap();
        let rep = march(&k(), &load, &ContactState::ZERO, f, 400).unwrap();
        assert_eq!(rep.jumps.len(), 1, "{:?}", rep.jumps);
        assert!((rep.jumps[0].time - 1.0).abs() < 1e-9, "jump at {}", rep.jumps[0].time);
        assert!((rep.jumps[0].magnitude - 0.5).abs() < 1e-9);
        for (s, state) in rep.trajectory.breakpoints().iter().zip(rep.trajectory.states()) {
            let reference = exact.value(*s);
            assert!(
                (state.u - reference.u).norm() < 1e-9,
                "s={s}: {:?} vs {:?}",
                state.u,
                reference.u
            );
        }
        assert!(rep.max_energy_residual() <= 1e-10);
        // Steps at the critical coefficient are flagged as possibly
        // non-unique.
        assert!(!rep.nonunique_steps.is_empty());
        // Detected jumps mirror the trajectory's jump records.
        assert_eq!(rep.jumps.len(), rep.trajectory.jumps().len());
        for (d, j) in rep.jumps.iter().zip(rep.trajectory.jumps()) {
            assert_eq!(d.time, j.time);
            assert_eq!(d.magnitude, j.magnitude());
        }
        // The marched trajectory solves the problem with the held load.
        let held = load
            .piecewise_constant_interpolant(rep.trajectory.breakpoints())
            .unwrap();
        let r = check_quasistatic(&rep.trajectory, &held, &k(), f, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn subcritical_march_has_no_jumps_and_shrinking_increments() {
        let f = fc(0.5);
        let (load, _) = jump_scenario(&k(), 1.0, fc(2.0)).unwrap();
        let mut max_du = Vec::new();
        for m in [100usize, 200, 400] {
            let rep = march(&k(), &load, &ContactState::ZERO, f, m).unwrap();
            assert!(rep.jumps.is_empty());
            assert!(rep.stability_constant.is_finite());
            let states = rep.trajectory.states();
            let worst = states
                .windows(2)
                .map(|w| (w[1].u - w[0].u).norm())
                .fold(0.0f64, f64::max);
            max_du.push(worst);
            assert!(rep.max_energy_residual() <= 1e-10);
        }
        assert!(max_du[2] <= 0.6 * max_du[0], "{max_du:?}");
    }

    #[test]
    fn load_jump_drives_a_controlled_step() {
        // A state increment caused by a load discontinuity is controlled by
        // the load increment, so it is not flagged as a spontaneous jump,
        // and the marched history still satisfies the laws.
        let f = fc(0.5);
        let load = LoadPath::new(
            1.0,
            vec![
                crate::contact::LoadSegment { t0: 0.0, t1: 0.5, f0: [0.0, 0.0], f1: [0.0, 0.0] },
                crate::contact::LoadSegment { t0: 0.5, t1: 1.0, f0: [-1.0, 0.5], f1: [-1.0, 0.5] },
            ],
            vec![crate::contact::LoadJump { t: 0.5, left: [0.0, 0.0], right: [-1.0, 0.5] }],
        )
        .unwrap();
        let rep = march(&k(), &load, &ContactState::ZERO, f, 50).unwrap();
        assert!(rep.jumps.is_empty(), "{:?}", rep.jumps);
        assert!(rep.stability_constant.is_finite());
        let held = load
            .piecewise_constant_interpolant(rep.trajectory.breakpoints())
            .unwrap();
        let r = check_quasistatic(&rep.trajectory, &held, &k(), f, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        // The state actually moved when the load jumped.
        let final_u = rep.trajectory.states().last().unwrap().u;
        assert!(final_u.norm() > 1e-3);
    }

    #[test]
    fn no_continuation_violation_equals_epsilon() {
        for eps in [0.1, 0.01, 1e-3, 1e-6] {
            let rep = no_continuation_witness(&k(), 1.0, fc(2.0), eps).unwrap();
            assert!(!rep.pass);
            assert!(
                (rep.friction_cone - eps).abs() <= 1e-12,
                "eps={eps}: cone violation {}",
                rep.friction_cone
            );
        }
    }

    #[test]
    fn stick_to_slip_march_from_a_preloaded_state() {
        // Compressed and initially stuck; the tangential ramp eventually
        // overcomes the cone and the particle slides, with no jump.
        let f = fc(1.0);
        let load =
            LoadPath::piecewise_linear(&[(0.0, [2.0, 0.0]), (1.0, [2.0, 3.0])]).unwrap();
        let u0 = ContactState::new(0.0, 0.0, -2.0, 0.0);
        let rep = march(&k(), &load, &u0, f, 200).unwrap();
        assert!(rep.jumps.is_empty(), "{:?}", rep.jumps);
        let last = rep.trajectory.states().last().unwrap();
        assert!(last.u.t > 0.1, "expected slip, got {:?}", last);
        assert!(rep.max_energy_residual() <= 1e-10);
        let held = load
            .piecewise_constant_interpolant(rep.trajectory.breakpoints())
            .unwrap();
        let r = check_quasistatic(&rep.trajectory, &held, &k(), f, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn rate_independence_under_reparametrization() {
        let f = fc(2.0);
        let (load, _) = jump_scenario(&k(), 1.0, f).unwrap();
        let u0 = ContactState::ZERO;
        assert!(rate_independence_probe(&k(), &load, &u0, f, 50, |s| s).unwrap());
        assert!(rate_independence_probe(&k(), &load, &u0, f, 50, |s| s * s).unwrap());
        assert!(rate_independence_probe(&k(), &load, &u0, f, 50, |s| 2.0 * s).unwrap());
        assert!(matches!(
            rate_independence_probe(&k(), &load, &u0, f, 50, |s| -s),
            Err(MarchError::NonMonotoneReparam)
        ));
    }
}
