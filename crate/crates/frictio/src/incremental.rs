//! Exact solver for the discrete incremental problem.
//!
//! One implicit time step of the quasi-static evolution asks for `(u, t)`
//! with `K u = F + t`, the Signorini conditions on the normal components,
//! and the Coulomb law on the tangential ones, with slip measured relative
//! to the previous tangential position `w_t`.
//!
//! The solver is built on two pieces:
//!
//! - [`tresca_minimize`]: the friction bound is frozen at `sigma`, which
//!   makes the step a strictly convex minimization with a closed-form
//!   solution (two contact regimes times a scalar soft threshold).
//! - the pressure map `sigma -> -f * t_n` of the Tresca solution, whose
//!   fixed points are exactly the Coulomb solutions. Below the critical
//!   coefficient `k_tt / k_nt` the map is a contraction and the solution is
//!   unique; at or above it, whole intervals of fixed points can appear and
//!   a selection rule is needed (see [`solve_incremental`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{ContactState, FrictionCoefficient, NtVec2, StiffnessMatrix2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IncrementalError {
    #[error("no fixed point located within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("friction bound must be nonnegative and finite, got {0}")]
    InvalidSigma(f64),
    #[error("f={f} is not the critical coefficient k_tt/k_nt={required}")]
    NotCritical { f: f64, required: f64 },
    #[error("the solution family requires a positive tangential load, got {0}")]
    NonPositiveLoad(f64),
    #[error("f={f} is not below the critical coefficient {critical}")]
    SupercriticalFriction { f: f64, critical: f64 },
}

/// Friction subproblem with a prescribed friction bound `sigma`:
/// minimize `1/2 v.Kv - F.v + sigma |v_t - w_t|` over `v_n <= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrescaProblem {
    pub k: StiffnessMatrix2,
    pub force: NtVec2,
    pub w_t: f64,
    pub sigma: f64,
}

impl TrescaProblem {
    pub fn new(
        k: StiffnessMatrix2,
        force: NtVec2,
        w_t: f64,
        sigma: f64,
    ) -> Result<Self, IncrementalError> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(IncrementalError::InvalidSigma(sigma));
        }
        Ok(TrescaProblem { k, force, w_t, sigma })
    }

    /// Objective value at `v`; used by the brute-force oracle tests.
    pub fn objective(&self, v: NtVec2) -> f64 {
        0.5 * v.dot(self.k.mul(v)) - self.force.dot(v) + self.sigma * (v.t - self.w_t).abs()
    }
}

/// Contact regime of an incremental solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `u_n < 0`, `t_n = 0` (the boundary case `u_n = 0`, `t_n = 0` is
    /// reported as stick/slip).
    Separated,
    /// In contact with `u_t = w_t`.
    Stick,
    /// Slipping with `u_t > w_t`.
    SlipPositive,
    /// Slipping with `u_t < w_t`.
    SlipNegative,
}

/// Solution of the incremental problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementalSolution {
    pub state: ContactState,
    pub regime: Regime,
    /// Pressure-map evaluations spent locating the fixed point.
    pub iterations: usize,
    /// True when `f < k_tt / k_nt` guarantees uniqueness; false means other
    /// solutions may exist and a documented selection was applied.
    pub unique: bool,
    /// Friction bound at the returned fixed point (`sigma = -f t_n`).
    pub sigma: f64,
}

/// Scalar soft-threshold step shared by both contact regimes: minimizer of
/// `1/2 k x^2 - b x + sigma |x - w|`.
fn soft_threshold(k: f64, b: f64, w: f64, sigma: f64) -> f64 {
    let d = b - k * w;
    if d.abs() <= sigma {
        w
    } else {
        (b - sigma * d.signum()) / k
    }
}

/// Closed-form global minimizer of the Tresca problem, together with the
/// reaction `t = K u - F`.
///
/// Exactly one of the two contact regimes is consistent: either the
/// constraint is active (`u_n = 0`, requires `t_n <= 0`) or the normal
/// reaction vanishes (`t_n = 0`, requires `u_n <= 0`); within each regime
/// the tangential component is a scalar soft threshold. The reaction is
/// assembled from the same expressions that make the optimality conditions
/// hold identically, so residuals stay at rounding level.
pub fn tresca_minimize(p: &TrescaProblem) -> ContactState {
    let (k, f_n, f_t) = (&p.k, p.force.n, p.force.t);

    // Contact regime: u_n = 0.
    let u_t_c = soft_threshold(k.k_tt(), f_t, p.w_t, p.sigma);
    let t_n_c = k.k_nt() * u_t_c - f_n;
    if t_n_c <= 0.0 {
        let t_t = if u_t_c == p.w_t {
            k.k_tt() * p.w_t - f_t
        } else {
            -p.sigma * (u_t_c - p.w_t).signum()
        };
        return ContactState { u: NtVec2::new(0.0, u_t_c), t: NtVec2::new(t_n_c, t_t) };
    }

    // Separated regime: t_n = 0. Eliminating u_n leaves the Schur
    // complement in the tangential direction.
    let k_s = k.k_tt() - k.k_nt() * k.k_nt() / k.k_nn();
    let g_t = f_t - k.k_nt() / k.k_nn() * f_n;
    let u_t = soft_threshold(k_s, g_t, p.w_t, p.sigma);
    let u_n = (f_n - k.k_nt() * u_t) / k.k_nn();
    let t_t = if u_t == p.w_t {
        k.k_nt() * u_n + k.k_tt() * p.w_t - f_t
    } else {
        -p.sigma * (u_t - p.w_t).signum()
    };
    ContactState { u: NtVec2::new(u_n, u_t), t: NtVec2::new(0.0, t_t) }
}

/// The a-priori friction bound `Sigma_1`: for any `sigma >= Sigma_1` the
/// Tresca minimizer sticks (`u_t = w_t`) and the pressure map satisfies
/// `P(sigma) <= Sigma_1`.
pub fn sigma_upper_bound(
    k: &StiffnessMatrix2,
    force: NtVec2,
    w_t: f64,
    f: FrictionCoefficient,
) -> f64 {
    let q = k.k_nt() * w_t - force.n;
    let tangential = (k.k_tt() * w_t - force.t - k.k_nt() / k.k_nn() * q.max(0.0)).abs();
    tangential.max(f.get() * (-q).max(0.0))
}

/// Pressure map `P(sigma) = -f t_n` of the Tresca solution; its fixed points
/// are the Coulomb incremental solutions.
pub fn pressure_map(p: &TrescaProblem, f: FrictionCoefficient) -> f64 {
    -f.get() * tresca_minimize(p).t.n
}

/// State in which the particle keeps its tangential position (`u_t = w_t`)
/// and the normal contact is resolved exactly; this is the Tresca minimizer
/// for every `sigma >= Sigma_1`.
fn stick_state(k: &StiffnessMatrix2, force: NtVec2, w_t: f64) -> ContactState {
    let q = k.k_nt() * w_t - force.n;
    ContactState {
        u: NtVec2::new(-q.max(0.0) / k.k_nn(), w_t),
        t: NtVec2::new(
            -(-q).max(0.0),
            k.k_tt() * w_t - force.t - k.k_nt() / k.k_nn() * q.max(0.0),
        ),
    }
}

fn classify(state: &ContactState, w_t: f64) -> Regime {
    if state.u.n < 0.0 {
        Regime::Separated
    } else if state.u.t == w_t {
        Regime::Stick
    } else if state.u.t > w_t {
        Regime::SlipPositive
    } else {
        Regime::SlipNegative
    }
}

const FIXED_POINT_MAX_ITERS: usize = 10_000;
const SCAN_SAMPLES: usize = 2_048;

/// Solves the Coulomb incremental problem for `(K, F, w_t, f)`.
///
/// The stick state is tried first: if it satisfies the friction cone it is a
/// solution and is returned (this is the branch a rate-independent evolution
/// follows for as long as holding position is admissible). Otherwise, below
/// the critical coefficient the pressure map is a contraction and plain
/// iteration from `sigma = 0` converges to the unique solution; at or above
/// it, a bracketed scan locates the smallest fixed point of the map and
/// `unique` is reported false.
pub fn solve_incremental(
    k: &StiffnessMatrix2,
    force: NtVec2,
    w_t: f64,
    f: FrictionCoefficient,
) -> Result<IncrementalSolution, IncrementalError> {
    let unique = k.subcritical(f);
    let scale = 1.0f64.max(force.norm_inf()).max(k.norm_inf() * w_t.abs());

    // Stick trial. The slack tolerates rounding in data that sit exactly on
    // the cone boundary, which is where the interesting critical scenarios
    // live; the resulting state violates no law by more than the slack.
    let stick = stick_state(k, force, w_t);
    let bound = -f.get() * stick.t.n;
    if stick.t.t.abs() <= bound + 1e-12 * scale {
        return Ok(IncrementalSolution {
            state: stick,
            regime: classify(&stick, w_t),
            iterations: 1,
            unique,
            sigma: bound,
        });
    }

    let tresca = |sigma: f64| {
        tresca_minimize(&TrescaProblem { k: *k, force, w_t, sigma: sigma.max(0.0) })
    };
    let pressure = |sigma: f64| -f.get() * tresca(sigma).t.n;

    if unique {
        // Geometric convergence with ratio f k_nt / k_tt.
        let tol = 1e-13;
        let mut sigma = 0.0;
        for iter in 0..FIXED_POINT_MAX_ITERS {
            let next = pressure(sigma);
            if (next - sigma).abs() <= tol * scale.max(sigma) {
                let state = tresca(next);
                return Ok(IncrementalSolution {
                    state,
                    regime: classify(&state, w_t),
                    iterations: iter + 2,
                    unique,
                    sigma: next,
                });
            }
            sigma = next;
        }
        // Ratios close to one stall the plain iteration; the bracketed
        // search still applies and the solution is still unique.
    }

    // Bracketed search on [0, Sigma] where P maps [0, Sigma] into itself.
    let sigma_1 = sigma_upper_bound(k, force, w_t, f);
    let mut sigma_2: f64 = 0.0;
    for i in 0..=64 {
        sigma_2 = sigma_2.max(pressure(sigma_1 * i as f64 / 64.0));
    }
    let hi_end = sigma_1.max(sigma_2) * (1.0 + 1e-9) + 1e-12 * scale;

    let g = |sigma: f64| pressure(sigma) - sigma;
    let mut evals = 66usize;
    let mut lo = 0.0;
    let mut g_lo = g(lo);
    evals += 1;
    if g_lo <= 0.0 {
        // P(0) = 0: separated (or grazing) solution at zero friction bound.
        let state = tresca(0.0);
        return Ok(IncrementalSolution {
            state,
            regime: classify(&state, w_t),
            iterations: evals,
            unique,
            sigma: 0.0,
        });
    }
    let mut bracket = None;
    for j in 1..=SCAN_SAMPLES {
        let s = hi_end * j as f64 / SCAN_SAMPLES as f64;
        let gs = g(s);
        evals += 1;
        if gs <= 0.0 {
            bracket = Some((lo, g_lo, s, gs));
            break;
        }
        lo = s;
        g_lo = gs;
    }
    let (mut lo, mut g_lo, mut hi, mut g_hi) =
        bracket.ok_or(IncrementalError::NonConvergence { iterations: evals })?;
    while hi - lo > 1e-12 * 1.0f64.max(hi) && evals < FIXED_POINT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        evals += 1;
        if gm > 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    // One secant step lands on the root of the active affine piece.
    let sigma = if g_lo > g_hi {
        (lo + g_lo * (hi - lo) / (g_lo - g_hi)).clamp(lo, hi)
    } else {
        hi
    };
    let sigma = if g(sigma).abs() <= g(hi).abs() { sigma } else { hi };
    evals += 2;
    let state = tresca(sigma);
    Ok(IncrementalSolution {
        state,
        regime: classify(&state, w_t),
        iterations: evals,
        unique,
        sigma,
    })
}

/// Parameterized family of incremental solutions at the critical friction
/// coefficient: for `f = k_tt / k_nt`, `w_t = 0` and the force
/// `F = (k_nt F_t / k_tt, F_t)` with `F_t > 0`, every normal reaction in
/// `[-k_nt F_t / k_tt, 0]` yields a solution with `t_t = f t_n` and
/// `u = K^{-1}(F + t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuumFamily {
    pub k: StiffnessMatrix2,
    pub f: FrictionCoefficient,
    pub force: NtVec2,
    /// Closed interval of admissible normal reactions `(min, max)`.
    pub t_n_range: (f64, f64),
}

impl ContinuumFamily {
    /// Family member at normal reaction `t_n` (clamped to the admissible
    /// interval).
    pub fn state_at(&self, t_n: f64) -> ContactState {
        let t_n = t_n.clamp(self.t_n_range.0, self.t_n_range.1);
        let t = NtVec2::new(t_n, self.f.get() * t_n);
        ContactState { u: self.k.solve(self.force + t), t }
    }
}

/// Constructs the critical continuum of solutions for tangential load `f_t`.
pub fn continuum_family(
    k: &StiffnessMatrix2,
    f: FrictionCoefficient,
    f_t: f64,
) -> Result<ContinuumFamily, IncrementalError> {
    let crit = match k.critical_friction() {
        crate::contact::CriticalFriction::Finite(c) => c,
        crate::contact::CriticalFriction::Unbounded => {
            return Err(IncrementalError::NotCritical { f: f.get(), required: f64::INFINITY })
        }
    };
    if (f.get() * k.k_nt() - k.k_tt()).abs() > 1e-12 * k.k_tt() {
        return Err(IncrementalError::NotCritical { f: f.get(), required: crit });
    }
    if !(f_t > 0.0) {
        return Err(IncrementalError::NonPositiveLoad(f_t));
    }
    let f_n = k.k_nt() * f_t / k.k_tt();
    Ok(ContinuumFamily {
        k: *k,
        f,
        force: NtVec2::new(f_n, f_t),
        t_n_range: (-f_n, 0.0),
    })
}

/// Empirical Lipschitz constant of the solution map `F -> u` at `w_t = 0`:
/// the largest observed `|u(F1) - u(F2)| / |F1 - F2|` over random force
/// pairs, deterministic per seed. Pairs with coincident forces are skipped.
pub fn lipschitz_probe(
    k: &StiffnessMatrix2,
    f: FrictionCoefficient,
    trials: usize,
    seed: u64,
) -> Result<f64, IncrementalError> {
    if !k.subcritical(f) {
        return Err(IncrementalError::SupercriticalFriction {
            f: f.get(),
            critical: k.critical_friction().finite().unwrap_or(f64::INFINITY),
        });
    }
    let rng = crate::rng::CounterRng::new(seed);
    let mut worst: f64 = 0.0;
    for i in 0..trials as u64 {
        let mut draw = rng.substream(i);
        let f1 = NtVec2::new(draw.range(-3.0, 3.0), draw.range(-3.0, 3.0));
        // Mostly local perturbations: piecewise-linear maps attain their
        // Lipschitz constant in the small-separation limit.
        let delta = 10f64.powf(draw.range(-6.0, 0.0));
        let angle = draw.range(0.0, std::f64::consts::TAU);
        let f2 = f1 + NtVec2::new(delta * angle.cos(), delta * angle.sin());
        let d = (f2 - f1).norm();
        if d == 0.0 {
            continue;
        }
        let u1 = solve_incremental(k, f1, 0.0, f)?.state.u;
        let u2 = solve_incremental(k, f2, 0.0, f)?.state.u;
        worst = worst.max((u2 - u1).norm() / d);
    }
    Ok(worst)
}
