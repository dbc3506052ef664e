use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ContactState, FrictionCoefficient, LoadPath, NtVec2, StiffnessMatrix2, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("trajectory horizon {traj} differs from load horizon {load}")]
    MismatchedHorizon { traj: f64, load: f64 },
}

/// Residuals of the contact and friction laws for a state (or a whole
/// trajectory), in the natural units of each law.
///
/// `scale = max(1, |F|_inf, |K|_inf)` and a law passes when its residual is
/// at most `tol * scale`, which makes the pass/fail decision invariant under
/// positive rescaling of the data. Raw residuals are kept so callers can
/// report violations in physical units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max |K u - F - t|` (force).
    pub equilibrium: f64,
    /// Worst violation of `u_n <= 0`, `t_n <= 0`, `u_n t_n = 0`.
    pub signorini: f64,
    /// Worst violation of `|t_t| <= -f t_n` (force).
    pub friction_cone: f64,
    /// Worst violation of `t_t * slip = f t_n |slip|` (force x length).
    pub flow_rule: f64,
    pub scale: f64,
    pub tol: f64,
    pub pass_equilibrium: bool,
    pub pass_signorini: bool,
    pub pass_friction_cone: bool,
    pub pass_flow_rule: bool,
    pub pass: bool,
}

impl ResidualReport {
    pub(crate) fn from_parts(equilibrium: f64, signorini: f64, friction_cone: f64, flow_rule: f64, scale: f64, tol: f64) -> Self {
        let thresh = tol * scale;
        let pe = equilibrium <= thresh;
        let ps = signorini <= thresh;
        let pc = friction_cone <= thresh;
        let pf = flow_rule <= thresh;
        ResidualReport {
            equilibrium,
            signorini,
            friction_cone,
            flow_rule,
            scale,
            tol,
            pass_equilibrium: pe,
            pass_signorini: ps,
            pass_friction_cone: pc,
            pass_flow_rule: pf,
            pass: pe && ps && pc && pf,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.equilibrium.max(self.signorini).max(self.friction_cone).max(self.flow_rule)
    }

    /// Pass decision at a different tolerance; monotone in `tol` by
    /// construction.
    pub fn passes_at(&self, tol: f64) -> bool {
        self.max_residual() <= tol * self.scale
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

pub(crate) fn equilibrium_residual(k: &StiffnessMatrix2, force: NtVec2, state: &ContactState) -> f64 {
    (k.mul(state.u) - force - state.t).norm_inf()
}

pub(crate) fn signorini_residual(u_n: f64, t_n: f64) -> f64 {
    pos(u_n).max(pos(t_n)).max((u_n * t_n).abs())
}

pub(crate) fn cone_residual(f: FrictionCoefficient, t_n: f64, t_t: f64) -> f64 {
    pos(t_t.abs() + f.get() * t_n)
}

pub(crate) fn flow_residual(f: FrictionCoefficient, t_n: f64, t_t: f64, slip: f64) -> f64 {
    (t_t * slip - f.get() * t_n * slip.abs()).abs()
}

/// Checks one state against the incremental problem with data
/// `(K, F, w_t, f)`: equilibrium `K u = F + t`, the Signorini conditions,
/// the friction cone, and the incremental flow rule
/// `t_t (u_t - w_t) = f t_n |u_t - w_t|`.
pub fn check_incremental_kkt(
    k: &StiffnessMatrix2,
    force: NtVec2,
    w_t: f64,
    f: FrictionCoefficient,
    state: &ContactState,
    tol: f64,
) -> ResidualReport {
    let scale = 1.0f64.max(force.norm_inf()).max(k.norm_inf());
    ResidualReport::from_parts(
        equilibrium_residual(k, force, state),
        signorini_residual(state.u.n, state.t.n),
        cone_residual(f, state.t.n, state.t.t),
        flow_residual(f, state.t.n, state.t.t, state.u.t - w_t),
        scale,
        tol,
    )
}

/// Checks a whole trajectory against the quasi-static problem with the given
/// load: equilibrium, Signorini and the friction cone at every breakpoint
/// (both limits at jumps), and the flow rule in measure form for every
/// increment between consecutive states and across every jump, paired with
/// the end-of-increment traction.
pub fn check_quasistatic(
    traj: &Trajectory,
    load: &LoadPath,
    k: &StiffnessMatrix2,
    f: FrictionCoefficient,
    tol: f64,
) -> Result<ResidualReport, CheckError> {
    if traj.horizon() != load.horizon() {
        return Err(CheckError::MismatchedHorizon { traj: traj.horizon(), load: load.horizon() });
    }
    let scale = 1.0f64.max(load.sup_norm_inf()).max(k.norm_inf());
    let mut eq: f64 = 0.0;
    let mut sig: f64 = 0.0;
    let mut cone: f64 = 0.0;
    let mut flow: f64 = 0.0;

    let states = traj.states();
    let breaks = traj.breakpoints();
    for (i, state) in states.iter().enumerate() {
        let force = NtVec2::from(load.value(breaks[i]));
        eq = eq.max(equilibrium_residual(k, force, state));
        sig = sig.max(signorini_residual(state.u.n, state.t.n));
        cone = cone.max(cone_residual(f, state.t.n, state.t.t));
    }
    for j in traj.jumps() {
        let force = NtVec2::from(load.left_value(j.time));
        eq = eq.max(equilibrium_residual(k, force, &j.left));
        sig = sig.max(signorini_residual(j.left.u.n, j.left.t.n));
        cone = cone.max(cone_residual(f, j.left.t.n, j.left.t.t));
        // Jump increment, paired with the post-jump traction.
        let slip = j.right.u.t - j.left.u.t;
        flow = flow.max(flow_residual(f, j.right.t.n, j.right.t.t, slip));
    }
    for i in 0..states.len() - 1 {
        // For a held-value trajectory the whole increment lands at the next
        // breakpoint and pairs with the traction there; for an affine one
        // the continuous part runs up to the left limit (a declared jump is
        // handled separately above).
        let end = match traj.interpolation() {
            super::Interpolation::PiecewiseConstant => states[i + 1],
            super::Interpolation::PiecewiseAffine => traj.left_state_at_breakpoint(i + 1),
        };
        let slip = end.u.t - states[i].u.t;
        flow = flow.max(flow_residual(f, end.t.n, end.t.t, slip));
    }
    Ok(ResidualReport::from_parts(eq, sig, cone, flow, scale, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> StiffnessMatrix2 {
        StiffnessMatrix2::new(2.0, 1.0, 2.0).unwrap()
    }

    fn f(v: f64) -> FrictionCoefficient {
        FrictionCoefficient::new(v).unwrap()
    }

    #[test]
    fn zero_state_under_zero_load_passes() {
        let r = check_incremental_kkt(&k(), NtVec2::ZERO, 0.0, f(1.0), &ContactState::ZERO, 1e-12);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn critical_family_member_passes() {
        // Member of the critical continuum at t_n = -0.5:
        // u = (0, 1.5 + t_n), t = (t_n, 2 t_n).
        let state = ContactState::new(0.0, 1.0, -0.5, -1.0);
        let r = check_incremental_kkt(&k(), NtVec2::new(1.5, 3.0), 0.0, f(2.0), &state, 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn positive_normal_reaction_fails_signorini() {
        let state = ContactState::new(0.0, 1.0, 0.5, 1.0);
        let r = check_incremental_kkt(&k(), NtVec2::new(1.5, 3.0), 0.0, f(2.0), &state, 1e-12);
        assert!(!r.pass);
        assert!(!r.pass_signorini);
    }

    #[test]
    fn pass_is_monotone_in_tolerance() {
        let state = ContactState::new(0.0, 1.0, -0.5 + 1e-6, -1.0);
        let r = check_incremental_kkt(&k(), NtVec2::new(1.5, 3.0), 0.0, f(2.0), &state, 1e-8);
        assert!(!r.pass);
        assert!(r.passes_at(1e-3));
        // Loosening never flips pass -> fail.
        for (lo, hi) in [(1e-12, 1e-9), (1e-9, 1e-6), (1e-6, 1e-3)] {
            assert!(!r.passes_at(lo) || r.passes_at(hi));
        }
    }

    #[test]
    fn tangential_flip_commutes_with_checker() {
        // Residuals are equivariant under reversing the tangential axis
        // together with the coupling sign; the constructor exploits this
        // to canonicalize k_nt >= 0 and records the flip for the caller.
        let (k_nn, k_nt, k_tt) = (2.0, 1.0, 2.0);
        let force = NtVec2::new(1.5, 3.0);
        let w_t = 0.3;
        let state = ContactState::new(-0.1, 1.0, -0.5, -1.0);
        let fr = f(2.0);
        let a = check_incremental_kkt(&k(), force, w_t, fr, &state, 1e-12);

        // Reversed-frame data, evaluated with the reversed coupling by the
        // raw formulas (the matrix type cannot hold k_nt < 0).
        let (fp, wp, sp) = (force.flip_t(), -w_t, state.flip_t());
        let eq_n = k_nn * sp.u.n + (-k_nt) * sp.u.t - fp.n - sp.t.n;
        let eq_t = (-k_nt) * sp.u.n + k_tt * sp.u.t - fp.t - sp.t.t;
        assert_eq!(a.equilibrium, eq_n.abs().max(eq_t.abs()));
        assert_eq!(
            a.signorini,
            sp.u.n.max(0.0).max(sp.t.n.max(0.0)).max((sp.u.n * sp.t.n).abs())
        );
        assert_eq!(a.friction_cone, (sp.t.t.abs() + fr.get() * sp.t.n).max(0.0));
        let slip = sp.u.t - wp;
        assert_eq!(a.flow_rule, (sp.t.t * slip - fr.get() * sp.t.n * slip.abs()).abs());
        // The constructor canonicalizes the reversed matrix back and
        // records that it did.
        let reversed = StiffnessMatrix2::new(k_nn, -k_nt, k_tt).unwrap();
        assert!(reversed.tangential_flipped());
        assert_eq!(reversed.k_nt(), k_nt);
    }

    #[test]
    fn constant_zero_trajectory_passes_quasistatic() {
        let load = LoadPath::constant(1.0, [0.0, 0.0]).unwrap();
        let traj = Trajectory::new(
            vec![0.0, 0.5, 1.0],
            vec![ContactState::ZERO; 3],
            vec![],
            super::super::Interpolation::PiecewiseConstant,
        )
        .unwrap();
        let r = check_quasistatic(&traj, &load, &k(), f(1.0), 1e-12).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn slip_aligned_with_traction_fails_the_flow_rule() {
        // Sliding in the direction the tangential traction pushes is
        // non-dissipative and must be rejected even though the cone holds.
        let fr = f(0.5);
        let s0 = ContactState::new(0.0, 0.0, -1.0, 0.5);
        let s1 = ContactState::new(0.0, 1.0, -1.0, 0.5);
        let force = |s: &ContactState| {
            let ku = k().mul(s.u);
            [ku.n - s.t.n, ku.t - s.t.t]
        };
        let load = LoadPath::new(
            1.0,
            vec![super::super::LoadSegment { t0: 0.0, t1: 1.0, f0: force(&s0), f1: force(&s1) }],
            vec![],
        )
        .unwrap();
        let traj = Trajectory::new(
            vec![0.0, 1.0],
            vec![s0, s1],
            vec![],
            super::super::Interpolation::PiecewiseConstant,
        )
        .unwrap();
        let r = check_quasistatic(&traj, &load, &k(), fr, 1e-9).unwrap();
        assert!(!r.pass);
        assert!(!r.pass_flow_rule);
        assert!(r.pass_friction_cone, "{r:?}");
    }

    #[test]
    fn mismatched_horizon_is_an_error() {
        let load = LoadPath::constant(2.0, [0.0, 0.0]).unwrap();
        let traj = Trajectory::new(
            vec![0.0, 1.0],
            vec![ContactState::ZERO; 2],
            vec![],
            super::super::Interpolation::PiecewiseConstant,
        )
        .unwrap();
        assert!(matches!(
            check_quasistatic(&traj, &load, &k(), f(1.0), 1e-9),
            Err(CheckError::MismatchedHorizon { .. })
        ));
    }
}
