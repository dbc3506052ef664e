use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ContactState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("breakpoints must start at 0, end at the horizon and increase strictly")]
    BadBreakpoints,
    #[error("need one state per breakpoint")]
    StateCountMismatch,
    #[error("jump at t={0} is not located at a breakpoint")]
    JumpOffBreakpoint(f64),
    #[error("jump at t={0} disagrees with the stored right state")]
    JumpMismatch(f64),
    #[error("jump at t={0} has (numerically) equal left and right states")]
    ZeroJump(f64),
    #[error("trajectory csv is malformed: {0}")]
    BadCsv(String),
}

/// How the state history is read between breakpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Value on `[b_i, b_{i+1}[` is the state at `b_i`.
    PiecewiseConstant,
    /// Affine between breakpoint states, except across declared jumps.
    PiecewiseAffine,
}

/// Jump record: at `time` the trajectory passes from `left` to `right`
/// (the stored breakpoint state is `right`, per the right-continuity
/// convention).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryJump {
    pub time: f64,
    pub left: ContactState,
    pub right: ContactState,
}

impl TrajectoryJump {
    /// Euclidean magnitude of the displacement jump.
    pub fn magnitude(&self) -> f64 {
        (self.right.u - self.left.u).norm()
    }
}

/// Right-continuous piecewise state history with explicit jump records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    breakpoints: Vec<f64>,
    states: Vec<ContactState>,
    jumps: Vec<TrajectoryJump>,
    interpolation: Interpolation,
}

impl Trajectory {
    pub fn new(
        breakpoints: Vec<f64>,
        states: Vec<ContactState>,
        mut jumps: Vec<TrajectoryJump>,
        interpolation: Interpolation,
    ) -> Result<Self, TrajectoryError> {
        if breakpoints.len() < 2
            || breakpoints[0] != 0.0
            || breakpoints.windows(2).any(|w| !(w[0] < w[1]))
            || !breakpoints.iter().all(|b| b.is_finite())
        {
            return Err(TrajectoryError::BadBreakpoints);
        }
        if states.len() != breakpoints.len() {
            return Err(TrajectoryError::StateCountMismatch);
        }
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        for j in &jumps {
            let k = breakpoints
                .iter()
                .position(|&b| b == j.time)
                .ok_or(TrajectoryError::JumpOffBreakpoint(j.time))?;
            let scale = 1.0 + j.right.u.norm() + j.right.t.norm();
            if (states[k].u - j.right.u).norm() + (states[k].t - j.right.t).norm() > 1e-9 * scale {
                return Err(TrajectoryError::JumpMismatch(j.time));
            }
            if (j.right.u - j.left.u).norm() + (j.right.t - j.left.t).norm() <= 0.0 {
                return Err(TrajectoryError::ZeroJump(j.time));
            }
        }
        Ok(Trajectory { breakpoints, states, jumps, interpolation })
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn states(&self) -> &[ContactState] {
        &self.states
    }

    pub fn jumps(&self) -> &[TrajectoryJump] {
        &self.jumps
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn jump_at(&self, time: f64) -> Option<&TrajectoryJump> {
        self.jumps.iter().find(|j| j.time == time)
    }

    /// State the trajectory approaches from the left at breakpoint `k`.
    pub fn left_state_at_breakpoint(&self, k: usize) -> ContactState {
        if k == 0 {
            return self.states[0];
        }
        if let Some(j) = self.jump_at(self.breakpoints[k]) {
            return j.left;
        }
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.states[k - 1],
            Interpolation::PiecewiseAffine => self.states[k],
        }
    }

    /// Right-continuous value at time `s`.
    pub fn value(&self, s: f64) -> ContactState {
        let n = self.breakpoints.len();
        if s >= self.breakpoints[n - 1] {
            return self.states[n - 1];
        }
        let k = match self.breakpoints.iter().position(|&b| b > s) {
            Some(i) => i - 1,
            None => n - 2,
        };
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.states[k],
            Interpolation::PiecewiseAffine => {
                let (b0, b1) = (self.breakpoints[k], self.breakpoints[k + 1]);
                let end = self.left_state_at_breakpoint(k + 1);
                let a = (s - b0) / (b1 - b0);
                let lerp = |x: super::NtVec2, y: super::NtVec2| x + (y - x) * a;
                ContactState {
                    u: lerp(self.states[k].u, end.u),
                    t: lerp(self.states[k].t, end.t),
                }
            }
        }
    }

    /// Writes the trajectory as CSV with header
    /// `s,u_n,u_t,t_n,t_t,is_jump_left_row`. Breakpoints carrying a jump emit
    /// two rows: the left limit flagged 1, then the right value flagged 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,u_n,u_t,t_n,t_t,is_jump_left_row\n");
        for (k, &b) in self.breakpoints.iter().enumerate() {
            if let Some(j) = self.jump_at(b) {
                push_row(&mut out, b, &j.left, 1);
            }
            push_row(&mut out, b, &self.states[k], 0);
        }
        out
    }

    /// Parses the CSV format written by [`Trajectory::to_csv`]. The
    /// interpolation rule is not part of the file; the result is tagged
    /// piecewise-constant, which is what the breakpoint-wise checks use.
    pub fn from_csv(text: &str) -> Result<Self, TrajectoryError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| TrajectoryError::BadCsv("empty file".into()))?;
        if header.trim() != "s,u_n,u_t,t_n,t_t,is_jump_left_row" {
            return Err(TrajectoryError::BadCsv(format!("unexpected header `{header}`")));
        }
        let mut breakpoints = Vec::new();
        let mut states = Vec::new();
        let mut jumps = Vec::new();
        let mut pending_left: Option<(f64, ContactState)> = None;
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(TrajectoryError::BadCsv(format!(
                    "line {}: expected 6 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let num = |i: usize| -> Result<f64, TrajectoryError> {
                fields[i].trim().parse::<f64>().map_err(|e| {
                    TrajectoryError::BadCsv(format!("line {}: {}", lineno + 2, e))
                })
            };
            let s = num(0)?;
            let state = ContactState::new(num(1)?, num(2)?, num(3)?, num(4)?);
            let flag = fields[5].trim();
            match flag {
                "1" => {
                    if pending_left.is_some() {
                        return Err(TrajectoryError::BadCsv(format!(
                            "line {}: consecutive jump-left rows",
                            lineno + 2
                        )));
                    }
                    pending_left = Some((s, state));
                }
                "0" => {
                    if let Some((tl, left)) = pending_left.take() {
                        if tl != s {
                            return Err(TrajectoryError::BadCsv(format!(
                                "line {}: jump rows at different times",
                                lineno + 2
                            )));
                        }
                        jumps.push(TrajectoryJump { time: s, left, right: state });
                    }
                    breakpoints.push(s);
                    states.push(state);
                }
                other => {
                    return Err(TrajectoryError::BadCsv(format!(
                        "line {}: bad jump flag `{}`",
                        lineno + 2,
                        other
                    )));
                }
            }
        }
        if pending_left.is_some() {
            return Err(TrajectoryError::BadCsv("dangling jump-left row".into()));
        }
        Trajectory::new(breakpoints, states, jumps, Interpolation::PiecewiseConstant)
    }
}

fn push_row(out: &mut String, s: f64, state: &ContactState, flag: u8) {
    use std::fmt::Write;
    let _ = writeln!(
        out,
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
        s, state.u.n, state.u.t, state.t.n, state.t.t, flag
    );
}
