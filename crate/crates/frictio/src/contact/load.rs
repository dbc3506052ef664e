use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadPathError {
    #[error("horizon must be finite and positive, got {0}")]
    InvalidHorizon(f64),
    #[error("segments must tile [0, horizon] without gaps or overlap")]
    BadTiling,
    #[error("segment values must be finite")]
    NonFinite,
    #[error("path value is discontinuous at t={0} but no jump is declared there")]
    UndeclaredJump(f64),
    #[error("jump at t={0} does not sit on a segment boundary")]
    JumpOffBoundary(f64),
    #[error("jump at t={0} is inconsistent with adjacent segment values")]
    JumpMismatch(f64),
    #[error("jump at t={0} has zero magnitude")]
    ZeroJump(f64),
    #[error("query time {time} outside [{lo}, {hi}]")]
    OutOfRange { time: f64, lo: f64, hi: f64 },
}

/// Affine piece of a load path: the value moves linearly from `f0` at `t0`
/// to `f1` at `t1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadSegment {
    pub t0: f64,
    pub t1: f64,
    pub f0: [f64; 2],
    pub f1: [f64; 2],
}

impl LoadSegment {
    fn arc_length(&self) -> f64 {
        let dn = self.f1[0] - self.f0[0];
        let dt = self.f1[1] - self.f0[1];
        dn.hypot(dt)
    }

    fn value_at(&self, s: f64) -> [f64; 2] {
        if self.t1 == self.t0 {
            return self.f0;
        }
        let a = (s - self.t0) / (self.t1 - self.t0);
        [self.f0[0] + a * (self.f1[0] - self.f0[0]), self.f0[1] + a * (self.f1[1] - self.f0[1])]
    }
}

/// Declared discontinuity of a load path. The path value at `t` is `right`;
/// the left limit is `left`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadJump {
    pub t: f64,
    pub left: [f64; 2],
    pub right: [f64; 2],
}

impl LoadJump {
    fn magnitude(&self) -> f64 {
        (self.right[0] - self.left[0]).hypot(self.right[1] - self.left[1])
    }
}

#[derive(Serialize, Deserialize)]
struct LoadPathData {
    horizon: f64,
    segments: Vec<LoadSegment>,
    jumps: Vec<LoadJump>,
}

/// Right-continuous piecewise-affine load history with explicit jumps.
///
/// The value of the path is a pair of force components; the two modules that
/// consume load paths fix the meaning of the pair: `[F_n, F_t]` for the
/// two-degree-of-freedom model, `[T_x, T_y]` for finite-element tractions.
///
/// Jumps are stored explicitly rather than as zero-length segments, so the
/// total variation and the right-continuity convention `F(s) = F(s+)` are
/// represented exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LoadPathData", into = "LoadPathData")]
pub struct LoadPath {
    horizon: f64,
    segments: Vec<LoadSegment>,
    jumps: Vec<LoadJump>,
}

impl TryFrom<LoadPathData> for LoadPath {
    type Error = LoadPathError;
    fn try_from(d: LoadPathData) -> Result<Self, Self::Error> {
        LoadPath::new(d.horizon, d.segments, d.jumps)
    }
}

impl From<LoadPath> for LoadPathData {
    fn from(p: LoadPath) -> Self {
        LoadPathData { horizon: p.horizon, segments: p.segments, jumps: p.jumps }
    }
}

impl LoadPath {
    /// Builds a load path from explicit segments and jumps.
    ///
    /// Segments must tile `[0, horizon]` in order; wherever two consecutive
    /// segments meet with different values a jump must be declared whose
    /// `left`/`right` values match the segment endpoints. A jump at the
    /// horizon itself is allowed (the path value at `horizon` is then the
    /// jump's `right` value).
    pub fn new(
        horizon: f64,
        segments: Vec<LoadSegment>,
        mut jumps: Vec<LoadJump>,
    ) -> Result<Self, LoadPathError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(LoadPathError::InvalidHorizon(horizon));
        }
        if segments.is_empty()
            || segments[0].t0 != 0.0
            || segments.last().unwrap().t1 != horizon
        {
            return Err(LoadPathError::BadTiling);
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.t0.is_finite() && s.t1.is_finite() && s.t0 < s.t1) {
                return Err(LoadPathError::BadTiling);
            }
            if i > 0 && segments[i - 1].t1 != s.t0 {
                return Err(LoadPathError::BadTiling);
            }
            if !s.f0.iter().chain(s.f1.iter()).all(|x| x.is_finite()) {
                return Err(LoadPathError::NonFinite);
            }
        }
        jumps.sort_by(|a, b| a.t.total_cmp(&b.t));
        for j in &jumps {
            if j.magnitude() == 0.0 {
                return Err(LoadPathError::ZeroJump(j.t));
            }
            if !(j.t > 0.0 && j.t <= horizon) {
                return Err(LoadPathError::JumpOffBoundary(j.t));
            }
            // A jump must coincide with the start of some segment, or with
            // the horizon; its values must agree with the surrounding
            // segments.
            let right_seg = segments.iter().find(|s| s.t0 == j.t);
            let left_seg = segments.iter().find(|s| s.t1 == j.t);
            let left_seg = left_seg.ok_or(LoadPathError::JumpOffBoundary(j.t))?;
            if left_seg.f1 != j.left {
                return Err(LoadPathError::JumpMismatch(j.t));
            }
            match right_seg {
                Some(rs) => {
                    if rs.f0 != j.right {
                        return Err(LoadPathError::JumpMismatch(j.t));
                    }
                }
                None => {
                    if j.t != horizon {
                        return Err(LoadPathError::JumpOffBoundary(j.t));
                    }
                }
            }
        }
        // Undeclared discontinuities are rejected.
        for w in segments.windows(2) {
            if w[0].f1 != w[1].f0 && !jumps.iter().any(|j| j.t == w[1].t0) {
                return Err(LoadPathError::UndeclaredJump(w[1].t0));
            }
        }
        Ok(LoadPath { horizon, segments, jumps })
    }

    /// Constant load on `[0, horizon]`.
    pub fn constant(horizon: f64, value: [f64; 2]) -> Result<Self, LoadPathError> {
        LoadPath::new(
            horizon,
            vec![LoadSegment { t0: 0.0, t1: horizon, f0: value, f1: value }],
            vec![],
        )
    }

    /// Continuous piecewise-affine interpolation through waypoints
    /// `(time, value)`; the first time must be 0, the last is the horizon.
    pub fn piecewise_linear(waypoints: &[(f64, [f64; 2])]) -> Result<Self, LoadPathError> {
        if waypoints.len() < 2 {
            return Err(LoadPathError::BadTiling);
        }
        let horizon = waypoints.last().unwrap().0;
        let segments = waypoints
            .windows(2)
            .map(|w| LoadSegment { t0: w[0].0, t1: w[1].0, f0: w[0].1, f1: w[1].1 })
            .collect();
        LoadPath::new(horizon, segments, vec![])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[LoadSegment] {
        &self.segments
    }

    pub fn jumps(&self) -> &[LoadJump] {
        &self.jumps
    }

    fn jump_at(&self, t: f64) -> Option<&LoadJump> {
        self.jumps.iter().find(|j| j.t == t)
    }

    /// Right-continuous value at `s`.
    pub fn value(&self, s: f64) -> [f64; 2] {
        debug_assert!((0.0..=self.horizon).contains(&s));
        if s >= self.horizon {
            if let Some(j) = self.jump_at(self.horizon) {
                return j.right;
            }
            return self.segments.last().unwrap().f1;
        }
        let seg = self
            .segments
            .iter()
            .find(|seg| seg.t0 <= s && s < seg.t1)
            .unwrap_or_else(|| self.segments.last().unwrap());
        seg.value_at(s)
    }

    /// Left limit at `s`; by convention the left limit at 0 is the value at 0.
    pub fn left_value(&self, s: f64) -> [f64; 2] {
        debug_assert!((0.0..=self.horizon).contains(&s));
        if s == 0.0 {
            return self.value(0.0);
        }
        if let Some(j) = self.jump_at(s) {
            return j.left;
        }
        let seg = self
            .segments
            .iter()
            .find(|seg| seg.t0 < s && s <= seg.t1)
            .unwrap_or_else(|| self.segments.last().unwrap());
        seg.value_at(s)
    }

    /// Cumulative variation `v(s) = var(F; [0, s])`: affine arc lengths plus
    /// the magnitudes of jumps at times in `]0, s]`. Right-continuous and
    /// nondecreasing.
    pub fn cumulative_variation(&self, s: f64) -> f64 {
        let mut v = 0.0;
        for seg in &self.segments {
            if let Some(j) = self.jump_at(seg.t0) {
                if seg.t0 <= s {
                    v += j.magnitude();
                }
            }
            if s >= seg.t1 {
                v += seg.arc_length();
            } else if s > seg.t0 {
                v += seg.arc_length() * (s - seg.t0) / (seg.t1 - seg.t0);
                return v;
            } else {
                return v;
            }
        }
        if let Some(j) = self.jump_at(self.horizon) {
            if s >= self.horizon {
                v += j.magnitude();
            }
        }
        v
    }

    /// Exact total variation over `[s1, s2]`.
    ///
    /// Computed as a difference of cumulative variations, so it is additive
    /// across intermediate points by construction. A jump exactly at `s1`
    /// does not count (the path value at `s1` is already the post-jump
    /// value); a jump at `s2` does.
    pub fn variation(&self, s1: f64, s2: f64) -> Result<f64, LoadPathError> {
        if !(0.0 <= s1 && s1 <= s2 && s2 <= self.horizon) {
            return Err(LoadPathError::OutOfRange {
                time: if s1 < 0.0 || s1 > s2 { s1 } else { s2 },
                lo: 0.0,
                hi: self.horizon,
            });
        }
        Ok((self.cumulative_variation(s2) - self.cumulative_variation(s1)).max(0.0))
    }

    /// Largest `s` in `[0, horizon]` with `v(s) <= level`, computed in closed
    /// form on the piecewise representation. Requires `level >= 0`.
    pub(crate) fn sup_time_at_variation_level(&self, level: f64) -> f64 {
        let mut v = 0.0;
        for seg in &self.segments {
            if let Some(j) = self.jump_at(seg.t0) {
                if v + j.magnitude() > level {
                    return seg.t0;
                }
                v += j.magnitude();
            }
            let len = seg.arc_length();
            if v + len > level {
                // The level is crossed strictly inside this segment.
                let s = seg.t0 + (level - v) * (seg.t1 - seg.t0) / len;
                return s.min(seg.t1);
            }
            v += len;
        }
        self.horizon
    }

    /// Largest infinity norm attained by the path (checked at segment
    /// endpoints and jump values; affine pieces attain their extremes there).
    pub fn sup_norm_inf(&self) -> f64 {
        let mut m: f64 = 0.0;
        for seg in &self.segments {
            for v in [seg.f0, seg.f1] {
                m = m.max(v[0].abs()).max(v[1].abs());
            }
        }
        for j in &self.jumps {
            for v in [j.left, j.right] {
                m = m.max(v[0].abs()).max(v[1].abs());
            }
        }
        m
    }

    /// Piecewise-constant right-continuous interpolant of this path on the
    /// given breakpoints: constant `F(times[i])` on `[times[i], times[i+1][`
    /// and `F(horizon)` at the horizon, with jumps declared wherever
    /// consecutive held values differ.
    pub fn piecewise_constant_interpolant(&self, times: &[f64]) -> Result<LoadPath, LoadPathError> {
        if times.len() < 2 || times[0] != 0.0 || *times.last().unwrap() != self.horizon {
            return Err(LoadPathError::BadTiling);
        }
        let mut segments = Vec::with_capacity(times.len() - 1);
        let mut jumps = Vec::new();
        for w in times.windows(2) {
            let v = self.value(w[0]);
            let prev = segments.last().map(|s: &LoadSegment| s.f1);
            if let Some(p) = prev {
                if p != v {
                    jumps.push(LoadJump { t: w[0], left: p, right: v });
                }
            }
            segments.push(LoadSegment { t0: w[0], t1: w[1], f0: v, f1: v });
        }
        let end = self.value(self.horizon);
        let held = segments.last().unwrap().f1;
        if held != end {
            jumps.push(LoadJump { t: self.horizon, left: held, right: end });
        }
        LoadPath::new(self.horizon, segments, jumps)
    }

    /// Supremum of `|F(s) - c|` (Euclidean) over `[s1, s2[`, evaluated
    /// exactly on the piecewise representation.
    pub fn sup_deviation(&self, c: [f64; 2], s1: f64, s2: f64) -> f64 {
        let dev = |v: [f64; 2]| (v[0] - c[0]).hypot(v[1] - c[1]);
        let mut m = dev(self.value(s1)).max(dev(self.left_value(s2)));
        for seg in &self.segments {
            for t in [seg.t0, seg.t1] {
                if s1 < t && t < s2 {
                    m = m.max(dev(self.value(t))).max(dev(self.left_value(t)));
                }
            }
        }
        m
    }

    /// Applies a pointwise map to every stored value, keeping the clock.
    /// The map must be injective enough not to collapse declared jumps.
    pub fn map_values<M: Fn([f64; 2]) -> [f64; 2]>(&self, map: M) -> Result<LoadPath, LoadPathError> {
        let segments = self
            .segments
            .iter()
            .map(|s| LoadSegment { t0: s.t0, t1: s.t1, f0: map(s.f0), f1: map(s.f1) })
            .collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| LoadJump { t: j.t, left: map(j.left), right: map(j.right) })
            .collect();
        LoadPath::new(self.horizon, segments, jumps)
    }

    /// Applies a strictly increasing time map to every segment endpoint and
    /// jump time, keeping the values. The result visits the same force
    /// values in the same order, on a distorted clock.
    pub fn reparametrize<M: Fn(f64) -> f64>(&self, map: M) -> Result<LoadPath, LoadPathError> {
        let segments: Vec<LoadSegment> = self
            .segments
            .iter()
            .map(|s| LoadSegment { t0: map(s.t0), t1: map(s.t1), f0: s.f0, f1: s.f1 })
            .collect();
        let jumps: Vec<LoadJump> =
            self.jumps.iter().map(|j| LoadJump { t: map(j.t), ..*j }).collect();
        if map(0.0) != 0.0 {
            return Err(LoadPathError::BadTiling);
        }
        LoadPath::new(map(self.horizon), segments, jumps)
    }
}
