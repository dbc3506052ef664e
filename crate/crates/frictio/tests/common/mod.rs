//! Shared random-instance generators for the integration suites.

use frictio::contact::{LoadJump, LoadPath, LoadSegment, StiffnessMatrix2};
use frictio::rng::CounterRng;

/// Well-conditioned SPD stiffness with nonzero coupling, so the critical
/// coefficient is finite and solution-map constants stay moderate.
pub fn random_coupled_stiffness(d: &mut CounterRng) -> StiffnessMatrix2 {
    let k_nn = d.range(1.0, 3.0);
    let k_tt = d.range(1.0, 3.0);
    let k_nt = d.range(0.2, 0.6) * (k_nn * k_tt).sqrt();
    StiffnessMatrix2::new(k_nn, k_nt, k_tt).unwrap()
}

/// Continuous piecewise-affine load starting at zero.
pub fn random_lipschitz_load(d: &mut CounterRng, horizon: f64) -> LoadPath {
    let n = 3 + (d.next_u64() % 5) as usize;
    let mut pts = vec![(0.0, [0.0, 0.0])];
    for j in 1..=n {
        pts.push((
            horizon * j as f64 / n as f64,
            [d.range(-2.0, 2.0), d.range(-2.0, 2.0)],
        ));
    }
    LoadPath::piecewise_linear(&pts).unwrap()
}

/// Load of bounded variation starting at zero, with one or two genuine
/// jumps between affine pieces.
pub fn random_bv_load(d: &mut CounterRng, horizon: f64) -> LoadPath {
    let n = 4 + (d.next_u64() % 3) as usize;
    let jump_at = 1 + (d.next_u64() % (n as u64 - 2)) as usize;
    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    let mut value = [0.0f64, 0.0f64];
    for j in 0..n {
        let t0 = horizon * j as f64 / n as f64;
        let t1 = horizon * (j + 1) as f64 / n as f64;
        if j == jump_at {
            let jumped = [value[0] + d.range(0.3, 1.5), value[1] - d.range(0.3, 1.5)];
            jumps.push(LoadJump { t: t0, left: value, right: jumped });
            value = jumped;
        }
        let next = [d.range(-2.0, 2.0), d.range(-2.0, 2.0)];
        segments.push(LoadSegment { t0, t1, f0: value, f1: next });
        value = next;
    }
    LoadPath::new(horizon, segments, jumps).unwrap()
}
