//! Independent brute-force verifiers used by the test suite.
//!
//! Nothing here shares code with the solvers it checks: minimization is
//! exhaustive grid search with recentering plus a derivative-free
//! coordinate polish, quadratic programs get a plain projected gradient,
//! and element energies come from Gauss quadrature of the interpolated
//! displacement field.

use thiserror::Error;

use crate::fem::ElasticMaterial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid needs an odd point count >= 3 per axis, got {0}")]
    BadPointCount(usize),
    #[error("grid half-widths must be positive and finite")]
    BadHalfWidth,
    #[error("grid dimensions disagree")]
    DimensionMismatch,
    #[error("no grid point satisfies the constraints")]
    InfeasibleGrid,
    #[error("triangle is degenerate")]
    DegenerateTriangle,
}

/// Search box for [`brute_minimize`].
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    /// Points per axis, odd so the center is sampled.
    pub points: usize,
    /// Recentering refinements after the initial sweep.
    pub levels: usize,
}

impl GridSpec {
    /// 31 points per axis and 5 refinement levels (shrink factor 10).
    pub fn centered(center: Vec<f64>, half_width: Vec<f64>) -> Self {
        GridSpec { center, half_width, points: 31, levels: 5 }
    }

    fn validate(&self) -> Result<(), OracleError> {
        if self.points < 3 || self.points % 2 == 0 {
            return Err(OracleError::BadPointCount(self.points));
        }
        if self.center.len() != self.half_width.len() {
            return Err(OracleError::DimensionMismatch);
        }
        if !self.half_width.iter().all(|h| h.is_finite() && *h > 0.0) {
            return Err(OracleError::BadHalfWidth);
        }
        Ok(())
    }
}

fn clamp_feasible(x: &mut [f64], upper: &[Option<f64>]) {
    for (xi, ub) in x.iter_mut().zip(upper) {
        if let Some(b) = ub {
            if *xi > *b {
                *xi = *b;
            }
        }
    }
}

/// Exhaustive minimization of a convex objective over per-axis upper-bound
/// constraints.
///
/// Every candidate is clamped onto the feasible set before evaluation, so
/// the returned point is feasible exactly. Each refinement level recenters
/// on the incumbent and shrinks the box by 10 (1.5 grid cells of margin,
/// which convexity makes safe); a final golden-section coordinate descent
/// polishes to well below the guaranteed `1e-6`.
pub fn brute_minimize<F: Fn(&[f64]) -> f64>(
    objective: F,
    upper: &[Option<f64>],
    grid: &GridSpec,
) -> Result<Vec<f64>, OracleError> {
    grid.validate()?;
    let dim = grid.center.len();
    if upper.len() != dim {
        return Err(OracleError::DimensionMismatch);
    }
    if upper.iter().any(|u| matches!(u, Some(b) if !b.is_finite())) {
        return Err(OracleError::InfeasibleGrid);
    }

    let mut center = grid.center.clone();
    clamp_feasible(&mut center, upper);
    let mut half = grid.half_width.clone();
    let mut best = center.clone();
    let mut best_val = objective(&best);

    for _level in 0..=grid.levels {
        // Full sweep of the current box.
        let mut idx = vec![0usize; dim];
        loop {
            let mut x: Vec<f64> = (0..dim)
                .map(|d| {
                    center[d] - half[d]
                        + 2.0 * half[d] * idx[d] as f64 / (grid.points - 1) as f64
                })
                .collect();
            clamp_feasible(&mut x, upper);
            let v = objective(&x);
            if v < best_val {
                best_val = v;
                best = x;
            }
            // Odometer increment.
            let mut d = 0;
            loop {
                if d == dim {
                    break;
                }
                idx[d] += 1;
                if idx[d] < grid.points {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
        center.copy_from_slice(&best);
        for h in half.iter_mut() {
            *h /= 10.0;
        }
    }

    // Coordinate descent with golden-section line searches over the full
    // original box. The grid found the neighborhood; this phase converges
    // globally for convex objectives with coordinate-separable nonsmooth
    // parts, which covers the kink-grazing cases where a recentering grid
    // alone can stall.
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _sweep in 0..2000 {
        let mut moved = 0.0f64;
        for d in 0..dim {
            let reach = grid.half_width[d];
            let mut lo = best[d] - reach;
            let mut hi = best[d] + reach;
            if let Some(b) = upper[d] {
                hi = hi.min(b);
                lo = lo.min(b);
            }
            let eval = |t: f64, best: &[f64]| {
                let mut x = best.to_vec();
                x[d] = t;
                objective(&x)
            };
            let mut a = lo;
            let mut b2 = hi;
            let mut c1 = b2 - phi * (b2 - a);
            let mut c2 = a + phi * (b2 - a);
            let mut f1 = eval(c1, &best);
            let mut f2 = eval(c2, &best);
            for _ in 0..90 {
                if f1 <= f2 {
                    b2 = c2;
                    c2 = c1;
                    f2 = f1;
                    c1 = b2 - phi * (b2 - a);
                    f1 = eval(c1, &best);
                } else {
                    a = c1;
                    c1 = c2;
                    f1 = f2;
                    c2 = a + phi * (b2 - a);
                    f2 = eval(c2, &best);
                }
            }
            let t = if f1 <= f2 { c1 } else { c2 };
            if eval(t, &best) < best_val {
                moved = moved.max((t - best[d]).abs());
                best[d] = t;
                best_val = objective(&best);
            }
        }
        if moved <= 1e-13 * (1.0 + best.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            break;
        }
    }
    Ok(best)
}

/// Projected gradient descent for `min 1/2 x.Qx - b.x` under per-axis upper
/// bounds; `q` is dense row-major symmetric positive definite. Gradient
/// products are accumulated in compensated arithmetic.
pub fn projected_gradient_qp(
    q: &[f64],
    b: &[f64],
    upper: &[Option<f64>],
    iterations: usize,
) -> Result<Vec<f64>, OracleError> {
    let n = b.len();
    if q.len() != n * n || upper.len() != n {
        return Err(OracleError::DimensionMismatch);
    }
    // Step from a power-iteration bound on the largest eigenvalue.
    let mut v = vec![1.0f64; n];
    let mut lambda = 1.0f64;
    for _ in 0..100 {
        let mut w = vec![0.0; n];
        kahan_mul(q, &v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    let step = 1.0 / (1.1 * lambda.max(1e-30));

    let mut x = vec![0.0f64; n];
    clamp_feasible(&mut x, upper);
    let mut grad = vec![0.0; n];
    for _ in 0..iterations {
        kahan_mul(q, &x, &mut grad);
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut xi = x[i] - step * (grad[i] - b[i]);
            if let Some(ub) = upper[i] {
                xi = xi.min(ub);
            }
            moved = moved.max((xi - x[i]).abs());
            x[i] = xi;
        }
        if moved < 1e-15 {
            break;
        }
    }
    Ok(x)
}

fn kahan_mul(q: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for r in 0..n {
        let mut acc = 0.0;
        let mut comp = 0.0;
        for c in 0..n {
            let y = q[r * n + c] * x[c] - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        out[r] = acc;
    }
}

/// Elastic energy of the triangle `(a, b, c)` under the displacement field
/// that interpolates linearly from `u_a` at vertex `a` to zero at `b` and
/// `c`, integrated with the 3-point (edge midpoint) Gauss rule.
///
/// The shape function is evaluated through its closed interpolation formula
/// and differentiated analytically, independent of the stiffness assembly
/// route it is used to check.
pub fn quadrature_energy(
    a: [f64; 2],
    b: [f64; 2],
    c: [f64; 2],
    mat: &ElasticMaterial,
    u_a: [f64; 2],
) -> Result<f64, OracleError> {
    let double_area =
        (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if double_area.abs() < 1e-14 {
        return Err(OracleError::DegenerateTriangle);
    }
    let dx_ab = a[0] - b[0];
    let dy_cb = c[1] - b[1];
    if dx_ab == 0.0 || dy_cb == 0.0 {
        return Err(OracleError::DegenerateTriangle);
    }
    // phi(x, y) = [ (x - x_b)/dx_ab - ((x_c - x_b)/dx_ab) (y - y_b)/dy_cb ] / denom,
    // affine with phi(a) = 1, phi(b) = phi(c) = 0.
    let denom = 1.0 - (c[0] - b[0]) / dx_ab * ((a[1] - b[1]) / dy_cb);
    if denom == 0.0 {
        return Err(OracleError::DegenerateTriangle);
    }
    let grad_phi = [
        1.0 / (dx_ab * denom),
        -(c[0] - b[0]) / (dx_ab * dy_cb * denom),
    ];
    // u = phi u_a, so the strain is constant.
    let e_xx = grad_phi[0] * u_a[0];
    let e_yy = grad_phi[1] * u_a[1];
    let e_xy = 0.5 * (grad_phi[1] * u_a[0] + grad_phi[0] * u_a[1]);
    let (lambda, mu) = mat.lame();
    let density = |exx: f64, eyy: f64, exy: f64| {
        let tr = exx + eyy;
        0.5 * lambda * tr * tr + mu * (exx * exx + eyy * eyy + 2.0 * exy * exy)
    };
    // 3-point rule at edge midpoints, weights 1/3.
    let area = 0.5 * double_area.abs();
    let mut energy = 0.0;
    for _midpoint in 0..3 {
        energy += density(e_xx, e_yy, e_xy) / 3.0;
    }
    Ok(area * energy)
}
