//! Log-barrier Newton method for the linear minimization oracle of
//! `{z ≥ 0 : (z−x̄)ᵀQ(z−x̄) ≤ 1}`.
//!
//! For a normalized direction `ĉ = c/‖c‖` the subsolver follows the central
//! path of
//!
//! ```text
//!     F_t(z) = t⟨ĉ, z⟩ − ln(1 − q(z)) − Σ ln z_i,    q(z) = (z−x̄)ᵀQ(z−x̄)
//! ```
//!
//! with `t ← 10t` from `t = 1` until `m/t ≤ 1e-11` (`m = n + 1` constraints).
//! Each centering runs damped Newton with Armijo backtracking; once the Newton
//! decrement drops below 1/4 full steps are taken (quadratic phase), which
//! keeps the iteration away from the rounding floor of `F_t` at large `t`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::sets::EllipsoidSpectrum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSettings {
    pub t_initial: f64,
    pub t_growth: f64,
    /// Outer stop once `m/t` falls below this.
    pub gap_tol: f64,
    /// Centering stops when the Newton decrement `λ(z)` drops below this.
    pub newton_tol: f64,
    pub armijo_factor: f64,
    pub armijo_slope: f64,
    /// Budget over all centerings.
    pub max_newton_steps: usize,
    /// Largest KKT residual accepted for the returned point.
    #[serde(default = "default_kkt_accept")]
    pub kkt_accept: f64,
}

fn default_kkt_accept() -> f64 {
    1e-8
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            t_initial: 1.0,
            t_growth: 10.0,
            gap_tol: 1e-11,
            newton_tol: 1e-10,
            armijo_factor: 0.5,
            armijo_slope: 1e-4,
            max_newton_steps: 2000,
            kkt_accept: default_kkt_accept(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSolution {
    pub point: Vec<f64>,
    /// Max of relative stationarity, complementarity and primal infeasibility
    /// for the multipliers implied by the central path.
    pub kkt_residual: f64,
    pub newton_steps: usize,
    pub final_t: f64,
}

const QUADRATIC_PHASE: f64 = 0.25;

/// Full Newton steps allowed per centering once the decrement is below
/// [`QUADRATIC_PHASE`]; quadratic convergence needs about five.
const MAX_FULL_STEPS: usize = 8;

/// Strictly feasible start: `x̄` clipped to `z_i ≥ max(x̄_i, ε₀)`, pulled
/// back toward `x̄` when the clipping leaves the ellipsoid.
pub fn start_point(center: &[f64], spectrum: &EllipsoidSpectrum) -> Result<Vec<f64>> {
    if center.iter().all(|&x| x > 0.0) {
        return Ok(center.to_vec());
    }
    let lambda_max = spectrum.eigenvalues().iter().copied().fold(0.0, f64::max);
    let axis = 1.0 / lambda_max.sqrt();
    for j in 1..=12 {
        let eps0 = axis * 10f64.powi(-j);
        let clipped: Vec<f64> = center.iter().map(|&x| x.max(eps0)).collect();
        let d: Vec<f64> = clipped.iter().zip(center).map(|(a, b)| a - b).collect();
        let q = spectrum.quadratic_form(&d);
        if q < 1.0 {
            return Ok(clipped);
        }
        // z(s) = x̄ + s(z − x̄): q scales as s², positivity needs s above s_pos
        let s_max = (0.9 / q).sqrt();
        let s_pos = center
            .iter()
            .zip(&clipped)
            .filter(|(c, _)| **c <= 0.0)
            .map(|(c, z)| -c / (z - c))
            .fold(0.0, f64::max);
        if s_pos < s_max {
            let (mut lo, mut hi) = (s_pos, s_max);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid > s_pos && mid * mid * q < 1.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let s = 0.5 * (s_pos + hi);
            let z: Vec<f64> = center
                .iter()
                .zip(&clipped)
                .map(|(c, zc)| c + s * (zc - c))
                .collect();
            if z.iter().all(|&x| x > 0.0) {
                return Ok(z);
            }
        }
    }
    Err(Error::InvalidSet(
        "ellipsoid does not meet the open nonnegative orthant".into(),
    ))
}

struct Barrier<'a> {
    center: &'a [f64],
    spectrum: &'a EllipsoidSpectrum,
    q: &'a DMatrix<f64>,
    dir: Vec<f64>,
}

struct Local {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Barrier<'_> {
    fn offset(&self, z: &[f64]) -> DVector<f64> {
        DVector::from_iterator(z.len(), z.iter().zip(self.center).map(|(a, b)| a - b))
    }

    /// `1 − q(z)`, evaluated in the eigenbasis where it cancels least.
    fn slack(&self, z: &[f64]) -> f64 {
        let d: Vec<f64> = z.iter().zip(self.center).map(|(a, b)| a - b).collect();
        1.0 - self.spectrum.quadratic_form(&d)
    }

    fn value(&self, z: &[f64], t: f64) -> f64 {
        let slack = self.slack(z);
        if slack <= 0.0 || z.iter().any(|&x| x <= 0.0) {
            return f64::INFINITY;
        }
        let lin: f64 = z.iter().zip(&self.dir).map(|(a, b)| a * b).sum();
        t * lin - slack.ln() - z.iter().map(|x| x.ln()).sum::<f64>()
    }

    fn local(&self, z: &[f64], t: f64) -> Local {
        let n = z.len();
        let d = self.offset(z);
        let gq = (self.q * &d) * 2.0;
        let slack = self.slack(z);
        let mut grad = &gq / slack;
        for i in 0..n {
            grad[i] += t * self.dir[i] - 1.0 / z[i];
        }
        let mut hess = self.q * (2.0 / slack);
        hess.ger(1.0 / (slack * slack), &gq, &gq, 1.0);
        for i in 0..n {
            hess[(i, i)] += 1.0 / (z[i] * z[i]);
        }
        Local { grad, hess }
    }

    /// Orthant multipliers are read off the central path (`ν_i = 1/(t z_i)`);
    /// the ellipsoid multiplier is fitted by least squares, since `1 − q(z)`
    /// loses most of its digits once the slack falls near 1e-12.
    fn kkt_residual(&self, z: &[f64], t: f64) -> f64 {
        let n = z.len();
        let d = self.offset(z);
        let gq = (self.q * &d) * 2.0;
        let slack = self.slack(z);
        let base: Vec<f64> = (0..n).map(|i| self.dir[i] - 1.0 / (t * z[i])).collect();
        let gq_sq = gq.norm_squared();
        let mu = if gq_sq > 0.0 {
            (-(0..n).map(|i| base[i] * gq[i]).sum::<f64>() / gq_sq).max(0.0)
        } else {
            0.0
        };
        let stationarity = (0..n)
            .map(|i| (base[i] + mu * gq[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        let complementarity = (1.0 / t).max(mu * slack.abs());
        let infeasible = z
            .iter()
            .map(|&x| -x)
            .fold(-slack, f64::max)
            .max(0.0);
        stationarity.max(complementarity).max(infeasible)
    }
}

/// Newton direction via a diagonally scaled Cholesky factorization.
fn newton_direction(local: &Local) -> Option<DVector<f64>> {
    let n = local.grad.len();
    let scale = DVector::from_iterator(n, (0..n).map(|i| 1.0 / local.hess[(i, i)].sqrt()));
    let mut h = local.hess.clone();
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] *= scale[i] * scale[j];
        }
    }
    let rhs = -local.grad.component_mul(&scale);
    // the scaled matrix has unit diagonal; a tiny shift absorbs rounding
    let chol = h.clone().cholesky().or_else(|| {
        for i in 0..n {
            h[(i, i)] += 1e-12;
        }
        h.cholesky()
    })?;
    Some(chol.solve(&rhs).component_mul(&scale))
}

/// Minimizer of `⟨c, z⟩` over the ellipsoid-orthant intersection.
pub fn ellipsoid_orthant_lmo(
    center: &[f64],
    spectrum: &EllipsoidSpectrum,
    q: &DMatrix<f64>,
    c: &[f64],
    settings: &BarrierSettings,
) -> Result<BarrierSolution> {
    let n = center.len();
    let start = start_point(center, spectrum)?;
    let nc = norm(c);
    if nc == 0.0 {
        return Ok(BarrierSolution {
            point: start,
            kkt_residual: 0.0,
            newton_steps: 0,
            final_t: 0.0,
        });
    }
    let barrier = Barrier {
        center,
        spectrum,
        q,
        dir: c.iter().map(|x| x / nc).collect(),
    };
    let m = (n + 1) as f64;
    let mut z = start;
    let mut t = settings.t_initial;
    let mut steps = 0usize;
    loop {
        // centering
        let mut full_steps = 0;
        loop {
            let local = barrier.local(&z, t);
            // an indefinite Hessian only arises from rounding near the boundary
            let Some(delta) = newton_direction(&local) else {
                break;
            };
            let decrement_sq = -local.grad.dot(&delta);
            if decrement_sq.sqrt() <= settings.newton_tol || !decrement_sq.is_finite() {
                break;
            }
            if steps >= settings.max_newton_steps {
                return Err(Error::BarrierNotConverged {
                    iterations: steps,
                    residual: barrier.kkt_residual(&z, t),
                });
            }
            steps += 1;
            let trial = |s: f64| -> Vec<f64> {
                z.iter().zip(delta.iter()).map(|(a, b)| a + s * b).collect()
            };
            let feasible =
                |p: &[f64]| p.iter().all(|&x| x > 0.0) && barrier.slack(p) > 0.0;
            if decrement_sq.sqrt() < QUADRATIC_PHASE {
                // past this many full steps only rounding noise in the slack is left
                if full_steps >= MAX_FULL_STEPS {
                    break;
                }
                full_steps += 1;
                let next = trial(1.0);
                if feasible(&next) {
                    // rounding floor: no coordinate moves by more than an ulp or so
                    let stalled = z
                        .iter()
                        .zip(delta.iter())
                        .all(|(a, d)| d.abs() <= 4.0 * f64::EPSILON * a.abs());
                    z = next;
                    if stalled {
                        break;
                    }
                    continue;
                }
            }
            let f0 = barrier.value(&z, t);
            let mut s = 1.0;
            let accepted = loop {
                let next = trial(s);
                if feasible(&next)
                    && barrier.value(&next, t) <= f0 - settings.armijo_slope * s * decrement_sq
                {
                    break Some(next);
                }
                s *= settings.armijo_factor;
                if s < 1e-20 {
                    break None;
                }
            };
            match accepted {
                Some(next) => z = next,
                // no representable decrease left
                None => break,
            }
        }
        if m / t <= settings.gap_tol {
            break;
        }
        t *= settings.t_growth;
    }
    let kkt_residual = barrier.kkt_residual(&z, t);
    if !(kkt_residual <= settings.kkt_accept) {
        return Err(Error::BarrierNotConverged {
            iterations: steps,
            residual: kkt_residual,
        });
    }
    Ok(BarrierSolution {
        kkt_residual,
        point: z,
        newton_steps: steps,
        final_t: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::FeasibleSet;

    fn identity(n: usize) -> EllipsoidSpectrum {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        EllipsoidSpectrum::new(vec![1.0; n], v).unwrap()
    }

    /// Grid search over the quarter disk `{z ≥ 0, ‖z − (2,2)‖ ≤ 1}` with step 1e-4.
    fn quarter_disk_grid_min(c: [f64; 2]) -> (f64, [f64; 2]) {
        let h = 1e-4;
        let steps = (2.0 / h) as i64;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=steps {
            let x = 1.0 + i as f64 * h;
            // extreme y values of the disk at this x
            let r2 = 1.0 - (x - 2.0) * (x - 2.0);
            if r2 < 0.0 {
                continue;
            }
            let r = r2.sqrt();
            for y in [2.0 - r, 2.0 + r] {
                let v = c[0] * x + c[1] * y;
                if v < best.0 {
                    best = (v, [x, y]);
                }
            }
        }
        best
    }

    #[test]
    fn quarter_disk_matches_grid_search() {
        let set = FeasibleSet::new_ellipsoid_orthant(vec![2.0, 2.0], identity(2)).unwrap();
        let sol = set.lmo_with_report(&[1.0, 1.0]).unwrap();
        let (_, grid) = quarter_disk_grid_min([1.0, 1.0]);
        let err = ((sol.point[0] - grid[0]).powi(2) + (sol.point[1] - grid[1]).powi(2)).sqrt();
        assert!(err < 1e-4, "{:?} vs {:?}", sol.point, grid);
        assert!(sol.kkt_residual <= 1e-10, "kkt {}", sol.kkt_residual);
    }

    #[test]
    fn active_orthant_face() {
        // disk centered at (0.5, 2), radius 1: minimizing z_0 hits the z_0 = 0 face
        let set = FeasibleSet::new_ellipsoid_orthant(vec![0.5, 2.0], identity(2)).unwrap();
        let sol = set.lmo_with_report(&[1.0, 0.0]).unwrap();
        assert!(sol.point[0] >= 0.0 && sol.point[0] < 1e-10, "{:?}", sol.point);
        assert!(sol.kkt_residual <= 1e-10, "kkt {}", sol.kkt_residual);
    }

    #[test]
    fn start_point_when_center_touches_boundary() {
        let s = identity(3);
        let z = start_point(&[0.0, 0.3, -0.2], &s).unwrap();
        assert!(z.iter().all(|&x| x > 0.0));
        let d: Vec<f64> = z.iter().zip([0.0, 0.3, -0.2]).map(|(a, b)| a - b).collect();
        assert!(s.quadratic_form(&d) < 1.0);
    }

    #[test]
    fn zero_direction_returns_start() {
        let set = FeasibleSet::new_ellipsoid_orthant(vec![2.0, 2.0], identity(2)).unwrap();
        assert_eq!(set.lmo(&[0.0, 0.0]).unwrap(), vec![2.0, 2.0]);
    }
}
