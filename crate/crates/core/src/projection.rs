//! Feasible inexact projections computed by Frank-Wolfe.
//!
//! A point `w ∈ C` is an inexact projection of `v` relative to `u ∈ C` when
//! `⟨v − w, z − w⟩ ≤ φ(u, v, w)` for every `z ∈ C`, with the relative error
//! tolerance
//!
//! ```text
//!     φ(u, v, w) = γ‖v − u‖² + θ‖w − v‖² + λ‖w − u‖².
//! ```
//!
//! Because the inequality is linear in `z`, a single LMO call at `w − v`
//! certifies it for the whole set. [`fw_project`] runs conditional gradient
//! on `ψ(w) = ½‖w − v‖²` started at `u` and stops as soon as that certificate
//! holds.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{dist_sq, dot, norm_sq, sub};
use crate::sets::FeasibleSet;

/// Tolerance used for the `u ∈ C` and `w ∈ C` preconditions.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Forcing parameters `(γ, θ, λ)` of the relative error tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceParams {
    pub gamma: f64,
    pub theta: f64,
    pub lambda: f64,
}

impl Default for ToleranceParams {
    /// The benchmark setting `γ = 0.025, θ = 0.25, λ = 0.025`.
    fn default() -> Self {
        Self {
            gamma: 0.025,
            theta: 0.25,
            lambda: 0.025,
        }
    }
}

impl ToleranceParams {
    pub fn new(gamma: f64, theta: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            gamma,
            theta,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    /// Exact projection mode.
    pub const ZERO: Self = Self {
        gamma: 0.0,
        theta: 0.0,
        lambda: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let Self {
            gamma,
            theta,
            lambda,
        } = *self;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must be >= 0")));
        }
        if !(0.0..0.5).contains(&theta) {
            return Err(Error::InvalidParams(format!("theta = {theta} must lie in [0, 1/2)")));
        }
        if !(0.0..0.5).contains(&lambda) {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} must lie in [0, 1/2)"
            )));
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        self.gamma == 0.0 && self.theta == 0.0 && self.lambda == 0.0
    }

    /// `ν = (1 + 2γ)/(1 − 2λ)`
    pub fn nu(&self) -> f64 {
        (1.0 + 2.0 * self.gamma) / (1.0 - 2.0 * self.lambda)
    }

    /// Coefficient `(2γ + 2λ)/(1 − 2λ)` of the distance inflation bound.
    pub fn inflation(&self) -> f64 {
        (2.0 * self.gamma + 2.0 * self.lambda) / (1.0 - 2.0 * self.lambda)
    }
}

/// Relative error tolerance `φ(u, v, w)`.
pub fn phi(params: &ToleranceParams, u: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    check_dim(u.len(), v.len())?;
    check_dim(u.len(), w.len())?;
    Ok(phi_unchecked(params, u, v, w))
}

fn phi_unchecked(p: &ToleranceParams, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    p.gamma * dist_sq(v, u) + p.theta * dist_sq(w, v) + p.lambda * dist_sq(w, u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub k: usize,
    /// `g*_k = ⟨w_k − v, z_k − w_k⟩`
    pub gap: f64,
    /// `ψ(w_k) = ½‖w_k − v‖²`
    pub psi: f64,
}

impl GapEntry {
    pub const CSV_HEADER: &'static str = "k,gap,psi";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.k, self.gap, self.psi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    pub inner_iterations: usize,
    pub final_gap: f64,
    pub tolerance_at_exit: f64,
    pub gap_history: Option<Vec<GapEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FwOptions {
    pub max_inner: usize,
    /// Absolute gap floor used when all forcing parameters vanish.
    /// Defaults to `1e-12 (1 + ‖v‖²)`.
    pub gap_floor: Option<f64>,
    pub record_history: bool,
}

impl FwOptions {
    /// Default budget `10 n + 1000`.
    pub fn for_dimension(n: usize) -> Self {
        Self {
            max_inner: 10 * n + 1000,
            gap_floor: None,
            record_history: false,
        }
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    pub fn with_max_inner(mut self, max_inner: usize) -> Self {
        self.max_inner = max_inner;
        self
    }
}

/// Frank-Wolfe inexact projection of `v` onto `set` relative to `u`.
pub fn fw_project(
    set: &FeasibleSet,
    params: &ToleranceParams,
    u: &[f64],
    v: &[f64],
    opts: &FwOptions,
) -> Result<ProjectionResult> {
    let n = set.dimension();
    check_dim(n, u.len())?;
    check_dim(n, v.len())?;
    check_finite(v, "projection input")?;
    params.validate()?;
    if opts.max_inner == 0 {
        return Err(Error::InvalidParams("max_inner must be positive".into()));
    }
    let residual = set.feasibility_residual(u)?;
    if residual > FEASIBILITY_TOL {
        return Err(Error::Infeasible { residual });
    }
    let floor = if params.is_exact() {
        opts.gap_floor.unwrap_or(1e-12 * (1.0 + norm_sq(v)))
    } else {
        0.0
    };

    let mut history = opts.record_history.then(Vec::new);
    let mut w = u.to_vec();
    let mut gap = 0.0;
    let mut tolerance = 0.0;
    for k in 1..=opts.max_inner {
        let grad = sub(&w, v);
        let z = set.lmo(&grad)?;
        let dir = sub(&z, &w);
        gap = dot(&grad, &dir);
        tolerance = phi_unchecked(params, u, v, &w).max(floor);
        if let Some(h) = history.as_mut() {
            h.push(GapEntry {
                k,
                gap,
                psi: 0.5 * norm_sq(&grad),
            });
        }
        if gap >= -tolerance {
            return Ok(ProjectionResult {
                point: w,
                inner_iterations: k,
                final_gap: gap,
                tolerance_at_exit: tolerance,
                gap_history: history,
            });
        }
        let dd = norm_sq(&dir);
        if dd == 0.0 {
            return Err(Error::Internal(format!(
                "LMO returned the current iterate with negative gap {gap:e}"
            )));
        }
        let tau = (-gap / dd).min(1.0);
        for (wi, di) in w.iter_mut().zip(&dir) {
            *wi += tau * di;
        }
    }
    Err(Error::ProjectionBudget {
        max_inner: opts.max_inner,
        gap,
        tolerance,
        best: w,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub certified: bool,
    /// `⟨v − w, z* − w⟩ − φ(u, v, w)`; positive values violate the definition.
    pub violation: f64,
}

/// Checks membership of `w` in the inexact projection set of `v` relative to `u`.
pub fn certify_projection(
    set: &FeasibleSet,
    params: &ToleranceParams,
    u: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<Certificate> {
    let n = set.dimension();
    check_dim(n, u.len())?;
    check_dim(n, v.len())?;
    check_dim(n, w.len())?;
    let residual = set.feasibility_residual(w)?;
    if residual > FEASIBILITY_TOL {
        return Err(Error::Infeasible { residual });
    }
    let z = set.lmo(&sub(w, v))?;
    let lhs = dot(&sub(v, w), &sub(&z, w));
    let violation = lhs - phi_unchecked(params, u, v, w);
    Ok(Certificate {
        certified: violation <= 1e-12,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ball() -> FeasibleSet {
        FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn phi_examples() {
        let p = ToleranceParams::new(0.025, 0.25, 0.025).unwrap();
        let x = [0.3, -2.0];
        assert_eq!(phi(&p, &x, &x, &x).unwrap(), 0.0);
        assert_eq!(
            phi(&ToleranceParams::ZERO, &[0.0, 1.0], &[5.0, 1.0], &[0.0, 2.0]).unwrap(),
            0.0
        );
        let v = phi(&p, &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 0.55).abs() < 1e-15);
        assert!(phi(&p, &[0.0], &[0.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ToleranceParams::new(0.0, 0.5, 0.0).is_err());
        assert!(ToleranceParams::new(0.0, 0.0, 0.5).is_err());
        assert!(ToleranceParams::new(-1e-3, 0.0, 0.0).is_err());
        let p = ToleranceParams::default();
        assert!((p.nu() - 1.05 / 0.95).abs() < 1e-15);
    }

    #[test]
    fn feasible_input_returns_start() {
        let set = unit_ball();
        let u = [0.2, 0.1];
        let r = fw_project(&set, &ToleranceParams::default(), &u, &u, &FwOptions::for_dimension(2))
            .unwrap();
        assert_eq!(r.point, u.to_vec());
        assert_eq!(r.inner_iterations, 1);
    }

    #[test]
    fn exact_mode_converges_to_projection() {
        let set = unit_ball();
        let r = fw_project(
            &set,
            &ToleranceParams::ZERO,
            &[0.0, 1.0],
            &[2.0, 0.0],
            &FwOptions::for_dimension(2),
        )
        .unwrap();
        let exact = set.exact_project(&[2.0, 0.0]).unwrap();
        assert!(crate::linalg::dist(&r.point, &exact) < 1e-3, "{:?}", r.point);
    }

    #[test]
    fn inexact_output_is_certified() {
        let set = unit_ball();
        let p = ToleranceParams::new(0.1, 0.1, 0.1).unwrap();
        let (u, v) = ([0.0, 1.0], [2.0, 0.0]);
        let r = fw_project(&set, &p, &u, &v, &FwOptions::for_dimension(2)).unwrap();
        let z = set.lmo(&sub(&r.point, &v)).unwrap();
        let lhs = dot(&sub(&v, &r.point), &sub(&z, &r.point));
        assert!(lhs <= phi(&p, &u, &v, &r.point).unwrap());
        assert!(certify_projection(&set, &p, &u, &v, &r.point).unwrap().certified);
    }

    #[test]
    fn certificate_rejects_start_point() {
        let set = unit_ball();
        let c = certify_projection(&set, &ToleranceParams::ZERO, &[0.0, 1.0], &[2.0, 0.0], &[0.0, 1.0])
            .unwrap();
        assert!(!c.certified);
        // z* = (2, -1)/√5, ⟨(2,-1), z* - (0,1)⟩ = √5 + 1
        assert!((c.violation - (5f64.sqrt() + 1.0)).abs() < 1e-12);
        let exact = set.exact_project(&[2.0, 0.0]).unwrap();
        assert!(
            certify_projection(&set, &ToleranceParams::default(), &[0.0, 1.0], &[2.0, 0.0], &exact)
                .unwrap()
                .certified
        );
        assert!(matches!(
            certify_projection(&set, &ToleranceParams::ZERO, &[0.0, 1.0], &[2.0, 0.0], &[2.0, 0.0]),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn errors_on_bad_inputs() {
        let set = unit_ball();
        let opts = FwOptions::for_dimension(2);
        assert!(matches!(
            fw_project(&set, &ToleranceParams::ZERO, &[3.0, 0.0], &[2.0, 0.0], &opts),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(
            fw_project(
                &set,
                &ToleranceParams::ZERO,
                &[0.0, 1.0],
                &[2.0, 0.0],
                &FwOptions::for_dimension(2).with_max_inner(2)
            ),
            Err(Error::ProjectionBudget { .. })
        ));
        assert!(fw_project(&set, &ToleranceParams::ZERO, &[0.0, 1.0], &[f64::NAN, 0.0], &opts).is_err());
    }
}
