//! Exogenous, Polyak and dynamic step-size rules with their admissibility
//! conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::projection::ToleranceParams;

/// How many leading `α_k` terms [`validate`] inspects.
const ALPHA_CHECK_TERMS: usize = 1_000_000;

/// Constants shared by the convergence analysis of all three rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleConstants {
    /// ε-subgradient coupling `μ`.
    pub mu: f64,
    /// `ν = (1 + 2γ̄)/(1 − 2λ̄)`
    pub nu: f64,
    /// `ρ = ν + 2μ`
    pub rho: f64,
}

impl RuleConstants {
    pub fn new(params: &ToleranceParams, mu: f64) -> Self {
        let nu = params.nu();
        Self {
            mu,
            nu,
            rho: nu + 2.0 * mu,
        }
    }

    /// `2μ + ν`
    pub fn coupling(&self) -> f64 {
        2.0 * self.mu + self.nu
    }
}

/// Exogenous sequence `k ↦ α_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSequence {
    /// `a/(k+1)`
    Harmonic { scale: f64 },
    /// `a/(k+1)^p`
    Power { scale: f64, exponent: f64 },
    Constant { value: f64 },
}

impl Default for AlphaSequence {
    fn default() -> Self {
        AlphaSequence::Harmonic { scale: 1.0 }
    }
}

impl AlphaSequence {
    pub fn at(&self, k: usize) -> f64 {
        let k1 = (k + 1) as f64;
        match *self {
            AlphaSequence::Harmonic { scale } => scale / k1,
            AlphaSequence::Power { scale, exponent } => scale / k1.powf(exponent),
            AlphaSequence::Constant { value } => value,
        }
    }

    /// Declares `Σ α_k = ∞`.
    pub fn declares_divergent_sum(&self) -> bool {
        match *self {
            AlphaSequence::Harmonic { .. } => true,
            AlphaSequence::Power { exponent, .. } => exponent <= 1.0,
            AlphaSequence::Constant { .. } => true,
        }
    }

    /// Declares `Σ α_k² < ∞`.
    pub fn declares_square_summable(&self) -> bool {
        match *self {
            AlphaSequence::Harmonic { .. } => true,
            AlphaSequence::Power { exponent, .. } => exponent > 0.5,
            AlphaSequence::Constant { .. } => false,
        }
    }
}

/// Relaxation sequence `k ↦ β_k`: a constant or a repeating cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSequence {
    Constant(f64),
    Cycle(Vec<f64>),
}

impl BetaSequence {
    /// `β_k = 2(1 − 2λ)/(1 + 2γ) − 10⁻⁶`, just inside the dynamic-rule bound.
    pub fn dynamic_default(params: &ToleranceParams) -> Self {
        BetaSequence::Constant(2.0 * (1.0 - 2.0 * params.lambda) / (1.0 + 2.0 * params.gamma) - 1e-6)
    }

    pub fn at(&self, k: usize) -> f64 {
        match self {
            BetaSequence::Constant(b) => *b,
            BetaSequence::Cycle(values) => values[k % values.len()],
        }
    }

    pub fn low(&self) -> f64 {
        match self {
            BetaSequence::Constant(b) => *b,
            BetaSequence::Cycle(values) => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn high(&self) -> f64 {
        match self {
            BetaSequence::Constant(b) => *b,
            BetaSequence::Cycle(values) => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepsizeRule {
    Exogenous {
        #[serde(default)]
        alpha: AlphaSequence,
        #[serde(default)]
        mu: f64,
    },
    Polyak {
        f_star: f64,
        beta: BetaSequence,
        #[serde(default)]
        mu: f64,
    },
    Dynamic {
        beta: BetaSequence,
        #[serde(default)]
        mu: f64,
    },
}

impl StepsizeRule {
    pub fn name(&self) -> &'static str {
        match self {
            StepsizeRule::Exogenous { .. } => "exogenous",
            StepsizeRule::Polyak { .. } => "polyak",
            StepsizeRule::Dynamic { .. } => "dynamic",
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            StepsizeRule::Exogenous { mu, .. }
            | StepsizeRule::Polyak { mu, .. }
            | StepsizeRule::Dynamic { mu, .. } => mu,
        }
    }

    pub fn beta(&self) -> Option<&BetaSequence> {
        match self {
            StepsizeRule::Exogenous { .. } => None,
            StepsizeRule::Polyak { beta, .. } | StepsizeRule::Dynamic { beta, .. } => Some(beta),
        }
    }

    pub fn alpha(&self, k: usize) -> Option<f64> {
        match self {
            StepsizeRule::Exogenous { alpha, .. } => Some(alpha.at(k)),
            _ => None,
        }
    }

    /// `t_k = α_k / max{1, ‖s_k‖}`
    pub fn exogenous_step(&self, k: usize, s: &[f64]) -> Result<f64> {
        match self {
            StepsizeRule::Exogenous { alpha, .. } => Ok(alpha.at(k) / norm(s).max(1.0)),
            other => Err(wrong_rule("exogenous", other)),
        }
    }

    /// `t_k = β_k (f(x_k) − f*)/‖s_k‖²`
    pub fn polyak_step(&self, k: usize, f_xk: f64, s: &[f64]) -> Result<f64> {
        match self {
            StepsizeRule::Polyak { f_star, beta, .. } => {
                let ns = norm(s);
                if ns == 0.0 {
                    return Err(Error::ZeroSubgradient { rule: "Polyak" });
                }
                Ok(beta.at(k) * (f_xk - f_star) / (ns * ns))
            }
            other => Err(wrong_rule("polyak", other)),
        }
    }

    /// Returns `(t_k, t̃_k)` with `t̃_k = β_k (f(x_k) − f_lev)/‖s_k‖` and
    /// `t_k = t̃_k/‖s_k‖`. The level gap is passed directly so callers can
    /// form it without cancellation.
    pub fn dynamic_step(&self, k: usize, level_gap: f64, s: &[f64]) -> Result<(f64, f64)> {
        match self {
            StepsizeRule::Dynamic { beta, .. } => {
                let ns = norm(s);
                if ns == 0.0 {
                    return Err(Error::ZeroSubgradient { rule: "dynamic" });
                }
                let t_tilde = beta.at(k) * level_gap / ns;
                Ok((t_tilde / ns, t_tilde))
            }
            other => Err(wrong_rule("dynamic", other)),
        }
    }

    /// Largest admissible `ε_k` at iteration `k`.
    pub fn eps_cap(&self, k: usize, f_xk: f64, f_lev: Option<f64>) -> f64 {
        match self {
            StepsizeRule::Exogenous { alpha, mu } => mu * alpha.at(k),
            StepsizeRule::Polyak { f_star, beta, mu } => mu * beta.at(k) * (f_xk - f_star),
            StepsizeRule::Dynamic { beta, mu } => {
                mu * beta.at(k) * f_lev.map_or(0.0, |lev| f_xk - lev)
            }
        }
    }
}

fn wrong_rule(expected: &str, got: &StepsizeRule) -> Error {
    Error::InvalidParams(format!("expected {expected} rule, got {}", got.name()))
}

/// Checks the admissibility conditions of `rule` against `constants`.
pub fn validate(rule: &StepsizeRule, constants: &RuleConstants) -> Result<()> {
    if !(rule.mu().is_finite() && rule.mu() >= 0.0) {
        return Err(Error::RuleViolation("mu >= 0".into()));
    }
    match rule {
        StepsizeRule::Exogenous { alpha, .. } => {
            if let Some(k) = (0..ALPHA_CHECK_TERMS).find(|&k| {
                let a = alpha.at(k);
                !(a.is_finite() && a > 0.0)
            }) {
                return Err(Error::RuleViolation(format!("alpha_k > 0 (fails at k = {k})")));
            }
            if !alpha.declares_divergent_sum() {
                return Err(Error::RuleViolation("sum of alpha_k = infinity".into()));
            }
            if !alpha.declares_square_summable() {
                return Err(Error::RuleViolation("sum of alpha_k^2 < infinity".into()));
            }
            Ok(())
        }
        StepsizeRule::Polyak { f_star, beta, .. } => {
            if !f_star.is_finite() {
                return Err(Error::RuleViolation("f* finite".into()));
            }
            check_beta(beta, 1.0, constants)
        }
        StepsizeRule::Dynamic { beta, .. } => check_beta(beta, 2.0, constants),
    }
}

fn check_beta(beta: &BetaSequence, numerator: f64, constants: &RuleConstants) -> Result<()> {
    if let BetaSequence::Cycle(values) = beta {
        if values.is_empty() {
            return Err(Error::RuleViolation("beta cycle must be non-empty".into()));
        }
    }
    let low = beta.low();
    let high = beta.high();
    if !(low.is_finite() && low > 0.0) {
        return Err(Error::RuleViolation(format!("0 < beta_low (beta_low = {low})")));
    }
    let bound = numerator / constants.coupling();
    if !(high < bound) {
        return Err(Error::RuleViolation(format!(
            "beta_high < {numerator}/(2 mu + nu) (beta_high = {high}, bound = {bound})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constants(nu: f64, mu: f64) -> RuleConstants {
        RuleConstants {
            mu,
            nu,
            rho: nu + 2.0 * mu,
        }
    }

    #[test]
    fn dynamic_default_beta_is_admissible() {
        let params = ToleranceParams::new(0.025, 0.25, 0.025).unwrap();
        let c = RuleConstants::new(&params, 0.0);
        assert!((c.nu - 1.105263157894737).abs() < 1e-12);
        assert!((2.0 / c.nu - 1.8095238095238095).abs() < 1e-12);
        let beta = BetaSequence::dynamic_default(&params);
        assert!((beta.at(0) - 1.809523).abs() < 1e-6);
        let rule = StepsizeRule::Dynamic { beta, mu: 0.0 };
        validate(&rule, &c).unwrap();
        let b = rule.beta().unwrap().high();
        assert!(2.0 - c.coupling() * b > 0.0);
    }

    #[test]
    fn polyak_bound_excludes_boundary() {
        let rule = StepsizeRule::Polyak {
            f_star: 0.0,
            beta: BetaSequence::Constant(1.0),
            mu: 0.0,
        };
        let err = validate(&rule, &constants(1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("1/(2 mu + nu)"), "{err}");
        let ok = StepsizeRule::Polyak {
            f_star: 0.0,
            beta: BetaSequence::Constant(0.9),
            mu: 0.0,
        };
        validate(&ok, &constants(1.0, 0.0)).unwrap();
    }

    #[test]
    fn exogenous_validation() {
        let c = constants(1.0, 0.0);
        let harmonic = StepsizeRule::Exogenous {
            alpha: AlphaSequence::Harmonic { scale: 1.0 },
            mu: 0.0,
        };
        validate(&harmonic, &c).unwrap();
        let constant = StepsizeRule::Exogenous {
            alpha: AlphaSequence::Constant { value: 0.1 },
            mu: 0.0,
        };
        assert!(validate(&constant, &c).is_err());
        let fast = StepsizeRule::Exogenous {
            alpha: AlphaSequence::Power {
                scale: 1.0,
                exponent: 2.0,
            },
            mu: 0.0,
        };
        assert!(validate(&fast, &c).is_err());
        let negative = StepsizeRule::Exogenous {
            alpha: AlphaSequence::Harmonic { scale: -1.0 },
            mu: 0.0,
        };
        assert!(validate(&negative, &c).is_err());
    }

    #[test]
    fn step_examples() {
        let exo = StepsizeRule::Exogenous {
            alpha: AlphaSequence::Harmonic { scale: 1.0 },
            mu: 0.0,
        };
        assert_eq!(exo.exogenous_step(0, &[2.0, 0.0]).unwrap(), 0.5);
        assert_eq!(exo.exogenous_step(0, &[0.5, 0.0]).unwrap(), 1.0);
        assert_eq!(exo.exogenous_step(3, &[0.0, 1.0]).unwrap(), 0.25);
        assert_eq!(exo.exogenous_step(0, &[0.0, 0.0]).unwrap(), 1.0);

        let polyak = |beta: f64| StepsizeRule::Polyak {
            f_star: 1.0,
            beta: BetaSequence::Constant(beta),
            mu: 0.0,
        };
        assert_eq!(polyak(1.0).polyak_step(0, 2.0, &[2.0, 0.0]).unwrap(), 0.25);
        assert_eq!(polyak(1.0).polyak_step(0, 1.0, &[2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(polyak(0.5).polyak_step(0, 5.0, &[1.0]).unwrap(), 2.0);
        assert!(matches!(
            polyak(0.5).polyak_step(0, 5.0, &[0.0]),
            Err(Error::ZeroSubgradient { .. })
        ));

        let dynamic = |beta: f64| StepsizeRule::Dynamic {
            beta: BetaSequence::Constant(beta),
            mu: 0.0,
        };
        assert_eq!(dynamic(1.0).dynamic_step(0, 2.0, &[0.0, 2.0]).unwrap(), (0.5, 1.0));
        assert_eq!(dynamic(1.5).dynamic_step(0, 1.0, &[1.0]).unwrap(), (1.5, 1.5));
        let (t, tt) = dynamic(1.5).dynamic_step(0, 1e-300, &[1.0]).unwrap();
        assert!(t <= 2e-300 && tt <= 2e-300);
        assert!(dynamic(1.0).dynamic_step(0, 1.0, &[0.0]).is_err());
        assert!(exo.polyak_step(0, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn rule_json_shapes() {
        let rule: StepsizeRule =
            serde_json::from_str(r#"{"rule":"dynamic","beta":1.5,"mu":0}"#).unwrap();
        assert_eq!(rule.beta().unwrap().at(7), 1.5);
        let rule: StepsizeRule = serde_json::from_str(r#"{"rule":"exogenous"}"#).unwrap();
        assert_eq!(rule.alpha(1), Some(0.5));
        let rule: StepsizeRule =
            serde_json::from_str(r#"{"rule":"polyak","f_star":1,"beta":[0.2,0.4]}"#).unwrap();
        assert_eq!(rule.beta().unwrap().at(3), 0.4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn exogenous_step_bounds(
            alpha in 1e-6f64..10.0,
            s in proptest::collection::vec(-100.0f64..100.0, 1..6),
        ) {
            let rule = StepsizeRule::Exogenous {
                alpha: AlphaSequence::Constant { value: alpha },
                mu: 0.0,
            };
            let t = rule.exogenous_step(0, &s).unwrap();
            prop_assert!(t <= alpha);
            prop_assert!(t * norm(&s) <= alpha * (1.0 + 1e-15));
        }
    }
}
