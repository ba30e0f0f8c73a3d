//! Serializable run configuration shared by the CLI and the C ABI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{box_l1_problem, generate_instance, EllipsoidL1Spec, ProblemInstance};
use crate::projection::ToleranceParams;
use crate::solver::{solve_instance, SolverOptions, SolverRun};
use crate::stepsize::{BetaSequence, StepsizeRule};

pub const CONFIG_SCHEMA: u32 = 1;
/// Default Polyak factor, inside the admissible range for the default tolerances.
pub const DEFAULT_POLYAK_BETA: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProblemSource {
    Generated(EllipsoidL1Spec),
    InstanceFile { path: PathBuf },
    /// `‖x − p‖₁` over a box.
    BoxL1 {
        p: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl ProblemSource {
    /// The two-dimensional box test problem with `p = (2, 0.5)` over `[0,1]²`.
    pub fn builtin_box() -> Self {
        ProblemSource::BoxL1 {
            p: vec![2.0, 0.5],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        }
    }

    pub fn load(&self) -> Result<ProblemInstance> {
        match self {
            ProblemSource::Generated(spec) => generate_instance(spec),
            ProblemSource::InstanceFile { path } => {
                let text = std::fs::read_to_string(path)?;
                ProblemInstance::from_json(&text)
            }
            ProblemSource::BoxL1 { p, lower, upper } => {
                box_l1_problem(p.clone(), lower.clone(), upper.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema: u32,
    pub problem: ProblemSource,
    pub rule: StepsizeRule,
    pub solver: SolverOptions,
    /// Seed for probe sampling during verification.
    pub seed: u64,
    pub probes: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = ToleranceParams::default();
        Self {
            schema: CONFIG_SCHEMA,
            problem: ProblemSource::Generated(EllipsoidL1Spec::new(10, 1)),
            rule: StepsizeRule::Dynamic {
                beta: BetaSequence::dynamic_default(&params),
                mu: 0.0,
            },
            solver: SolverOptions {
                params,
                ..SolverOptions::default()
            },
            seed: 0,
            probes: 20,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported config schema {}",
                self.schema
            )));
        }
        self.solver.params.validate()?;
        if let ProblemSource::Generated(spec) = &self.problem {
            spec.validate()?;
        }
        Ok(())
    }

    /// Loads the instance and runs the configured solver.
    pub fn run(&self) -> Result<(ProblemInstance, SolverRun)> {
        self.validate()?;
        let inst = self.problem.load()?;
        let run = solve_instance(&inst, &self.rule, &self.solver)?;
        Ok((inst, run))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.solver.params, ToleranceParams::new(0.025, 0.25, 0.025).unwrap());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"problem": {"source": "box_l1", "p": [2, 0.5], "lower": [0, 0], "upper": [1, 1]}}"#)
            .unwrap();
        assert_eq!(cfg.problem, ProblemSource::builtin_box());
        assert_eq!(cfg.rule, RunConfig::default().rule);
    }

    #[test]
    fn rejects_bad_schema() {
        assert!(RunConfig::from_json(r#"{"schema": 2}"#).is_err());
    }
}
