//! Files written for a run and read back by verification.
//!
//! A run directory holds `config.json`, `instance.json`, `report.json`,
//! `trace.csv` (records only), `trace.json` (records and step vectors) and
//! `summary.csv`; `trajectory.csv` is added on request.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{verify_run, CheckReport, CheckStatus};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::solver::{SolverReport, SolverRun, Trace};
use crate::stepsize::RuleConstants;

/// Constraint slack above which an iterate counts as interior.
pub const INTERIOR_SLACK: f64 = 1e-6;
pub const SUMMARY_HEADER: &str = "n,k,ell,nnz_x_rec,f_rec,delta";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub k: usize,
    pub ell: Option<usize>,
    pub nnz_x_rec: usize,
    pub f_rec: f64,
    pub delta: Option<f64>,
}

impl SummaryRow {
    pub fn from_report(report: &SolverReport) -> Self {
        Self {
            n: report.x_rec.len(),
            k: report.k,
            ell: report.ell,
            nnz_x_rec: report.sparsity,
            f_rec: report.f_rec,
            delta: report.delta,
        }
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{:.6e},{}",
            self.n,
            self.k,
            opt(self.ell.map(|l| l.to_string())),
            self.nnz_x_rec,
            self.f_rec,
            opt(self.delta.map(|d| format!("{d:.6e}")))
        )
    }
}

/// One iterate of a run, for plotting the path through `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub k: usize,
    pub ell: Option<usize>,
    pub x: Vec<f64>,
    pub slack: f64,
    pub interior: bool,
}

/// The iterates `x_0, x_1, …` of a trace, each flagged interior when every
/// constraint slack exceeds [`INTERIOR_SLACK`].
pub fn trajectory(inst: &ProblemInstance, trace: &Trace) -> Result<Vec<TrajectoryPoint>> {
    if !trace.has_steps() && !trace.records.is_empty() {
        return Err(Error::MissingTraceData("trajectory needs step vectors".into()));
    }
    let mut out = Vec::with_capacity(trace.steps.len() + 1);
    let mut point = |k, ell, x: &[f64]| -> Result<()> {
        let slack = inst.set.interior_slack(x)?;
        out.push(TrajectoryPoint {
            k,
            ell,
            x: x.to_vec(),
            slack,
            interior: slack > INTERIOR_SLACK,
        });
        Ok(())
    };
    for (step, rec) in trace.steps.iter().zip(&trace.records) {
        point(step.k, rec.ell, &step.x)?;
    }
    if let (Some(step), Some(rec)) = (trace.steps.last(), trace.records.last()) {
        point(step.k + 1, rec.ell, &step.x_next)?;
    }
    Ok(out)
}

pub fn trajectory_csv(points: &[TrajectoryPoint]) -> String {
    let n = points.first().map_or(0, |p| p.x.len());
    let mut s = String::from("k,ell,interior,slack");
    for i in 1..=n {
        let _ = write!(s, ",x{i}");
    }
    s.push('\n');
    for p in points {
        let ell = p.ell.map(|l| l.to_string()).unwrap_or_default();
        let _ = write!(s, "{},{},{},{:e}", p.k, ell, u8::from(p.interior), p.slack);
        for v in &p.x {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    }
    s
}

/// Writes every run artifact into `dir`, creating it if needed.
pub fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    inst: &ProblemInstance,
    run: &SolverRun,
    dump_trajectory: bool,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), cfg.to_json()?)?;
    fs::write(dir.join("instance.json"), inst.to_json()?)?;
    fs::write(dir.join("report.json"), run.report.to_json()?)?;
    run.trace.write_csv(&dir.join("trace.csv"))?;
    fs::write(dir.join("trace.json"), serde_json::to_string(&run.trace)?)?;
    let row = SummaryRow::from_report(&run.report);
    fs::write(dir.join("summary.csv"), format!("{SUMMARY_HEADER}\n{}\n", row.csv_row()))?;
    if dump_trajectory {
        let points = trajectory(inst, &run.trace)?;
        fs::write(dir.join("trajectory.csv"), trajectory_csv(&points))?;
    }
    Ok(())
}

/// Aggregate of every check run against one trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn new(checks: Vec<CheckReport>) -> Self {
        Self {
            schema: 1,
            passed: !checks.iter().any(CheckReport::is_blocking_failure),
            checks,
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| c.is_blocking_failure())
    }

    /// One line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let tag = match (c.status, c.advisory) {
                    (CheckStatus::Skipped, _) => "SKIP",
                    (CheckStatus::Passed, _) => "PASS",
                    (CheckStatus::Failed, true) => "WARN",
                    (CheckStatus::Failed, false) => "FAIL",
                };
                let mut line = format!("{tag} {} worst_margin={:e}", c.check_name, c.worst_margin);
                if let Some(k) = c.first_violation_k {
                    let _ = write!(line, " first_violation_k={k}");
                }
                if let Some(n) = &c.note {
                    let _ = write!(line, " ({n})");
                }
                line
            })
            .collect()
    }
}

/// Reads a trace from `trace.json`, falling back to `trace.csv`.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        Trace::from_csv(&text)
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}

/// Re-checks a run directory; `trace` overrides the trace file.
pub fn verify_dir(dir: &Path, trace: Option<&Path>) -> Result<VerifyReport> {
    let cfg = RunConfig::read(&dir.join("config.json"))?;
    let inst = ProblemInstance::from_json(&fs::read_to_string(dir.join("instance.json"))?)?;
    let report: Option<SolverReport> = match fs::read_to_string(dir.join("report.json")) {
        Ok(text) => Some(serde_json::from_str(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let trace_path = match trace {
        Some(p) => p.to_path_buf(),
        None if dir.join("trace.json").exists() => dir.join("trace.json"),
        None => dir.join("trace.csv"),
    };
    let trace = read_trace(&trace_path)?;
    let constants = RuleConstants::new(&cfg.solver.params, cfg.rule.mu());
    let checks = verify_run(
        &inst,
        &cfg.rule,
        &constants,
        &trace,
        report.as_ref(),
        cfg.probes,
        cfg.seed,
    )?;
    Ok(VerifyReport::new(checks))
}
