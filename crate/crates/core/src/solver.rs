//! Projected subgradient iterations with Frank-Wolfe inexact projections:
//! the plain method under any step-size rule, and the target-level scheme
//! that drives the dynamic rule.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{axpy, count_nonzero, dist, norm};
use crate::problems::{Objective, ProblemInstance};
use crate::projection::{fw_project, FwOptions, ProjectionResult, ToleranceParams, FEASIBILITY_TOL};
use crate::sets::FeasibleSet;
use crate::stepsize::{validate, RuleConstants, StepsizeRule};

pub const REPORT_SCHEMA: u32 = 1;
pub const DEFAULT_BUDGET: usize = 100_000;
/// Entries at or below this magnitude count as zero in `‖x‖₀`.
pub const SPARSITY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub k: usize,
    pub x: Vec<f64>,
    pub f_x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Budget,
    ProjectionFailed,
    ZeroSubgradient,
    Stationary,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Budget => "budget",
            Status::ProjectionFailed => "projection-failed",
            Status::ZeroSubgradient => "zero-subgradient",
            Status::Stationary => "stationary",
        }
    }
}

/// Why a new iteration group started at this record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupEvent {
    Start,
    /// Sufficient descent: `f(x_k) ≤ f_rec(k(ℓ)) − δ/2`.
    Descent,
    /// Path length exceeded `R`: `δ` halved, iterate reset to `x_rec`.
    Halving,
}

impl GroupEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupEvent::Start => "start",
            GroupEvent::Descent => "descent",
            GroupEvent::Halving => "halving",
        }
    }

    fn parse(s: &str) -> Result<Option<Self>> {
        Ok(match s {
            "" => None,
            "start" => Some(GroupEvent::Start),
            "descent" => Some(GroupEvent::Descent),
            "halving" => Some(GroupEvent::Halving),
            other => return Err(Error::MissingTraceData(format!("unknown event `{other}`"))),
        })
    }
}

/// Observables of one outer iteration. Level fields are present only under
/// the target-level scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub ell: Option<usize>,
    /// Objective at the point the step is taken from.
    pub f_xk: f64,
    pub f_rec: f64,
    pub f_lev: Option<f64>,
    pub delta_ell: Option<f64>,
    /// Path length in force before this step's `t̃_k` is added.
    pub sigma: Option<f64>,
    pub t_k: f64,
    pub t_tilde_k: Option<f64>,
    pub norm_s_k: f64,
    pub fw_inner_iterations: usize,
    /// Feasibility residual of the produced iterate `x_{k+1}`.
    pub feasibility_residual: f64,
    pub dist_to_xstar: Option<f64>,
    pub event: Option<GroupEvent>,
}

impl TraceRecord {
    pub const CSV_HEADER: &'static str = "k,ell,f_xk,f_rec,f_lev,delta_ell,sigma,t_k,t_tilde_k,\
norm_s_k,fw_inner_iterations,feasibility_residual,dist_to_xstar,event";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.ell.map(|l| l.to_string()).unwrap_or_default(),
            fmt_float(self.f_xk),
            fmt_float(self.f_rec),
            opt(self.f_lev),
            opt(self.delta_ell),
            opt(self.sigma),
            fmt_float(self.t_k),
            opt(self.t_tilde_k),
            fmt_float(self.norm_s_k),
            self.fw_inner_iterations,
            fmt_float(self.feasibility_residual),
            opt(self.dist_to_xstar),
            self.event.map(GroupEvent::as_str).unwrap_or_default(),
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 14 {
            return Err(Error::MissingTraceData(format!(
                "expected 14 columns, got {}",
                cols.len()
            )));
        }
        let bad = |name: &str| Error::MissingTraceData(format!("unparsable column {name}"));
        let f = |i: usize, name: &str| cols[i].parse::<f64>().map_err(|_| bad(name));
        let of = |i: usize, name: &str| -> Result<Option<f64>> {
            if cols[i].is_empty() {
                Ok(None)
            } else {
                f(i, name).map(Some)
            }
        };
        Ok(Self {
            k: cols[0].parse().map_err(|_| bad("k"))?,
            ell: if cols[1].is_empty() {
                None
            } else {
                Some(cols[1].parse().map_err(|_| bad("ell"))?)
            },
            f_xk: f(2, "f_xk")?,
            f_rec: f(3, "f_rec")?,
            f_lev: of(4, "f_lev")?,
            delta_ell: of(5, "delta_ell")?,
            sigma: of(6, "sigma")?,
            t_k: f(7, "t_k")?,
            t_tilde_k: of(8, "t_tilde_k")?,
            norm_s_k: f(9, "norm_s_k")?,
            fw_inner_iterations: cols[10].parse().map_err(|_| bad("fw_inner_iterations"))?,
            feasibility_residual: f(11, "feasibility_residual")?,
            dist_to_xstar: of(12, "dist_to_xstar")?,
            event: GroupEvent::parse(cols[13])?,
        })
    }
}

/// Shortest round-trip text, switching to exponent form for extreme magnitudes.
fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Vectors of one outer iteration, kept for replaying inequalities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepData {
    pub k: usize,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub eps: f64,
    pub t: f64,
    pub beta: Option<f64>,
    pub f_x: f64,
    pub x_next: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    #[serde(default)]
    pub steps: Vec<StepData>,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TraceRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }

    /// Records only; step vectors are not part of the CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == TraceRecord::CSV_HEADER => {}
            _ => return Err(Error::MissingTraceData("trace CSV header".into())),
        }
        let records = lines
            .filter(|l| !l.trim().is_empty())
            .map(TraceRecord::parse_csv_row)
            .collect::<Result<_>>()?;
        Ok(Self {
            records,
            steps: Vec::new(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }

    pub fn has_steps(&self) -> bool {
        !self.records.is_empty() && self.steps.len() == self.records.len()
    }
}

/// How the path-length bound `R` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RadiusPolicy {
    /// `R = ‖x_1 − x_0‖` after the first step.
    #[default]
    FirstStep,
    Fixed { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelOptions {
    /// Initial gap `δ_0`; `None` means `‖s_0‖/2`.
    pub delta0: Option<f64>,
    pub radius: RadiusPolicy,
    /// Stop once `δ_ℓ ≤ stop_rel · (1 + |f_rec|)`.
    pub stop_rel: f64,
}

impl Default for LevelOptions {
    fn default() -> Self {
        Self {
            delta0: None,
            radius: RadiusPolicy::FirstStep,
            stop_rel: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub params: ToleranceParams,
    /// Frank-Wolfe budget per projection; `None` means `10 n + 1000`.
    pub max_inner: Option<usize>,
    /// After an exhausted projection budget, retry with 4× the inner budget
    /// at most this many times.
    pub projection_retries: u32,
    /// Outer iteration budget.
    pub budget: usize,
    /// Polyak runs stop once `f_rec − f* ≤ polyak_tol`.
    pub polyak_tol: f64,
    pub level: LevelOptions,
    /// Keep per-step vectors in the trace.
    pub record_steps: bool,
    /// Reference minimizer for the distance column.
    pub x_star: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            params: ToleranceParams::default(),
            max_inner: None,
            projection_retries: 8,
            budget: DEFAULT_BUDGET,
            polyak_tol: 1e-3,
            level: LevelOptions::default(),
            record_steps: true,
            x_star: None,
        }
    }
}

impl SolverOptions {
    fn fw(&self, n: usize) -> FwOptions {
        let base = FwOptions::for_dimension(n);
        match self.max_inner {
            Some(m) => base.with_max_inner(m),
            None => base,
        }
    }

    fn step(
        &self,
        objective: &dyn Objective,
        set: &FeasibleSet,
        rule: &StepsizeRule,
        state: &SolverState,
        level_gap: Option<f64>,
    ) -> Result<Step> {
        let mut fw = self.fw(set.dimension());
        let mut retries = 0;
        loop {
            match step_algorithm1(objective, set, &self.params, rule, state, level_gap, &fw) {
                Err(Error::ProjectionBudget { .. }) if retries < self.projection_retries => {
                    retries += 1;
                    fw.max_inner = fw.max_inner.saturating_mul(4);
                }
                other => return other,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub schema: u32,
    /// `"algorithm1"` or `"sinexpd"`.
    pub algorithm: String,
    pub rule: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Outer iterations performed.
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    pub f_rec: f64,
    pub x_rec: Vec<f64>,
    pub x_final: Vec<f64>,
    /// `‖x_rec‖₀` at threshold [`SPARSITY_THRESHOLD`].
    pub sparsity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halvings: Option<usize>,
    pub max_feasibility_residual: f64,
    pub constants: RuleConstants,
}

impl SolverReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub report: SolverReport,
    pub trace: Trace,
}

/// Result of one step of the basic method.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    /// `0 ∈ ∂f(x_k)`: the method stops.
    Stationary,
    Moved(StepOutcome),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub s: Vec<f64>,
    pub eps: f64,
    pub t: f64,
    pub t_tilde: Option<f64>,
    pub beta: Option<f64>,
    pub projection: ProjectionResult,
}

/// One step `x_{k+1} ∈ 𝒫_C(φ, x_k, x_k − t_k s_k)`. Under the dynamic rule
/// `level_gap` must carry `f(x_k) − f_lev`.
pub fn step_algorithm1(
    objective: &dyn Objective,
    set: &FeasibleSet,
    params: &ToleranceParams,
    rule: &StepsizeRule,
    state: &SolverState,
    level_gap: Option<f64>,
    fw: &FwOptions,
) -> Result<Step> {
    let x = &state.x;
    if objective.is_stationary(x) {
        return Ok(Step::Stationary);
    }
    let k = state.k;
    let beta = rule.beta().map(|b| b.at(k));
    let eps_req = match rule {
        StepsizeRule::Dynamic { .. } => rule.mu() * beta.unwrap_or(0.0) * level_gap.unwrap_or(0.0),
        _ => rule.eps_cap(k, state.f_x, None),
    };
    let (s, eps) = objective.subgradient(x, eps_req.max(0.0));
    check_dim(x.len(), s.len())?;
    check_finite(&s, "subgradient")?;
    let (t, t_tilde) = match rule {
        StepsizeRule::Exogenous { .. } => (rule.exogenous_step(k, &s)?, None),
        // f(x_k) < f* only through rounding; the step is then zero
        StepsizeRule::Polyak { .. } => (rule.polyak_step(k, state.f_x, &s)?.max(0.0), None),
        StepsizeRule::Dynamic { .. } => {
            let gap = level_gap.ok_or_else(|| {
                Error::InvalidParams("dynamic rule needs the level gap f(x_k) - f_lev".into())
            })?;
            let (t, tt) = rule.dynamic_step(k, gap, &s)?;
            (t, Some(tt))
        }
    };
    let v = axpy(x, -t, &s);
    let projection = fw_project(set, params, x, &v, fw)?;
    Ok(Step::Moved(StepOutcome {
        s,
        eps,
        t,
        t_tilde,
        beta,
        projection,
    }))
}

struct Recorder<'a> {
    set: &'a FeasibleSet,
    x_star: Option<&'a [f64]>,
    keep_steps: bool,
    trace: Trace,
    max_residual: f64,
}

impl Recorder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        state: &SolverState,
        f_rec: f64,
        level: Option<(usize, f64, f64, f64, Option<GroupEvent>)>,
        out: &StepOutcome,
    ) -> Result<()> {
        let next = &out.projection.point;
        let residual = self.set.feasibility_residual(next)?.max(0.0);
        self.max_residual = self.max_residual.max(residual);
        let (ell, f_lev, delta, sigma, event) = match level {
            Some((l, lev, d, s, e)) => (Some(l), Some(lev), Some(d), Some(s), e),
            None => (None, None, None, None, None),
        };
        self.trace.records.push(TraceRecord {
            k: state.k,
            ell,
            f_xk: state.f_x,
            f_rec,
            f_lev,
            delta_ell: delta,
            sigma,
            t_k: out.t,
            t_tilde_k: out.t_tilde,
            norm_s_k: norm(&out.s),
            fw_inner_iterations: out.projection.inner_iterations,
            feasibility_residual: residual,
            dist_to_xstar: self.x_star.map(|xs| dist(&state.x, xs)),
            event,
        });
        if self.keep_steps {
            self.trace.steps.push(StepData {
                k: state.k,
                x: state.x.clone(),
                s: out.s.clone(),
                eps: out.eps,
                t: out.t,
                beta: out.beta,
                f_x: state.f_x,
                x_next: next.clone(),
            });
        }
        Ok(())
    }
}

fn start_checks(set: &FeasibleSet, x0: &[f64], rule: &StepsizeRule, opts: &SolverOptions) -> Result<RuleConstants> {
    check_dim(set.dimension(), x0.len())?;
    check_finite(x0, "start point")?;
    let residual = set.feasibility_residual(x0)?;
    if residual > FEASIBILITY_TOL {
        return Err(Error::Infeasible { residual });
    }
    opts.params.validate()?;
    let constants = RuleConstants::new(&opts.params, rule.mu());
    validate(rule, &constants)?;
    if let Some(xs) = &opts.x_star {
        check_dim(set.dimension(), xs.len())?;
    }
    Ok(constants)
}

/// Maps step failures to a terminal status; level-invariant and contract
/// errors stay hard errors.
fn failure_status(err: Error) -> Result<(Status, String)> {
    match err {
        Error::ZeroSubgradient { .. } => Ok((Status::ZeroSubgradient, err.to_string())),
        Error::ProjectionBudget { .. }
        | Error::BarrierNotConverged { .. }
        | Error::Internal(_)
        | Error::Infeasible { .. } => Ok((Status::ProjectionFailed, err.to_string())),
        other => Err(other),
    }
}

/// The basic method under the exogenous or Polyak rule. Polyak runs stop
/// once `f_rec − f* ≤ polyak_tol`; exogenous runs use the whole budget.
pub fn run_algorithm1(
    objective: &dyn Objective,
    set: &FeasibleSet,
    x0: &[f64],
    rule: &StepsizeRule,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    let constants = start_checks(set, x0, rule, opts)?;
    let f_star = match rule {
        StepsizeRule::Polyak { f_star, .. } => Some(*f_star),
        _ => None,
    };
    let mut rec = Recorder {
        set,
        x_star: opts.x_star.as_deref(),
        keep_steps: opts.record_steps,
        trace: Trace::default(),
        max_residual: set.feasibility_residual(x0)?.max(0.0),
    };
    let mut x = x0.to_vec();
    let mut f_rec = f64::INFINITY;
    let mut x_rec = x.clone();
    let mut message = None;
    let mut k = 0;
    let status = loop {
        let f_x = objective.value(&x);
        if f_x < f_rec {
            f_rec = f_x;
            x_rec.clone_from(&x);
        }
        if let Some(fs) = f_star {
            if f_rec - fs <= opts.polyak_tol {
                break Status::Converged;
            }
        }
        if k >= opts.budget {
            break Status::Budget;
        }
        let state = SolverState { k, x, f_x };
        match opts.step(objective, set, rule, &state, None) {
            Ok(Step::Stationary) => {
                x = state.x;
                break Status::Stationary;
            }
            Ok(Step::Moved(out)) => {
                rec.push(&state, f_rec, None, &out)?;
                x = out.projection.point;
            }
            Err(e) => {
                let (status, msg) = failure_status(e)?;
                message = Some(msg);
                x = state.x;
                break status;
            }
        }
        k += 1;
    };
    Ok(SolverRun {
        report: SolverReport {
            schema: REPORT_SCHEMA,
            algorithm: "algorithm1".into(),
            rule: rule.name().into(),
            status,
            message,
            k,
            ell: None,
            f_rec,
            sparsity: count_nonzero(&x_rec, SPARSITY_THRESHOLD),
            x_rec,
            x_final: x,
            f_star,
            delta: None,
            delta0: None,
            radius: None,
            halvings: None,
            max_feasibility_residual: rec.max_residual,
            constants,
        },
        trace: rec.trace,
    })
}

/// Bookkeeping of the target-level scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelState {
    pub f_rec: f64,
    pub x_rec: Vec<f64>,
    pub ell: usize,
    pub k_ell: usize,
    /// Record value at the start of the current group.
    pub f_rec_group: f64,
    pub delta: f64,
    pub sigma: f64,
    pub radius: Option<f64>,
}

impl LevelState {
    /// `f_lev = f_rec(k(ℓ)) − δ_ℓ`
    pub fn f_lev(&self) -> f64 {
        self.f_rec_group - self.delta
    }

    fn new_group(&mut self, k: usize) {
        self.ell += 1;
        self.k_ell = k;
        self.f_rec_group = self.f_rec;
        self.sigma = 0.0;
    }
}

/// The dynamic rule with record values, iteration groups, path-length
/// accounting and `δ`-halving. Stops once `δ_ℓ ≤ stop_rel (1 + |f_rec|)`.
///
/// Iteration 0 is an ordinary step from the first group; under
/// [`RadiusPolicy::FirstStep`] it also fixes `R = ‖x_1 − x_0‖`.
pub fn run_sinexpd(
    objective: &dyn Objective,
    set: &FeasibleSet,
    x0: &[f64],
    rule: &StepsizeRule,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    if !matches!(rule, StepsizeRule::Dynamic { .. }) {
        return Err(Error::InvalidParams(format!(
            "target-level scheme needs the dynamic rule, got {}",
            rule.name()
        )));
    }
    let constants = start_checks(set, x0, rule, opts)?;
    let lopts = &opts.level;
    if let Some(d) = lopts.delta0 {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParams("delta0 must be positive".into()));
        }
    }
    if let RadiusPolicy::Fixed { value } = lopts.radius {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParams("R must be positive".into()));
        }
    }
    let mut rec = Recorder {
        set,
        x_star: opts.x_star.as_deref(),
        keep_steps: opts.record_steps,
        trace: Trace::default(),
        max_residual: set.feasibility_residual(x0)?.max(0.0),
    };

    let mut x = x0.to_vec();
    let f0 = objective.value(&x);
    let delta0 = match lopts.delta0 {
        Some(d) => d,
        None => {
            let (s0, _) = objective.subgradient(&x, 0.0);
            norm(&s0) / 2.0
        }
    };
    let mut lv = LevelState {
        f_rec: f0,
        x_rec: x.clone(),
        ell: 0,
        k_ell: 0,
        f_rec_group: f0,
        delta: delta0,
        sigma: 0.0,
        radius: match lopts.radius {
            RadiusPolicy::Fixed { value } => Some(value),
            RadiusPolicy::FirstStep => None,
        },
    };
    let mut halvings = 0;
    let mut message = None;
    let mut k = 0;
    let status = loop {
        let mut f_x = objective.value(&x);
        // Step 1: record
        if f_x < lv.f_rec {
            lv.f_rec = f_x;
            lv.x_rec.clone_from(&x);
        }
        // Step 2: stationarity
        if objective.is_stationary(&x) {
            break Status::Stationary;
        }
        // Steps 3 and 4: group changes
        let mut event = None;
        if k == 0 {
            event = Some(GroupEvent::Start);
        } else if f_x - lv.f_rec_group <= -lv.delta / 2.0 {
            lv.new_group(k);
            event = Some(GroupEvent::Descent);
        } else if lv.radius.is_some_and(|r| lv.sigma > r) {
            lv.new_group(k);
            lv.delta /= 2.0;
            halvings += 1;
            x.clone_from(&lv.x_rec);
            f_x = lv.f_rec;
            event = Some(GroupEvent::Halving);
        }
        if lv.delta <= lopts.stop_rel * (1.0 + lv.f_rec.abs()) {
            break Status::Converged;
        }
        if k >= opts.budget {
            break Status::Budget;
        }
        // Step 5: level and step
        let level_gap = (f_x - lv.f_rec_group) + lv.delta;
        if !(level_gap > 0.0) {
            return Err(Error::LevelInvariant {
                k,
                message: format!("f(x_k) - f_lev = {level_gap:e} is not positive"),
            });
        }
        let state = SolverState { k, x, f_x };
        let out = match opts.step(objective, set, rule, &state, Some(level_gap)) {
            Ok(Step::Moved(out)) => out,
            Ok(Step::Stationary) => {
                x = state.x;
                break Status::Stationary;
            }
            Err(e) => {
                let (status, msg) = failure_status(e)?;
                message = Some(msg);
                x = state.x;
                break status;
            }
        };
        rec.push(
            &state,
            lv.f_rec,
            Some((lv.ell, lv.f_lev(), lv.delta, lv.sigma, event)),
            &out,
        )?;
        // Step 6: path length
        lv.sigma += out.t_tilde.unwrap_or(0.0);
        if lv.radius.is_none() {
            let moved = dist(&out.projection.point, &state.x);
            lv.radius = Some(if moved > 0.0 {
                moved
            } else {
                out.t_tilde.unwrap_or(1.0)
            });
        }
        x = out.projection.point;
        k += 1;
    };
    Ok(SolverRun {
        report: SolverReport {
            schema: REPORT_SCHEMA,
            algorithm: "sinexpd".into(),
            rule: rule.name().into(),
            status,
            message,
            k,
            ell: Some(lv.ell),
            f_rec: lv.f_rec,
            sparsity: count_nonzero(&lv.x_rec, SPARSITY_THRESHOLD),
            x_rec: lv.x_rec,
            x_final: x,
            f_star: None,
            delta: Some(lv.delta),
            delta0: Some(delta0),
            radius: lv.radius,
            halvings: Some(halvings),
            max_feasibility_residual: rec.max_residual,
            constants,
        },
        trace: rec.trace,
    })
}

/// Runs the method matching `rule` on an instance: the target-level scheme
/// for the dynamic rule, the basic method otherwise. The instance's `x*`
/// fills the distance column unless the options already carry one.
pub fn solve_instance(
    inst: &ProblemInstance,
    rule: &StepsizeRule,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    let mut opts = opts.clone();
    if opts.x_star.is_none() {
        opts.x_star.clone_from(&inst.x_star);
    }
    let mut run = match rule {
        StepsizeRule::Dynamic { .. } => run_sinexpd(&inst.objective, &inst.set, &inst.start, rule, &opts)?,
        _ => run_algorithm1(&inst.objective, &inst.set, &inst.start, rule, &opts)?,
    };
    if run.report.f_star.is_none() {
        run.report.f_star = inst.f_star;
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{box_l1_problem, ObjectiveSpec};
    use crate::stepsize::{AlphaSequence, BetaSequence};

    fn polyak(f_star: f64) -> StepsizeRule {
        StepsizeRule::Polyak {
            f_star,
            beta: BetaSequence::Constant(0.9),
            mu: 0.0,
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = TraceRecord {
            k: 3,
            ell: Some(1),
            f_xk: 1.25,
            f_rec: 1.0 / 3.0,
            f_lev: Some(-0.5),
            delta_ell: Some(1e-9),
            sigma: Some(0.0),
            t_k: 2.5e-17,
            t_tilde_k: None,
            norm_s_k: 1.0,
            fw_inner_iterations: 4,
            feasibility_residual: 0.0,
            dist_to_xstar: None,
            event: Some(GroupEvent::Halving),
        };
        assert_eq!(TraceRecord::parse_csv_row(&r.csv_row()).unwrap(), r);
    }

    #[test]
    fn ball_step_moves_toward_minimizer() {
        let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let obj = ObjectiveSpec::ShiftedL1 { p: vec![3.0, 0.0] };
        let rule = StepsizeRule::Exogenous {
            alpha: AlphaSequence::default(),
            mu: 0.0,
        };
        let params = ToleranceParams::default();
        let state = SolverState {
            k: 0,
            x: vec![0.0, 0.0],
            f_x: 3.0,
        };
        let Step::Moved(out) = step_algorithm1(&obj, &set, &params, &rule, &state, None, &FwOptions::for_dimension(2)).unwrap() else {
            panic!()
        };
        let x1 = &out.projection.point;
        assert!(set.contains(x1, 1e-8).unwrap());
        let rho = params.nu();
        assert!(dist(x1, &[1.0, 0.0]) < dist(&[0.0, 0.0], &[1.0, 0.0]) + rho);
        assert_eq!(out.s, vec![-1.0, 0.0]);
        assert_eq!(out.t, 1.0);
    }

    #[test]
    fn polyak_at_optimum_is_fixed_point() {
        let inst = box_l1_problem(vec![2.0, 0.5], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let xs = inst.x_star.clone().unwrap();
        let opts = SolverOptions {
            polyak_tol: -1.0,
            budget: 5,
            ..Default::default()
        };
        let run = run_algorithm1(&inst.objective, &inst.set, &xs, &polyak(1.0), &opts).unwrap();
        assert_eq!(run.report.status, Status::Budget);
        for s in &run.trace.steps {
            assert_eq!(s.t, 0.0);
            assert_eq!(s.x_next, xs);
        }
    }

    #[test]
    fn polyak_box_reaches_tolerance() {
        let inst = box_l1_problem(vec![2.0, 0.5], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let run = solve_instance(&inst, &polyak(1.0), &SolverOptions::default()).unwrap();
        assert_eq!(run.report.status, Status::Converged, "{:?}", run.report.message);
        assert!(run.report.f_rec - 1.0 <= 1e-3);
        assert!(run.report.k <= 5000);
    }

    #[test]
    fn sinexpd_box_level_bookkeeping() {
        let inst = box_l1_problem(vec![2.0, 0.5], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let rule = StepsizeRule::Dynamic {
            beta: BetaSequence::dynamic_default(&ToleranceParams::default()),
            mu: 0.0,
        };
        let run = solve_instance(&inst, &rule, &SolverOptions::default()).unwrap();
        assert_eq!(run.report.status, Status::Converged, "{:?}", run.report.message);
        let recs = &run.trace.records;
        assert_eq!(recs[0].event, Some(GroupEvent::Start));
        for w in recs.windows(2) {
            assert!(w[1].f_rec <= w[0].f_rec);
            assert!(w[1].delta_ell.unwrap() <= w[0].delta_ell.unwrap());
        }
        assert!(run.report.f_rec - 1.0 <= 1e-2);
    }

    #[test]
    fn dynamic_requires_level_gap() {
        let set = FeasibleSet::new_box(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let rule = StepsizeRule::Dynamic {
            beta: BetaSequence::Constant(1.0),
            mu: 0.0,
        };
        let state = SolverState {
            k: 0,
            x: vec![0.0, 0.0],
            f_x: 2.5,
        };
        let obj = ObjectiveSpec::ShiftedL1 { p: vec![2.0, 0.5] };
        let r = step_algorithm1(&obj, &set, &ToleranceParams::default(), &rule, &state, None, &FwOptions::for_dimension(2));
        assert!(r.is_err());
    }

    #[test]
    fn infeasible_start_rejected() {
        let inst = box_l1_problem(vec![2.0, 0.5], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let r = run_algorithm1(&inst.objective, &inst.set, &[2.0, 0.0], &polyak(1.0), &SolverOptions::default());
        assert!(matches!(r, Err(Error::Infeasible { .. })));
    }
}
