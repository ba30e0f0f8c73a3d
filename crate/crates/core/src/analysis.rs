//! Replays solver traces against the convergence inequalities.
//!
//! Every check reports the signed margin `rhs + slack − lhs` of its tightest
//! instance; a check passes when no margin is negative. Slacks are absolute
//! and never exceed `1e-8`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dist_sq, norm_sq};
use crate::problems::{Objective, ProblemInstance};
use crate::projection::GapEntry;
use crate::sets::FeasibleSet;
use crate::solver::{GroupEvent, SolverReport, Status, Trace};
use crate::stepsize::{AlphaSequence, BetaSequence, RuleConstants, StepsizeRule};

/// Additive slack of the per-iteration inequalities.
pub const STEP_SLACK: f64 = 1e-8;
/// Additive slack of the distance monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Additive slack of the Frank-Wolfe rate check.
pub const RATE_SLACK: f64 = 1e-10;
/// Relative slack for bookkeeping identities that hold up to rounding.
const BOOKKEEPING_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub k: usize,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub status: CheckStatus,
    pub passed: bool,
    /// Signed slack of the tightest instance; `+∞` when nothing was checked.
    pub worst_margin: f64,
    pub first_violation_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Vec<Margin>>,
    /// Advisory results do not affect the verification verdict.
    #[serde(default)]
    pub advisory: bool,
    /// Estimated constants the check relied on.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn skipped(name: &str, note: impl Into<String>) -> Self {
        Self {
            check_name: name.into(),
            status: CheckStatus::Skipped,
            passed: true,
            worst_margin: f64::INFINITY,
            first_violation_k: None,
            details: None,
            advisory: false,
            parameters: BTreeMap::new(),
            note: Some(note.into()),
        }
    }

    /// True when this report should make verification fail.
    pub fn is_blocking_failure(&self) -> bool {
        self.status == CheckStatus::Failed && !self.advisory
    }

    fn with_param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.into(), value);
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Accumulates per-`k` margins.
struct Margins {
    name: String,
    worst: f64,
    first_violation: Option<usize>,
    per_k: Vec<Margin>,
}

impl Margins {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            worst: f64::INFINITY,
            first_violation: None,
            per_k: Vec::new(),
        }
    }

    fn push(&mut self, k: usize, margin: f64) {
        // NaN counts as a violation, -0 reads as 0
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin + 0.0 };
        if margin < 0.0 && self.first_violation.is_none() {
            self.first_violation = Some(k);
        }
        self.worst = self.worst.min(margin);
        self.per_k.push(Margin { k, margin });
    }

    fn finish(self) -> CheckReport {
        let passed = self.worst >= 0.0;
        CheckReport {
            check_name: self.name,
            status: if passed {
                CheckStatus::Passed
            } else {
                CheckStatus::Failed
            },
            passed,
            worst_margin: self.worst,
            first_violation_k: self.first_violation,
            details: Some(self.per_k),
            advisory: false,
            parameters: BTreeMap::new(),
            note: None,
        }
    }
}

/// Merges sub-check margins into a single report under `name`.
fn combine(name: &str, parts: Vec<CheckReport>) -> CheckReport {
    let mut out = Margins::new(name).finish();
    out.details = None;
    let mut notes = Vec::new();
    for p in parts {
        if p.worst_margin < out.worst_margin {
            out.worst_margin = p.worst_margin;
        }
        if let Some(k) = p.first_violation_k {
            out.first_violation_k = Some(out.first_violation_k.map_or(k, |j: usize| j.min(k)));
        }
        if !p.passed {
            notes.push(format!("{} failed", p.check_name));
        }
        for (key, v) in p.parameters {
            out.parameters.insert(key, v);
        }
        if let Some(n) = p.note {
            notes.push(n);
        }
    }
    out.passed = out.worst_margin >= 0.0;
    out.status = if out.passed {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    };
    if !notes.is_empty() {
        out.note = Some(notes.join("; "));
    }
    out
}

fn require_steps(trace: &Trace, check: &str) -> Result<()> {
    if trace.has_steps() || trace.records.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingTraceData(format!(
            "{check} needs per-step vectors (x_k, s_k, x_k+1)"
        )))
    }
}

/// Largest observed `‖s_k‖`, the estimate of the subgradient bound `c`.
fn max_subgradient_norm(trace: &Trace) -> f64 {
    trace.records.iter().map(|r| r.norm_s_k).fold(0.0, f64::max)
}

/// `‖x_{k+1} − x‖² ≤ ‖x_k − x‖² + ν t²‖s‖² − 2t[f(x_k) − f(x) − ε_k] + 1e-8`
/// for every step and every probe `x ∈ C`.
pub fn check_main_inequality(
    trace: &Trace,
    objective: &dyn Objective,
    probes: &[Vec<f64>],
    constants: &RuleConstants,
) -> Result<CheckReport> {
    const NAME: &str = "main_inequality";
    require_steps(trace, NAME)?;
    if probes.is_empty() {
        return Ok(CheckReport::skipped(NAME, "no probe points"));
    }
    let probe_values: Vec<f64> = probes.iter().map(|p| objective.value(p)).collect();
    let mut m = Margins::new(NAME);
    for step in &trace.steps {
        let ns2 = norm_sq(&step.s);
        let worst = probes
            .iter()
            .zip(&probe_values)
            .map(|(x, fx)| {
                check_dim(x.len(), step.x.len())?;
                let rhs = dist_sq(&step.x, x) + constants.nu * step.t * step.t * ns2
                    - 2.0 * step.t * (step.f_x - fx - step.eps);
                Ok(rhs + STEP_SLACK - dist_sq(&step.x_next, x))
            })
            .try_fold(f64::INFINITY, |acc, r: Result<f64>| r.map(|v| acc.min(v)))?;
        m.push(step.k, worst);
    }
    Ok(m.finish().with_param("probes", probes.len() as f64))
}

/// Exogenous rule: for every `N`,
/// `min_{k≤N} [f(x_k) − f*] ≤ Γ(‖x_0 − x*‖² + ρ Σ α_k²)/(2 Σ α_k)` with
/// `Γ = max{1, max ‖s_k‖}`.
pub fn check_exogenous_complexity(
    trace: &Trace,
    alpha: &AlphaSequence,
    f_star: Option<f64>,
    dist0: Option<f64>,
    constants: &RuleConstants,
) -> CheckReport {
    const NAME: &str = "exogenous_complexity";
    let (Some(f_star), Some(d0)) = (f_star, dist0) else {
        return CheckReport::skipped(NAME, "f* or x* unknown");
    };
    let gamma = max_subgradient_norm(trace).max(1.0);
    let mut m = Margins::new(NAME);
    let (mut sum_a, mut sum_a2, mut min_gap) = (0.0, 0.0, f64::INFINITY);
    for r in &trace.records {
        let a = alpha.at(r.k);
        sum_a += a;
        sum_a2 += a * a;
        min_gap = min_gap.min(r.f_xk - f_star);
        let bound = gamma * (d0 * d0 + constants.rho * sum_a2) / (2.0 * sum_a);
        m.push(r.k, bound + STEP_SLACK - min_gap);
    }
    m.finish().with_param("gamma", gamma).with_param("dist0", d0)
}

/// Exogenous rule: `‖x_{k+1} − x*‖² ≤ ‖x_k − x*‖² + ρ α_k² + 1e-8`.
pub fn check_quasi_fejer(
    trace: &Trace,
    alpha: &AlphaSequence,
    x_star: Option<&[f64]>,
    constants: &RuleConstants,
) -> Result<CheckReport> {
    const NAME: &str = "quasi_fejer";
    let Some(xs) = x_star else {
        return Ok(CheckReport::skipped(NAME, "x* unknown"));
    };
    require_steps(trace, NAME)?;
    let mut m = Margins::new(NAME);
    for s in &trace.steps {
        let a = alpha.at(s.k);
        m.push(
            s.k,
            dist_sq(&s.x, xs) + constants.rho * a * a + STEP_SLACK - dist_sq(&s.x_next, xs),
        );
    }
    Ok(m.finish())
}

/// Polyak rule: the per-step Fejér decrease
/// `‖x_{k+1} − x*‖² ≤ ‖x_k − x*‖² − β̲[f(x_k) − f*]²/‖s_k‖²`, monotone
/// distance to `x*`, and `min_{k≤N}[f(x_k) − f*] ≤ c‖x_0 − x*‖/√(β̲(N+1))`.
pub fn check_polyak(
    trace: &Trace,
    x_star: Option<&[f64]>,
    f_star: f64,
    beta: &BetaSequence,
) -> Result<CheckReport> {
    const NAME: &str = "polyak";
    let Some(xs) = x_star else {
        return Ok(CheckReport::skipped(NAME, "x* unknown"));
    };
    require_steps(trace, NAME)?;
    let beta_low = beta.low();
    let mut fejer = Margins::new("polyak_fejer_decrease");
    let mut monotone = Margins::new("polyak_distance_monotone");
    for s in &trace.steps {
        let ns2 = norm_sq(&s.s);
        let gap = s.f_x - f_star;
        let decrease = if ns2 > 0.0 { beta_low * gap * gap / ns2 } else { 0.0 };
        let before = dist_sq(&s.x, xs);
        let after = dist_sq(&s.x_next, xs);
        fejer.push(s.k, before - decrease + STEP_SLACK - after);
        monotone.push(s.k, dist(&s.x, xs) + MONOTONE_SLACK - dist(&s.x_next, xs));
    }
    let Some(first) = trace.steps.first() else {
        return Ok(Margins::new(NAME).finish().with_note("no iterations"));
    };
    let c = max_subgradient_norm(trace);
    let d0 = dist(&first.x, xs);
    let mut rate = Margins::new("polyak_rate");
    let mut min_gap = f64::INFINITY;
    for (n, r) in trace.records.iter().enumerate() {
        min_gap = min_gap.min(r.f_xk - f_star);
        let bound = c * d0 / (beta_low * (n as f64 + 1.0)).sqrt();
        rate.push(r.k, bound + STEP_SLACK - min_gap);
    }
    Ok(combine(
        NAME,
        vec![
            fejer.finish(),
            monotone.finish(),
            rate.finish().with_param("c", c).with_param("dist0", d0),
        ],
    ))
}

/// Optimal value used by [`check_dynamic`]'s complexity bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimum {
    /// Known `f*` with `‖x_0 − x*‖`.
    Known { f_star: f64, dist0: f64 },
    /// Best value found, with the distance from `x_0` to its witness; the
    /// bound check becomes advisory.
    Surrogate { f_best: f64, dist0: f64 },
    Unknown,
}

/// Target-level scheme: bookkeeping identities of the level state, plus the
/// bound `min_{k≤N}[f(x_k) − f*] ≤ δ_0` with `N` the largest integer such
/// that `Σ_{k<N} β_k[2 − (2μ+ν)β_k] δ_k² ≤ (c‖x_0 − x*‖)²`.
pub fn check_dynamic(
    trace: &Trace,
    report: Option<&SolverReport>,
    delta0: f64,
    beta: &BetaSequence,
    constants: &RuleConstants,
    optimum: Optimum,
) -> Result<Vec<CheckReport>> {
    let structural = check_level_structure(trace, report, delta0)?;
    let bound = match optimum {
        Optimum::Unknown => CheckReport::skipped("dynamic_bound", "f* unknown"),
        Optimum::Known { f_star, dist0 } => dynamic_bound(trace, delta0, beta, constants, f_star, dist0),
        Optimum::Surrogate { f_best, dist0 } => {
            let mut r = dynamic_bound(trace, delta0, beta, constants, f_best, dist0);
            r.advisory = true;
            r.with_note("best-known value used in place of f*")
        }
    };
    Ok(vec![structural, bound])
}

fn dynamic_bound(
    trace: &Trace,
    delta0: f64,
    beta: &BetaSequence,
    constants: &RuleConstants,
    f_star: f64,
    dist0: f64,
) -> CheckReport {
    const NAME: &str = "dynamic_bound";
    if trace.records.is_empty() {
        return CheckReport::skipped(NAME, "empty trace");
    }
    let c = max_subgradient_norm(trace);
    let budget = (c * dist0).powi(2);
    // N: largest count of leading terms whose sum stays within the budget
    let mut sum = 0.0;
    let mut n_max = 0usize;
    let mut unbounded = true;
    for r in &trace.records {
        let b = beta.at(r.k);
        let d = r.delta_ell.unwrap_or(delta0);
        sum += b * (2.0 - constants.coupling() * b) * d * d;
        if sum > budget {
            unbounded = false;
            break;
        }
        n_max = r.k + 1;
    }
    let last = trace.records.len() - 1;
    let upto = n_max.min(last);
    let min_gap = trace.records[..=upto]
        .iter()
        .map(|r| r.f_xk - f_star)
        .fold(f64::INFINITY, f64::min);
    let mut m = Margins::new(NAME);
    m.push(trace.records[upto].k, delta0 + STEP_SLACK - min_gap);
    let mut r = m
        .finish()
        .with_param("c", c)
        .with_param("dist0", dist0)
        .with_param("N", n_max as f64)
        .with_param("f_star", f_star);
    if unbounded {
        r = r.with_note(format!(
            "trace ended before the sum reached its budget; checked k <= {upto}"
        ));
    }
    r
}

/// Level-state identities: running-min records, `f_lev = f_rec(k(ℓ)) − δ_ℓ`,
/// `δ` constant except for exact halvings at halving events, `σ` reset at
/// every group start and accumulating `t̃` in between, group counter
/// incrementing exactly at events.
pub fn check_level_structure(
    trace: &Trace,
    report: Option<&SolverReport>,
    delta0: f64,
) -> Result<CheckReport> {
    const NAME: &str = "level_structure";
    let recs = &trace.records;
    if recs.is_empty() {
        return Ok(CheckReport::skipped(NAME, "empty trace"));
    }
    let missing = |f: &str| Error::MissingTraceData(format!("level field {f}"));
    let tol = |x: f64| BOOKKEEPING_REL * (1.0 + x.abs());
    let mut m = Margins::new(NAME);
    let mut running_min = f64::INFINITY;
    let mut group_rec = f64::NAN;
    let mut halvings = 0usize;
    let mut prev: Option<&crate::solver::TraceRecord> = None;
    for r in recs {
        let f_lev = r.f_lev.ok_or_else(|| missing("f_lev"))?;
        let delta = r.delta_ell.ok_or_else(|| missing("delta_ell"))?;
        let sigma = r.sigma.ok_or_else(|| missing("sigma"))?;
        let ell = r.ell.ok_or_else(|| missing("ell"))?;
        let mut margin = f64::INFINITY;

        running_min = running_min.min(r.f_xk);
        margin = margin.min(tol(r.f_rec) - (r.f_rec - running_min).abs());

        match (prev, r.event) {
            (None, ev) => {
                if ev != Some(GroupEvent::Start) || ell != 0 {
                    margin = f64::NEG_INFINITY;
                }
                margin = margin.min(tol(delta0) - (delta - delta0).abs());
                margin = margin.min(-sigma.abs());
                group_rec = r.f_rec;
            }
            (Some(p), ev) => {
                let p_delta = p.delta_ell.unwrap_or(f64::NAN);
                let p_ell = p.ell.unwrap_or(0);
                match ev {
                    Some(GroupEvent::Start) => margin = f64::NEG_INFINITY,
                    Some(kind) => {
                        if ell != p_ell + 1 {
                            margin = f64::NEG_INFINITY;
                        }
                        margin = margin.min(-sigma.abs());
                        let expected = if kind == GroupEvent::Halving {
                            halvings += 1;
                            p_delta / 2.0
                        } else {
                            // sufficient descent against the previous group's record
                            margin = margin.min(tol(r.f_xk) + (group_rec - delta / 2.0) - r.f_xk);
                            p_delta
                        };
                        margin = margin.min(tol(delta) - (delta - expected).abs());
                        group_rec = r.f_rec;
                    }
                    None => {
                        if ell != p_ell {
                            margin = f64::NEG_INFINITY;
                        }
                        margin = margin.min(tol(delta) - (delta - p_delta).abs());
                        let expected = p.sigma.unwrap_or(f64::NAN) + p.t_tilde_k.unwrap_or(f64::NAN);
                        margin = margin.min(tol(expected) - (sigma - expected).abs());
                    }
                }
            }
        }
        margin = margin.min(tol(f_lev) - (f_lev - (group_rec - delta)).abs());
        // the level sits strictly below the record
        if !(f_lev < r.f_rec) {
            margin = margin.min(f_lev - r.f_rec).min(-f64::MIN_POSITIVE);
        }
        m.push(r.k, margin);
        prev = Some(r);
    }
    let mut out = m.finish().with_param("halvings", halvings as f64);
    if let Some(rep) = report {
        let mut fail = |margin: f64, note: String| {
            out.passed = false;
            out.status = CheckStatus::Failed;
            out.worst_margin = out.worst_margin.min(margin);
            out.note = Some(note);
        };
        if let Some(h) = rep.halvings {
            // a halving that triggers the stop test leaves no trace record
            let terminal = matches!(rep.status, Status::Converged | Status::Budget);
            if h != halvings && !(terminal && h == halvings + 1) {
                fail(-1.0, format!("report counts {h} halvings, trace {halvings}"));
            }
            if let Some(d) = rep.delta {
                let expected = delta0 / 2f64.powi(h as i32);
                if (d - expected).abs() > tol(expected) {
                    fail(-(d - expected).abs(), format!("final delta {d:e} after {h} halvings"));
                }
            }
        }
    }
    Ok(out)
}

/// Every produced iterate lies in `C` to within `tol`.
pub fn check_feasibility(trace: &Trace, tol: f64) -> CheckReport {
    let mut m = Margins::new("feasibility");
    for r in &trace.records {
        m.push(r.k, tol - r.feasibility_residual);
    }
    m.finish().with_param("tolerance", tol)
}

/// `ψ(w_k) − ψ(w*) ≤ 8 d_C²/k` along a Frank-Wolfe gap history, with `w*`
/// the exact projection of `v`.
pub fn check_fw_rate(history: &[GapEntry], set: &FeasibleSet, v: &[f64]) -> Result<CheckReport> {
    let w_star = set.exact_project(v)?;
    let psi_star = 0.5 * dist_sq(&w_star, v);
    let d = set.diameter_bound();
    let mut m = Margins::new("fw_rate");
    for e in history {
        let bound = 8.0 * d * d / e.k as f64;
        m.push(e.k, bound + RATE_SLACK - (e.psi - psi_star));
    }
    Ok(m.finish().with_param("diameter", d).with_param("psi_star", psi_star))
}

/// Probe points for the per-step inequality: random feasible points plus
/// any known minimizer or reference point.
pub fn probe_points(inst: &ProblemInstance, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = inst.set.sample_points(&mut rng, count)?;
    probes.extend(inst.x_star.iter().cloned());
    probes.extend(inst.reference_point.iter().cloned());
    Ok(probes)
}

/// Every checker applicable to a run of `rule` on `inst`.
pub fn verify_run(
    inst: &ProblemInstance,
    rule: &StepsizeRule,
    constants: &RuleConstants,
    trace: &Trace,
    report: Option<&SolverReport>,
    probe_count: usize,
    probe_seed: u64,
) -> Result<Vec<CheckReport>> {
    let mut out = vec![check_feasibility(trace, crate::projection::FEASIBILITY_TOL)];
    if trace.records.is_empty() {
        return Ok(out);
    }
    let probes = probe_points(inst, probe_count, probe_seed)?;
    out.push(check_main_inequality(trace, &inst.objective, &probes, constants)?);
    let x_star = inst.x_star.as_deref();
    let x0 = trace.steps.first().map(|s| s.x.as_slice());
    let dist0 = x_star.zip(x0).map(|(xs, x0)| dist(x0, xs));
    match rule {
        StepsizeRule::Exogenous { alpha, .. } => {
            out.push(check_exogenous_complexity(trace, alpha, inst.f_star, dist0, constants));
            out.push(check_quasi_fejer(trace, alpha, x_star, constants)?);
        }
        StepsizeRule::Polyak { f_star, beta, .. } => {
            out.push(check_polyak(trace, x_star, *f_star, beta)?);
        }
        StepsizeRule::Dynamic { beta, .. } => {
            let delta0 = report
                .and_then(|r| r.delta0)
                .or(trace.records[0].delta_ell)
                .ok_or_else(|| Error::MissingTraceData("delta0".into()))?;
            let optimum = match (inst.f_star, dist0) {
                (Some(f_star), Some(dist0)) => Optimum::Known { f_star, dist0 },
                _ => surrogate(inst, trace, report).unwrap_or(Optimum::Unknown),
            };
            out.extend(check_dynamic(trace, report, delta0, beta, constants, optimum)?);
        }
    }
    Ok(out)
}

/// Best value among the run's record and the instance's reference point.
fn surrogate(inst: &ProblemInstance, trace: &Trace, report: Option<&SolverReport>) -> Option<Optimum> {
    let x0 = &trace.steps.first()?.x;
    let mut best: Option<(f64, &[f64])> = report.map(|r| (r.f_rec, r.x_rec.as_slice()));
    if let Some(p) = inst.reference_point.as_deref() {
        let fp = inst.objective.value(p);
        if best.is_none_or(|(f, _)| fp < f) {
            best = Some((fp, p));
        }
    }
    best.map(|(f_best, x)| Optimum::Surrogate {
        f_best,
        dist0: dist(x0, x),
    })
}
