//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use inexact_subgradient::analysis::{check_level_structure, check_main_inequality, probe_points};
use inexact_subgradient::artifacts::trajectory;
use inexact_subgradient::error::Error;
use inexact_subgradient::problems::{box_l1_problem, generate_instance, EllipsoidL1Spec, ProblemInstance};
use inexact_subgradient::projection::{certify_projection, fw_project, FwOptions, ToleranceParams};
use inexact_subgradient::sets::{EllipsoidSpectrum, FeasibleSet, SetKind};
use inexact_subgradient::solver::{solve_instance, GroupEvent, SolverOptions, SolverRun, Status, Trace};
use inexact_subgradient::stepsize::{AlphaSequence, BetaSequence, RuleConstants, StepsizeRule};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `Σ|x_i − p_i|`
fn shifted_l1(x: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(p).map(|(a, b)| (a - b).abs()).sum()
}

/// The box test problem with its minimizer and optimal value from the
/// componentwise clamp.
struct BoxProblem {
    inst: ProblemInstance,
    x_star: Vec<f64>,
    f_star: f64,
}

fn box_problem() -> BoxProblem {
    let p = [2.0f64, 0.5];
    let (lo, hi) = ([0.0, 0.0], [1.0, 1.0]);
    let x_star: Vec<f64> = (0..2).map(|i| p[i].clamp(lo[i], hi[i])).collect();
    let f_star = shifted_l1(&x_star, &p);
    let inst = box_l1_problem(p.to_vec(), lo.to_vec(), hi.to_vec()).unwrap();
    BoxProblem { inst, x_star, f_star }
}

fn exogenous() -> StepsizeRule {
    StepsizeRule::Exogenous {
        alpha: AlphaSequence::Harmonic { scale: 1.0 },
        mu: 0.0,
    }
}

fn polyak(f_star: f64) -> StepsizeRule {
    StepsizeRule::Polyak {
        f_star,
        beta: BetaSequence::Constant(0.9),
        mu: 0.0,
    }
}

fn dynamic() -> StepsizeRule {
    StepsizeRule::Dynamic {
        beta: BetaSequence::dynamic_default(&ToleranceParams::default()),
        mu: 0.0,
    }
}

fn nu() -> f64 {
    let p = ToleranceParams::default();
    (1.0 + 2.0 * p.gamma) / (1.0 - 2.0 * p.lambda)
}

/// FW on the unit ball: ψ(w_k) − ψ* ≤ 8 d²/k with d = 2 and w* = (1, 0).
fn fw_rate() -> Outcome {
    let start = Instant::now();
    let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
    let (u, v) = ([0.0, 1.0], [2.0, 0.0]);
    let w_star = [1.0, 0.0];
    let psi_star = 0.5 * dist(&w_star, &v).powi(2);
    let opts = FwOptions::for_dimension(2).with_history().with_max_inner(1000);
    let (w, hist) = match fw_project(&set, &ToleranceParams::ZERO, &u, &v, &opts) {
        Ok(r) => (r.point, r.gap_history.unwrap()),
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst = f64::INFINITY;
    for e in &hist {
        worst = worst.min(32.0 / e.k as f64 + 1e-10 - (e.psi - psi_star));
    }
    let err = dist(&w, &w_star);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst >= 0.0 && err <= 1e-3 && secs < 1.0,
        format!(
            "{} inner iterations, worst margin {worst:.3e}, |w - (1,0)| = {err:.2e}, {secs:.3} s",
            hist.len()
        ),
    )
}

fn box_project(lower: &[f64], upper: &[f64], v: &[f64]) -> Vec<f64> {
    v.iter().zip(lower.iter().zip(upper)).map(|(x, (l, u))| x.clamp(*l, *u)).collect()
}

fn ball_project(center: &[f64], radius: f64, v: &[f64]) -> Vec<f64> {
    let d = dist(v, center);
    if d <= radius {
        return v.to_vec();
    }
    center.iter().zip(v).map(|(c, x)| c + radius * (x - c) / d).collect()
}

/// Zero-tolerance FW against closed-form projections.
fn exact_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut inner = 0;
    for i in 0..100 {
        let n = rng.random_range(1..=6);
        let v: Vec<f64> = gaussian(&mut rng, n).iter().map(|x| 3.0 * x).collect();
        let (set, oracle) = if i % 2 == 0 {
            let lower = gaussian(&mut rng, n);
            let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.1..3.0)).collect();
            let oracle = box_project(&lower, &upper, &v);
            (FeasibleSet::new_box(lower, upper).unwrap(), oracle)
        } else {
            let center = gaussian(&mut rng, n);
            let radius = rng.random_range(0.2..3.0);
            let oracle = ball_project(&center, radius, &v);
            (FeasibleSet::new_ball(center, radius).unwrap(), oracle)
        };
        let u = set.canonical_point();
        let opts = FwOptions {
            gap_floor: Some(1e-6),
            ..FwOptions::for_dimension(n).with_max_inner(10_000_000)
        };
        match fw_project(&set, &ToleranceParams::ZERO, &u, &v, &opts) {
            Ok(r) => {
                inner = inner.max(r.inner_iterations);
                worst = worst.max(dist(&r.point, &oracle));
                let lib = set.exact_project(&v).unwrap();
                worst = worst.max(dist(&lib, &oracle));
            }
            Err(e) => return outcome(false, format!("pair {i}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-3 && secs < 5.0,
        format!("100 pairs, max distance {worst:.2e}, max inner iterations {inner}, {secs:.2} s"),
    )
}

fn random_spectrum(rng: &mut ChaCha8Rng, n: usize) -> EllipsoidSpectrum {
    let a: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let q = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
    EllipsoidSpectrum::from_dense(&q).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, kind: usize, n: usize) -> FeasibleSet {
    match kind {
        0 => {
            let lower = gaussian(rng, n);
            let upper = lower.iter().map(|l| l + rng.random_range(0.1..3.0)).collect();
            FeasibleSet::new_box(lower, upper).unwrap()
        }
        1 => FeasibleSet::new_ball(gaussian(rng, n), rng.random_range(0.2..3.0)).unwrap(),
        2 => FeasibleSet::new_simplex(n).unwrap(),
        3 => {
            let s = random_spectrum(rng, n);
            FeasibleSet::new_ellipsoid(gaussian(rng, n), s).unwrap()
        }
        _ => {
            let s = random_spectrum(rng, n);
            let center = (0..n).map(|_| rng.random_range(0.05..1.5)).collect();
            FeasibleSet::new_ellipsoid_orthant(center, s).unwrap()
        }
    }
}

/// Certificates and the distance inequality on random inexact projections.
fn certificate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    let mut uncertified = 0;
    for i in 0..500 {
        let n = rng.random_range(2..=6);
        let set = random_set(&mut rng, i % 5, n);
        let (g, l) = (rng.random_range(0.0..=0.2), rng.random_range(0.0..=0.2));
        let p = ToleranceParams::new(g, rng.random_range(0.0..=0.2), l).unwrap();
        let pts = set.sample_points(&mut rng, 101).unwrap();
        let u = &pts[0];
        let scale = rng.random_range(0.1..3.0);
        let v: Vec<f64> = u.iter().zip(gaussian(&mut rng, n)).map(|(a, z)| a + scale * z).collect();
        let opts = FwOptions::for_dimension(n).with_max_inner(10_000_000);
        let w = match fw_project(&set, &p, u, &v, &opts) {
            Ok(r) => r.point,
            Err(e) => return outcome(false, format!("case {i}: {e}")),
        };
        match certify_projection(&set, &p, u, &v, &w) {
            Ok(c) if c.certified => {}
            Ok(_) | Err(_) => uncertified += 1,
        }
        let extra = (2.0 * p.gamma + 2.0 * p.lambda) / (1.0 - 2.0 * p.lambda) * dist(&v, u).powi(2);
        for x in &pts[1..] {
            let margin = dist(&v, x).powi(2) + extra - dist(&w, x).powi(2);
            worst = worst.min(margin);
        }
    }
    outcome(
        uncertified == 0 && worst >= -1e-9,
        format!("500 cases, {uncertified} uncertified, worst distance margin {worst:.3e}"),
    )
}

fn run_rule(inst: &ProblemInstance, rule: &StepsizeRule, budget: usize, opts: SolverOptions) -> Result<SolverRun, Error> {
    solve_instance(inst, rule, &SolverOptions { budget, ..opts })
}

/// Per-step inequality along 2000-iteration traces of every rule.
fn main_inequality() -> Outcome {
    let bp = box_problem();
    let probes = probe_points(&bp.inst, 20, 4).unwrap();
    let constants = RuleConstants::new(&ToleranceParams::default(), 0.0);
    let mut details = Vec::new();
    let mut ok = true;
    let run_all = SolverOptions {
        polyak_tol: f64::NEG_INFINITY,
        level: inexact_subgradient::solver::LevelOptions {
            stop_rel: 0.0,
            ..Default::default()
        },
        ..SolverOptions::default()
    };
    for rule in [exogenous(), polyak(bp.f_star), dynamic()] {
        let start = Instant::now();
        // Polyak keeps its own stop; past it FW inner counts grow like (f - f*)^-2
        let opts = match rule {
            StepsizeRule::Polyak { .. } => SolverOptions::default(),
            _ => run_all.clone(),
        };
        let run = match run_rule(&bp.inst, &rule, 2000, opts) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                details.push(format!("{}: {e}", rule.name()));
                continue;
            }
        };
        let rep = check_main_inequality(&run.trace, &bp.inst.objective, &probes, &constants).unwrap();
        let secs = start.elapsed().as_secs_f64();
        ok &= rep.passed && secs < 10.0;
        details.push(format!(
            "{} {} steps ({}) margin {:.2e} {:.2} s",
            rule.name(),
            run.trace.steps.len(),
            run.report.status.as_str(),
            rep.worst_margin,
            secs
        ));
    }
    outcome(ok, details.join("; "))
}

/// Polyak: accuracy, monotone distance, and the rate bound.
fn polyak_convergence() -> Outcome {
    let bp = box_problem();
    let run = run_rule(&bp.inst, &polyak(bp.f_star), 5000, SolverOptions::default()).unwrap();
    let gap = run.report.f_rec - bp.f_star;
    let mut monotone = f64::INFINITY;
    for s in &run.trace.steps {
        monotone = monotone.min(dist(&s.x, &bp.x_star) + 1e-9 - dist(&s.x_next, &bp.x_star));
    }
    let c = run.trace.records.iter().map(|r| r.norm_s_k).fold(0.0, f64::max);
    let d0 = dist(&bp.inst.start, &bp.x_star);
    let beta_low = 0.9;
    let mut rate = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for (n, r) in run.trace.records.iter().enumerate() {
        min_gap = min_gap.min(shifted_l1(&run.trace.steps[n].x, &[2.0, 0.5]) - bp.f_star);
        let bound = c * d0 / (beta_low * (n as f64 + 1.0)).sqrt();
        rate = rate.min(bound + 1e-8 - min_gap);
        debug_assert_eq!(r.k, n);
    }
    outcome(
        gap <= 1e-3 && run.report.k <= 5000 && monotone >= 0.0 && rate >= 0.0,
        format!(
            "f_rec - f* = {gap:.2e} after {} iterations, monotone margin {monotone:.2e}, rate margin {rate:.2e}",
            run.report.k
        ),
    )
}

/// Exogenous rule: min gap ≤ Γ(‖x_0 − x*‖² + ρΣα²)/(2Σα) for all N ≤ 2000.
fn exogenous_bound() -> Outcome {
    let bp = box_problem();
    let run = run_rule(&bp.inst, &exogenous(), 2000, SolverOptions::default()).unwrap();
    let gamma = run.trace.records.iter().map(|r| r.norm_s_k).fold(1.0, f64::max);
    let rho = nu();
    let d0 = dist(&bp.inst.start, &bp.x_star);
    let (mut sa, mut sa2, mut min_gap, mut worst) = (0.0, 0.0, f64::INFINITY, f64::INFINITY);
    for (k, s) in run.trace.steps.iter().enumerate() {
        let a = 1.0 / (k as f64 + 1.0);
        sa += a;
        sa2 += a * a;
        min_gap = min_gap.min(shifted_l1(&s.x, &[2.0, 0.5]) - bp.f_star);
        worst = worst.min(gamma * (d0 * d0 + rho * sa2) / (2.0 * sa) + 1e-8 - min_gap);
    }
    outcome(
        worst >= 0.0 && run.trace.steps.len() == 2000,
        format!("N = 0..{}, Gamma = {gamma:.3}, worst margin {worst:.3e}", run.trace.steps.len() - 1),
    )
}

/// Level-state bookkeeping recomputed from the records.
fn level_oracle(trace: &Trace, delta0: f64) -> Result<usize, String> {
    let mut running = f64::INFINITY;
    let mut group_rec = f64::NAN;
    let mut halvings = 0;
    for (i, r) in trace.records.iter().enumerate() {
        let delta = r.delta_ell.ok_or("missing delta")?;
        let sigma = r.sigma.ok_or("missing sigma")?;
        let f_lev = r.f_lev.ok_or("missing f_lev")?;
        running = running.min(r.f_xk);
        if r.f_rec != running {
            return Err(format!("k={}: f_rec {} != running min {running}", r.k, r.f_rec));
        }
        let expected_delta = match (i, r.event) {
            (0, _) => delta0,
            (_, Some(GroupEvent::Halving)) => {
                halvings += 1;
                trace.records[i - 1].delta_ell.unwrap() / 2.0
            }
            _ => trace.records[i - 1].delta_ell.unwrap(),
        };
        if delta != expected_delta {
            return Err(format!("k={}: delta {delta} expected {expected_delta}", r.k));
        }
        if r.event.is_some() {
            group_rec = r.f_rec;
            if sigma != 0.0 {
                return Err(format!("k={}: sigma {sigma} at a group start", r.k));
            }
        } else {
            let prev = &trace.records[i - 1];
            let expected = prev.sigma.unwrap() + prev.t_tilde_k.unwrap();
            if (sigma - expected).abs() > 1e-12 * expected.abs() {
                return Err(format!("k={}: sigma {sigma} expected {expected}", r.k));
            }
        }
        if f_lev != group_rec - delta {
            return Err(format!("k={}: f_lev {f_lev} != {group_rec} - {delta}", r.k));
        }
        if i > 0 && delta > trace.records[i - 1].delta_ell.unwrap() {
            return Err(format!("k={}: delta increased", r.k));
        }
    }
    Ok(halvings)
}

struct SparseRun {
    n: usize,
    seed: u64,
    run: SolverRun,
    secs: f64,
}

fn sparse_runs() -> Vec<Result<SparseRun, String>> {
    let mut out = Vec::new();
    for n in [10usize, 100] {
        for seed in 1..=5u64 {
            let start = Instant::now();
            let res = generate_instance(&EllipsoidL1Spec::new(n, seed))
                .and_then(|inst| solve_instance(&inst, &dynamic(), &SolverOptions::default()))
                .map(|run| SparseRun {
                    n,
                    seed,
                    run,
                    secs: start.elapsed().as_secs_f64(),
                })
                .map_err(|e| format!("n={n} seed={seed}: {e}"));
            out.push(res);
        }
    }
    out
}

/// Sparse recovery at n ∈ {10, 100}, five seeds each.
fn sparse_recovery(runs: &[Result<SparseRun, String>]) -> Outcome {
    let mut ok = true;
    let mut rows = Vec::new();
    for r in runs {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                rows.push(e.clone());
                continue;
            }
        };
        let rep = &r.run.report;
        let published_k = if r.n == 10 { 91 } else { 85 };
        let nnz = rep.x_rec.iter().filter(|x| x.abs() > 1e-6).count();
        let stop = rep.delta.unwrap() <= 1e-3 * (1.0 + rep.f_rec.abs());
        let feasible = r.run.trace.records.iter().all(|t| t.feasibility_residual <= 1e-8);
        let structural = rep.delta0.is_some_and(|d0| {
            check_level_structure(&r.run.trace, Some(rep), d0).is_ok_and(|c| c.passed)
        });
        let this = rep.status == Status::Converged
            && stop
            && nnz == 1
            && feasible
            && structural
            && r.secs < 60.0
            && (10..=10 * published_k).contains(&rep.k);
        ok &= this;
        rows.push(format!(
            "n={} seed={} k={} ell={} nnz={} f_rec={:.3e} delta={:.2e} {:.1}s{}",
            r.n,
            r.seed,
            rep.k,
            rep.ell.unwrap_or(0),
            nnz,
            rep.f_rec,
            rep.delta.unwrap_or(f64::NAN),
            r.secs,
            if this { "" } else { " FAIL" }
        ));
    }
    outcome(ok, rows.join("; "))
}

/// Level-state invariants on every dynamic-rule trace produced here.
fn dynamic_structure(runs: &[Result<SparseRun, String>]) -> Outcome {
    let bp = box_problem();
    let mut traces: Vec<(String, SolverRun)> = Vec::new();
    match run_rule(&bp.inst, &dynamic(), 2000, SolverOptions::default()) {
        Ok(r) => traces.push(("box".into(), r)),
        Err(e) => return outcome(false, format!("box run: {e}")),
    }
    for r in runs.iter().flatten() {
        traces.push((format!("n={} seed={}", r.n, r.seed), r.run.clone()));
    }
    let mut total_halvings = 0;
    for (name, run) in &traces {
        let rep = &run.report;
        match level_oracle(&run.trace, rep.delta0.unwrap()) {
            Ok(h) => {
                // a halving that triggers the stop test leaves no record
                let reported = rep.halvings.unwrap();
                if reported != h && reported != h + 1 {
                    return outcome(false, format!("{name}: {reported} halvings reported, {h} in trace"));
                }
                let expected = rep.delta0.unwrap() / 2f64.powi(reported as i32);
                if rep.delta.unwrap() != expected {
                    return outcome(false, format!("{name}: final delta {:?}", rep.delta));
                }
                total_halvings += h;
            }
            Err(e) => return outcome(false, format!("{name}: {e}")),
        }
    }
    outcome(
        true,
        format!("{} traces, {total_halvings} halving events checked", traces.len()),
    )
}

/// The 2-D demo instance visits the interior of C before stopping.
fn interior_iterate() -> Outcome {
    let inst = generate_instance(&EllipsoidL1Spec::new(2, 7)).unwrap();
    let run = solve_instance(&inst, &dynamic(), &SolverOptions::default()).unwrap();
    let points = trajectory(&inst, &run.trace).unwrap();
    let SetKind::EllipsoidOrthant { center, spectrum } = inst.set.kind() else {
        return outcome(false, "unexpected set kind");
    };
    let q = spectrum.dense();
    let slack = |x: &[f64]| {
        let d = DMatrix::from_fn(2, 1, |i, _| x[i] - center[i]);
        let quad = (d.transpose() * &q * &d)[(0, 0)];
        (1.0 - quad).min(x[0]).min(x[1])
    };
    let pre: Vec<_> = points.iter().filter(|p| p.k < run.report.k).collect();
    let interior = pre.iter().filter(|p| slack(&p.x) > 1e-6).count();
    let flags_agree = pre.iter().all(|p| p.interior == (slack(&p.x) > 1e-6));
    outcome(
        interior >= 1 && flags_agree,
        format!("{interior} of {} pre-solution iterates interior", pre.len()),
    )
}

/// Minimum of `⟨c, x⟩` over `10⁶` feasible points spread along the boundary
/// of `{q(x) ≤ 1} ∩ ℝ²₊`, where every linear minimizer lies.
fn boundary_grid_min(center: &[f64], q: &DMatrix<f64>, c: &[f64]) -> f64 {
    let eig = q.clone().symmetric_eigen();
    let mut best = f64::INFINITY;
    let feasible = |x: &[f64]| x[0] >= 0.0 && x[1] >= 0.0;
    // ellipse boundary x = center + Σ cos/sin(θ) v_i/√λ_i
    let arc = 600_000;
    for j in 0..arc {
        let th = std::f64::consts::TAU * j as f64 / arc as f64;
        let (s, co) = th.sin_cos();
        let x: Vec<f64> = (0..2)
            .map(|r| {
                center[r]
                    + co * eig.eigenvectors[(r, 0)] / eig.eigenvalues[0].sqrt()
                    + s * eig.eigenvectors[(r, 1)] / eig.eigenvalues[1].sqrt()
            })
            .collect();
        if feasible(&x) {
            best = best.min(dot(c, &x));
        }
    }
    // chords of the coordinate axes inside the ellipse
    for axis in 0..2 {
        let other = 1 - axis;
        // q(x) = a t² + b t + c0 for x_axis = 0, x_other = t
        let (qoo, qao, qaa) = (q[(other, other)], q[(axis, other)], q[(axis, axis)]);
        let (ca, co) = (center[axis], center[other]);
        let a = qoo;
        let b = -2.0 * qoo * co + 2.0 * qao * (-ca);
        let c0 = qoo * co * co + 2.0 * qao * ca * co + qaa * ca * ca - 1.0;
        let disc = b * b - 4.0 * a * c0;
        if disc < 0.0 {
            continue;
        }
        let r = disc.sqrt();
        let lo = ((-b - r) / (2.0 * a)).max(0.0);
        let hi = (-b + r) / (2.0 * a);
        if hi < lo {
            continue;
        }
        let m = 200_000;
        for j in 0..=m {
            let t = lo + (hi - lo) * j as f64 / m as f64;
            let mut x = [0.0; 2];
            x[other] = t;
            best = best.min(dot(c, &x));
        }
    }
    best
}

/// Barrier LMO against a boundary grid on random 2-D instances.
fn barrier_lmo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_rel: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    for i in 0..50 {
        let (center, spectrum) = if i % 2 == 0 {
            let inst = generate_instance(&EllipsoidL1Spec::new(2, 100 + i)).unwrap();
            match inst.set.kind() {
                SetKind::EllipsoidOrthant { center, spectrum } => (center.clone(), spectrum.clone()),
                _ => unreachable!(),
            }
        } else {
            let s = random_spectrum(&mut rng, 2);
            let reach: Vec<f64> = (0..2)
                .map(|r| {
                    let e = DMatrix::from_fn(2, 1, |k, _| f64::from(u8::from(k == r)));
                    let inv = s.apply_inverse(&[e[(0, 0)], e[(1, 0)]]);
                    inv[r].sqrt()
                })
                .collect();
            // centers close enough to the axes that the orthant cuts the ellipse
            let center = reach.iter().map(|h| h * rng.random_range(0.1..1.3)).collect();
            (center, s)
        };
        let set = FeasibleSet::new_ellipsoid_orthant(center.clone(), spectrum.clone()).unwrap();
        let c = gaussian(&mut rng, 2);
        let sol = match set.lmo_with_report(&c) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("instance {i}: {e}")),
        };
        let grid = boundary_grid_min(&center, &spectrum.dense(), &c);
        let scale = set.diameter_bound() * dot(&c, &c).sqrt();
        worst_rel = worst_rel.max((dot(&c, &sol.point) - grid).abs() / scale);
        worst_kkt = worst_kkt.max(sol.kkt_residual);
    }
    outcome(
        worst_rel <= 1e-4 && worst_kkt <= 1e-10,
        format!("50 instances, worst relative gap {worst_rel:.2e}, worst KKT residual {worst_kkt:.2e}"),
    )
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut timed = |id, name, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        results.push((id, name, o, start.elapsed()));
    };
    timed(1, "fw-rate", &fw_rate);
    timed(2, "exact-projection-equivalence", &exact_equivalence);
    timed(3, "inexact-projection-certificate", &certificate);
    timed(4, "per-step-inequality", &main_inequality);
    timed(5, "polyak-convergence", &polyak_convergence);
    timed(6, "exogenous-bound", &exogenous_bound);
    let runs = sparse_runs();
    timed(7, "sparse-recovery", &|| sparse_recovery(&runs));
    timed(8, "dynamic-structure", &|| dynamic_structure(&runs));
    timed(9, "interior-iterate", &interior_iterate);
    timed(10, "barrier-lmo", &barrier_lmo);

    let mut failed = 0;
    for (id, name, o, t) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!("{tag} criterion {id:>2} {name}: {} [{:.2}s]", o.detail, t.as_secs_f64());
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        total.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
