use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use inexact_subgradient::artifacts::{verify_dir, write_run, SummaryRow, SUMMARY_HEADER};
use inexact_subgradient::config::{ProblemSource, RunConfig, DEFAULT_POLYAK_BETA};
use inexact_subgradient::error::Error;
use inexact_subgradient::problems::{generate_instance, EllipsoidL1Spec, ProblemInstance};
use inexact_subgradient::projection::ToleranceParams;
use inexact_subgradient::solver::{solve_instance, RadiusPolicy, SolverRun, Status};
use inexact_subgradient::stepsize::{AlphaSequence, BetaSequence, StepsizeRule};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser)]
#[command(version, about = "Subgradient methods with feasible inexact projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sparse-recovery instance and print its feasibility certificate.
    Generate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; defaults to instance-n<N>-seed<SEED>.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a solver and write the run directory.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        print_config: bool,
        /// Also write trajectory.csv with interior flags.
        #[arg(long)]
        dump_trajectory: bool,
    },
    /// Replay a run directory against the convergence checks.
    Verify {
        #[arg(long)]
        run: PathBuf,
        /// Trace file to check instead of the run's own.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the aggregated report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Solve generated instances for several sizes and seeds in parallel.
    Batch {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [10u64])]
        sizes: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleKind {
    Exogenous,
    Polyak,
    Dynamic,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Start from a RunConfig JSON file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generated instance dimension.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: Option<u64>,
    /// Generated instance seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Instance JSON file.
    #[arg(long, conflicts_with_all = ["n", "box_l1"])]
    instance: Option<PathBuf>,
    /// Built-in problem: ‖x − (2, 0.5)‖₁ over [0,1]².
    #[arg(long, conflicts_with = "n")]
    box_l1: bool,
    #[arg(long, value_enum)]
    rule: Option<RuleKind>,
    /// Exogenous α_k = a/(k+1).
    #[arg(long)]
    alpha_scale: Option<f64>,
    /// Constant β for the Polyak or dynamic rule.
    #[arg(long)]
    beta: Option<f64>,
    /// Optimal value for the Polyak rule; defaults to the instance's.
    #[arg(long)]
    f_star: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Outer iteration budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Frank-Wolfe iterations per projection.
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    delta0: Option<f64>,
    /// Fixed path-length bound R.
    #[arg(long)]
    radius: Option<f64>,
    /// Stop once δ ≤ stop_rel·(1 + |f_rec|).
    #[arg(long)]
    stop_rel: Option<f64>,
    #[arg(long)]
    polyak_tol: Option<f64>,
    /// Probe points per check during verification.
    #[arg(long)]
    probes: Option<usize>,
    /// Probe sampling seed.
    #[arg(long)]
    probe_seed: Option<u64>,
    /// Keep only the per-iteration records, not the vectors.
    #[arg(long)]
    no_steps: bool,
}

/// Failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Json(_) | Error::MissingTraceData(_) => EXIT_DATA,
            Error::InvalidConfig(_)
            | Error::InvalidParams(_)
            | Error::InvalidSet(_)
            | Error::RuleViolation(_)
            | Error::DimensionMismatch { .. }
            | Error::Infeasible { .. } => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        Fail(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

impl RunArgs {
    /// Applies the flags on top of the base config and loads the instance.
    fn resolve(&self) -> Result<(RunConfig, ProblemInstance), Fail> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::read(p)?,
            None => RunConfig::default(),
        };
        if self.box_l1 {
            cfg.problem = ProblemSource::builtin_box();
        } else if let Some(path) = &self.instance {
            cfg.problem = ProblemSource::InstanceFile { path: path.clone() };
        } else if self.n.is_some() || self.seed.is_some() {
            let (n0, s0) = match &cfg.problem {
                ProblemSource::Generated(spec) => (spec.n, spec.seed),
                _ => (10, 1),
            };
            let n = self.n.map_or(n0, |n| n as usize);
            cfg.problem = ProblemSource::Generated(EllipsoidL1Spec::new(n, self.seed.unwrap_or(s0)));
        }

        let p = cfg.solver.params;
        let params = ToleranceParams::new(
            self.gamma.unwrap_or(p.gamma),
            self.theta.unwrap_or(p.theta),
            self.lambda.unwrap_or(p.lambda),
        )?;
        let params_changed = params != p;
        cfg.solver.params = params;

        let inst = cfg.problem.load()?;
        let mu = self.mu.unwrap_or(cfg.rule.mu());
        let beta = self.beta.map(BetaSequence::Constant);
        cfg.rule = match (self.rule, &cfg.rule) {
            (Some(RuleKind::Exogenous), _) | (None, StepsizeRule::Exogenous { .. }) => {
                let alpha = match (&cfg.rule, self.alpha_scale) {
                    (_, Some(a)) => AlphaSequence::Harmonic { scale: a },
                    (StepsizeRule::Exogenous { alpha, .. }, None) => alpha.clone(),
                    _ => AlphaSequence::default(),
                };
                StepsizeRule::Exogenous { alpha, mu }
            }
            (Some(RuleKind::Polyak), _) | (None, StepsizeRule::Polyak { .. }) => {
                let (old_f, old_beta) = match &cfg.rule {
                    StepsizeRule::Polyak { f_star, beta, .. } => (Some(*f_star), Some(beta.clone())),
                    _ => (None, None),
                };
                let f_star = self
                    .f_star
                    .or(inst.f_star)
                    .or(old_f)
                    .ok_or_else(|| usage("the Polyak rule needs --f-star for this instance"))?;
                let beta = beta
                    .or(old_beta)
                    .unwrap_or(BetaSequence::Constant(DEFAULT_POLYAK_BETA));
                StepsizeRule::Polyak { f_star, beta, mu }
            }
            (Some(RuleKind::Dynamic), _) | (None, StepsizeRule::Dynamic { .. }) => {
                let old = match &cfg.rule {
                    StepsizeRule::Dynamic { beta, .. } if !params_changed => Some(beta.clone()),
                    _ => None,
                };
                let beta = beta
                    .or(old)
                    .unwrap_or_else(|| BetaSequence::dynamic_default(&params));
                StepsizeRule::Dynamic { beta, mu }
            }
        };

        let s = &mut cfg.solver;
        s.budget = self.budget.unwrap_or(s.budget);
        s.max_inner = self.max_inner.or(s.max_inner);
        s.polyak_tol = self.polyak_tol.unwrap_or(s.polyak_tol);
        s.level.delta0 = self.delta0.or(s.level.delta0);
        s.level.stop_rel = self.stop_rel.unwrap_or(s.level.stop_rel);
        if let Some(r) = self.radius {
            s.level.radius = RadiusPolicy::Fixed { value: r };
        }
        if self.no_steps {
            s.record_steps = false;
        }
        cfg.probes = self.probes.unwrap_or(cfg.probes);
        cfg.seed = self.probe_seed.unwrap_or(cfg.seed);
        cfg.validate()?;
        Ok((cfg, inst))
    }
}

fn default_run_dir(cfg: &RunConfig) -> PathBuf {
    let name = match &cfg.problem {
        ProblemSource::Generated(spec) => format!("n{}-seed{}", spec.n, spec.seed),
        ProblemSource::InstanceFile { path } => path
            .file_stem()
            .map_or("instance".into(), |s| s.to_string_lossy().into_owned()),
        ProblemSource::BoxL1 { .. } => "box-l1".into(),
    };
    PathBuf::from("runs").join(format!("{name}-{}", cfg.rule.name()))
}

fn run_status(run: &SolverRun) -> Result<(), Fail> {
    match run.report.status {
        Status::ProjectionFailed => Err(Fail(
            EXIT_SOLVER,
            run.report.message.clone().unwrap_or_else(|| "projection failed".into()),
        )),
        _ => Ok(()),
    }
}

fn solve_into(
    dir: &Path,
    cfg: &RunConfig,
    inst: &ProblemInstance,
    dump: bool,
) -> Result<SolverRun, Fail> {
    let mut cfg = cfg.clone();
    cfg.output_dir = Some(dir.to_path_buf());
    let run = solve_instance(inst, &cfg.rule, &cfg.solver)?;
    write_run(dir, &cfg, inst, &run, dump)?;
    Ok(run)
}

fn cmd_generate(n: u64, seed: u64, out: Option<PathBuf>) -> Result<(), Fail> {
    let inst = generate_instance(&EllipsoidL1Spec::new(n as usize, seed))?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("instance-n{n}-seed{seed}.json")));
    std::fs::write(&path, inst.to_json()?).map_err(Error::from)?;
    let info = inst
        .generator
        .as_ref()
        .ok_or_else(|| Fail(EXIT_SOLVER, "generator info missing".into()))?;
    let sparse = inst.reference_point.as_deref().unwrap_or_default();
    let zero = vec![0.0; n as usize];
    println!("instance: {}", path.display());
    println!("xi = {:e}", info.xi);
    println!(
        "certificate: xi*e_n in C: {} (quadratic form {:.15}, residual {:e})",
        inst.set.contains(sparse, 1e-8)?,
        info.sparse_point_quadratic,
        inst.set.feasibility_residual(sparse)?.max(0.0) + 0.0
    );
    println!(
        "certificate: 0 not in C: {} (quadratic form {:.6e})",
        !inst.set.contains(&zero, 0.0)?,
        info.origin_quadratic
    );
    Ok(())
}

fn cmd_solve(args: &RunArgs, out: Option<PathBuf>, print_config: bool, dump: bool) -> Result<(), Fail> {
    let (mut cfg, inst) = args.resolve()?;
    let dir = out.unwrap_or_else(|| default_run_dir(&cfg));
    cfg.output_dir = Some(dir.clone());
    if print_config {
        println!("{}", cfg.to_json()?);
        return Ok(());
    }
    let run = solve_into(&dir, &cfg, &inst, dump)?;
    println!("{SUMMARY_HEADER}");
    println!("{}", SummaryRow::from_report(&run.report).csv_row());
    if let Some(f_star) = run.report.f_star {
        println!("f_rec - f* = {:e}", run.report.f_rec - f_star);
    }
    println!("status: {}; outputs in {}", run.report.status.as_str(), dir.display());
    run_status(&run)
}

fn cmd_verify(run: &Path, trace: Option<&Path>, json: bool) -> Result<(), Fail> {
    let report = verify_dir(run, trace)?;
    std::fs::write(run.join("verify.json"), serde_json::to_string_pretty(&report).map_err(Error::from)?)
        .map_err(Error::from)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        for line in report.lines() {
            println!("{line}");
        }
    }
    if report.passed {
        Ok(())
    } else {
        let names: Vec<_> = report.failed_checks().map(|c| c.check_name.as_str()).collect();
        Err(Fail(EXIT_VERIFY_FAILED, format!("failed checks: {}", names.join(", "))))
    }
}

fn cmd_batch(args: &RunArgs, sizes: &[u64], seeds: &[u64], out: &Path, threads: usize) -> Result<(), Fail> {
    let (base, _) = args.resolve()?;
    let jobs: Vec<(u64, u64)> = sizes.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    for &(n, _) in &jobs {
        if n < 2 {
            return Err(usage("sizes must be at least 2"));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Fail(EXIT_SOLVER, e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, seed)| {
                let mut cfg = base.clone();
                cfg.problem = ProblemSource::Generated(EllipsoidL1Spec::new(n as usize, seed));
                let dir = out.join(format!("n{n}-seed{seed}"));
                let res = cfg
                    .problem
                    .load()
                    .map_err(Fail::from)
                    .and_then(|inst| solve_into(&dir, &cfg, &inst, false));
                (n, seed, res)
            })
            .collect()
    });
    println!("seed,{SUMMARY_HEADER},status");
    let mut failed = 0;
    for (n, seed, res) in results {
        match res {
            Ok(run) => {
                let row = SummaryRow::from_report(&run.report).csv_row();
                println!("{seed},{row},{}", run.report.status.as_str());
                if run.report.status == Status::ProjectionFailed {
                    failed += 1;
                }
            }
            Err(Fail(_, msg)) => {
                failed += 1;
                eprintln!("n={n} seed={seed}: {msg}");
            }
        }
    }
    if failed > 0 {
        return Err(Fail(EXIT_SOLVER, format!("{failed} runs failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Generate { n, seed, out } => cmd_generate(*n, *seed, out.clone()),
        Command::Solve {
            run,
            out,
            print_config,
            dump_trajectory,
        } => cmd_solve(run, out.clone(), *print_config, *dump_trajectory),
        Command::Verify { run, trace, json } => cmd_verify(run, trace.as_deref(), *json),
        Command::Batch {
            run,
            sizes,
            seeds,
            out,
            threads,
        } => cmd_batch(run, sizes, seeds, out, *threads),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
