//! Command-line front end. [`run`] parses the arguments, dispatches one
//! subcommand and maps errors to exit codes: 0 success, 1 infeasible or
//! unbounded, 2 input error, 3 numerical failure. On failure the first line on
//! stderr is `error code=<kind> exit=<n>`, followed by the message.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    holdout_select, matched_samples, out_of_sample, recourse_solutions, scaling_csv, scaling_experiment, solve_robust,
    solve_saa, HoldoutOptions, MixtureSampler,
};
use crate::exact::{solve_exact, ExactOptions, ExactSolution};
use crate::generate::rng;
use crate::io::{from_json, parse_samples_csv, read_text, samples_csv, to_json, write_atomic};
use crate::model::{AffinePolicy, BoxSet, Instance, PolicyStructure, DEFAULT_VERTEX_CAP};
use crate::reformulation::{
    solve_affine, solve_affine_refined, AffineOptions, AffineSolution, FirstStageDecision, IterationRecord,
};
use crate::uc::{balance_residuals, build_uc_instance, emit_uc, ingest_uc, sample_header, toy_system, ToyProfile, UcSystem};
use crate::worst_case::DualCertificate;

#[derive(Parser, Debug)]
#[command(name = "drlp", version, about = "Two-stage Wasserstein DRO with affine recourse policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cutting-plane solve over the full support
    Solve(SolveArgs),
    /// Column-and-constraint generation over the refined set, with recourse certified on the support
    SolveRefined(RefinedArgs),
    /// Exact scenario MILP (tiny instances only)
    Exact(ExactArgs),
    /// Out-of-sample cost of a saved solution
    Evaluate(EvaluateArgs),
    /// Pick the radius from a grid by holdout validation
    Holdout(HoldoutArgs),
    /// Compile a UC system and samples into an instance file
    UcBuild(UcBuildArgs),
    /// Toy UC system end to end: samples, radius selection, certified solve, evaluation
    UcDemo(UcDemoArgs),
    /// Master size and wall time across sample sizes on the toy UC family
    BenchScaling(BenchArgs),
    /// Affine objective minus exact objective
    Gap(GapArgs),
}

#[derive(Args, Debug, Clone)]
struct SolverFlags {
    /// Stopping tolerance on row and feasibility violations
    #[arg(long, default_value_t = 1e-6)]
    rho: f64,
    /// Relative MILP gap for master problems
    #[arg(long = "gap-tol", default_value_t = 1e-6)]
    gap_tol: f64,
    /// Cap on explicit support-vertex enumeration
    #[arg(long = "max-vertices", default_value_t = DEFAULT_VERTEX_CAP)]
    max_vertices: usize,
    /// Directory receiving every master problem in LP format
    #[arg(long = "export-lp")]
    export_lp: Option<PathBuf>,
    /// Worker threads for row scans, vertex enumeration and evaluation
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SolverFlags {
    fn affine(&self) -> Result<AffineOptions> {
        if let Some(dir) = &self.export_lp {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
        }
        Ok(AffineOptions {
            rho: self.rho,
            gap_tol: self.gap_tol,
            max_vertices: self.max_vertices,
            threads: self.threads,
            export_lp_dir: self.export_lp.clone(),
            ..AffineOptions::default()
        })
    }
}

#[derive(Args, Debug)]
struct InstanceFlags {
    /// Instance JSON
    #[arg(long)]
    instance: PathBuf,
    /// Samples CSV replacing the instance's samples
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Policy structure JSON (default: every coefficient free)
    #[arg(long)]
    structure: Option<PathBuf>,
    /// Wasserstein radius (default: the instance's)
    #[arg(long)]
    epsilon: Option<f64>,
}

impl InstanceFlags {
    fn load(&self) -> Result<(Instance, PolicyStructure)> {
        let mut inst: Instance = from_json(&read_text(&self.instance)?, "instance")?;
        if let Some(p) = &self.samples {
            let s = parse_samples_csv(&read_text(p)?, &inst.support)?;
            inst = inst.with_samples(s);
        }
        if let Some(e) = self.epsilon {
            inst = inst.with_epsilon(e);
        }
        inst.validate()?;
        let structure = match &self.structure {
            Some(p) => {
                let st: PolicyStructure = from_json(&read_text(p)?, "policy structure")?;
                st.validate()?;
                if (st.n2, st.m) != (inst.n2(), inst.m()) {
                    return Err(Error::Input(format!(
                        "policy structure is {}x{}, instance needs {}x{}",
                        st.n2,
                        st.m,
                        inst.n2(),
                        inst.m()
                    )));
                }
                st
            }
            None => PolicyStructure::identity(inst.n2(), inst.m()),
        };
        Ok((inst, structure))
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Pure robust mode (radius = support diameter)
    #[arg(long, conflicts_with_all = ["saa", "epsilon"])]
    robust: bool,
    /// Sample-average mode (radius 0)
    #[arg(long, conflicts_with = "epsilon")]
    saa: bool,
    /// Solution JSON to write
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RefinedArgs {
    #[command(flatten)]
    input: InstanceFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Ω inflation parameter; escape probability is at most 1/max(N, beta)
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    input: InstanceFlags,
    /// Largest accepted number of scenarios
    #[arg(long = "scenario-cap", default_value_t = 2000)]
    scenario_cap: usize,
    #[arg(long = "gap-tol", default_value_t = 1e-9)]
    gap_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Instance JSON
    #[arg(long)]
    instance: PathBuf,
    /// Solution JSON written by solve, solve-refined or exact
    #[arg(long)]
    solution: PathBuf,
    /// Evaluation scenarios CSV
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Per-scenario CSV to write
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HoldoutArgs {
    #[command(flatten)]
    input: InstanceFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Candidate radii
    #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-2,1e-1")]
    grid: Vec<f64>,
    /// Training share of the samples
    #[arg(long, default_value_t = 0.75)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train with the refined algorithm at this beta
    #[arg(long, default_value_t = 100.0, conflicts_with = "plain")]
    beta: f64,
    /// Train over the full support instead
    #[arg(long)]
    plain: bool,
    /// Candidate table CSV to write
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UcBuildArgs {
    /// UC system JSON
    #[arg(long)]
    system: PathBuf,
    /// Forecast-error samples CSV (bus-major columns)
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Instance JSON to write
    #[arg(long)]
    out: PathBuf,
    /// Policy structure JSON to write
    #[arg(long = "structure-out")]
    structure_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UcDemoArgs {
    /// tiny or small
    #[arg(long, default_value = "tiny")]
    profile: String,
    /// Fixed radius; without it the radius is chosen from --grid by holdout
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-2,1e-1")]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of historical samples
    #[arg(long = "num-samples", default_value_t = 30)]
    num_samples: usize,
    /// Number of out-of-sample scenarios
    #[arg(long = "eval-scenarios", default_value_t = 500)]
    eval_scenarios: usize,
    /// Output directory
    #[arg(long, default_value = "uc_demo_out")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Sample sizes
    #[arg(long = "N", value_delimiter = ',', default_value = "10,100,1000")]
    n: Vec<usize>,
    #[arg(long, default_value = "tiny")]
    profile: String,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Defaults to the largest N (at least 100) so that Ω is the same for every N
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Draw mixture samples instead of the matched family (master sizes may then vary)
    #[arg(long)]
    random: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct GapArgs {
    #[command(flatten)]
    input: InstanceFlags,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long = "scenario-cap", default_value_t = 2000)]
    scenario_cap: usize,
}

/// Saved affine solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub x1: FirstStageDecision,
    pub policy: AffinePolicy,
    pub theta: Vec<f64>,
    pub mu: DualCertificate,
    pub objective: f64,
    pub refined: bool,
    pub ball_box: BoxSet,
    pub trace: Vec<IterationRecord>,
}

impl From<&AffineSolution> for SolutionDocument {
    fn from(s: &AffineSolution) -> Self {
        SolutionDocument {
            x1: s.x1.clone(),
            policy: s.policy.clone(),
            theta: s.theta.clone(),
            mu: s.certificate.clone(),
            objective: s.objective,
            refined: s.refined,
            ball_box: s.ball_box.clone(),
            trace: s.trace.history.clone(),
        }
    }
}

/// Only the first-stage decision is needed to evaluate either kind of solution.
#[derive(Deserialize)]
struct AnySolution {
    x1: FirstStageDecision,
}

fn trace_csv(trace: &[IterationRecord]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
    let mut out = String::from(
        "iteration,lower_bound,row_violation,feasibility_violation,row_vertices_added,feasibility_vertex_added,master_vars,master_rows\n",
    );
    for r in trace {
        out.push_str(&format!(
            "{},{:?},{},{},{},{},{},{}\n",
            r.iteration,
            r.lower_bound,
            opt(r.row_violation),
            opt(r.feasibility_violation),
            r.row_vertices_added,
            r.feasibility_vertex_added,
            r.master_vars,
            r.master_rows
        ));
    }
    out
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        write_atomic(p, text.as_bytes())?;
    }
    Ok(())
}

fn report_solution(sol: &AffineSolution) {
    println!("objective={:?}", sol.objective);
    println!("iterations={}", sol.iterations());
    println!("x1_binary={:?}", sol.x1.binary);
    println!("x1_continuous={:?}", sol.x1.continuous);
}

/// Exit code and short kind for an error.
pub fn classify(e: &Error) -> (i32, &'static str) {
    match e {
        Error::Infeasible(_) | Error::RecourseInfeasible { .. } => (1, "infeasible"),
        Error::Unbounded(_) => (1, "unbounded"),
        Error::Input(_) | Error::Model(_) => (2, "input"),
        Error::Io { .. } => (2, "io"),
        Error::CapExceeded { .. } => (2, "cap"),
        Error::NodeLimit(_) => (3, "node-limit"),
        Error::Numerical(_) | Error::Solver(_) => (3, "numerical"),
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("error code=usage exit=2");
            eprint!("{}", e.render());
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let (code, kind) = classify(&e);
            eprintln!("error code={kind} exit={code}");
            eprintln!("{e}");
            code
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Solve(a) => {
            let (inst, st) = a.input.load()?;
            let opts = a.solver.affine()?;
            let sol = if a.robust {
                solve_robust(&inst, &st, &opts)?
            } else if a.saa {
                solve_saa(&inst, &st, &opts)?
            } else {
                solve_affine(&inst, &st, &opts)?
            };
            report_solution(&sol);
            write_out(&a.out, &to_json(&SolutionDocument::from(&sol)))
        }
        Command::SolveRefined(a) => {
            let (inst, st) = a.input.load()?;
            let sol = solve_affine_refined(&inst, &st, a.beta, &a.solver.affine()?)?;
            report_solution(&sol);
            println!("omega_lower={:?}", sol.ball_box.lower());
            println!("omega_upper={:?}", sol.ball_box.upper());
            write_out(&a.out, &to_json(&SolutionDocument::from(&sol)))
        }
        Command::Exact(a) => {
            let (inst, _) = a.input.load()?;
            let opts = ExactOptions {
                scenario_cap: a.scenario_cap,
                gap_tol: a.gap_tol,
                ..ExactOptions::default()
            };
            let sol: ExactSolution = solve_exact(&inst, &opts)?;
            println!("objective={:?}", sol.objective);
            println!("lambda={:?}", sol.lambda);
            println!("scenario_count={}", sol.scenario_count);
            println!("x1_binary={:?}", sol.x1.binary);
            write_out(&a.out, &to_json(&sol))
        }
        Command::Evaluate(a) => {
            let inst: Instance = from_json(&read_text(&a.instance)?, "instance")?;
            inst.validate()?;
            let sol: AnySolution = from_json(&read_text(&a.solution)?, "solution")?;
            let scen = parse_samples_csv(&read_text(&a.scenarios)?, &inst.support)?;
            let x1 = sol.x1.to_vec();
            if x1.len() != inst.n1() {
                return Err(Error::Input(format!("solution has {} first-stage entries, instance needs {}", x1.len(), inst.n1())));
            }
            let rep = out_of_sample(&x1, &inst, &scen, a.threads)?;
            println!("mean_cost={:?}", rep.mean_cost);
            println!("fixed_cost={:?}", rep.fixed_cost);
            println!("scenario_count={}", rep.scenario_count);
            println!("infeasible_count={}", rep.infeasible_count);
            write_out(&a.out, &rep.to_csv())
        }
        Command::Holdout(a) => {
            let (inst, st) = a.input.load()?;
            let opts = HoldoutOptions {
                split: a.split,
                seed: a.seed,
                beta: (!a.plain).then_some(a.beta),
                threads: a.solver.threads,
                affine: a.solver.affine()?,
            };
            let res = holdout_select(&inst, &st, &a.grid, &opts)?;
            print!("{}", res.to_csv());
            println!("selected_epsilon={:?}", res.epsilon);
            write_out(&a.out, &res.to_csv())
        }
        Command::UcBuild(a) => {
            let (sys, samples) = ingest_uc(&read_text(&a.system)?, &read_text(&a.samples)?)?;
            let (inst, st) = build_uc_instance(&sys, &samples, a.epsilon)?;
            write_atomic(&a.out, to_json(&inst).as_bytes())?;
            write_out(&a.structure_out, &to_json(&st))?;
            println!("n1={} n2={} m={} rows={} parameters={}", inst.n1(), inst.n2(), inst.m(), inst.num_rows(), st.parameter_count);
            Ok(())
        }
        Command::UcDemo(a) => uc_demo(&a),
        Command::BenchScaling(a) => bench(&a),
        Command::Gap(a) => {
            let (inst, st) = a.input.load()?;
            let ex = solve_exact(
                &inst,
                &ExactOptions {
                    scenario_cap: a.scenario_cap,
                    ..ExactOptions::default()
                },
            )?;
            let affine = match solve_affine(&inst, &st, &a.solver.affine()?) {
                Ok(s) => s.objective,
                Err(Error::Infeasible(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            println!("affine_objective={affine:?}");
            println!("exact_objective={:?}", ex.objective);
            println!("gap={:?}", affine - ex.objective);
            Ok(())
        }
    }
}

/// Forecast-error sampler of the demo: centered at zero, scale 15 % of each
/// renewable capacity, right-skewed.
pub fn uc_error_sampler(sys: &UcSystem) -> MixtureSampler {
    MixtureSampler {
        center: vec![0.0; sys.uncertainty_dim()],
        scale: sys
            .buses
            .iter()
            .flat_map(|b| vec![0.15 * b.renewable_capacity; sys.periods])
            .collect(),
        skew: 1.0,
    }
}

fn uc_demo(a: &UcDemoArgs) -> Result<()> {
    let profile: ToyProfile = a.profile.parse()?;
    let sys = toy_system(profile, a.seed);
    let support = sys.support();
    let sampler = uc_error_sampler(&sys);
    let samples = sampler.draw(&mut rng(a.seed), &support, a.num_samples);
    let eval = sampler.draw(&mut rng(a.seed.wrapping_add(1)), &support, a.eval_scenarios);
    let opts = a.solver.affine()?;
    let (base, st) = build_uc_instance(&sys, &samples, 0.0)?;
    let out = &a.out;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let epsilon = match a.epsilon {
        Some(e) => e,
        None => {
            let hold = holdout_select(
                &base,
                &st,
                &a.grid,
                &HoldoutOptions {
                    seed: a.seed,
                    beta: Some(a.beta),
                    threads: a.solver.threads,
                    affine: opts.clone(),
                    ..HoldoutOptions::default()
                },
            )?;
            write_atomic(&out.join("holdout.csv"), hold.to_csv().as_bytes())?;
            hold.epsilon
        }
    };
    let inst = base.with_epsilon(epsilon);
    let sol = solve_affine_refined(&inst, &st, a.beta, &opts)?;
    let rep = out_of_sample(&sol.x1_vec(), &inst, &eval, a.solver.threads)?;
    let mut max_residual = 0.0f64;
    for (x2, xi) in recourse_solutions(&sol.x1_vec(), &inst, &eval, a.solver.threads)?
        .iter()
        .zip(eval.points())
        .filter_map(|(s, xi)| s.as_ref().map(|s| (&s.0, xi)))
    {
        for r in balance_residuals(&sys, x2, xi) {
            max_residual = max_residual.max(r.abs());
        }
    }
    let robust = solve_robust(&inst, &st, &opts)?;
    let robust_rep = out_of_sample(&robust.x1_vec(), &inst, &eval, a.solver.threads)?;

    write_atomic(&out.join("system.json"), emit_uc(&sys).as_bytes())?;
    write_atomic(&out.join("samples.csv"), samples_csv(&samples, &sample_header(&sys)).as_bytes())?;
    write_atomic(&out.join("solution.json"), to_json(&SolutionDocument::from(&sol)).as_bytes())?;
    write_atomic(&out.join("trace.csv"), trace_csv(&sol.trace.history).as_bytes())?;
    write_atomic(&out.join("evaluation.csv"), rep.to_csv().as_bytes())?;

    println!("profile={} seed={} samples={} eval_scenarios={}", a.profile, a.seed, a.num_samples, a.eval_scenarios);
    println!("epsilon={epsilon:?}");
    println!("objective={:?}", sol.objective);
    println!("iterations={}", sol.iterations());
    println!("oos_mean_cost={:?}", rep.mean_cost);
    println!("infeasible_count={}", rep.infeasible_count);
    println!("max_balance_residual={max_residual:e}");
    println!("robust_objective={:?}", robust.objective);
    println!("robust_oos_mean_cost={:?}", robust_rep.mean_cost);
    if rep.infeasible_count > 0 {
        return Err(Error::Numerical(format!(
            "certified solution is infeasible on {} evaluation scenarios",
            rep.infeasible_count
        )));
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let profile: ToyProfile = a.profile.parse()?;
    if a.n.iter().any(|&n| n < 2) {
        return Err(Error::Input("every N must be at least 2".into()));
    }
    let sys = toy_system(profile, a.seed);
    let support = sys.support();
    let beta = a.beta.unwrap_or_else(|| a.n.iter().copied().max().unwrap_or(100).max(100) as f64);
    let sampler = uc_error_sampler(&sys);
    let family = |n: usize| {
        let samples = if a.random {
            sampler.draw(&mut rng(a.seed), &support, n)
        } else {
            matched_samples(&mut rng(a.seed), &support, n)
        };
        build_uc_instance(&sys, &samples, a.epsilon)
    };
    let rows = scaling_experiment(family, &a.n, a.repeats, beta, &a.solver.affine()?)?;
    let table = scaling_csv(&rows);
    print!("{table}");
    write_out(&a.out, &table)
}
