use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iprox::objectives::{CorrentropyLoss, MaskedLogisticLoss, SmoothObjective, SquareLoss};
use iprox::prox::{MatrixRankConstraint, ProximalTerm};
use iprox::regularizers::{
    L1Penalty, OscarPenalty, RankConstraint, TraceLassoPenalty, ZeroRegularizer,
};
use iprox::solvers::{solve, ErrorSchedule, SolverConfig, SolverKind};
use iprox::DenseVector;
use iprox_bench::generate::{
    gen_correlated_design, gen_grouped_regression, gen_signed_lowrank, robust_scale,
};
use iprox_bench::io::{
    load_regression_csv, load_sign_triplets, write_regression_csv, write_sign_triplets,
};
use iprox_bench::{
    parse_schedule, run_experiment, Application, BenchError, DataSource, ExperimentOutcome,
    ExperimentSpec, GenParams, ModelParams, TraceFile,
};

#[derive(Parser)]
#[command(name = "iprox", version, about = "Inexact proximal gradient benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run solvers on one problem and write their convergence traces as CSV.
    Bench(BenchArgs),
    /// Write a generated dataset to disk.
    Gen(GenArgs),
    /// Run solvers on a dataset file with a chosen loss and regularizer.
    Solve(SolveArgs),
}

#[derive(Args)]
struct GenFlags {
    /// Seed of the data generator and of randomized inner solvers.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    outlier_frac: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    users: Option<usize>,
    /// Rank of the generated sign matrix.
    #[arg(long)]
    true_rank: Option<usize>,
    #[arg(long)]
    obs_frac: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
}

impl GenFlags {
    fn params(&self, app: Application) -> GenParams {
        let d = GenParams::defaults(app);
        GenParams {
            seed: self.seed,
            n: self.n.unwrap_or(d.n),
            d: self.d.unwrap_or(d.d),
            n_groups: self.groups.unwrap_or(d.n_groups),
            outlier_frac: self.outlier_frac.unwrap_or(d.outlier_frac),
            noise_sd: self.noise_sd.unwrap_or(d.noise_sd),
            rho: self.rho.unwrap_or(d.rho),
            sparsity: self.sparsity.unwrap_or(d.sparsity),
            n_users: self.users.unwrap_or(d.n_users),
            rank: self.true_rank.unwrap_or(d.rank),
            obs_frac: self.obs_frac.unwrap_or(d.obs_frac),
            margin: self.margin.unwrap_or(d.margin),
        }
    }
}

#[derive(Args)]
struct SolverFlags {
    /// Solver to run; repeat for several.
    #[arg(long = "solver", required = true)]
    solvers: Vec<SolverKind>,
    /// Step size; defaults to `step_fraction / L`.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    step_fraction: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// exact | const:<c> | poly:<c>,<p> | adaptive:<alpha>[,<floor>]
    #[arg(long, default_value = "poly:1e-2,2", value_parser = parse_schedule_arg)]
    eps: ErrorSchedule,
    #[arg(long, default_value_t = 0.6)]
    delta: f64,
    /// Inner iteration budget per proximal call.
    #[arg(long, default_value_t = 10_000)]
    max_inner: usize,
    /// Early stop once the objective changes by at most this much 5 times in a row.
    #[arg(long)]
    tol: Option<f64>,
    /// Run the solvers concurrently.
    #[arg(long)]
    parallel: bool,
}

fn parse_schedule_arg(s: &str) -> Result<ErrorSchedule, String> {
    parse_schedule(s).map_err(|e| e.to_string())
}

impl SolverFlags {
    fn configs(&self, seed: u64) -> Vec<SolverConfig> {
        self.solvers
            .iter()
            .map(|&kind| {
                let mut cfg = SolverConfig::new(kind, self.gamma.unwrap_or(f64::NAN), self.max_iters)
                    .with_schedule(self.eps);
                cfg.delta = self.delta;
                cfg.seed = seed;
                cfg.objective_tolerance = self.tol;
                cfg.inner.max_inner = self.max_inner;
                cfg
            })
            .collect()
    }

    fn step_fraction(&self) -> Option<f64> {
        self.gamma.is_none().then_some(self.step_fraction)
    }
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Trace-Lasso or L1 weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Correntropy bandwidth.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Rank bound for link prediction.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 100)]
    power_iters: usize,
    /// Keep regression targets in their original units.
    #[arg(long)]
    no_scale: bool,
}

impl ModelFlags {
    fn params(&self) -> ModelParams {
        ModelParams {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda: self.lambda,
            sigma: self.sigma,
            rank: self.rank,
            power_iters: self.power_iters,
            scale_targets: !self.no_scale,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    application: Application,
    /// Load the data from a file instead of generating it.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    solver: SolverFlags,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args)]
struct GenArgs {
    application: Application,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    gen: GenFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loss {
    Correntropy,
    Square,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reg {
    None,
    L1,
    Oscar,
    Tracelasso,
    Rank,
}

#[derive(Args)]
struct SolveArgs {
    /// Regression CSV, or a sign-triplet file for the logistic loss.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    loss: Loss,
    #[arg(long, value_enum)]
    reg: Reg,
    /// Write the traces here instead of printing a summary only.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
    #[command(flatten)]
    model: ModelFlags,
}

fn summarize(runs: impl Iterator<Item = (String, iprox::solvers::IterationTrace)>) -> bool {
    let mut ok = true;
    for (run_id, trace) in runs {
        let inner: usize = trace.records.iter().map(|r| r.inner_iters).sum();
        println!(
            "{run_id}: {} iterations, objective {:.10e} -> {:.10e}, {inner} inner iterations",
            trace.records.len(),
            trace.initial_objective,
            trace.final_objective()
        );
        if let Some(msg) = &trace.failure {
            eprintln!("{run_id} aborted: {msg}");
            ok = false;
        }
    }
    ok
}

fn bench(args: BenchArgs) -> Result<bool, BenchError> {
    let source = match args.data {
        Some(path) => DataSource::File(path),
        None => DataSource::Generated(args.gen.params(args.application)),
    };
    let spec = ExperimentSpec {
        application: args.application,
        source,
        model: args.model.params(),
        runs: args.solver.configs(args.gen.seed),
        step_fraction: args.solver.step_fraction(),
        parallel: args.solver.parallel,
        output: Some(args.out),
    };
    let ExperimentOutcome { runs, .. } = run_experiment(&spec)?;
    Ok(summarize(runs.into_iter().map(|r| (r.run_id, r.trace))))
}

fn generate(args: GenArgs) -> Result<bool, BenchError> {
    let p = args.gen.params(args.application);
    match args.application {
        Application::LinkPrediction => {
            let inst = gen_signed_lowrank(p.n_users, p.rank, p.obs_frac, p.margin, p.seed)?;
            write_sign_triplets(&args.out, &inst.observed)?;
        }
        Application::RobustOscar => {
            let inst = gen_grouped_regression(p.n, p.d, p.n_groups, p.outlier_frac, p.noise_sd, p.seed)?;
            write_regression_csv(&args.out, &inst.dataset)?;
        }
        Application::RobustTraceLasso | Application::LassoBaseline => {
            let inst = gen_correlated_design(p.n, p.d, p.rho, p.sparsity, p.noise_sd, p.outlier_frac, p.seed)?;
            write_regression_csv(&args.out, &inst.dataset)?;
        }
    }
    println!("wrote {}", args.out.display());
    Ok(true)
}

fn solve_file(args: SolveArgs) -> Result<bool, BenchError> {
    let model = args.model.params();
    let (g, h): (Box<dyn SmoothObjective>, Box<dyn ProximalTerm>) = match args.loss {
        Loss::Logistic => {
            let observed = load_sign_triplets(&args.data)?;
            let n = observed.n_users();
            let h: Box<dyn ProximalTerm> = match args.reg {
                Reg::None => Box::new(ZeroRegularizer),
                Reg::Rank => {
                    let r = model.rank.ok_or_else(|| {
                        BenchError::InvalidArgument("--reg rank needs --rank".into())
                    })?;
                    Box::new(MatrixRankConstraint::new(RankConstraint::new(r)?, n, n, model.power_iters)?)
                }
                _ => {
                    return Err(BenchError::InvalidArgument(
                        "the logistic loss pairs with --reg rank or none".into(),
                    ))
                }
            };
            (Box::new(MaskedLogisticLoss::new(observed)?), h)
        }
        Loss::Correntropy | Loss::Square => {
            let data = load_regression_csv(&args.data)?;
            let scale = if model.scale_targets { robust_scale(data.targets()) } else { 1.0 };
            let data = data.with_scaled_targets(scale)?;
            let weight = 0.1 / (data.n_samples() as f64).sqrt();
            let h: Box<dyn ProximalTerm> = match args.reg {
                Reg::None => Box::new(ZeroRegularizer),
                Reg::L1 => Box::new(L1Penalty::new(model.lambda.unwrap_or(weight))?),
                Reg::Oscar => Box::new(OscarPenalty::new(
                    model.lambda1.unwrap_or(weight),
                    model.lambda2.unwrap_or(weight),
                )?),
                Reg::Tracelasso => Box::new(TraceLassoPenalty::new(
                    model.lambda.unwrap_or(0.1),
                    data.design().clone(),
                )?),
                Reg::Rank => {
                    return Err(BenchError::InvalidArgument(
                        "the rank constraint needs the logistic loss".into(),
                    ))
                }
            };
            let g: Box<dyn SmoothObjective> = match args.loss {
                Loss::Square => Box::new(SquareLoss::new(data)),
                _ => Box::new(CorrentropyLoss::new(data, model.sigma)?),
            };
            (g, h)
        }
    };
    let l = g
        .lipschitz()
        .ok_or_else(|| BenchError::InvalidArgument("loss has no Lipschitz bound".into()))?;
    let x0 = DenseVector::zeros(g.dim());
    let mut file = TraceFile::default();
    let mut traces = Vec::new();
    for mut cfg in args.solver.configs(args.seed) {
        if args.solver.gamma.is_none() {
            cfg.gamma = if l > 0.0 { args.solver.step_fraction / l } else { 1.0 };
        }
        let trace = solve(&*g, &*h, &x0, &cfg)?;
        file.push_trace(cfg.kind.as_str(), cfg.kind.as_str(), &trace);
        traces.push((cfg.kind.to_string(), trace));
    }
    if let Some(out) = &args.out {
        file.write(out)?;
    }
    Ok(summarize(traces.into_iter()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Gen(a) => generate(a),
        Command::Solve(a) => solve_file(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
