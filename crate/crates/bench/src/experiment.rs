//! Building benchmark problems and running several solvers on them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::thread;

use iprox::objectives::{
    CorrentropyLoss, MaskedLogisticLoss, RegressionDataset, SmoothObjective, SquareLoss,
};
use iprox::prox::{MatrixRankConstraint, ProximalTerm};
use iprox::regularizers::{L1Penalty, OscarPenalty, RankConstraint, TraceLassoPenalty};
use iprox::solvers::{solve, ErrorSchedule, IterationTrace, SolverConfig};
use iprox::DenseVector;

use crate::error::{invalid, BenchError, Result};
use crate::generate::{
    gen_correlated_design, gen_grouped_regression, gen_signed_lowrank, robust_scale,
    RegressionInstance, SignInstance,
};
use crate::io::{load_regression_csv, load_sign_triplets, TraceFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Application {
    /// Correntropy loss with an OSCAR penalty on grouped features.
    RobustOscar,
    /// Masked logistic loss on a sign matrix under a rank constraint.
    LinkPrediction,
    /// Correntropy loss with a trace-Lasso penalty on a correlated design.
    RobustTraceLasso,
    /// Square loss with an L1 penalty.
    LassoBaseline,
}

impl Application {
    pub const ALL: [Application; 4] = [
        Application::RobustOscar,
        Application::LinkPrediction,
        Application::RobustTraceLasso,
        Application::LassoBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Application::RobustOscar => "robust_oscar",
            Application::LinkPrediction => "link_prediction",
            Application::RobustTraceLasso => "robust_tracelasso",
            Application::LassoBaseline => "lasso_baseline",
        }
    }
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Application {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Application::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown application '{s}'")))
    }
}

/// Size and noise parameters of the synthetic generators. Each application
/// reads only the fields its generator takes.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub n_groups: usize,
    pub outlier_frac: f64,
    pub noise_sd: f64,
    pub rho: f64,
    pub sparsity: f64,
    pub n_users: usize,
    pub rank: usize,
    pub obs_frac: f64,
    pub margin: f64,
}

impl GenParams {
    pub fn defaults(app: Application) -> Self {
        let base = Self {
            seed: 7,
            n: 200,
            d: 50,
            n_groups: 5,
            outlier_frac: 0.1,
            noise_sd: 0.1,
            rho: 0.5,
            sparsity: 0.2,
            n_users: 60,
            rank: 3,
            obs_frac: 0.3,
            margin: 1.0,
        };
        match app {
            Application::RobustOscar | Application::LinkPrediction => base,
            Application::RobustTraceLasso => Self { d: 30, rho: 0.8, ..base },
            Application::LassoBaseline => Self { outlier_frac: 0.0, ..base },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Generated(GenParams),
    /// Regression CSV, or a sign-triplet file for link prediction.
    File(PathBuf),
}

/// Model hyperparameters; `None` selects the documented default.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// OSCAR `λ₁` (default `0.1/√n`).
    pub lambda1: Option<f64>,
    /// OSCAR `λ₂` (default `0.1/√n`).
    pub lambda2: Option<f64>,
    /// Trace-Lasso weight (default 0.1) or lasso weight (default `0.1/√n`).
    pub lambda: Option<f64>,
    /// Correntropy bandwidth, applied after target scaling.
    pub sigma: f64,
    /// Rank bound for link prediction (default: the generator's rank).
    pub rank: Option<usize>,
    /// Power iterations per inexact rank projection.
    pub power_iters: usize,
    /// Divide regression targets by their robust scale before fitting.
    pub scale_targets: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda1: None,
            lambda2: None,
            lambda: None,
            sigma: 1.0,
            rank: None,
            power_iters: 100,
            scale_targets: true,
        }
    }
}

/// A ready-to-solve instance. Matrix problems use the row-major flattening of
/// their `matrix_shape` variable.
pub struct BuiltProblem {
    pub objective: Box<dyn SmoothObjective + Send + Sync>,
    pub regularizer: Box<dyn ProximalTerm + Send + Sync>,
    pub x0: DenseVector,
    pub lipschitz: f64,
    pub matrix_shape: Option<(usize, usize)>,
    /// Generating coefficients, in the units of the scaled targets.
    pub regression_truth: Option<DenseVector>,
    pub sign_instance: Option<SignInstance>,
    /// Factor the targets were divided by (1 when unscaled).
    pub target_scale: f64,
}

impl fmt::Debug for BuiltProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltProblem")
            .field("regularizer", &self.regularizer.name())
            .field("dim", &self.x0.len())
            .field("lipschitz", &self.lipschitz)
            .field("matrix_shape", &self.matrix_shape)
            .finish_non_exhaustive()
    }
}

fn default_weight(n: usize) -> f64 {
    0.1 / (n as f64).sqrt()
}

fn regression_data(
    app: Application,
    source: &DataSource,
) -> Result<(RegressionDataset, Option<DenseVector>)> {
    let inst = match source {
        DataSource::File(path) => return Ok((load_regression_csv(path)?, None)),
        DataSource::Generated(p) => match app {
            Application::RobustOscar => {
                gen_grouped_regression(p.n, p.d, p.n_groups, p.outlier_frac, p.noise_sd, p.seed)?
            }
            _ => gen_correlated_design(
                p.n,
                p.d,
                p.rho,
                p.sparsity,
                p.noise_sd,
                p.outlier_frac,
                p.seed,
            )?,
        },
    };
    let RegressionInstance { dataset, truth } = inst;
    Ok((dataset, Some(truth)))
}

fn finish(
    objective: Box<dyn SmoothObjective + Send + Sync>,
    regularizer: Box<dyn ProximalTerm + Send + Sync>,
) -> Result<BuiltProblem> {
    let lipschitz = objective
        .lipschitz()
        .ok_or_else(|| invalid("objective has no Lipschitz bound"))?;
    Ok(BuiltProblem {
        x0: DenseVector::zeros(objective.dim()),
        objective,
        regularizer,
        lipschitz,
        matrix_shape: None,
        regression_truth: None,
        sign_instance: None,
        target_scale: 1.0,
    })
}

/// Materializes the data, loss and regularizer of an application. The initial
/// point is always zero.
pub fn build_problem(app: Application, source: &DataSource, model: &ModelParams) -> Result<BuiltProblem> {
    if app == Application::LinkPrediction {
        let (observed, instance, gen_rank) = match source {
            DataSource::File(path) => (load_sign_triplets(path)?, None, None),
            DataSource::Generated(p) => {
                let inst = gen_signed_lowrank(p.n_users, p.rank, p.obs_frac, p.margin, p.seed)?;
                (inst.observed.clone(), Some(inst), Some(p.rank))
            }
        };
        let rank = model
            .rank
            .or(gen_rank)
            .ok_or_else(|| invalid("link prediction from a file needs an explicit rank"))?;
        let n = observed.n_users();
        let h = MatrixRankConstraint::new(RankConstraint::new(rank)?, n, n, model.power_iters)?;
        let mut built = finish(Box::new(MaskedLogisticLoss::new(observed)?), Box::new(h))?;
        built.matrix_shape = Some((n, n));
        built.sign_instance = instance;
        return Ok(built);
    }

    let (data, truth) = regression_data(app, source)?;
    let scale = if model.scale_targets { robust_scale(data.targets()) } else { 1.0 };
    let data = data.with_scaled_targets(scale)?;
    let n = data.n_samples();
    let mut built = match app {
        Application::RobustOscar => {
            let p = OscarPenalty::new(
                model.lambda1.unwrap_or(default_weight(n)),
                model.lambda2.unwrap_or(default_weight(n)),
            )?;
            finish(Box::new(CorrentropyLoss::new(data, model.sigma)?), Box::new(p))?
        }
        Application::RobustTraceLasso => {
            let p = TraceLassoPenalty::new(model.lambda.unwrap_or(0.1), data.design().clone())?;
            finish(Box::new(CorrentropyLoss::new(data, model.sigma)?), Box::new(p))?
        }
        Application::LassoBaseline => {
            let p = L1Penalty::new(model.lambda.unwrap_or(default_weight(n)))?;
            finish(Box::new(SquareLoss::new(data)), Box::new(p))?
        }
        Application::LinkPrediction => unreachable!("handled above"),
    };
    built.regression_truth = truth.map(|t| t.scaled(1.0 / scale));
    built.target_scale = scale;
    Ok(built)
}

/// Parses `exact`, `const:<c>`, `poly:<c>,<p>` or `adaptive:<alpha>[,<floor>]`
/// (floor defaults to `1e-12`).
pub fn parse_schedule(s: &str) -> Result<ErrorSchedule> {
    let bad = || invalid(format!("cannot parse error schedule '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let schedule = match s.split_once(':') {
        None if s == "exact" => ErrorSchedule::Exact,
        Some(("const", c)) => ErrorSchedule::Constant(num(c)?),
        Some(("poly", rest)) => {
            let (c, p) = rest.split_once(',').ok_or_else(bad)?;
            ErrorSchedule::Polynomial { c: num(c)?, p: num(p)? }
        }
        Some(("adaptive", rest)) => match rest.split_once(',') {
            Some((a, f)) => ErrorSchedule::Adaptive { alpha: num(a)?, floor: num(f)? },
            None => ErrorSchedule::Adaptive { alpha: num(rest)?, floor: 1e-12 },
        },
        _ => return Err(bad()),
    };
    schedule.validate()?;
    Ok(schedule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub application: Application,
    pub source: DataSource,
    pub model: ModelParams,
    /// One run per config, all from the same data and initial point.
    pub runs: Vec<SolverConfig>,
    /// When set, every run uses `gamma = step_fraction / L`.
    pub step_fraction: Option<f64>,
    /// Run the solvers on separate threads.
    pub parallel: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(application: Application, runs: Vec<SolverConfig>) -> Self {
        Self {
            application,
            source: DataSource::Generated(GenParams::defaults(application)),
            model: ModelParams::default(),
            runs,
            step_fraction: None,
            parallel: false,
            output: None,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run_id: String,
    pub config: SolverConfig,
    pub trace: IterationTrace,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub problem: BuiltProblem,
    pub runs: Vec<RunOutcome>,
    pub trace_file: TraceFile,
}

impl ExperimentOutcome {
    /// `(run_id, message)` of every aborted run.
    pub fn failures(&self) -> Vec<(&str, &str)> {
        self.runs
            .iter()
            .filter_map(|r| r.trace.failure.as_deref().map(|m| (r.run_id.as_str(), m)))
            .collect()
    }
}

fn run_ids(runs: &[SolverConfig]) -> Vec<String> {
    runs.iter()
        .enumerate()
        .map(|(i, cfg)| {
            let name = cfg.kind.as_str();
            let total = runs.iter().filter(|c| c.kind == cfg.kind).count();
            if total == 1 {
                name.to_string()
            } else {
                let nth = runs[..i].iter().filter(|c| c.kind == cfg.kind).count();
                format!("{name}#{}", nth + 1)
            }
        })
        .collect()
}

/// Runs every configured solver on one problem and assembles the trace file
/// (written to `spec.output` when set). Aborted runs keep their partial traces
/// and are reported by [`ExperimentOutcome::failures`].
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    if spec.runs.is_empty() {
        return Err(invalid("an experiment needs at least one solver"));
    }
    let problem = build_problem(spec.application, &spec.source, &spec.model)?;
    let mut configs = spec.runs.clone();
    if let Some(frac) = spec.step_fraction {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(invalid(format!("step fraction must lie in (0, 1), got {frac}")));
        }
        let gamma = if problem.lipschitz > 0.0 { frac / problem.lipschitz } else { 1.0 };
        configs.iter_mut().for_each(|c| c.gamma = gamma);
    }
    let solve_one = |cfg: &SolverConfig| {
        solve(&*problem.objective, &*problem.regularizer, &problem.x0, cfg)
    };
    let results: Vec<iprox::Result<IterationTrace>> = if spec.parallel && configs.len() > 1 {
        thread::scope(|s| {
            let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || solve_one(c))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        })
    } else {
        configs.iter().map(solve_one).collect()
    };

    let mut trace_file = TraceFile::default();
    let mut runs = Vec::with_capacity(configs.len());
    for ((run_id, config), result) in run_ids(&configs).into_iter().zip(configs).zip(results) {
        let trace = result?;
        trace_file.push_trace(&run_id, config.kind.as_str(), &trace);
        runs.push(RunOutcome { run_id, config, trace });
    }
    if let Some(path) = &spec.output {
        trace_file.write(path)?;
    }
    Ok(ExperimentOutcome { problem, runs, trace_file })
}

#[cfg(test)]
mod tests {
    use super::*;
    use iprox::solvers::SolverKind;

    #[test]
    fn schedules_parse() {
        assert_eq!(parse_schedule("exact").unwrap(), ErrorSchedule::Exact);
        assert_eq!(parse_schedule("const:0.5").unwrap(), ErrorSchedule::Constant(0.5));
        assert_eq!(
            parse_schedule("poly:1e-2,2").unwrap(),
            ErrorSchedule::Polynomial { c: 1e-2, p: 2.0 }
        );
        assert_eq!(
            parse_schedule("adaptive:0.1").unwrap(),
            ErrorSchedule::Adaptive { alpha: 0.1, floor: 1e-12 }
        );
        for bad in ["", "const:", "const:-1", "poly:1", "linear:1", "adaptive:0.1,0"] {
            assert!(parse_schedule(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn application_names() {
        for a in Application::ALL {
            assert_eq!(a.as_str().parse::<Application>().unwrap(), a);
        }
        assert_eq!("robust-oscar".parse::<Application>().unwrap(), Application::RobustOscar);
    }

    #[test]
    fn run_ids_disambiguate() {
        let c = |k| SolverConfig::new(k, 0.1, 1);
        let ids = run_ids(&[c(SolverKind::Pg), c(SolverKind::Ipg), c(SolverKind::Pg)]);
        assert_eq!(ids, ["pg#1", "ipg", "pg#2"]);
    }

    #[test]
    fn empty_spec_rejected() {
        assert!(run_experiment(&ExperimentSpec::new(Application::RobustOscar, vec![])).is_err());
    }
}
