use std::time::Instant;

use super::config::{schedule_eps, ErrorSchedule, SolverConfig};
use super::momentum::{extrapolate, MomentumState};
use super::trace::{Branch, IterationRecord, IterationTrace, ProxCall};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::objectives::{MaskedLogisticLoss, SmoothObjective};
use crate::prox::{InnerOptions, MatrixRankConstraint, ProximalTerm, WarmStart};
use crate::regularizers::RankConstraint;

/// A point with `f = g + h` and `∇g` evaluated there.
struct Evaluated {
    x: DenseVector,
    f: f64,
    grad: DenseVector,
}

struct Step {
    point: Evaluated,
    call: ProxCall,
    heuristic: bool,
}

struct Problem<'a, G: ?Sized, H: ?Sized> {
    g: &'a G,
    h: &'a H,
    gamma: f64,
    exact: bool,
    inner: InnerOptions,
}

impl<G: SmoothObjective + ?Sized, H: ProximalTerm + ?Sized> Problem<'_, G, H> {
    fn evaluate(&self, x: DenseVector) -> Result<Evaluated> {
        let (gv, grad) = self.g.value_and_gradient(&x)?;
        let f = gv + self.h.value(&x)?;
        Ok(Evaluated { x, f, grad })
    }

    /// A (possibly inexact) prox of `h` at `from − γ∇g(from)`.
    fn prox_step(
        &self,
        from: &DenseVector,
        grad: &DenseVector,
        eps: f64,
        warm: &mut WarmStart,
    ) -> Result<Step> {
        let mut anchor = from.clone();
        anchor.axpy(-self.gamma, grad);
        let res = if self.exact {
            self.h.prox_exact(&anchor, self.gamma)?
        } else {
            self.h.prox_inexact(&anchor, self.gamma, eps, &self.inner, warm)?
        };
        if res.warm != WarmStart::None {
            *warm = res.warm;
        }
        let step_sq = res.point.distance_sq(from);
        let point = self.evaluate(res.point)?;
        if !point.f.is_finite() {
            return Err(Error::NonFinite(format!("objective evaluated to {}", point.f)));
        }
        Ok(Step {
            call: ProxCall {
                objective: point.f,
                step_sq,
                certified_eps: res.certified_eps,
                inner_iters: res.inner_iters,
                budget_exhausted: !res.converged,
            },
            heuristic: res.heuristic,
            point,
        })
    }
}

struct Recorder {
    start: Instant,
    trace: IterationTrace,
    keep_iterates: bool,
    tolerance: Option<f64>,
    calm: usize,
}

impl Recorder {
    fn new(cfg: &SolverConfig, x0: &Evaluated) -> Self {
        Self {
            start: Instant::now(),
            trace: IterationTrace {
                initial_objective: x0.f,
                records: Vec::with_capacity(cfg.max_iters),
                final_point: x0.x.clone(),
                iterates: Vec::new(),
                failure: None,
            },
            keep_iterates: cfg.keep_iterates,
            tolerance: cfg.objective_tolerance,
            calm: 0,
        }
    }

    /// Appends the record; returns `false` when the early-stop rule fires.
    fn push(&mut self, mut rec: IterationRecord, x: &DenseVector) -> bool {
        let prev = self.trace.final_objective();
        rec.wall_seconds = self.start.elapsed().as_secs_f64();
        if let Some(tol) = self.tolerance {
            if (rec.objective - prev).abs() <= tol {
                self.calm += 1;
            } else {
                self.calm = 0;
            }
        }
        self.trace.records.push(rec);
        self.trace.final_point = x.clone();
        if self.keep_iterates {
            self.trace.iterates.push(x.clone());
        }
        self.calm < 5
    }

    fn fail(mut self, err: Error) -> IterationTrace {
        self.trace.failure = Some(format!("iteration {}: {err}", self.trace.records.len() + 1));
        self.trace
    }
}

fn preflight<G: SmoothObjective + ?Sized>(g: &G, x0: &DenseVector, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    check_dim(g.dim(), x0.len())?;
    let l = g
        .lipschitz()
        .ok_or_else(|| Error::StepSize("objective provides no Lipschitz bound".into()))?;
    if (cfg.gamma * l).is_nan() || cfg.gamma * l >= 1.0 {
        return Err(Error::StepSize(format!(
            "gamma = {} must be below 1/L = {}",
            cfg.gamma,
            1.0 / l
        )));
    }
    Ok(())
}

fn setup<'a, G, H>(
    g: &'a G,
    h: &'a H,
    x0: &DenseVector,
    cfg: &SolverConfig,
) -> Result<(Problem<'a, G, H>, std::result::Result<Evaluated, Error>)>
where
    G: SmoothObjective + ?Sized,
    H: ProximalTerm + ?Sized,
{
    preflight(g, x0, cfg)?;
    let problem = Problem {
        g,
        h,
        gamma: cfg.gamma,
        exact: cfg.effective_schedule() == ErrorSchedule::Exact,
        inner: InnerOptions { seed: cfg.seed, ..cfg.inner },
    };
    let start = problem.evaluate(x0.clone()).and_then(|e| {
        if e.f.is_finite() {
            Ok(e)
        } else {
            Err(Error::NonFinite(format!("objective at x0 is {}", e.f)))
        }
    });
    Ok((problem, start))
}

fn failed_at_start(x0: &DenseVector, err: Error) -> IterationTrace {
    IterationTrace {
        initial_objective: f64::NAN,
        records: Vec::new(),
        final_point: x0.clone(),
        iterates: Vec::new(),
        failure: Some(format!("initial point: {err}")),
    }
}

/// Runs the algorithm selected by `cfg.kind`.
pub fn solve<G, H>(g: &G, h: &H, x0: &DenseVector, cfg: &SolverConfig) -> Result<IterationTrace>
where
    G: SmoothObjective + ?Sized,
    H: ProximalTerm + ?Sized,
{
    if !cfg.kind.is_accelerated() {
        run_ipg(g, h, x0, cfg)
    } else if cfg.kind.is_nonmonotone() {
        run_nmaipg(g, h, x0, cfg)
    } else {
        run_aipg(g, h, x0, cfg)
    }
}

/// Inexact proximal gradient: `x_k ∈ Prox^{ε_k}_{γh}(x_{k−1} − γ∇g(x_{k−1}))`.
///
/// Precondition failures (bad config, missing Lipschitz bound, `γ ≥ 1/L`) are
/// returned as errors; failures during the run are stored in
/// [`IterationTrace::failure`] next to the iterations completed so far.
pub fn run_ipg<G, H>(g: &G, h: &H, x0: &DenseVector, cfg: &SolverConfig) -> Result<IterationTrace>
where
    G: SmoothObjective + ?Sized,
    H: ProximalTerm + ?Sized,
{
    let (problem, start) = setup(g, h, x0, cfg)?;
    let mut cur = match start {
        Ok(e) => e,
        Err(err) => return Ok(failed_at_start(x0, err)),
    };
    let schedule = cfg.effective_schedule();
    let mut rec = Recorder::new(cfg, &cur);
    let mut warm = WarmStart::None;
    let mut prev_disp = 0.0;
    for k in 1..=cfg.max_iters {
        let eps = schedule_eps(schedule, k, prev_disp);
        let step = match problem.prox_step(&cur.x, &cur.grad, eps, &mut warm) {
            Ok(s) => s,
            Err(err) => return Ok(rec.fail(err)),
        };
        prev_disp = step.call.step_sq;
        let record = IterationRecord {
            k,
            objective: step.point.f,
            step_norm_sq: step.call.step_sq,
            eps_k: eps,
            certified_eps: step.call.certified_eps,
            inner_iters: step.call.inner_iters,
            branch: Branch::Plain,
            wall_seconds: 0.0,
            budget_exhausted: step.call.budget_exhausted,
            heuristic: step.heuristic,
            primary: step.call,
            monitor: None,
        };
        cur = step.point;
        if !rec.push(record, &cur.x) {
            break;
        }
    }
    Ok(rec.trace)
}

/// Accelerated inexact proximal gradient with a monitor step: each iteration
/// computes `z` from the extrapolated `y_k` and `v` from `x_k`, keeping the one
/// with the lower objective (`z` on ties).
pub fn run_aipg<G, H>(g: &G, h: &H, x0: &DenseVector, cfg: &SolverConfig) -> Result<IterationTrace>
where
    G: SmoothObjective + ?Sized,
    H: ProximalTerm + ?Sized,
{
    accelerated(g, h, x0, cfg, None)
}

/// Non-monotone variant: `z` is accepted without computing `v` whenever
/// `f(z) ≤ f(x_k) − (δ/2)‖z − y_k‖²`.
pub fn run_nmaipg<G, H>(g: &G, h: &H, x0: &DenseVector, cfg: &SolverConfig) -> Result<IterationTrace>
where
    G: SmoothObjective + ?Sized,
    H: ProximalTerm + ?Sized,
{
    accelerated(g, h, x0, cfg, Some(cfg.delta))
}

fn accelerated<G, H>(
    g: &G,
    h: &H,
    x0: &DenseVector,
    cfg: &SolverConfig,
    delta: Option<f64>,
) -> Result<IterationTrace>
where
    G: SmoothObjective + ?Sized,
    H: ProximalTerm + ?Sized,
{
    let (problem, start) = setup(g, h, x0, cfg)?;
    let mut cur = match start {
        Ok(e) => e,
        Err(err) => return Ok(failed_at_start(x0, err)),
    };
    let schedule = cfg.effective_schedule();
    let mut rec = Recorder::new(cfg, &cur);
    let mut momentum = MomentumState::new(x0.clone());
    let mut warm_z = WarmStart::None;
    let mut warm_v = WarmStart::None;
    let mut prev_disp = 0.0;
    for k in 1..=cfg.max_iters {
        let eps = schedule_eps(schedule, k, prev_disp);
        let outcome = (|| -> Result<(Evaluated, DenseVector, IterationRecord)> {
            let y = extrapolate(&momentum);
            let y_grad = if y == cur.x {
                cur.grad.clone()
            } else {
                g.value_and_gradient(&y)?.1
            };
            let z = problem.prox_step(&y, &y_grad, eps, &mut warm_z)?;
            let z_point = z.point.x.clone();
            let shortcut = delta.is_some_and(|d| z.point.f <= cur.f - 0.5 * d * z.call.step_sq);
            let (next, branch, monitor, heuristic) = if shortcut {
                (z.point, Branch::Shortcut, None, z.heuristic)
            } else {
                let v = problem.prox_step(&cur.x, &cur.grad, eps, &mut warm_v)?;
                let heuristic = z.heuristic || v.heuristic;
                if z.point.f <= v.point.f {
                    (z.point, Branch::ZAccepted, Some(v.call), heuristic)
                } else {
                    (v.point, Branch::VAccepted, Some(v.call), heuristic)
                }
            };
            let step_norm_sq = next.x.distance_sq(&cur.x);
            let record = IterationRecord {
                k,
                objective: next.f,
                step_norm_sq,
                eps_k: eps,
                certified_eps: monitor.map_or(z.call.certified_eps, |m| {
                    m.certified_eps.max(z.call.certified_eps)
                }),
                inner_iters: z.call.inner_iters + monitor.map_or(0, |m| m.inner_iters),
                branch,
                wall_seconds: 0.0,
                budget_exhausted: z.call.budget_exhausted
                    || monitor.is_some_and(|m| m.budget_exhausted),
                heuristic,
                primary: z.call,
                monitor,
            };
            Ok((next, z_point, record))
        })();
        let (next, z_point, record) = match outcome {
            Ok(o) => o,
            Err(err) => return Ok(rec.fail(err)),
        };
        prev_disp = record.monitor.map_or(record.step_norm_sq, |m| m.step_sq);
        momentum.advance(next.x.clone(), z_point);
        cur = next;
        if !rec.push(record, &cur.x) {
            break;
        }
    }
    Ok(rec.trace)
}

/// Runs `cfg.kind` on the rank-constrained logistic problem with matrix
/// iterates. Exact schedules project with a full SVD; inexact ones use
/// `power_iters` warm-started power iterations per projection.
pub fn run_matrix_solver(
    g: &MaskedLogisticLoss,
    c: RankConstraint,
    x0: &DenseMatrix,
    cfg: &SolverConfig,
    power_iters: usize,
) -> Result<IterationTrace> {
    let (rows, cols) = g.shape();
    if x0.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch { expected: rows * cols, got: x0.rows() * x0.cols() });
    }
    let h = MatrixRankConstraint::new(c, rows, cols, power_iters)?;
    solve(g, &h, &x0.to_vector(), cfg)
}
