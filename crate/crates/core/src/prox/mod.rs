//! Exact and inexact proximal operators.
//!
//! For a step `γ > 0` and anchor `y`, the proximal subproblem is
//!
//! ```text
//! Q(z) = ‖z − y‖² / (2γ) + h(z)
//! ```
//!
//! An inexact proximal point is any `z` with `Q(z) ≤ min Q + ε`. Every
//! [`ProxResult`] carries `certified_eps`, an upper bound on `Q(point) − min Q`
//! computed from a lower bound on `min Q` (a dual value or a strong-convexity
//! bound), never from the unknown optimum itself.

mod dual;
mod oscar;
mod rank;
mod tracelasso;

pub use dual::Atom;
pub use oscar::{
    oscar_dual_gap, oscar_dual_norm, oscar_dual_value, prox_oscar_exact, prox_oscar_inexact,
};
pub use rank::{prox_rank, prox_rank_from, MatrixRankConstraint, RankProxMode};
pub use tracelasso::prox_tracelasso_inexact;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::regularizers::{L1Penalty, OscarPenalty, Regularizer, TraceLassoPenalty, ZeroRegularizer};

/// Output of a proximal computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult<P = DenseVector> {
    pub point: P,
    /// Upper bound on `Q(point) − min Q` (zero for exact operators).
    pub certified_eps: f64,
    pub inner_iters: usize,
    /// Per-iterate gap between the subproblem value and the best lower bound
    /// available at that iterate. Empty for closed-form operators.
    pub gap_history: Vec<f64>,
    /// Whether the requested tolerance was met within the inner budget.
    pub converged: bool,
    /// Set when `certified_eps` is an estimate rather than a proven bound.
    pub heuristic: bool,
    /// State an inner solver can resume from on the next call.
    pub warm: WarmStart,
}

impl<P> ProxResult<P> {
    pub(crate) fn exact(point: P) -> Self {
        Self {
            point,
            certified_eps: 0.0,
            inner_iters: 0,
            gap_history: Vec::new(),
            converged: true,
            heuristic: false,
            warm: WarmStart::None,
        }
    }
}

/// Inner-solver state carried between consecutive proximal calls of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum WarmStart {
    #[default]
    None,
    /// Convex combination of subgradients representing a dual point.
    Atoms(Vec<Atom>),
    /// Primal point for the diminishing-step subgradient rule.
    Point(DenseVector),
    /// Right singular subspace for the power method.
    Subspace(DenseMatrix),
    /// Split variable and multiplier of the trace-Lasso ADMM.
    Split { z: DenseMatrix, multiplier: DenseMatrix },
}

/// Step rule of the inner subgradient solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerStepRule {
    /// `x ← x − η γ q` with `q ∈ ∂Q(x)`, where the dual iterate is kept as a convex
    /// combination of subgradients and `η` maximizes the dual along a pairwise
    /// (toward / away) direction. The trace Lasso, whose dual ball is not a
    /// polytope, runs an ADMM splitting under this rule instead, and the
    /// separable L1 penalty is solved in closed form.
    PairwiseLineSearch,
    /// `x ← x − step_t q_t` with `step_t = step0 / √(t+1)`; `step0` defaults to `γ`.
    Diminishing { step0: Option<f64> },
}

/// Budget and strategy for inexact proximal computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub max_inner: usize,
    pub rule: InnerStepRule,
    /// Seed for randomized inner solvers (power method).
    pub seed: u64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self { max_inner: 10_000, rule: InnerStepRule::PairwiseLineSearch, seed: 0 }
    }
}

/// Subproblem value `‖z − y‖²/(2γ) + h`.
pub fn subproblem_value(point: &DenseVector, anchor: &DenseVector, gamma: f64, h_value: f64) -> f64 {
    point.distance_sq(anchor) / (2.0 * gamma) + h_value
}

/// A regularizer whose proximal operator can be evaluated.
pub trait ProximalTerm: Regularizer {
    /// `argmin Q`. Fails for terms without a closed-form or exact solver.
    fn prox_exact(&self, anchor: &DenseVector, gamma: f64) -> Result<ProxResult>;

    /// A point of `Prox^ε`, with `certified_eps` reporting the achieved bound.
    fn prox_inexact(
        &self,
        anchor: &DenseVector,
        gamma: f64,
        eps_target: f64,
        opts: &InnerOptions,
        warm: &WarmStart,
    ) -> Result<ProxResult>;
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")))
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps_target must be positive, got {eps}")))
    }
}

/// Entrywise soft threshold `sign(y) max(|y| − t, 0)`.
pub fn prox_l1(y: &DenseVector, threshold: f64) -> Result<DenseVector> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be non-negative, got {threshold}"
        )));
    }
    Ok(y.map(|v| v.signum() * (v.abs() - threshold).max(0.0)))
}

impl ProximalTerm for ZeroRegularizer {
    fn prox_exact(&self, anchor: &DenseVector, gamma: f64) -> Result<ProxResult> {
        check_gamma(gamma)?;
        Ok(ProxResult::exact(anchor.clone()))
    }

    fn prox_inexact(
        &self,
        anchor: &DenseVector,
        gamma: f64,
        eps_target: f64,
        _opts: &InnerOptions,
        _warm: &WarmStart,
    ) -> Result<ProxResult> {
        check_eps(eps_target)?;
        self.prox_exact(anchor, gamma)
    }
}

impl ProximalTerm for L1Penalty {
    fn prox_exact(&self, anchor: &DenseVector, gamma: f64) -> Result<ProxResult> {
        check_gamma(gamma)?;
        Ok(ProxResult::exact(prox_l1(anchor, gamma * self.lambda)?))
    }

    fn prox_inexact(
        &self,
        anchor: &DenseVector,
        gamma: f64,
        eps_target: f64,
        opts: &InnerOptions,
        warm: &WarmStart,
    ) -> Result<ProxResult> {
        check_gamma(gamma)?;
        check_eps(eps_target)?;
        match opts.rule {
            _ if self.lambda == 0.0 => Ok(ProxResult::exact(anchor.clone())),
            InnerStepRule::PairwiseLineSearch => self.prox_exact(anchor, gamma),
            InnerStepRule::Diminishing { .. } => {
                dual::solve(&dual::L1Oracle(*self), anchor, gamma, eps_target, opts, warm)
            }
        }
    }
}

impl ProximalTerm for OscarPenalty {
    fn prox_exact(&self, anchor: &DenseVector, gamma: f64) -> Result<ProxResult> {
        Ok(ProxResult::exact(prox_oscar_exact(anchor, gamma, self)?))
    }

    fn prox_inexact(
        &self,
        anchor: &DenseVector,
        gamma: f64,
        eps_target: f64,
        opts: &InnerOptions,
        warm: &WarmStart,
    ) -> Result<ProxResult> {
        prox_oscar_inexact(anchor, gamma, self, eps_target, opts, warm)
    }
}

impl ProximalTerm for TraceLassoPenalty {
    fn prox_exact(&self, _anchor: &DenseVector, _gamma: f64) -> Result<ProxResult> {
        Err(Error::UnsupportedRegularizer(
            "trace Lasso has no exact proximal operator; use an inexact solver".into(),
        ))
    }

    fn prox_inexact(
        &self,
        anchor: &DenseVector,
        gamma: f64,
        eps_target: f64,
        opts: &InnerOptions,
        warm: &WarmStart,
    ) -> Result<ProxResult> {
        check_eps(eps_target)?;
        prox_tracelasso_inexact(anchor, gamma, self, eps_target, opts, warm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold() {
        let y = DenseVector::new(vec![2.0, -0.3, 0.0]).unwrap();
        assert_eq!(prox_l1(&y, 0.5).unwrap().as_slice(), &[1.5, 0.0, 0.0]);
        assert_eq!(prox_l1(&y, 0.0).unwrap(), y);
        assert!(prox_l1(&y, -1.0).is_err());
    }

    #[test]
    fn l1_inexact_matches_exact() {
        let y = DenseVector::new(vec![1.3, -0.2, 0.05, -2.0, 0.7]).unwrap();
        let pen = L1Penalty::new(0.4).unwrap();
        let exact = pen.prox_exact(&y, 0.8).unwrap().point;
        let inexact = pen
            .prox_inexact(&y, 0.8, 1e-12, &InnerOptions::default(), &WarmStart::None)
            .unwrap();
        assert!(inexact.converged && inexact.certified_eps == 0.0);
        assert_eq!(inexact.point, exact);

        let opts = InnerOptions {
            max_inner: 50_000,
            rule: InnerStepRule::Diminishing { step0: None },
            seed: 0,
        };
        let sub = pen.prox_inexact(&y, 0.8, 1e-5, &opts, &WarmStart::None).unwrap();
        assert!(sub.converged, "certified {}", sub.certified_eps);
        assert!(sub.point.distance_sq(&exact) <= 2.0 * 0.8 * 1e-5 * (1.0 + 1e-9));
    }

    #[test]
    fn inexact_requires_positive_eps() {
        let y = DenseVector::zeros(2);
        let pen = L1Penalty::new(0.4).unwrap();
        assert!(pen
            .prox_inexact(&y, 1.0, 0.0, &InnerOptions::default(), &WarmStart::None)
            .is_err());
    }
}
