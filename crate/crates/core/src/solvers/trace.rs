use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::numerics::DenseVector;

/// How `x_k` was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Single prox step (IPG / PG).
    Plain,
    /// Extrapolated point won the comparison `f(z) ≤ f(v)`.
    ZAccepted,
    /// Monitor point won.
    VAccepted,
    /// Sufficient-descent test passed; the monitor prox was skipped.
    Shortcut,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plain => "plain",
            Branch::ZAccepted => "z-accepted",
            Branch::VAccepted => "v-accepted",
            Branch::Shortcut => "shortcut",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Branch::Plain, Branch::ZAccepted, Branch::VAccepted, Branch::Shortcut]
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown branch '{s}'")))
    }
}

/// One proximal evaluation inside an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxCall {
    /// `f` at the returned point.
    pub objective: f64,
    /// Squared distance from the point the prox step started at (`y_k` for the
    /// extrapolated call, `x_{k−1}` for the monitor).
    pub step_sq: f64,
    pub certified_eps: f64,
    pub inner_iters: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `f(x_k)`.
    pub objective: f64,
    /// `‖x_k − x_{k−1}‖²`.
    pub step_norm_sq: f64,
    pub eps_k: f64,
    /// Largest certificate among the prox calls of this iteration.
    pub certified_eps: f64,
    /// Inner iterations of all prox calls of this iteration.
    pub inner_iters: usize,
    pub branch: Branch,
    pub wall_seconds: f64,
    /// Some prox call ran out of inner budget before meeting `eps_k`.
    pub budget_exhausted: bool,
    /// Some certificate is an estimate rather than a bound.
    pub heuristic: bool,
    /// The prox at the extrapolated point (accelerated methods) or the only
    /// prox (IPG).
    pub primary: ProxCall,
    /// The monitor prox at `x_{k−1}`, when it ran.
    pub monitor: Option<ProxCall>,
}

impl IterationRecord {
    /// Inner iterations of the monitor prox (0 when skipped or absent).
    pub fn second_prox_inner_iters(&self) -> usize {
        self.monitor.map_or(0, |m| m.inner_iters)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// `f(x₀)`.
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    /// Last accepted iterate.
    pub final_point: DenseVector,
    /// `x₁, x₂, …` when requested by the config.
    pub iterates: Vec<DenseVector>,
    /// Set when the run aborted; the records up to the failure are kept.
    pub failure: Option<String>,
}

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(self.initial_objective, |r| r.objective)
    }

    /// Objective of `x_{k}` for `k = 0..=len`.
    pub fn objective_at(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(self.initial_objective)
        } else {
            self.records.get(k - 1).map(|r| r.objective)
        }
    }

    pub fn total_second_prox_inner_iters(&self) -> usize {
        self.records.iter().map(|r| r.second_prox_inner_iters()).sum()
    }

    /// Equality ignoring wall-clock times.
    pub fn same_run(&self, other: &IterationTrace) -> bool {
        let strip = |t: &IterationTrace| {
            let mut t = t.clone();
            t.records.iter_mut().for_each(|r| r.wall_seconds = 0.0);
            t
        };
        strip(self) == strip(other)
    }
}
