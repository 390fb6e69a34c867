use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::prox::InnerOptions;

/// Which outer algorithm to run. The first three are the exact-prox
/// specializations of the last three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Pg,
    Apg,
    Nmapg,
    Ipg,
    Aipg,
    Nmaipg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Pg,
        SolverKind::Apg,
        SolverKind::Nmapg,
        SolverKind::Ipg,
        SolverKind::Aipg,
        SolverKind::Nmaipg,
    ];

    pub fn is_exact(self) -> bool {
        matches!(self, SolverKind::Pg | SolverKind::Apg | SolverKind::Nmapg)
    }

    pub fn is_accelerated(self) -> bool {
        !matches!(self, SolverKind::Pg | SolverKind::Ipg)
    }

    pub fn is_nonmonotone(self) -> bool {
        matches!(self, SolverKind::Nmapg | SolverKind::Nmaipg)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Pg => "pg",
            SolverKind::Apg => "apg",
            SolverKind::Nmapg => "nmapg",
            SolverKind::Ipg => "ipg",
            SolverKind::Aipg => "aipg",
            SolverKind::Nmaipg => "nmaipg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown solver '{s}'")))
    }
}

/// Inexactness tolerance `ε_k` requested from the proximal solver at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorSchedule {
    /// `ε_k = 0`: the exact proximal operator is used.
    Exact,
    Constant(f64),
    /// `ε_k = c / k^p`.
    Polynomial { c: f64, p: f64 },
    /// `ε_k = max(α · d_{k−1}, floor)` where `d_{k−1}` is the squared monitor
    /// displacement of the previous iteration.
    Adaptive { alpha: f64, floor: f64 },
}

impl ErrorSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ErrorSchedule::Exact => true,
            ErrorSchedule::Constant(c) => c.is_finite() && c > 0.0,
            ErrorSchedule::Polynomial { c, p } => c.is_finite() && c > 0.0 && p.is_finite() && p >= 0.0,
            ErrorSchedule::Adaptive { alpha, floor } => {
                alpha.is_finite() && alpha >= 0.0 && floor.is_finite() && floor > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid error schedule {self:?}")))
        }
    }
}

/// `ε_k` for iteration `k ≥ 1`.
pub fn schedule_eps(s: ErrorSchedule, k: usize, prev_displacement_sq: f64) -> f64 {
    debug_assert!(k >= 1);
    match s {
        ErrorSchedule::Exact => 0.0,
        ErrorSchedule::Constant(c) => c,
        ErrorSchedule::Polynomial { c, p } => c / (k as f64).powf(p),
        ErrorSchedule::Adaptive { alpha, floor } => (alpha * prev_displacement_sq).max(floor),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub max_iters: usize,
    pub kind: SolverKind,
    /// Sufficient-descent constant of the non-monotone variants.
    pub delta: f64,
    pub schedule: ErrorSchedule,
    pub seed: u64,
    /// Stop after 5 consecutive iterations with `|f(x_k) − f(x_{k−1})|` at or
    /// below this value.
    pub objective_tolerance: Option<f64>,
    pub inner: InnerOptions,
    /// Store every iterate in the trace.
    pub keep_iterates: bool,
}

impl SolverConfig {
    /// Defaults: `δ = 0.6`, `ε_k = 10⁻²/k²` for inexact kinds, no early stop.
    pub fn new(kind: SolverKind, gamma: f64, max_iters: usize) -> Self {
        Self {
            gamma,
            max_iters,
            kind,
            delta: 0.6,
            schedule: if kind.is_exact() {
                ErrorSchedule::Exact
            } else {
                ErrorSchedule::Polynomial { c: 1e-2, p: 2.0 }
            },
            seed: 0,
            objective_tolerance: None,
            inner: InnerOptions::default(),
            keep_iterates: false,
        }
    }

    pub fn with_schedule(mut self, schedule: ErrorSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// The schedule actually used: exact kinds always run with `ε_k = 0`.
    pub fn effective_schedule(&self) -> ErrorSchedule {
        if self.kind.is_exact() {
            ErrorSchedule::Exact
        } else {
            self.schedule
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::StepSize(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        if self.kind.is_nonmonotone() && !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if let Some(tol) = self.objective_tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(invalid(format!("objective_tolerance must be non-negative, got {tol}")));
            }
        }
        if self.inner.max_inner == 0 && !matches!(self.effective_schedule(), ErrorSchedule::Exact) {
            return Err(invalid("inner budget must be positive"));
        }
        self.effective_schedule().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let poly = ErrorSchedule::Polynomial { c: 1.0, p: 2.0 };
        assert_eq!(schedule_eps(poly, 3, 0.0), 1.0 / 9.0);
        let adaptive = ErrorSchedule::Adaptive { alpha: 0.5, floor: 1e-10 };
        assert_eq!(schedule_eps(adaptive, 4, 0.01), 0.005);
        assert_eq!(schedule_eps(adaptive, 4, 0.0), 1e-10);
        assert_eq!(schedule_eps(ErrorSchedule::Constant(0.3), 9, 1.0), 0.3);
    }

    #[test]
    fn schedule_validation() {
        assert!(ErrorSchedule::Constant(0.0).validate().is_err());
        assert!(ErrorSchedule::Polynomial { c: 1.0, p: -1.0 }.validate().is_err());
        assert!(ErrorSchedule::Adaptive { alpha: 0.1, floor: 0.0 }.validate().is_err());
        assert!(ErrorSchedule::Adaptive { alpha: 0.0, floor: 1e-9 }.validate().is_ok());
    }

    #[test]
    fn kinds_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.as_str().parse::<SolverKind>().unwrap(), k);
        }
        assert!("fista".parse::<SolverKind>().is_err());
        let cfg = SolverConfig::new(SolverKind::Pg, 0.5, 10)
            .with_schedule(ErrorSchedule::Constant(1.0));
        assert_eq!(cfg.effective_schedule(), ErrorSchedule::Exact);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(SolverKind::Nmaipg, 0.5, 10);
        assert!(cfg.validate().is_ok());
        cfg.delta = 0.0;
        assert!(cfg.validate().is_err());
        cfg.kind = SolverKind::Aipg;
        assert!(cfg.validate().is_ok());
        cfg.max_iters = 0;
        assert!(cfg.validate().is_err());
    }
}
