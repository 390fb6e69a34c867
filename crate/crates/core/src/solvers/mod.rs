//! Outer proximal gradient methods.
//!
//! All six methods share one implementation per family. `pg`, `apg` and `nmapg`
//! are `ipg`, `aipg` and `nmaipg` run with the exact proximal operator and
//! `ε_k = 0`.

mod config;
mod momentum;
mod run;
mod trace;

pub use config::{schedule_eps, ErrorSchedule, SolverConfig, SolverKind};
pub use momentum::{extrapolate, momentum_next, MomentumState};
pub use run::{run_aipg, run_ipg, run_matrix_solver, run_nmaipg, solve};
pub use trace::{Branch, IterationRecord, IterationTrace, ProxCall};
