//! Synthetic problem generators, dataset ingestion and convergence-trace
//! benchmarks for [`iprox`].
//!
//! Three applications mirror the solver's intended uses: robust regression with
//! OSCAR grouping, link prediction under a rank constraint, and robust
//! regression with a trace-Lasso penalty. A plain lasso serves as a convex
//! baseline.

pub mod error;
pub mod experiment;
pub mod generate;
pub mod io;

pub use error::{BenchError, Result};
pub use experiment::{
    build_problem, parse_schedule, run_experiment, Application, BuiltProblem, DataSource,
    ExperimentOutcome, ExperimentSpec, GenParams, ModelParams,
};
pub use io::{TraceFile, TraceRow};
