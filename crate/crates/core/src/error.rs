use thiserror::Error;

use crate::backend::SolverError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    /// The problem (or a required subproblem) has no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unbounded: {0}")]
    Unbounded(String),
    /// The recourse LP has no solution at `xi` for the given first-stage decision.
    #[error("recourse infeasible at xi = {xi:?}")]
    RecourseInfeasible { xi: Vec<f64> },
    #[error("{what} needs {needed}, over the cap of {cap}")]
    CapExceeded { what: String, needed: usize, cap: usize },
    #[error("branch-and-bound node limit reached: {0}")]
    NodeLimit(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
