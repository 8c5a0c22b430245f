use thiserror::Error;

use crate::solver::SolverError;
use crate::timestepper::CflReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported polynomial degree {0}, expected 1..=4")]
    UnsupportedDegree(usize),

    #[error("point ({}, {}, {}) lies outside the domain", .0[0], .0[1], .0[2])]
    PointOutsideDomain([f64; 3]),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty series")]
    EmptySeries,

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error("non-finite displacement at step {step}")]
    NonFinite { step: usize },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("CFL restriction violated: {0}")]
    Cfl(CflReport),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage and step wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}
