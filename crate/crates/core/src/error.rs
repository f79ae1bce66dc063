use thiserror::Error;

use crate::group::GroupKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group kind mismatch: expected {expected:?}, found {found:?}")]
    KindMismatch { expected: GroupKind, found: GroupKind },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature under-resolved: rule exact to degree {available}, integrand needs {required}")]
    UnderResolved { available: usize, required: usize },

    #[error("heat kernel evaluated to non-positive value {value} (beta = {beta})")]
    NonPositiveKernel { value: f64, beta: f64 },

    #[error("lattice index space overflow")]
    IndexOverflow,

    #[error("lattice alignment mismatch: {0}")]
    Alignment(String),

    #[error("configuration does not cover edge {0}")]
    MissingEdge(usize),

    #[error("loop {r}x{t} does not fit the lattice")]
    LoopDoesNotFit { r: usize, t: usize },

    #[error("degenerate variance in Monte Carlo estimate")]
    DegenerateVariance,

    #[error("censored fraction {fraction:.3} exceeds the 5% limit")]
    TooMuchCensoring { fraction: f64 },

    #[error("too few samples: need {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("no linear tail region found in the log-survival curve")]
    NoLinearTail,

    #[error("eigensolver failed to converge after {0} iterations")]
    NoConvergence(usize),

    #[error("gaussian bound fit infeasible: {0}")]
    FitInfeasible(String),

    #[error("multiple attractors detected ({0}); quasi-potential needs a single limit set")]
    MultipleAttractors(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
