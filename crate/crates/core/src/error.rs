use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid vector field: {0}")]
    InvalidField(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("incompatible sampling domain: {failed} of {total} samples hit domain errors")]
    IncompatibleSampling { failed: usize, total: usize },
    #[error("bracket [X{i}, X{j}] is not in the span of the basis (residual {residual:.3e})")]
    NotClosed { i: usize, j: usize, residual: f64 },
    #[error("numerically rank-deficient sample: {0}")]
    RankDeficient(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("delay violation at x = {x}: delayed point {xm} is not below x")]
    DelayViolation { x: f64, xm: f64 },
    #[error("history underrun at x = {x}: delayed point {xm} precedes the history start {start}")]
    HistoryUnderrun { x: f64, xm: f64, start: f64 },
    #[error("delayed-point iteration did not converge at x = {0}")]
    DelayNonConvergence(f64),
    #[error("step rejected at x = {x}: {msg}")]
    StepRejected { x: f64, msg: String },
    #[error("query at {x} outside the covered range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("non-homogeneous linear system")]
    NonHomogeneous,
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("unsupported vector field family: {0}")]
    UnsupportedFamily(String),
    #[error("no root found: {0}")]
    NoRoot(String),
    #[error("not a symmetry: {0}")]
    NotASymmetry(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
