//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation requested at or too close to the origin, where the integrand
    /// is not differentiable.
    #[error("covector norm {norm:e} is below the evaluation floor {floor:e}")]
    NearZeroCovector { norm: f64, floor: f64 },

    /// A caller-supplied argument violates an operation precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The integrand fails a structural requirement (e.g. the level-set metric
    /// degenerates on the tangent space).
    #[error("integrand invalid: {0}")]
    IntegrandInvalid(String),

    /// A sampled constant failed to stabilize within the search budget.
    /// `best_lower_bound` is the largest certified value found.
    #[error("constant did not stabilize within budget: {what} (best lower bound {best_lower_bound})")]
    UnresolvedConstant { what: String, best_lower_bound: f64 },

    /// A theorem hypothesis does not hold for this integrand; `condition`
    /// names the failed requirement.
    #[error("hypothesis not met: {condition}")]
    HypothesisNotMet { condition: String },

    /// Explicit step rejected; `admissible_dt` is the largest stable step.
    #[error("time step {dt:e} exceeds the stability limit; admissible dt = {admissible_dt:e}")]
    StepRejected { dt: f64, admissible_dt: f64 },

    /// Non-finite field value detected during a flow run.
    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    /// Configuration file error, with 1-based line number when known.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn hypothesis(condition: impl Into<String>) -> Self {
        Error::HypothesisNotMet { condition: condition.into() }
    }

    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config { line, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
