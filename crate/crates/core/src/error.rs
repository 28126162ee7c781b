use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric parameter violates its precondition (e.g. `Q <= 1`).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A weight description does not satisfy the partition/integrability rules.
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    /// A moment that the caller needs finite is infinite.
    #[error("divergent moment: {0}")]
    Divergent(String),

    /// Bisection was started on a bracket without a sign change.
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Root found but its residual exceeds the certification threshold.
    #[error("root {root} not certified: residual {residual:e}")]
    Uncertified { root: f64, residual: f64 },

    /// An extremal target point yields a glue parameter outside (0, 1].
    #[error("infeasible extremal target: {0}")]
    InfeasibleTarget(String),

    /// No admissible split ratio was found.
    #[error(
        "no admissible split of [{a}, {b}]: best alpha {best_alpha} leaves the segment \
         {best_violation:e} outside the enlarged domain"
    )]
    SplitFailure { a: f64, b: f64, best_alpha: f64, best_violation: f64 },

    /// Weight JSON could not be parsed.
    #[error("malformed weight JSON: {0}")]
    Json(String),
}
