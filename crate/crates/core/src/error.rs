use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("no signal detections (n_bit = 0)")]
    NoDetections,

    #[error("phase-error linear program is infeasible; the run must abort")]
    PhaseErrorInfeasible,

    #[error("phase-error linear program is unbounded")]
    PhaseErrorUnbounded,

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("simplex did not terminate within {0} iterations")]
    IterationLimit(usize),

    #[error("LP too large for vertex enumeration: {vars} variables (limit {limit})")]
    TooLarge { vars: usize, limit: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("search space has no feasible grid point")]
    EmptyFeasibleRegion,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    expected: &'static str,
) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
