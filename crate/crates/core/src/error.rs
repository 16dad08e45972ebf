use thiserror::Error;

/// Errors raised by the solvers, the averaging machinery and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid averaging span: end step {end} must exceed transient step {transient}")]
    InvalidSpan { transient: usize, end: usize },

    #[error("window weights over steps {transient}..={end} sum to zero and cannot be renormalized")]
    DegenerateWeights { transient: usize, end: usize },

    #[error("singular linear system at physical step {step}, inner iteration {iteration}")]
    SingularSystem { step: usize, iteration: usize },

    #[error(
        "pseudo-time iteration did not converge at step {step}: residual {residual:e} after {iterations} iterations"
    )]
    UnconvergedStep {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error(
        "adjoint fixed-point iteration diverged at step {step}: residual {residual:e}, contraction estimate {contraction}"
    )]
    AdjointDivergence {
        step: usize,
        residual: f64,
        contraction: f64,
    },

    #[error("period undetectable: found {crossings} upward mean crossings, need at least 2")]
    PeriodUndetectable { crossings: usize },

    #[error("adaptive quadrature did not reach tolerance {tolerance:e} within {intervals} intervals")]
    QuadratureNonConvergence { tolerance: f64, intervals: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {usable} usable points above the noise floor")]
    DegenerateFit { usable: usize },

    #[error("baseline sensitivity vector has zero norm")]
    ZeroBaseline,

    #[error("primal trajectory holds {available} steps but step {requested} was requested")]
    MissingStates { available: usize, requested: usize },

    #[error("design {values:?} lies outside the admissible box")]
    OutsideBox { values: Vec<f64> },

    #[error("evaluation failed at design {design:?}: {source}")]
    DesignEvaluation {
        design: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            })
        }
    }
}
