use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (|U^dag U - I|_F = {0:.3e})")]
    NotUnitary(f64),

    #[error("degenerate spectrum: levels {lower} and {upper} separated by {gap:.3e}")]
    DegenerateSpectrum { lower: usize, upper: usize, gap: f64 },

    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("invalid parameter point: {0}")]
    InvalidPoint(String),

    #[error("parameter point outside model domain: {0}")]
    DomainViolation(String),

    #[error("model file line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("loop is not closed (endpoint mismatch {0:.3e})")]
    LoopNotClosed(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "eigenvector overlap {overlap:.3e} for level {level} at step {step} is too small; refine the loop"
    )]
    OverlapTooSmall { step: usize, level: usize, overlap: f64 },

    #[error("integrator norm drift {drift:.3e} per unit time exceeds tolerance; use dt smaller than {dt:.3e}")]
    StepTooLarge { drift: f64, dt: f64 },

    #[error("surface grid too coarse: grid-doubling disagreement {disagreement:.3e} > {tol:.3e}")]
    GridTooCoarse { disagreement: f64, tol: f64 },
}

impl Error {
    /// Failures that stem from the numerics (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::DegenerateSpectrum { .. }
                | Error::OverlapTooSmall { .. }
                | Error::StepTooLarge { .. }
                | Error::GridTooCoarse { .. }
                | Error::NotUnitary(_)
        )
    }
}
