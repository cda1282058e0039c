use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation of U^dag U from identity {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroState,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field misconfigured: {0}")]
    Misconfigured(String),

    #[error("rotation speed gamma is zero, no loop is defined")]
    NoLoop,

    #[error("zero field: omega0 and omega1 both vanish")]
    ZeroField,

    #[error("omega0 = 0 admits no finite compensating rotation speed")]
    NoCompensation,

    #[error("conditional loop requires delta > J > 0 (delta = {delta}, J = {j})")]
    ConditionViolated { delta: f64, j: f64 },

    #[error("speed profile integrates to {angle} rad, expected a 2*pi loop")]
    ProfileNotClosed { angle: f64 },

    #[error("trajectory is not cyclic: 1 - |<psi(0)|psi(T)>| = {defect:e}")]
    NonCyclic { defect: f64 },

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("integration step budget exceeded ({requested} > {budget} steps)")]
    StepBudgetExceeded { requested: usize, budget: usize },

    #[error("pulse sequence frame does not match dimension {dim}")]
    FrameMismatch { dim: usize },

    #[error("S-operation solution inconsistent with (delta, J): residual {residual:e}")]
    InconsistentSolution { residual: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("recipe `{name}` rejected: fidelity {fidelity} below {threshold}")]
    RecipeRejected {
        name: String,
        fidelity: f64,
        threshold: f64,
    },

    #[error("empty range {0}")]
    EmptyRange(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
