use thiserror::Error;

/// Errors surfaced by every simulator, oracle and estimator in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error("{n} states exceed the brute-force limit of {max}")]
    TooManyStates { n: usize, max: usize },
    #[error("exponents violate 1/p + 1/q < 1 (p = {p}, q = {q})")]
    InvalidExponents { p: f64, q: f64 },
    #[error("interval [{a}, {b}] is outside [0, {horizon}]")]
    OutOfRange { a: f64, b: f64, horizon: f64 },
    #[error("functional is not defined on this trajectory kind: {0}")]
    IncompatibleFunctional(&'static str),
    #[error("rate {rate} exceeds declared thinning bound {bound} at t = {time}")]
    ThinningBoundViolated { rate: f64, bound: f64, time: f64 },
    #[error("bounce requested where the gradient vanishes")]
    ZeroGradient,
    #[error("gradient disagrees with finite differences of the potential (max error {0})")]
    GradientMismatch(f64),
    #[error("numerical blow-up: |x| = {value} at step {step}")]
    NumericalBlowup { value: f64, step: usize },
    #[error("quadrature failed to reach tolerance: {0}")]
    QuadratureFailure(String),
    #[error("degenerate small set: alpha = {0}")]
    DegenerateSmallSet(f64),
    #[error("residual kernel has negative entry {value} at ({row}, {col})")]
    NegativeResidual { row: usize, col: usize, value: f64 },
    #[error("rejection envelope violated: p_t = {0} > 1")]
    EnvelopeViolation(f64),
    #[error("rejection sampler exceeded {0} attempts")]
    RejectionBudgetExceeded(u64),
    #[error("need at least {needed} complete cycles, have {have}")]
    InsufficientCycles { needed: usize, have: usize },
    #[error("need at least 2 batches, have {0}")]
    TooFewBatches(usize),
    #[error("need at least {needed} replicates, have {have}")]
    InsufficientReplicates { needed: usize, have: usize },
    #[error("outside domain: {0}")]
    DomainError(String),
    #[error("window a_T = {a} exceeds horizon T = {horizon}")]
    WindowTooLarge { a: f64, horizon: f64 },
    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
