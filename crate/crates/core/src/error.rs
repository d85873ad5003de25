use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("time points must be ascending inside [0, {dt}]: {times:?}")]
    BadOrdering { times: Vec<f64>, dt: f64 },

    #[error("invalid step size {0}")]
    InvalidStepSize(f64),

    #[error("trace {0:e} of unnormalized state is not positive")]
    NonPositiveTrace(f64),

    #[error("scheme {scheme} is not supported by {operation}")]
    UnsupportedScheme { scheme: String, operation: &'static str },

    #[error("invalid scheme identifier `{0}`")]
    BadScheme(String),

    #[error("quadrature term count {count} exceeds cap {cap}")]
    TermExplosion { count: u128, cap: u128 },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Bloch map is not linear at z = {re}{im:+}i (mismatch {mismatch:e})")]
    NonlinearMap { re: f64, im: f64, mismatch: f64 },

    #[error("stability analysis requires Re(z) > 0, got {0}")]
    NonPositiveRealPart(f64),

    #[error("trajectory {trajectory} reached a degenerate state")]
    DegenerateState { trajectory: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("error bound violated: {0}")]
    BoundViolation(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}
