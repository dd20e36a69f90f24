use thiserror::Error;

/// Errors raised across the crate.
///
/// Solver-side failures (`IterationLimit`, `SolverFailure`) are kept apart from
/// input problems so that callers can map them to different exit paths.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed linear program: {0}")]
    MalformedProblem(String),

    #[error("simplex iteration limit of {limit} exceeded")]
    IterationLimit { limit: usize },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("state space needs at least one vertex")]
    EmptyStateSpace,

    #[error("vertex {index} has dimension {found}, expected {expected}")]
    RaggedVertices {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("effect takes value {value} at vertex {vertex} {point:?}, outside [0, 1]")]
    EffectOutOfRange { vertex: usize, point: Vec<f64>, value: f64 },

    #[error("vertex values are not affine: residual {residual:e} at vertex {vertex}")]
    NotRepresentable { vertex: usize, residual: f64 },

    #[error("invalid observable: {}", .0.join("; "))]
    InvalidObservable(Vec<String>),

    #[error("joint measurability condition `{inequality}` violated at vertex {vertex} by {amount:e}")]
    JointConditionViolated {
        inequality: &'static str,
        vertex: usize,
        amount: f64,
    },

    #[error("invalid Markov kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("effect `{name}`: {source}")]
    Effect {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("model file parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("model file field `{field}`: {message}")]
    Schema { field: String, message: String },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_solver_error(&self) -> bool {
        matches!(self, Error::IterationLimit { .. } | Error::SolverFailure(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
