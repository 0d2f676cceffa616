use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid nonlinearity model: {0}")]
    InvalidModel(String),

    #[error("field dimension mismatch: expected {expected} modes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Hessian is singular on the null cone of the bilinear (value {value:e})")]
    NullCone { value: f64 },

    #[error("eigenbasis cross-check failed: {0}")]
    CrossCheck(String),

    #[error("degenerate linking geometry: {0}")]
    DegenerateGeometry(String),

    #[error("level collapsed to {level:e}, below the sphere floor {floor:e}")]
    LevelCollapse { level: f64, floor: f64 },

    #[error("no admissible step size at sweep {sweep}")]
    StepSizeFailure { sweep: usize },

    #[error("deformed fibers no longer cross the small sphere at sweep {sweep}")]
    LostIntersection { sweep: usize },

    #[error("{what} did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("refinement collapsed to the trivial solution (L2 norm {norm:e})")]
    TrivialSolution { norm: f64 },

    #[error("linear solver breakdown: {0}")]
    LinearizationBreakdown(String),

    #[error("continuation failed at eps = {eps}: {source}")]
    StageDivergence {
        eps: f64,
        last_good_eps: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 2 for configuration
    /// problems, 3 for failed checks, 4 for everything the solver raises.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidLattice(_)
            | Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidModel(_) => 2,
            Error::Verification(_) | Error::CrossCheck(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
