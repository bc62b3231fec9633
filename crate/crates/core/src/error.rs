use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("{0} is not Hermitian")]
    NotHermitian(String),

    #[error("{context} is not normalized (norm squared = {norm_sqr})")]
    NotNormalized { context: String, norm_sqr: f64 },

    #[error("{0} contains non-finite values")]
    NonFinite(String),

    #[error("basis vectors of {0} are not orthonormal")]
    NotOrthonormal(String),

    #[error("invalid time ordering: {0}")]
    InvalidTimeOrdering(String),

    #[error("path {path:?} is not valid for a chain of dimension {dim} with {steps} steps")]
    InvalidPath {
        path: Vec<usize>,
        dim: usize,
        steps: usize,
    },

    #[error("chain has {count} virtual paths, more than the supported {limit}")]
    TooManyPaths { count: u128, limit: usize },

    #[error("path functional is invalid for this chain: {0}")]
    InvalidFunctional(String),

    #[error("merge tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),

    #[error(
        "forbidden transition: |<phi|U(T)|psi>| = {magnitude:e}; relative amplitudes and weak values diverge, \
         choose pre/post-selected states with a non-vanishing overlap"
    )]
    ForbiddenTransition { magnitude: f64 },

    #[error("all grouped amplitudes vanish; the post-selection never succeeds")]
    AllAmplitudesZero,

    #[error("bundles belong to different measurement chains")]
    ChainMismatch,

    #[error("invalid pointer profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid [{min}, {max}] does not cover the required range [{need_min}, {need_max}]")]
    GridTooNarrow {
        min: f64,
        max: f64,
        need_min: f64,
        need_max: f64,
    },

    #[error("pointer distribution has zero norm; no reading is ever recorded")]
    ZeroNorm,

    #[error("operation needs exactly one intermediate step, chain has {0}")]
    RequiresSingleStep(usize),

    #[error("at least one meter is required")]
    NoMeters,

    #[error("total probability of all recorded outcomes is zero")]
    ZeroProbability,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid classical network: {0}")]
    InvalidNetwork(String),

    #[error("classical network wiring contains a cycle through connector `{0}`")]
    CyclicNetwork(String),

    #[error("conditioning set has zero probability")]
    ZeroConditionalProbability,
}
