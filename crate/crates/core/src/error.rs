use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes, mapped onto CLI exit codes by [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    // graph construction
    #[error("node index {index} out of range for {n_nodes} nodes")]
    IndexOutOfRange { index: usize, n_nodes: usize },
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {weight}")]
    NegativeWeight { i: usize, j: usize, weight: f64 },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("node {0} has zero degree; normalized Laplacians are undefined")]
    IsolatedNode(usize),
    #[error("graph must have at least {min} nodes, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("matrix is not symmetric (max |W - W^T| = {0:e})")]
    AsymmetricMatrix(f64),
    #[error("graph is disconnected after {0} sampling attempts")]
    DisconnectedAfterRetries(usize),

    // spectral / numerical
    #[error("shift operator {0} is not symmetric; only symmetric variants can be eigendecomposed")]
    NonSymmetricShift(String),
    #[error("eigendecomposition did not converge")]
    ConvergenceFailure,
    #[error("largest eigenvalue of the shift operator is zero")]
    ZeroMaxEigenvalue,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative eigenvalue {0:e} in a Laplacian-family basis")]
    NegativeEigenvalue(f64),

    // filters
    #[error("band selection out of range: {0}")]
    BandOutOfRange(String),
    #[error("operation requires a Laplacian-family basis")]
    WrongVariant,

    // temporal
    #[error("time series too short: need at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("window is not conjugate-symmetric at bin {0}")]
    AsymmetricWindow(usize),
    #[error("band [{f_lo}, {f_hi}) Hz is invalid or exceeds the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { f_lo: f64, f_hi: f64, nyquist: f64 },
    #[error("sampling period must be positive and finite, got {0}")]
    InvalidSamplingPeriod(f64),
    #[error("signal contains a non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    // slepian
    #[error("bandwidth {bandwidth} exceeds the number of nodes {n_nodes}")]
    BandwidthTooLarge { bandwidth: usize, n_nodes: usize },
    #[error("node selector is empty or has the wrong length")]
    EmptySelector,
    #[error("slepian filtering requires the modified embedded-distance criterion")]
    WrongCriterion,

    // pipeline
    #[error("aligned and liberal bands overlap: 2*K = {0} exceeds N = {1}")]
    BandOverlap(usize, usize),
    #[error("covariate matrix is rank deficient")]
    RankDeficientCovariates,
    #[error("too few samples: need more than {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("at least {min} surrogates required, got {got}")]
    InsufficientSurrogates { min: usize, got: usize },
    #[error("node {0} is not assigned to any system")]
    UnmappedNode(usize),
    #[error("bands do not partition the temporal spectrum: {0}")]
    BandsNotPartition(String),
    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // io
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRows { row: usize, got: usize, expected: usize },
    #[error("missing `# TR=<seconds>` header line")]
    MissingTRHeader,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// CLI exit code: 1 for bad configuration, 2 for bad input data, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::ConvergenceFailure
            | Error::ZeroMaxEigenvalue
            | Error::NegativeEigenvalue(_)
            | Error::RankDeficientCovariates
            | Error::DisconnectedAfterRetries(_) => 3,
            _ => 2,
        }
    }
}
