use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("matrix is rank deficient: |R[{pivot},{pivot}]| = {value:e} is below the rank threshold")]
    RankDeficient { pivot: usize, value: f64 },

    #[error("inverse iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("simplex exceeded {pivots} pivots")]
    PivotLimit { pivots: usize },

    #[error("label at row {index} is {value}, expected -1 or +1")]
    InvalidLabel { index: usize, value: f64 },

    #[error("need at least {required} rows, got {rows}")]
    TooFewRows { rows: usize, required: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("({i}, {j}) is not a valid pair for {m} rows")]
    InvalidPair { i: usize, j: usize, m: usize },

    #[error("sampling support is empty")]
    EmptySupport,

    #[error("cannot draw {requested} distinct rows from a support of {available}")]
    SampleSize { requested: usize, available: usize },

    #[error("every spectral coefficient is zero")]
    DegenerateSpectrum,

    #[error("weighting direction must have unit norm, got norm {0}")]
    InvalidDirection(f64),

    #[error("row {row} has zero norm and cannot be projected onto")]
    ZeroRow { row: usize },

    #[error("sampled row set is empty")]
    EmptySample,

    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("strategy `{0}` depends on the iterate and has no static distribution")]
    DynamicStrategy(&'static str),

    #[error("system has no stored singular values")]
    MissingSvd,

    #[error("system has no ground-truth solution")]
    MissingGroundTruth,

    #[error("cluster partition is empty")]
    EmptyPartition,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration rather than the
    /// numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
