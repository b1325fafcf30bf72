use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point {x} outside knot range [{lo}, {hi}]")]
    OutsideKnotRange { x: f64, lo: f64, hi: f64 },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("unsupported quadrature order {0} (supported: 1..=10)")]
    UnsupportedQuadratureOrder(usize),

    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-positive geometry Jacobian {det:e} in patch {patch}")]
    NonPositiveJacobian { patch: usize, det: f64 },

    #[error("unsupported geometry: {0}")]
    CrossPoint(String),

    #[error("inadmissible parameter: {0}")]
    Inadmissible(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("requested {requested} eigenpairs but dimension is {dim}")]
    EigenCountOutOfRange { requested: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coupling operator is rank deficient (rank {rank} of {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
