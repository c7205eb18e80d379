use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    /// Smallest eigenvalue at or below the singularity threshold. For a
    /// correlation matrix this is the |rho| -> 1 comonotone boundary, where
    /// no density exists.
    #[error("matrix is singular (smallest eigenvalue {0:e})")]
    SingularMatrix(f64),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("point lies on the boundary of the unit cube: {0}")]
    BoundaryPoint(f64),

    #[error("grid too large: {bins}^{dim} cells exceeds the limit of {limit}")]
    GridTooLarge {
        bins: usize,
        dim: usize,
        limit: usize,
    },

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("incompatible histograms: {0}")]
    IncompatibleHistograms(String),

    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),

    #[error("invalid number of clusters {k} for {n} objects")]
    InvalidK { k: usize, n: usize },

    #[error("{0}")]
    UnsupportedKind(String),

    /// A pairwise computation failed; carries the labels of the pair.
    #[error("distance between `{left}` and `{right}` failed: {source}")]
    Pair {
        left: String,
        right: String,
        #[source]
        source: Box<Error>,
    },

    /// A per-object stage failed; carries the object label.
    #[error("object `{label}`: {source}")]
    Object {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips `Pair`/`Object` context to get at the underlying numerical cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::Pair { source, .. } | Error::Object { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(
            self.root(),
            Error::SingularMatrix(_) | Error::NotPositiveDefinite { .. }
        )
    }
}
