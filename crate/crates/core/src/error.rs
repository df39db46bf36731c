use thiserror::Error;

/// Shared error type for the whole library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("instance mismatch: {0} vs {1}")]
    InstanceMismatch(String, String),
    #[error("{0} is not a lower bound of {1}")]
    NotLowerBound(String, String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("truncation exceeded: {0}")]
    TruncationExceeded(String),
    #[error("paths not composable: {0} . {1}")]
    NotComposable(String, String),
    #[error("unknown path id: {0}")]
    UnknownPath(String),
    #[error("unknown vertex id: {0}")]
    UnknownVertex(String),
    #[error("not a filter: {0}")]
    InvalidFilter(String),
    #[error("root mismatch: {0}")]
    RootMismatch(String),
    #[error("path not in filter: {0}")]
    NotInFilter(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("operation requires a finite graph: {0}")]
    NotFinite(String),
    #[error("no factorisation recorded for {path} at degree {degree}")]
    MissingFactorisation { path: String, degree: String },
    #[error("ambiguous factorisation for {path} at degree {degree}")]
    AmbiguousFactorisation { path: String, degree: String },
    #[error("power iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("incomplete squares: no square covers the edge pair {0} . {1}")]
    IncompleteSquares(String, String),
    #[error("factorisation squares are inconsistent on the triple {0}")]
    InconsistentSquares(String),
    #[error("embedding is not hereditary: {p} . {q} = {pq} lies in the image but {witness} does not")]
    NotHereditary {
        p: String,
        q: String,
        pq: String,
        witness: String,
    },
    #[error("embedding does not preserve joins: {0}")]
    JoinNotPreserved(String),
    #[error("invalid graph data: {0}")]
    InvalidGraph(String),
    #[error("no witness in the exhaustive set: {0}")]
    NoWitness(String),
    #[error("acted filter left the representation basis: {0}")]
    BasisEscape(String),
    #[error("matrix is only partially defined: {0}")]
    PartialMatrix(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
