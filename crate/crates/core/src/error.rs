use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node not in tree: {0}")]
    UnknownNode(i64),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("invalid merge tree: {0}")]
    InvalidTree(String),
    #[error("non-positive edge length {length} above node {node}")]
    NonPositiveLength { node: usize, length: f64 },
    #[error("invalid path mapping: {0}")]
    InvalidMapping(String),
    #[error("oracle limit: {edges} edges exceed the limit of {limit}")]
    OracleLimit { edges: usize, limit: usize },
    #[error("degenerate parent branch {0}")]
    DegenerateParent(usize),
    #[error("degenerate path in barycenter candidate")]
    DegeneratePath,
    #[error("malformed branch decomposition tree: {0}")]
    MalformedBdt(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("interpolation parameter {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
