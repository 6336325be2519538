use std::fmt;

use thiserror::Error;

use crate::graph::VertexId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(VertexId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("nonpositive weight on edge ({0}, {1})")]
    NonpositiveWeight(VertexId, VertexId),
    #[error("nonpositive measure at vertex {0}")]
    NonpositiveMeasure(VertexId),
    #[error("subset is empty")]
    EmptySubset,
    #[error("subset contains window-boundary vertex {0}")]
    BoundaryVertex(VertexId),
    #[error("no chain between {0} and {1}")]
    NoChain(VertexId, VertexId),
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("support must be interior (vertex {0} is on the window boundary)")]
    SupportNotInterior(VertexId),
    #[error("beta violated on subset closure: symmetrized S asymmetric by {0:e}")]
    BetaViolated(f64),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("subset of size {size} exceeds the exact enumeration limit {limit}; use the heuristic")]
    SubsetTooLarge { size: usize, limit: usize },
    #[error("could not generate a connected graph after {0} attempts")]
    GenerationFailed(usize),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Graph file parse failure, tagged with the 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingHeader,
    UnknownDirective(String),
    Malformed(String),
    BadNumber(String),
    DuplicateVertex(String),
    DuplicateEdge(String, String),
    SelfLoop(String),
    NonpositiveWeight(String),
    NonpositiveMeasure(String),
    MissingMeasure(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MissingHeader => write!(f, "expected header `graph v2`"),
            ParseErrorKind::UnknownDirective(d) => write!(f, "unknown directive `{d}`"),
            ParseErrorKind::Malformed(s) => write!(f, "malformed line: {s}"),
            ParseErrorKind::BadNumber(s) => write!(f, "bad number `{s}`"),
            ParseErrorKind::DuplicateVertex(v) => write!(f, "duplicate vertex {v}"),
            ParseErrorKind::DuplicateEdge(a, b) => write!(f, "duplicate edge ({a}, {b})"),
            ParseErrorKind::SelfLoop(v) => write!(f, "self-loop at vertex {v}"),
            ParseErrorKind::NonpositiveWeight(s) => write!(f, "nonpositive weight {s}"),
            ParseErrorKind::NonpositiveMeasure(s) => write!(f, "nonpositive measure {s}"),
            ParseErrorKind::MissingMeasure(v) => write!(f, "missing measure for vertex {v}"),
        }
    }
}
