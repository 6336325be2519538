//! Directed, non-symmetrically weighted graph Laplacians: structural checks,
//! spectra, sector certificates and isoperimetric constants.

pub mod cheeger;
pub mod error;
pub mod generators;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod spectra;

pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use graph::{DirectedWeightedGraph, Filtration, GraphBuilder, Rational, VertexId, VertexSubset};
