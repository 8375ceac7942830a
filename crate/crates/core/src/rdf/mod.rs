//! RDF term model, an indexed in-memory graph, and N-Triples I/O.
//!
//! Blank nodes are not supported: every resource is an absolute IRI. Literals
//! are limited to the four XSD datatypes the pipeline emits.

mod graph;
mod ntriples;
mod term;

pub use graph::{Graph, NodeRole, TermId};
pub use ntriples::{parse_ntriples, serialize_ntriples, ParseError};
pub use term::{Datatype, Literal, Term, TermError, Triple};

/// Common vocabulary IRIs.
pub mod vocab {
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
}
