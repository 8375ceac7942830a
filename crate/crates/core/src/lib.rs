//! Synthetic care-pathway cohorts, clinical knowledge graphs, and outcome
//! prediction with graph embeddings and tabular baselines.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! * [`pathway`] generates patients with timed care events from a declarative
//!   cohort configuration and validates the marginals.
//! * [`kg`] turns patients into RDF graphs in several schema and
//!   time-modelling flavours; [`rdf`] holds the term model and N-Triples I/O.
//! * [`models`] trains TransE, random-walk CBOW and relational GCN embeddings
//!   on top of the small autodiff engine in [`grad`].
//! * [`baselines`] fits logistic regression, random forest and feed-forward
//!   classifiers on the tabular encoding of the same cohort.
//! * [`eval`] runs repeated stratified experiments and writes metric reports.

pub mod baselines;
pub mod eval;
pub mod exec;
pub mod grad;
pub mod kg;
pub mod models;
pub mod pathway;
pub mod rdf;
pub mod rng;
