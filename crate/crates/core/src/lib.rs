//! Constant-delay evaluation of free-connex acyclic conjunctive queries on
//! a color-refinement index.

pub mod analysis;
pub mod arb2bin;
pub mod bin2graph;
pub mod check;
pub mod engine;
pub mod error;
pub mod eval;
pub mod generate;
pub mod index;
pub mod model;
pub mod oracle;
pub mod refine;
pub mod text;

pub use error::{Error, Result};
pub use eval::pipeline::{IndexedDatabase, Route};
pub use index::ColorIndex;
pub use model::{AnswerSet, ConjunctiveQuery, Database, Schema};

/// Exact answer counts.
pub type ExactCount = num_bigint::BigUint;
/// Machine-word counts; may overflow on large outputs.
pub type FastCount = u64;
