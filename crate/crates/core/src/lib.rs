//! Solvers for multi-robot formation graph coverage and its connectivity
//! special case: an exact breadth-first oracle, a signature-table dynamic
//! program over nice tree decompositions, and an approximation pipeline
//! for trees built on epsilon-sized tree covers.
//!
//! The crate is organized around one [`instance::Instance`] type consumed
//! by all three solvers; their outputs cross-validate against each other
//! on small inputs.

#![forbid(unsafe_code)]

pub mod decomp;
pub mod fpt;
pub mod error;
pub mod formation;
pub mod graph;
pub mod instance;
pub mod model;
pub mod oracle;

pub use error::{DecompError, GraphError, LibraryError, ModelError, SolveError};
pub use formation::{ConstraintBackend, Formation, FormationLibrary, Transposition};
pub use graph::{Graph, RootedTree, VertexId};
pub use instance::{validate_traversal, Instance, TraversalReport};
pub use model::{Anchor, AnchoredConfiguration, Configuration, RobotTypes, Traversal, TypeId};
