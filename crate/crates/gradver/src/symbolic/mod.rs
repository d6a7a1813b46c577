//! Symbolic values, terms, the entailment oracle, and symbolic states.

pub mod term;
pub mod solver;
pub mod state;

pub use solver::{implies, sat, Sat, Truth};
pub use state::{Chunk, FieldChunk, SymPerm, SymState};
pub use term::{Fresh, Lit, SymVal, Term};
