//! A gradual static verifier and reference interpreter for a small
//! imperative language with implicit dynamic frames and recursive
//! (abstract) predicates.
//!
//! Pipeline: parse (`parser`) → well-formedness (`wf`) → static symbolic
//! verification (`verifier`) producing a state graph annotated with run-time
//! checks, which the dynamic semantics (`runtime`) either ignores (full
//! checking mode) or uses to guard only the optimistically-assumed facts
//! (guarded mode). The `harness` module co-executes both sides and
//! cross-checks them against the soundness theorems.

pub mod span;
pub mod ast;
pub mod lexer;
pub mod parser;
pub mod wf;
pub mod symbolic;
pub mod verifier;
pub mod runtime;
pub mod harness;
