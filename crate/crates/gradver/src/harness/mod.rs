//! Differential testing harness: co-execution against the verification
//! graph and a seeded random-program fuzzer.

pub mod coexec;
pub mod fuzz;

pub use coexec::{coexecute, CoExecOpts, CoExecReport, Violation};
pub use fuzz::{accept, fuzz, gen_one, FuzzConfig, FuzzFlag, FuzzReport};
