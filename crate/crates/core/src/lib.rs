//! Beam selection as quadratic unconstrained binary optimization.
//!
//! The crate turns RSRP measurements into two QUBO formulations of the
//! MIMO beam-selection problem, minimizes them with exact and heuristic
//! backends (including a mean-field coherent Ising machine simulator) and
//! scores the decoded beam sets against the original max/second-max
//! objective.
//!
//! Module map:
//!
//! - [`instance`]: RSRP records, scaling, synthetic instances.
//! - [`qubo`]: QUBO/Ising/Max-Cut models, the variable registry and the
//!   penalty builder.
//! - [`model_full`]: the complete linearized formulation and its exact
//!   combinatorial semantics.
//! - [`model_simplified`]: the coverage-only formulation.
//! - [`solvers`]: exhaustive, variable-elimination, SA, Tabu and CIM backends.
//! - [`postprocess`]: post-selection of the best feasible pool entry.
//! - [`bench`]: repetition harness and the efficiency ratio.

pub mod bench;
pub mod error;
pub mod instance;
pub mod model_full;
pub mod model_simplified;
pub mod postprocess;
pub mod qubo;
pub mod solvers;

pub use error::{Error, Result};
