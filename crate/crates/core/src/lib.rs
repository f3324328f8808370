//! Finite-state evolution models with vanishing mutation rates: cost-graph
//! potentials, fixed-rate kernel analysis and inhomogeneous chain simulation.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod builtin;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod potential;
pub mod resistance;
pub mod rng;
pub mod schedule;
pub mod simulate;
pub mod trees;

pub use error::{Error, Result};
pub use graph::{ClassDecomposition, CostGraph, StateId};
pub use model::{CompletionMode, EdgeSpec, EvolutionModel};
