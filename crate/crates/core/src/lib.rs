//! Two bosonic atoms in moving optical microtraps: basis-expansion dynamics,
//! a split-operator grid oracle, gate reconstruction and entanglement measures.

pub mod error;
pub mod physical_model;
pub mod sp_basis;
pub mod tp_basis;
pub mod hamiltonian;
pub mod ode;
pub mod propagator;
pub mod gate_analysis;
pub mod config;
pub mod correlations;
pub mod grid_oracle;
pub mod run;

pub use error::{GateError, Result};
