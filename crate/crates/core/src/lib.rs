//! Simulation of nonadiabatic holonomic quantum gates on NV-centre spins
//! driven all-optically, including cavity-mediated two-qubit gates and
//! Lindblad-noise fidelity benchmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod dynamics;
pub mod error;
pub mod holonomy;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod quantum;
pub mod scenario;

pub use error::{Error, Result};
