//! Workbench for multitime Landau-Zener (MTLZ) integrable Hamiltonian
//! families: graph screening, family construction and validation, spectral
//! crossing analysis, and transition-probability matrices computed both by
//! the analytic cell-decomposition product and by direct numerical
//! propagation.

pub mod cells;
pub mod error;
pub mod family;
pub mod forms;
pub mod graph;
pub mod hamiltonian;
pub mod monomial;
pub mod nogo;
pub mod propagate;
pub mod scatter;
pub mod spectrum;

pub use error::{MtlzError, Result};
