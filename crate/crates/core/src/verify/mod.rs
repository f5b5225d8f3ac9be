//! Manufactured solutions, the error function and its three norms, and
//! convergence studies over mesh families.

pub mod cases;
pub mod norms;
pub mod study;

pub use cases::{ManufacturedCase, CATALOG};
pub use norms::{edge_norm_eb, energy_norm, error_function, l2_norm_e0};
pub use study::{rate, run_convergence_study, ErrorReport, LevelResult, MeshFamily, Study};
