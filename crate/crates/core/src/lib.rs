//! Generalized Orlicz (Musielak–Orlicz) Φ-functions: evaluation, structural
//! condition checks, the regularized autonomous approximation on balls, and a
//! grid solver for φ-energies.

pub mod analysis;
pub mod conditions;
pub mod csv;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod numeric;
pub mod phi;
pub mod regularize;
pub mod solver;

pub use error::{Error, Result};
