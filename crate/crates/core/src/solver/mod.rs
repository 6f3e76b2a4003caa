//! Finite-difference minimization of `∫ φ(x, |Du|)` under Dirichlet data.
//!
//! Each square cell is split into two linear triangles, so the discrete
//! energy is convex and its gradient exact.

mod comparison;
mod energy;
mod grid;
mod minimize;

pub use comparison::{comparison_metrics, solve_comparison, Comparison, ComparisonMetrics, MIN_CELLS_ACROSS};
pub use energy::Energy;
pub use grid::{Grid, NodeKind};
pub use minimize::{minimize, minimize_from, quadratic_start, DiscreteProblem, SolveOptions, SolveResult};
