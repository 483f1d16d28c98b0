//! Stability index distributions for random linear dynamical systems.
//!
//! Four families are covered: `x' = A x`, the order-`n` linear ODE, the
//! discrete system `B x_{k+1} = A x_k` and the order-`n` difference equation,
//! all with i.i.d. standard normal coefficients. The crate estimates the law
//! of the stability index by Monte Carlo, refines the estimate with the exact
//! linear relations the law must satisfy, and reports known closed forms.

pub mod checks;
pub mod constraints;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod polyroot;
pub mod refine;
pub mod report;

pub use constraints::{build_constraints, exact_probabilities, ConstraintSystem};
pub use error::{Error, Result};
pub use models::{FamilyKind, IndexMethod, ModelFamily};
pub use montecarlo::{
    frequencies, run_estimation, EstimationConfig, IndexHistogram, ProbabilityVector,
};
pub use polyroot::{Polynomial, RootCount, Tolerance};
pub use refine::{least_squares_refine, nonneg_repair};
