//! Krotov's method for quantum optimal control.
//!
//! The crate covers the first-order construction and the second-order
//! (Konnov–Krotov) construction, in which the field update carries an extra
//! term weighted by `σ(t)`. The parameters of `σ(t)` can be fixed by hand,
//! bounded analytically from the problem structure, or estimated numerically
//! from the optimization history.
//!
//! Layout:
//!
//! - [`grid`], [`state`], [`operator`], [`field`], [`textio`]: numeric types,
//!   time grids, control fields and their plain-text formats.
//! - [`propagator`], [`dynamics`]: Chebychev / dense-exponential time steps and
//!   forward / backward (costate) propagation.
//! - [`functionals`], [`running_cost`]: final-time functionals and the
//!   intermediate-time costs `g_a`, `g_b`.
//! - [`sigma`], [`estimate`], [`engine`]: the optimization loop.
//! - [`models`]: ready-made control problems.

pub mod dynamics;
pub mod engine;
pub mod error;
pub mod estimate;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod models;
pub mod operator;
pub mod propagator;
pub mod running_cost;
pub mod sigma;
pub mod state;
pub mod textio;

pub use num_complex::Complex64 as C64;

pub use dynamics::{Bound, Hamiltonian, HamiltonianFlags, PolynomialControlHamiltonian, PropagationOptions};
pub use engine::{iterate, j_norm, IterationRecord, OptimizationOptions, OptimizationRecord, Problem, ReferenceMode, Termination};
pub use error::{KrotovError, Result};
pub use estimate::{AbcTriple, NumericEstimate};
pub use field::{build_guess_field, ControlField};
pub use functionals::{FinalTimeFunctional, PowerFunctional, RealPart, SquareModulus, Targets};
pub use grid::TimeGrid;
pub use operator::DenseOperator;
pub use propagator::{SourceMode, StepPropagator};
pub use running_cost::{CostOperator, RunningCost};
pub use sigma::{bar_params, sigma_eval, SigmaMode, SigmaParams};
pub use state::{orthonormal_basis, StateSet, StateVector, Trajectory};
