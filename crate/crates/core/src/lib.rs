//! Numerical laboratory for the steady diffusive logistic equation
//!
//! ```text
//! mu theta'' + theta (m(x) - theta) = 0  on (0, 1),   theta'(0) = theta'(1) = 0
//! ```
//!
//! Solves for the unique positive steady state, its derivative with respect to
//! the diffusion rate `mu`, the large-diffusion corrector, and checks the
//! monotonicity properties of `max theta`, `min theta` and `int theta^3`.

pub mod asymptotics;
pub mod error;
pub mod grid;
pub mod resource;
pub mod sensitivity;
pub mod steady;
pub mod sweep;
pub mod verdict;

pub use asymptotics::{
    compute_asymptotics, convergence_order, expansion_error, hunt_positive_sensitivity,
    AsymptoticData, HuntCandidate, HuntOptions, HuntResult, OrderEstimate, ProfileFamily,
};
pub use error::{Error, Result};
pub use grid::{Field, Grid, PoissonSolution};
pub use resource::{classify_conditions, ConditionReport, Monotonicity, ResourceProfile};
pub use steady::{
    check_bounds, continue_to, newton_solve, parabolic_relax, residual, solve_with_continuation,
    BoundsCheck, ContinuationOptions, NewtonOptions, Relaxation, SteadyState,
};
pub use sensitivity::{
    fd_sensitivity_check, moment_derivative_check, sandwich_check, solve_sensitivity,
    SandwichReport, Sensitivity,
};
pub use sweep::{
    default_mu_grid, log_spaced, monotonicity_verdict, run_sweep, sign_changes, Column,
    Direction, MonotonicityVerdict, RowDiagnostics, SweepOptions, SweepRow, SweepTable,
};
pub use verdict::Status;
