//! Square-root functional response predator-prey dynamics.
//!
//! The model is
//!
//! ```text
//! dx/dt = r x (1 - x) - y sqrt(x)
//! dy/dt = -alpha y + beta y sqrt(x)
//! ```
//!
//! with prey `x >= 0` and predator `y >= 0`. The `sqrt(x)` response makes the
//! field non-Lipschitz on the predator axis, so prey can reach zero in finite
//! time. This crate provides:
//!
//! - [`model`]: parameter validation, equilibria, Jacobian stability
//!   classification and the closed-form extinction bounds.
//! - [`dynamics`]: an adaptive Dormand-Prince integrator running in
//!   `u = sqrt(x)` coordinates with root-located extinction events, plus a
//!   fixed-step RK4 reference solver.
//! - [`basin`]: outcome classification of initial conditions, separatrix
//!   bracketing, parallel grid sweeps and trajectory bound verification.

pub mod basin;
pub mod dynamics;
pub mod error;
pub mod model;

pub use basin::{
    audit_monotonicity, classify_ic, grid_sweep, separatrix_scan, verify_theorem_bounds,
    BasinGrid, BasinVerdict, BoundCheck, BoundsReport, ExtinctionTimeCheck, MonotonicityAudit,
    Region, ScanFailure, ScanOptions, SeparatrixPoint, UndeterminedReason,
};
pub use dynamics::{
    integrate, integrate_raw_reference, rhs_raw, rhs_regularized, IntegratorConfig,
    RegularizedState, Sample, SampleKind, StepStats, Terminal, Trajectory,
};
pub use error::{BasinError, IntegrateError, ModelError};
pub use model::{
    classify_interior, envelope, equilibria, extinction_bound, extinction_bound_from_rates,
    interior_equilibrium, jacobian, k_threshold, validate_params, Equilibrium, EquilibriumKind,
    ExtinctionBoundReport, InteriorClassification, ModelParams, Stability, State,
};
