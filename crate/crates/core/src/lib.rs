//! Asymptotic-preserving IMEX finite-volume solver for the low-Mach
//! barotropic Euler equations on periodic Cartesian grids.
//!
//! Acoustic terms are integrated implicitly through a linearised pressure,
//! which turns the mass update into one constant-coefficient Helmholtz solve
//! per stage; convection is explicit. Three space discretisations are
//! provided, differing in the mass divergence and the convective flux
//! (upwind, or entropy conservative with optional dissipation).

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod imex;
pub mod model;
pub mod problems;
pub mod spatial;
pub mod stepper;

pub use diagnostics::{compute_eoc, global_energies, l2_error, DiagnosticsRow, EocTable, Variable};
pub use elliptic::{assemble_dense, solve_helmholtz, HelmholtzOperator, HelmholtzSolver};
pub use error::{Error, Result};
pub use grid::{face_average, face_jump, integrate, sample_initial_condition, Field, PeriodicGrid};
pub use imex::{ars111, ars222, validate_tableau, DoubleTableau, Scheme, TableauViolation};
pub use model::{max_wave_speed, CellState, EntropyQuantities, ModelParams};
pub use problems::{ProblemId, ProblemSpec};
pub use spatial::{DiscretisationType, SpaceKind};
pub use stepper::{
    compute_dt, run, MemorySink, PressureMode, RunOutcome, RunSink, StepControls, Stepper,
};
