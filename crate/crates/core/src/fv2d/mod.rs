//! Structured-grid finite-volume engine.

pub mod boundary;
pub mod grid;
pub mod muscl;
pub mod solver;

pub use boundary::{apply_boundaries, BoundaryError, BoundaryKind, BoundarySpec, Edge, MovingShock, Segment};
pub use grid::{GridError, StructuredGrid};
pub use muscl::Limiter;
pub use solver::{
    compute_dt, evaluate, fv_update, integrate, residual_l2, ssprk2_step, Field, Residual, ResidualHistory, Simulation,
    SolverConfig, SolverError, SpatialOrder, StepInfo, TimeStepping,
};
