//! Comfort-optimal vehicle trajectory planning inside drivable corridors.
//!
//! The planner discretizes the vehicle state over time, connects
//! consecutive states through a kinematic bicycle model with constant
//! jerk and curvature rate per interval, and solves the resulting sparse
//! nonlinear program: comfort costs in the objective, continuity as
//! equality constraints, corridor collision and kinematic limits as
//! inequalities. Replanning cycles warm-start the solver from the
//! previous solution.
//!
//! Entry points:
//! - [`planner::plan`] runs the full pipeline for one scenario.
//! - [`scenario_file`] loads scenarios from TOML files.
//! - The `corridor-planner` binary exposes plan / plot / benchmark /
//!   gradcheck subcommands; `examples/` shows library usage per
//!   capability.

pub mod corridor;
pub mod error;
pub mod geometry;
pub mod kinematics;

pub use error::{Error, Result};
