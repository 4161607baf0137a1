//! Solvers for the collision-induced breakage equation: a finite-volume
//! discretisation integrated in time, and truncated homotopy series (HAM and
//! AHPM), together with error and moment diagnostics.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fvm;
pub mod grid;
pub mod metrics;
pub mod ode;
pub mod problem;
pub mod quadrature;
pub mod series;

pub use error::{CbeError, Result};
pub use fvm::{integrate, FvmOperator, FvmSolution, MomentRow};
pub use grid::{build_grid, project_initial, Grid, GridFunction, GridScheme};
pub use ode::{StepStats, Stepper};
pub use problem::{registry_case, BreakageSpec, CaseSpec, InitialCondition, KernelSpec, CASE_IDS};
pub use series::{SeriesBuilder, SeriesMethod, SeriesSolution, TimePoly};
