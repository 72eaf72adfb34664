//! Numerical laboratory for anisotropic mean curvature flow of periodic graphs.
//!
//! A graph `{(x, u(x))}` evolving by anisotropic mean curvature flow satisfies
//!
//! ```text
//! u_t = F D²F|_(Du - e0*) (dx^i, dx^j) · u_ij
//! ```
//!
//! where `F` is a positive, convex, degree-one homogeneous area integrand on the
//! dual space and `Du - e0*` is the (downward) normal covector of the graph.
//! Under a smallness condition on the third derivatives of `F` (measured by the
//! Cartan tensor) and/or an evenness condition in the vertical coordinate, the
//! gradient quantity `F(Du - e0*)` stays below an explicit barrier depending only
//! on the height bound and on constants extracted from `F` by constrained
//! extremization over its level sets.
//!
//! The crate provides:
//!
//! - [`integrand`]: built-in integrand families, analytic derivatives up to third
//!   order, the level-set metric, the Cartan tensor, and structural checkers;
//! - [`fd`]: a finite-difference derivative oracle independent of the analytic path;
//! - [`constants`]: the barrier constants (`C1`, `A_P`, trace bounds, `C2`, `S_eps`)
//!   and per-theorem parameter assembly;
//! - [`solver`]: an explicit finite-difference scheme for the flow on periodic
//!   grids in one and two spatial dimensions;
//! - [`estimates`]: barrier evaluation and trajectory verification reports;
//! - [`config`]: INI-style run configuration shared by the CLI.
//!
//! All numerical kernels are generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which the CLI uses throughout.

// Validation sites use `!(x > 0)` rather than `x <= 0` so that NaN inputs
// (reachable through config files) are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod covector;
pub mod error;
pub mod estimates;
pub mod fd;
pub mod initial;
pub mod integrand;
mod linalg;
mod sampling;
pub mod scalar;
pub mod solver;
pub mod structure;
pub mod tensor;

pub use error::Error;
pub use scalar::Real;

/// `f64` instantiations used by the CLI and most tests.
pub type Covector64 = covector::Covector<f64>;
pub type SymTensor2f64 = tensor::SymTensor2<f64>;
pub type SymTensor3f64 = tensor::SymTensor3<f64>;
pub type Integrand64 = integrand::Integrand<f64>;
pub type StructureReport64 = structure::StructureReport<f64>;
pub type SearchBudget64 = constants::SearchBudget;
pub type BarrierParams64 = constants::BarrierParams<f64>;
pub type GridSpec64 = solver::GridSpec<f64>;
pub type GraphState64 = solver::GraphState<f64>;
pub type Trajectory64 = solver::Trajectory<f64>;
pub type EstimateReport64 = estimates::EstimateReport<f64>;
