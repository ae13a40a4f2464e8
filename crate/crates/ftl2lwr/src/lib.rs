//! Follow-the-leader traffic simulation and its hydrodynamic limit.
//!
//! The crate simulates a platoon of `n` vehicle boundaries on the line,
//! where each follower adapts its speed to the gap ahead through a velocity
//! law `V(y) = v(1/y)` and the leader drives at the free-flow speed. The
//! discretization parameter `ℓ = 1/(n+1)` is the mass carried per gap;
//! reconstructing a piecewise-constant density `ρ = 1/y` on each gap turns
//! a platoon into a probability-like density field whose refinement limit
//! solves the scalar conservation law `ρ_t + (ρ v(ρ))_z = 0`.
//!
//! What lives where:
//!
//! - [`velocity`]: the admissible velocity laws and their structural
//!   assumptions (Greenshields and a quadratic law).
//! - [`density`] / [`step_fn`]: initial data, quantile-based particle
//!   placement, and piecewise-constant field arithmetic.
//! - [`ftl`]: the particle system itself — an implicit marching scheme that
//!   preserves the gap lower bound exactly — plus spacing diagnostics.
//! - [`fields`]: the particle-to-field reconstruction.
//! - [`riemann`]: closed-form single-wave and multi-wave solutions for the
//!   Greenshields flux, with exact L1 comparison against step functions.
//! - [`godunov`]: an entropy-respecting finite-volume reference solver for
//!   arbitrary admissible fluxes.
//! - [`entropy`]: smooth bump test functions and the weak entropy-residual
//!   functional used to certify admissibility of the limit.
//! - [`config`] / [`runner`]: JSON experiment configs and the three
//!   orchestrated modes (single run, convergence sweep, entropy suite).

// Guards written as `!(x > y)` instead of `x <= y` are deliberate
// throughout: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod density;
pub mod entropy;
pub mod error;
pub mod fields;
pub mod ftl;
pub mod godunov;
pub mod riemann;
pub mod runner;
pub mod step_fn;
pub mod velocity;

pub use config::ExperimentConfig;
pub use density::{InitialDensity, InitialLayout};
pub use entropy::{kruzkov_residual, BumpTestFunction};
pub use error::{Error, Result};
pub use fields::{density_field, velocity_field};
pub use ftl::{check_spacing_bounds, simulate, FtlState, Trajectory};
pub use godunov::{GodunovScheme, GridSolution};
pub use riemann::{riemann_wave, ExactSolution, PiecewiseLinearField};
pub use runner::{run_convergence, run_entropy_suite, run_single, Report};
pub use step_fn::StepFunction;
pub use velocity::VelocityModel;
