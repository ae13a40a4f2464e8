//! Crate-wide error type.
//!
//! Variants are grouped by how the CLI maps them to exit codes: bad input
//! (config/density validation) is distinguished from numerical-contract
//! violations discovered while running.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The experiment configuration is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A piecewise-constant initial density failed validation.
    #[error("invalid initial density: {0}")]
    Density(String),

    /// A requested time step exceeds the stability/accuracy budget.
    #[error("step size {dt:.6e} exceeds the limit {limit:.6e}")]
    StepSize { dt: f64, limit: f64 },

    /// Vehicle ordering/spacing broke by more than float dust — an internal bug.
    #[error("spacing invariant violated: {0}")]
    Spacing(String),

    /// The flux ρ·v(ρ) is not unimodal on [0,1]; the Godunov flux formula needs it.
    #[error("flux of model '{0}' is not unimodal on [0,1]")]
    NonUnimodalFlux(String),

    /// A wave reached the padded boundary of the reference grid.
    #[error("wave reached the padded grid boundary (t = {t:.6})")]
    BoundaryBreach { t: f64 },

    /// A test function's support escapes the simulated time window.
    #[error("test function time support [{lo:.6}, {hi:.6}] escapes [0, {t_end:.6}]")]
    PhiSupport { lo: f64, hi: f64, t_end: f64 },

    /// Too few trajectory snapshots fall inside the test function's support.
    #[error("only {found} snapshots inside the test function's time support; need at least {need}")]
    SnapshotResolution { found: usize, need: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
