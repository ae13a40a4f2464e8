//! Initial densities and their conversion to vehicle positions.
//!
//! An [`InitialDensity`] is a piecewise-constant profile with values in
//! `[0,1]` and positive mass. After [`InitialDensity::normalize`] (an axis
//! stretch that leaves values untouched) its mass is exactly 1 and it can be
//! discretized: with `N` vehicles and `ell = 1/(N+1)`, vehicle boundary `i`
//! sits at the `(i+1)·ell` quantile of the cumulative distribution,
//!
//! ```text
//! z_i(0) = inf { z : CDF(z) ≥ (i+1)·ell },   i = 0, …, N−1,
//! ```
//!
//! so each gap between consecutive boundaries carries mass exactly `ell`.
//! The infimum resolves plateaus of the CDF (zero-density stretches) to
//! their *left* edge. Because the density never exceeds 1, every scaled gap
//! `y_i = (z_i − z_{i−1})/ell` starts at least 1.

use crate::error::{Error, Result};
use crate::step_fn::StepFunction;

/// Slack allowed when checking that a density is normalized.
pub const MASS_TOL: f64 = 1e-12;

/// A validated piecewise-constant initial density.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl InitialDensity {
    /// Validate and build. Breakpoints must be finite and strictly
    /// increasing, values must lie in `[0,1]` (up to 1e-12, then clamped),
    /// and the total mass must be positive.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() + 1 {
            return Err(Error::Density(format!(
                "{} breakpoints and {} values do not form pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Density("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Density("breakpoints must be strictly increasing".into()));
        }
        let mut clamped = Vec::with_capacity(values.len());
        for &v in &values {
            if !(-1e-12..=1.0 + 1e-12).contains(&v) || !v.is_finite() {
                return Err(Error::Density(format!("density value {v} outside [0, 1]")));
            }
            clamped.push(v.clamp(0.0, 1.0));
        }
        let d = InitialDensity { breakpoints, values: clamped };
        if d.mass() <= 0.0 {
            return Err(Error::Density("density must have positive mass".into()));
        }
        Ok(d)
    }

    /// Unit block `χ_[0,1)`: the fully jammed platoon.
    pub const BLOCK: &'static str = "block";
    /// Two unit blocks `χ_[0,0.5) + χ_[1,1.5)` separated by an empty gap.
    pub const TWO_BLOCKS: &'static str = "two_blocks";

    pub fn block() -> Self {
        InitialDensity { breakpoints: vec![0.0, 1.0], values: vec![1.0] }
    }

    pub fn two_blocks() -> Self {
        InitialDensity {
            breakpoints: vec![0.0, 0.5, 1.0, 1.5],
            values: vec![1.0, 0.0, 1.0],
        }
    }

    /// Jump data `rho_left` on `[−1,0)` and `rho_right` on `[0,1)`.
    pub fn riemann(rho_left: f64, rho_right: f64) -> Result<Self> {
        Self::new(vec![-1.0, 0.0, 1.0], vec![rho_left, rho_right])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }

    pub fn to_step_function(&self) -> StepFunction {
        StepFunction::new(self.breakpoints.clone(), self.values.clone())
            .expect("a valid density is a valid step function")
    }

    /// Rescale the axis about the left edge so the mass becomes exactly 1:
    /// `z ↦ x_0 + (z − x_0)/mass`. Values are unchanged, so they stay in
    /// `[0,1]`. Densities already normalized within [`MASS_TOL`] are
    /// returned as they are.
    pub fn normalize(&self) -> Result<InitialDensity> {
        let mass = self.mass();
        if (mass - 1.0).abs() <= MASS_TOL {
            return Ok(self.clone());
        }
        let x0 = self.breakpoints[0];
        let breakpoints = self
            .breakpoints
            .iter()
            .map(|&z| x0 + (z - x0) / mass)
            .collect();
        InitialDensity::new(breakpoints, self.values.clone())
    }

    /// Running masses at each breakpoint (`cum[0] = 0`).
    fn cumulative(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.breakpoints.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for (v, w) in self.values.iter().zip(self.breakpoints.windows(2)) {
            acc += v * (w[1] - w[0]);
            cum.push(acc);
        }
        cum
    }

    /// `inf { z : CDF(z) ≥ q }` for `0 < q < mass`, resolving CDF plateaus
    /// to their left edge.
    fn quantile(&self, cum: &[f64], q: f64) -> f64 {
        // Tolerate rounding in the running sums: treat a piece as reaching q
        // if it gets within MASS_TOL of it.
        for j in 0..self.values.len() {
            if cum[j + 1] >= q - MASS_TOL {
                let v = self.values[j];
                if v <= 0.0 {
                    // A plateau that (within tolerance) attains q: its left
                    // edge is the infimum.
                    return self.breakpoints[j];
                }
                let z = self.breakpoints[j] + (q - cum[j]).max(0.0) / v;
                return z.min(self.breakpoints[j + 1]);
            }
        }
        unreachable!("quantile {q} beyond total mass {}", cum[cum.len() - 1]);
    }

    /// Place `n ≥ 2` vehicle boundaries on a normalized density.
    pub fn initial_positions(&self, n: usize) -> Result<InitialLayout> {
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 vehicles, got {n}")));
        }
        if (self.mass() - 1.0).abs() > MASS_TOL {
            return Err(Error::Density(format!(
                "density must be normalized before placement (mass = {})",
                self.mass()
            )));
        }
        let ell = 1.0 / (n as f64 + 1.0);
        let cum = self.cumulative();
        let positions: Vec<f64> = (0..n)
            .map(|i| self.quantile(&cum, (i as f64 + 1.0) * ell))
            .collect();
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Spacing(
                "quantile placement produced non-increasing positions".into(),
            ));
        }
        let spacings: Vec<f64> = positions.windows(2).map(|w| (w[1] - w[0]) / ell).collect();
        if let Some(bad) = spacings.iter().find(|&&y| y < 1.0 - 1e-12) {
            return Err(Error::Spacing(format!(
                "initial scaled gap {bad} below 1; density exceeded 1 somewhere"
            )));
        }
        Ok(InitialLayout { n, ell, positions, spacings })
    }
}

/// Vehicle boundary positions produced by quantile placement.
#[derive(Clone, Debug)]
pub struct InitialLayout {
    /// Number of boundaries (vehicles); the last one is the leader.
    pub n: usize,
    /// Mass per gap, `1/(n+1)`.
    pub ell: f64,
    /// Strictly increasing boundary positions, length `n`.
    pub positions: Vec<f64>,
    /// Scaled gaps `y_i ≥ 1`, length `n − 1`.
    pub spacings: Vec<f64>,
}
