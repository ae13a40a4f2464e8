//! Compactly supported piecewise-constant functions on the line.
//!
//! A [`StepFunction`] holds strictly increasing breakpoints `b_0 < … < b_p`
//! and `p` values; the function equals `values[j]` on `[b_j, b_{j+1})` and is
//! identically zero outside `[b_0, b_p)`. Mass, total variation and pairwise
//! L¹ distance are computed exactly (no quadrature), which is what makes the
//! convergence and contraction measurements in this crate trustworthy.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Build a validated step function. `breakpoints` must be finite and
    /// strictly increasing with `values.len() + 1 == breakpoints.len()`;
    /// both empty encodes the zero function.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() && values.is_empty() {
            return Ok(Self::zero());
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::Domain(format!(
                "{} breakpoints require {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite breakpoint or value".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        Ok(StepFunction { breakpoints, values })
    }

    /// The identically-zero function.
    pub fn zero() -> Self {
        StepFunction { breakpoints: Vec::new(), values: Vec::new() }
    }

    /// Indicator-style single block: `h · χ_[a, b)`.
    pub fn block(a: f64, b: f64, h: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![h])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise evaluation (right-continuous; zero outside the support).
    pub fn eval(&self, z: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return 0.0;
        }
        let n = self.breakpoints.len();
        if z < self.breakpoints[0] || z >= self.breakpoints[n - 1] {
            return 0.0;
        }
        // Last index with breakpoint ≤ z.
        let j = self.breakpoints.partition_point(|&b| b <= z) - 1;
        self.values[j]
    }

    /// `∫ f dz`, exact up to float rounding.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }

    /// Total variation on the whole line, counting the jumps onto and off
    /// the support: `|v_1| + Σ|v_{j+1} − v_j| + |v_p|`.
    pub fn total_variation(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let interior: f64 = self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        self.values[0].abs() + interior + self.values[self.values.len() - 1].abs()
    }

    /// `(min, max)` of the support, or `None` for the zero function.
    pub fn support(&self) -> Option<(f64, f64)> {
        if self.breakpoints.is_empty() {
            None
        } else {
            Some((self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1]))
        }
    }

    /// Exact `‖f − g‖_{L¹(ℝ)}` via the merged breakpoint grid.
    pub fn l1_distance(&self, other: &StepFunction) -> f64 {
        let mut grid: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        if grid.is_empty() {
            return 0.0;
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let mut total = 0.0;
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            total += (self.eval(mid) - other.eval(mid)).abs() * (w[1] - w[0]);
        }
        total
    }

    /// Write `z_left,z_right,value` rows (with header).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z_left,z_right,value")?;
        for (v, w) in self.values.iter().zip(self.breakpoints.windows(2)) {
            writeln!(out, "{},{},{}", w[0], w[1], v)?;
        }
        Ok(())
    }
}
