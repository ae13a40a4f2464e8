//! Velocity laws shared by the particle system and the continuum equation.
//!
//! A [`VelocityModel`] packages a density→speed map `v : [0,1] → [0,1]`
//! (non-increasing, `v(0) = 1`, `v(1) = 0`) together with its derivative and
//! two declared structural constants controlling the spacing form
//! `V(y) = v(1/y)` on `y ∈ [1, ∞)`:
//!
//! * `sigma > 1` such that `V(y) ≥ 1 − y^(1−sigma)` for all `y ≥ 1`
//!   (a floor on how fast free-flow speed is approached), and
//! * `slope_bound > 0` such that `y²·V'(y) ≤ slope_bound` for all `y ≥ 1`
//!   (equivalently `−v'(ρ) ≤ slope_bound`), which also caps the spacing
//!   growth rate and sets the particle time-step budget.
//!
//! Constants are declared by the model author and audited numerically by
//! [`VelocityModel::verify_assumptions`]; they are never inferred.

use crate::error::{Error, Result};

/// Absolute slack allowed on domain boundaries before an input is rejected.
pub const DOMAIN_TOL: f64 = 1e-12;

/// A speed law `v(ρ)` with the metadata the solvers rely on.
///
/// Models are immutable value types; custom laws are added in code by
/// constructing one with new function pointers and constants.
#[derive(Clone, Copy)]
pub struct VelocityModel {
    name: &'static str,
    v: fn(f64) -> f64,
    v_prime: fn(f64) -> f64,
    sigma: f64,
    slope_bound: f64,
}

impl std::fmt::Debug for VelocityModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityModel")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .field("slope_bound", &self.slope_bound)
            .finish()
    }
}

impl VelocityModel {
    /// Linear law `v(ρ) = 1 − ρ`; `sigma = 2`, `slope_bound = 1`, both tight.
    pub fn greenshields() -> Self {
        VelocityModel {
            name: "greenshields",
            v: |rho| 1.0 - rho,
            v_prime: |_| -1.0,
            sigma: 2.0,
            slope_bound: 1.0,
        }
    }

    /// Quadratic law `v(ρ) = 1 − ρ²`; `sigma = 3`, `slope_bound = 2`, both tight.
    pub fn quadratic() -> Self {
        VelocityModel {
            name: "quadratic",
            v: |rho| 1.0 - rho * rho,
            v_prime: |rho| -2.0 * rho,
            sigma: 3.0,
            slope_bound: 2.0,
        }
    }

    /// Look a built-in model up by its config name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "greenshields" => Ok(Self::greenshields()),
            "quadratic" => Ok(Self::quadratic()),
            other => Err(Error::Config(format!(
                "unknown velocity model '{other}' (built-ins: greenshields, quadratic)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Declared exponent of the free-flow approach floor.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Declared bound on `y²·V'(y)`; the time-step limit is `ell / slope_bound`.
    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    /// `v(ρ)`, rejecting densities outside `[0,1]` beyond [`DOMAIN_TOL`].
    pub fn speed_at_density(&self, rho: f64) -> Result<f64> {
        if !((-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&rho)) {
            return Err(Error::Domain(format!("density {rho} outside [0, 1]")));
        }
        Ok(self.v_raw(rho))
    }

    /// `V(y) = v(1/y)`, rejecting spacings below 1 beyond [`DOMAIN_TOL`].
    /// `y = +∞` is a valid input and yields the free-flow speed 1.
    pub fn speed_at_spacing(&self, y: f64) -> Result<f64> {
        if y < 1.0 - DOMAIN_TOL || y.is_nan() {
            return Err(Error::Domain(format!("spacing {y} below 1")));
        }
        Ok(self.speed_raw(y.max(1.0)))
    }

    /// Flux `f(ρ) = ρ·v(ρ)` of the continuum equation.
    pub fn flux(&self, rho: f64) -> Result<f64> {
        Ok(rho.clamp(0.0, 1.0) * self.speed_at_density(rho)?)
    }

    /// `v(ρ)` with the input clamped into `[0,1]`; result clamped into `[0,1]`.
    pub(crate) fn v_raw(&self, rho: f64) -> f64 {
        (self.v)(rho.clamp(0.0, 1.0)).clamp(0.0, 1.0)
    }

    /// `V(y)` without the domain check (callers guarantee `y ≥ 1`).
    pub(crate) fn speed_raw(&self, y: f64) -> f64 {
        debug_assert!(y >= 1.0);
        self.v_raw(1.0 / y)
    }

    /// `f(ρ)` without the domain check.
    pub(crate) fn flux_raw(&self, rho: f64) -> f64 {
        let r = rho.clamp(0.0, 1.0);
        r * self.v_raw(r)
    }

    /// `V'(y) = −v'(1/y)/y² ≥ 0` for `y ≥ 1` (zero in the free-flow limit).
    pub(crate) fn spacing_slope(&self, y: f64) -> f64 {
        debug_assert!(y >= 1.0);
        if y.is_infinite() {
            return 0.0;
        }
        let rho = 1.0 / y;
        (-(self.v_prime)(rho) / (y * y)).max(0.0)
    }

    /// `f'(ρ) = v(ρ) + ρ·v'(ρ)`, used to size reference-grid time steps.
    pub(crate) fn flux_slope(&self, rho: f64) -> f64 {
        let r = rho.clamp(0.0, 1.0);
        self.v_raw(r) + r * (self.v_prime)(r)
    }

    /// Audit the declared constants and the qualitative shape of `v` on a
    /// geometric spacing grid spanning `[1, 10^6]` (and a uniform density
    /// grid) with `grid_size ≥ 2` points per grid.
    ///
    /// Margins are "worst slack": a negative margin means the corresponding
    /// assumption failed somewhere on the grid.
    pub fn verify_assumptions(&self, grid_size: usize) -> AssumptionReport {
        assert!(grid_size >= 2, "grid_size must be at least 2");
        let mut floor_margin = f64::INFINITY;
        let mut slope_margin = f64::INFINITY;
        for j in 0..grid_size {
            let y = 10f64.powf(6.0 * j as f64 / (grid_size - 1) as f64);
            let floor = 1.0 - y.powf(1.0 - self.sigma);
            floor_margin = floor_margin.min(self.speed_raw(y) - floor);
            slope_margin = slope_margin.min(self.slope_bound - y * y * self.spacing_slope(y));
        }
        let mut monotone_margin = f64::INFINITY;
        for j in 0..grid_size {
            let rho = j as f64 / (grid_size - 1) as f64;
            monotone_margin = monotone_margin.min(-(self.v_prime)(rho));
        }
        AssumptionReport {
            floor_margin,
            slope_margin,
            monotone_margin,
            v0_error: (self.v_raw(0.0) - 1.0).abs(),
            v1_error: self.v_raw(1.0).abs(),
        }
    }
}

/// Worst-case slacks found by [`VelocityModel::verify_assumptions`].
#[derive(Clone, Copy, Debug)]
pub struct AssumptionReport {
    /// `min_y V(y) − (1 − y^(1−sigma))`; ≥ 0 when the free-flow floor holds.
    pub floor_margin: f64,
    /// `min_y slope_bound − y²·V'(y)`; ≥ 0 when the declared bound holds.
    pub slope_margin: f64,
    /// `min_ρ −v'(ρ)`; ≥ 0 when `v` is non-increasing.
    pub monotone_margin: f64,
    /// `|v(0) − 1|`.
    pub v0_error: f64,
    /// `|v(1)|`.
    pub v1_error: f64,
}

impl AssumptionReport {
    /// All margins non-negative and boundary values exact, up to `tol`.
    pub fn pass(&self, tol: f64) -> bool {
        self.floor_margin >= -tol
            && self.slope_margin >= -tol
            && self.monotone_margin >= -tol
            && self.v0_error <= tol
            && self.v1_error <= tol
    }
}
