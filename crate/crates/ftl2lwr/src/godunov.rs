//! First-order Godunov reference solver for the scalar conservation law
//! `ρ_t + f(ρ)_z = 0`, `f(ρ) = ρ·v(ρ)`.
//!
//! The numerical flux across a cell edge is the extremum of `f` between the
//! adjacent states — `min` on increasing data, `max` on decreasing data —
//! which for a unimodal flux has the classical closed form in terms of the
//! maximizer `ρ*`. The scheme is monotone, hence total-variation
//! diminishing and convergent to the entropy solution; it serves as the
//! trusted reference wherever no closed-form solution exists. Accuracy is
//! bought with cells, not order.
//!
//! Unimodality of `f`, the maximizer, and the largest wave speed `max|f′|`
//! are established once per model by a dense sign scan of `f′`; the time
//! step obeys `dt = cfl·dx/max|f′|` and the spatial domain is padded so
//! that no wave can reach the boundary before `t_end`, making the zero-flux
//! closure at the domain edges exact (and discrete mass conservation
//! machine-exact).

use crate::density::InitialDensity;
use crate::error::{Error, Result};
use crate::step_fn::StepFunction;
use crate::velocity::VelocityModel;

/// How small a boundary cell average must stay for the padded domain to be
/// considered untouched by waves.
const BOUNDARY_TOL: f64 = 1e-10;

/// A velocity model vetted for the finite-volume solver: unimodal flux with
/// a located maximizer and a measured wave-speed bound.
#[derive(Clone, Debug)]
pub struct GodunovScheme {
    model: VelocityModel,
    rho_star: f64,
    flux_star: f64,
    wave_speed: f64,
}

impl GodunovScheme {
    /// Vet a model: scan `f′` on a dense grid for a single sign change,
    /// refine the maximizer by bisection, and record `max|f′|`.
    pub fn new(model: &VelocityModel) -> Result<Self> {
        const SAMPLES: usize = 10_000;
        const SIGN_TOL: f64 = 1e-12;
        let grid: Vec<f64> = (0..=SAMPLES)
            .map(|j| j as f64 / SAMPLES as f64)
            .collect();
        let slopes: Vec<f64> = grid.iter().map(|&r| model.flux_slope(r)).collect();
        let wave_speed = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let first_neg = slopes.iter().position(|&s| s < -SIGN_TOL);
        let rho_star = match first_neg {
            None => 1.0,
            Some(0) => 0.0,
            Some(k) => {
                if slopes[k..].iter().any(|&s| s > SIGN_TOL) {
                    return Err(Error::NonUnimodalFlux(model.name().to_string()));
                }
                // Bisect f′ to the maximizer inside the sign-change cell.
                let (mut lo, mut hi) = (grid[k - 1], grid[k]);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if model.flux_slope(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        Ok(GodunovScheme {
            model: *model,
            rho_star,
            flux_star: model.flux_raw(rho_star),
            wave_speed: wave_speed.max(1e-12),
        })
    }

    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    /// Measured bound on `|f′|` over `[0, 1]`.
    pub fn wave_speed(&self) -> f64 {
        self.wave_speed
    }

    /// The Godunov flux: `min_{[a,b]} f` when `a ≤ b`, `max_{[b,a]} f`
    /// when `a > b` — for a unimodal flux, endpoint values except across
    /// the maximizer.
    pub fn numerical_flux(&self, a: f64, b: f64) -> f64 {
        let fa = self.model.flux_raw(a);
        let fb = self.model.flux_raw(b);
        if a <= b {
            fa.min(fb)
        } else if b <= self.rho_star && self.rho_star <= a {
            self.flux_star
        } else {
            fa.max(fb)
        }
    }

    /// One conservative update `u_i ← u_i − λ(F_{i+1/2} − F_{i−1/2})` with
    /// zero flux through both ends of the array; `λ = dt/dx` must respect
    /// `λ·max|f′| ≤ 1`.
    pub fn step_cell_averages(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        debug_assert!(lambda * self.wave_speed <= 1.0 + 1e-12);
        let n = u.len();
        let mut flux = vec![0.0; n + 1];
        for i in 1..n {
            flux[i] = self.numerical_flux(u[i - 1], u[i]);
        }
        (0..n)
            .map(|i| u[i] - lambda * (flux[i + 1] - flux[i]))
            .collect()
    }

    /// Evolve initial data to `t_end` on a uniform grid, recording cell
    /// averages at `output_times` (sorted, within `[0, t_end]`) and at
    /// `t_end`. The domain is the data's support padded on each side by
    /// `1.2·t_end·max(1, max|f′|)/cfl` — the scheme moves information one
    /// cell per step, i.e. at speed `dx/dt = max|f′|/cfl`, so the pad must
    /// outrun the *numerical* front, not just the physical one. A wave
    /// reaching a boundary cell anyway is reported as a breach.
    pub fn solve(
        &self,
        density: &InitialDensity,
        cells: usize,
        t_end: f64,
        output_times: &[f64],
        cfl: f64,
    ) -> Result<GridSolution> {
        if cells < 2 {
            return Err(Error::Domain(format!("need at least 2 cells, got {cells}")));
        }
        if !(t_end > 0.0) {
            return Err(Error::Domain(format!("t_end {t_end} must be positive")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Domain(format!("cfl {cfl} outside (0, 1]")));
        }
        for w in output_times.windows(2) {
            if w[0] > w[1] {
                return Err(Error::Domain("output times must be sorted".into()));
            }
        }
        if output_times.iter().any(|&t| t < -1e-12 || t > t_end * (1.0 + 1e-12)) {
            return Err(Error::Domain("output times outside [0, t_end]".into()));
        }

        let step0 = density.to_step_function();
        let bps = step0.breakpoints();
        let pad = 1.2 * t_end * self.wave_speed.max(1.0) / cfl;
        let x_min = bps[0] - pad;
        let x_max = bps[bps.len() - 1] + pad;
        let dx = (x_max - x_min) / cells as f64;
        let mut u = project_onto_grid(&step0, x_min, dx, cells);

        let dt_base = cfl * dx / self.wave_speed;
        let mut targets: Vec<f64> = output_times.to_vec();
        if targets.last().is_none_or(|&l| l < t_end * (1.0 - 1e-12)) {
            targets.push(t_end);
        }

        let mut t = 0.0;
        let mut snapshots = Vec::with_capacity(targets.len());
        let mut steps = 0usize;
        for &target in &targets {
            while t < target - 1e-13 * target.max(1.0) {
                let dt = dt_base.min(target - t);
                u = self.step_cell_averages(&u, dt / dx);
                t += dt;
                steps += 1;
                if u[0].abs() > BOUNDARY_TOL || u[cells - 1].abs() > BOUNDARY_TOL {
                    return Err(Error::BoundaryBreach { t });
                }
            }
            t = target;
            snapshots.push(GridSnapshot {
                t,
                averages: u.clone(),
            });
        }
        Ok(GridSolution {
            x_min,
            x_max,
            dx,
            snapshots,
            steps,
        })
    }
}

/// Exact cell averages of a step function on a uniform grid.
fn project_onto_grid(f: &StepFunction, x_min: f64, dx: f64, cells: usize) -> Vec<f64> {
    let mut u = vec![0.0; cells];
    let bps = f.breakpoints();
    let vals = f.values();
    for (j, &val) in vals.iter().enumerate() {
        if val == 0.0 {
            continue;
        }
        let (lo, hi) = (bps[j], bps[j + 1]);
        let i0 = (((lo - x_min) / dx).floor().max(0.0)) as usize;
        let i1 = ((((hi - x_min) / dx).ceil()).max(0.0) as usize).min(cells);
        for (i, cell) in u.iter_mut().enumerate().take(i1).skip(i0) {
            let ca = x_min + i as f64 * dx;
            let cb = ca + dx;
            let overlap = (hi.min(cb) - lo.max(ca)).max(0.0);
            *cell += val * overlap;
        }
    }
    for x in &mut u {
        *x /= dx;
    }
    u
}

/// Cell averages at one output time.
#[derive(Clone, Debug)]
pub struct GridSnapshot {
    pub t: f64,
    pub averages: Vec<f64>,
}

/// A finite-volume run: uniform grid geometry plus time-ordered snapshots.
#[derive(Clone, Debug)]
pub struct GridSolution {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub snapshots: Vec<GridSnapshot>,
    pub steps: usize,
}

impl GridSolution {
    pub fn cells(&self) -> usize {
        self.snapshots.first().map_or(0, |s| s.averages.len())
    }

    pub fn x_centers(&self) -> Vec<f64> {
        (0..self.cells())
            .map(|i| self.x_min + (i as f64 + 0.5) * self.dx)
            .collect()
    }

    /// Total mass `Σ uᵢ·dx` of one snapshot.
    pub fn mass(&self, snapshot: usize) -> f64 {
        self.snapshots[snapshot].averages.iter().sum::<f64>() * self.dx
    }

    /// One snapshot as a step function (for exact L1 comparisons).
    pub fn step_function(&self, snapshot: usize) -> StepFunction {
        let n = self.snapshots[snapshot].averages.len();
        let breakpoints: Vec<f64> = (0..=n).map(|i| self.x_min + i as f64 * self.dx).collect();
        StepFunction::new(breakpoints, self.snapshots[snapshot].averages.clone())
            .expect("uniform grid is strictly increasing")
    }
}
