//! The follow-the-leader particle system.
//!
//! A state holds `n` strictly increasing boundary positions
//! `z_0 < z_1 < … < z_{n−1}`; the scaled gap `y_i = (z_i − z_{i−1})/ell`
//! (for `i = 1…n−1`) always stays ≥ 1. The last boundary is the leader and
//! drives at free-flow speed 1; every other boundary moves at the speed the
//! gap ahead of it allows:
//!
//! ```text
//! ż_{i} = V(y_{i+1})   for i < n−1,      ż_{n−1} = 1.
//! ```
//!
//! Time stepping is backward Euler, solved exactly by a single sweep from
//! the leader to the tail: with the right neighbor's new speed known, each
//! new gap solves the monotone scalar equation
//!
//! ```text
//! w = y_old + (dt/ell)·(V_next − V(w)),
//! ```
//!
//! whose left side minus right side has slope ≥ 1, so a safeguarded Newton
//! iteration converges to machine precision. The implicit form is what
//! makes the structural bounds exact for the discrete flow: `w = 1` gives a
//! nonnegative residual (gaps never drop below 1), and the closed-form
//! supersolution `(y(0)^σ + σt/ell)^(1/σ)` of the gap-growth comparison ODE
//! dominates the iterates because the comparison is evaluated at the
//! end-of-step state (an explicit step would overshoot this concave bound
//! near `y = 1` by an O(cfl) amount that never decays).

use crate::error::{Error, Result};
use crate::velocity::VelocityModel;

/// Relative slack for gap checks: float dust below 1 is clamped, anything
/// larger is treated as a bug.
const GAP_DUST: f64 = 1e-9;

/// Particle positions at one instant.
#[derive(Clone, Debug)]
pub struct FtlState {
    t: f64,
    ell: f64,
    positions: Vec<f64>,
}

impl FtlState {
    /// Validate and build: at least two boundaries, strictly increasing,
    /// every gap at least `ell` (up to float dust).
    pub fn new(t: f64, ell: f64, positions: Vec<f64>) -> Result<Self> {
        if !(ell > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("bad time {t} or gap mass {ell}")));
        }
        if positions.len() < 2 {
            return Err(Error::Domain("need at least two boundaries".into()));
        }
        if positions.iter().any(|z| !z.is_finite()) {
            return Err(Error::Domain("non-finite position".into()));
        }
        for w in positions.windows(2) {
            if w[1] - w[0] < ell * (1.0 - GAP_DUST) {
                return Err(Error::Spacing(format!(
                    "gap {} below ell = {ell}",
                    w[1] - w[0]
                )));
            }
        }
        Ok(FtlState { t, ell, positions })
    }

    pub fn from_layout(layout: &crate::density::InitialLayout) -> Self {
        FtlState {
            t: 0.0,
            ell: layout.ell,
            positions: layout.positions.clone(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Scaled gaps `y_1 … y_{n−1}` (length `n − 1`).
    pub fn spacings(&self) -> Vec<f64> {
        self.positions
            .windows(2)
            .map(|w| (w[1] - w[0]) / self.ell)
            .collect()
    }

    /// Per-gap densities `ρ_i = 1/y_i ∈ (0, 1]` (length `n − 1`).
    pub fn densities(&self) -> Vec<f64> {
        self.spacings().iter().map(|y| (1.0 / y).min(1.0)).collect()
    }

    /// Boundary speeds: `V(y_{i+1})` for followers, 1 for the leader
    /// (length `n`).
    pub fn speeds(&self, model: &VelocityModel) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.positions.len());
        for w in self.positions.windows(2) {
            out.push(model.speed_raw(((w[1] - w[0]) / self.ell).max(1.0)));
        }
        out.push(1.0);
        out
    }

    /// Total variation of the gap speeds, with the leader's free-flow speed
    /// as the right boundary value: `Σ_{i=1}^{n−1} |V_{i+1} − V_i|`, `V_n = 1`.
    pub fn speed_variation(&self, model: &VelocityModel) -> f64 {
        let v: Vec<f64> = self
            .spacings()
            .iter()
            .map(|&y| model.speed_raw(y.max(1.0)))
            .collect();
        let interior: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        interior + (1.0 - v[v.len() - 1]).abs()
    }

    /// Total variation of the gap densities, with the leader's vacuum as the
    /// right boundary value: `Σ_{i=1}^{n−1} |ρ_{i+1} − ρ_i|`, `ρ_n = 0`.
    pub fn density_variation(&self) -> f64 {
        let r = self.densities();
        let interior: f64 = r.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        interior + r[r.len() - 1].abs()
    }
}

/// Right-hand side of the position ODE: one speed per boundary.
pub fn rhs(state: &FtlState, model: &VelocityModel) -> Vec<f64> {
    state.speeds(model)
}

/// One backward-Euler step of size `dt ≤ ell / slope_bound`.
pub fn step(state: &FtlState, dt: f64, model: &VelocityModel) -> Result<FtlState> {
    step_counted(state, dt, model).map(|(s, _)| s)
}

/// As [`step`], also reporting how many gaps had to be clamped back to 1
/// after the update (pure float dust; a structural violation is an error).
pub fn step_counted(
    state: &FtlState,
    dt: f64,
    model: &VelocityModel,
) -> Result<(FtlState, usize)> {
    let ell = state.ell;
    let limit = ell / model.slope_bound();
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(Error::StepSize { dt, limit });
    }
    let p = &state.positions;
    let n = p.len();
    let c = dt / ell;
    let mut new_p = vec![0.0; n];
    new_p[n - 1] = p[n - 1] + dt;
    let mut v_right = 1.0;
    for i in (0..n - 1).rev() {
        let y_old = ((p[i + 1] - p[i]) / ell).max(1.0);
        let w = solve_gap(y_old, v_right, c, model);
        let v_new = model.speed_raw(w);
        new_p[i] = p[i] + dt * v_new;
        v_right = v_new;
    }
    // Repair rounding dust so the gap floor is exact; sweep from the leader
    // so a repair never cascades forward.
    let mut clamped = 0;
    for i in (1..n).rev() {
        let gap = new_p[i] - new_p[i - 1];
        if gap < ell {
            if gap < ell * (1.0 - GAP_DUST) {
                return Err(Error::Spacing(format!(
                    "gap {gap} fell below ell = {ell} after a step"
                )));
            }
            new_p[i - 1] = new_p[i] - ell;
            clamped += 1;
        }
    }
    Ok((
        FtlState {
            t: state.t + dt,
            ell,
            positions: new_p,
        },
        clamped,
    ))
}

/// Solve `w − y_old − c·(v_right − V(w)) = 0` for `w ∈ [1, y_old + c·v_right]`.
///
/// The residual has slope `1 + c·V'(w) ≥ 1`, so Newton converges fast and
/// `|residual| ≥ |w − root|` makes the stopping test sharp. Falls back to
/// bisection whenever an iterate leaves the bracket.
fn solve_gap(y_old: f64, v_right: f64, c: f64, model: &VelocityModel) -> f64 {
    let h = |w: f64| w - y_old - c * (v_right - model.speed_raw(w));
    let mut lo = 1.0;
    let mut hi = y_old + c * v_right;
    if hi <= 1.0 {
        return 1.0;
    }
    // Explicit predictor, clamped into the bracket.
    let mut w = (y_old + c * (v_right - model.speed_raw(y_old))).clamp(lo, hi);
    for _ in 0..100 {
        let res = h(w);
        if res.abs() <= 1e-15 * (1.0 + w) {
            break;
        }
        if res > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let slope = 1.0 + c * model.spacing_slope(w);
        let next = w - res / slope;
        w = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    w.max(1.0)
}

/// A completed run: the initial state plus snapshots at requested times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: VelocityModel,
    pub initial: FtlState,
    /// Time-ordered snapshots; always ends with the `t_end` state.
    pub snapshots: Vec<FtlState>,
    pub step_count: usize,
    /// The uniform base step `cfl·ell/slope_bound` (final sub-steps before a
    /// snapshot are shortened to land exactly).
    pub dt_used: f64,
    /// Total gaps clamped back to 1 across the run (float dust repairs).
    pub clamp_count: usize,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.snapshots.last().map(|s| s.t).unwrap_or(0.0)
    }
}

/// March a layout to `t_end`, recording snapshots at `output_times` (which
/// must be sorted, within `[0, t_end]`) and always at `t_end` itself.
pub fn simulate(
    layout: &crate::density::InitialLayout,
    model: &VelocityModel,
    t_end: f64,
    output_times: &[f64],
    cfl: f64,
) -> Result<Trajectory> {
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
    if let Some(&first) = output_times.first() {
        if first < -1e-12 {
            return Err(Error::Domain("output times must be nonnegative".into()));
        }
    }
    if let Some(&last) = output_times.last() {
        if last > t_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "output time {last} beyond t_end {t_end}"
            )));
        }
    }

    let initial = FtlState::from_layout(layout);
    let dt_base = cfl * initial.ell / model.slope_bound();
    let mut targets: Vec<f64> = output_times.to_vec();
    if targets.last().is_none_or(|&l| l < t_end * (1.0 - 1e-12)) {
        targets.push(t_end);
    }

    let mut state = initial.clone();
    let mut snapshots = Vec::with_capacity(targets.len());
    let mut step_count = 0usize;
    let mut clamp_count = 0usize;
    for &target in &targets {
        while state.t < target - 1e-13 * target.max(1.0) {
            let dt = dt_base.min(target - state.t);
            let (next, clamped) = step_counted(&state, dt, model)?;
            state = next;
            step_count += 1;
            clamp_count += clamped;
            if (state.t - target).abs() <= 1e-13 * target.max(1.0) {
                state.t = target;
            }
        }
        state.t = target;
        snapshots.push(state.clone());
    }
    Ok(Trajectory {
        model: *model,
        initial,
        snapshots,
        step_count,
        dt_used: dt_base,
        clamp_count,
    })
}

/// Structural gap bounds checked on every snapshot of a run.
///
/// For each snapshot the report records the worst slack of the two-sided
/// bound `1 ≤ y_i(t) ≤ (y_i(0)^σ + σt/ell)^(1/σ)`; negative slack means the
/// bound failed for some vehicle.
#[derive(Clone, Debug)]
pub struct SpacingBoundReport {
    pub rows: Vec<SpacingBoundRow>,
    pub worst_lower: f64,
    pub worst_upper: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SpacingBoundRow {
    pub t: f64,
    /// `min_i (y_i(t) − 1)`.
    pub lower_margin: f64,
    /// `min_i ((y_i(0)^σ + σt/ell)^(1/σ) − y_i(t))`.
    pub upper_margin: f64,
}

impl SpacingBoundReport {
    pub fn pass(&self, lower_tol: f64, upper_tol: f64) -> bool {
        self.worst_lower >= -lower_tol && self.worst_upper >= -upper_tol
    }
}

/// Evaluate the gap bounds across a trajectory.
pub fn check_spacing_bounds(traj: &Trajectory) -> SpacingBoundReport {
    let sigma = traj.model.sigma();
    let ell = traj.initial.ell;
    let y0 = traj.initial.spacings();
    let mut rows = Vec::with_capacity(traj.snapshots.len());
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for snap in &traj.snapshots {
        let t = snap.t;
        let mut lower = f64::INFINITY;
        let mut upper = f64::INFINITY;
        for (y, y_init) in snap.spacings().iter().zip(&y0) {
            lower = lower.min(y - 1.0);
            let bound = (y_init.powf(sigma) + sigma * t / ell).powf(1.0 / sigma);
            upper = upper.min(bound - y);
        }
        worst_lower = worst_lower.min(lower);
        worst_upper = worst_upper.min(upper);
        rows.push(SpacingBoundRow { t, lower_margin: lower, upper_margin: upper });
    }
    SpacingBoundReport { rows, worst_lower, worst_upper }
}
