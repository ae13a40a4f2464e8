//! Closed-form entropy solutions for the Greenshields flux `f(ρ) = ρ(1−ρ)`.
//!
//! A single density jump `(u_l, u_r)` resolves into either a shock moving at
//! the Rankine–Hugoniot speed `s = 1 − u_l − u_r` (when `u_l < u_r`) or a
//! rarefaction fan spanning characteristic speeds `1 − 2u_l … 1 − 2u_r`
//! (when `u_l > u_r`), with the self-similar profile
//! `ρ(z, t) = (1 − (z − x₀)/t)/2` inside the fan. Piecewise-constant initial
//! data therefore evolves exactly — one wave per jump — until the first pair
//! of neighboring waves meets; [`ExactSolution`] tracks that horizon and
//! refuses to evaluate past it.
//!
//! Profiles are piecewise linear in space, so distances to the
//! piecewise-constant reconstructions can be integrated in closed form
//! instead of quadrature; [`PiecewiseLinearField::l1_distance`] does exactly
//! that, splitting each cell at the (at most one) sign change.

use crate::error::{Error, Result};
use crate::step_fn::StepFunction;

/// A piecewise-linear profile: on the `j`-th interval between consecutive
/// breakpoints the value is `slopes[j]·z + intercepts[j]`; left of the first
/// breakpoint it is `left_tail`, from the last breakpoint on it is
/// `right_tail`. Evaluation is right-continuous.
#[derive(Clone, Debug)]
pub struct PiecewiseLinearField {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    left_tail: f64,
    right_tail: f64,
}

impl PiecewiseLinearField {
    fn new(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
        left_tail: f64,
        right_tail: f64,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Domain("profile needs at least one breakpoint".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("non-finite profile breakpoint".into()));
        }
        for w in breakpoints.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain(format!(
                    "profile breakpoints not increasing at {} .. {}",
                    w[0], w[1]
                )));
            }
        }
        if slopes.len() != breakpoints.len() - 1 || intercepts.len() != slopes.len() {
            return Err(Error::Domain("profile piece count mismatch".into()));
        }
        Ok(PiecewiseLinearField {
            breakpoints,
            slopes,
            intercepts,
            left_tail,
            right_tail,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Slope and intercept of the linear piece governing `z`.
    fn piece_at(&self, z: f64) -> (f64, f64) {
        let idx = self.breakpoints.partition_point(|&b| b <= z);
        if idx == 0 {
            (0.0, self.left_tail)
        } else if idx == self.breakpoints.len() {
            (0.0, self.right_tail)
        } else {
            (self.slopes[idx - 1], self.intercepts[idx - 1])
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let (s, c) = self.piece_at(z);
        s * z + c
    }

    /// Exact `∫ |self − g|`, over the whole line (`window = None`, requiring
    /// both tails of `self` to vanish so the integral is finite) or over a
    /// window `[lo, hi]`.
    ///
    /// On every subinterval of the merged breakpoint grid the difference is
    /// a single linear function, so its absolute integral is a trapezoid —
    /// split at the root when the endpoint values differ in sign.
    pub fn l1_distance(&self, g: &StepFunction, window: Option<(f64, f64)>) -> f64 {
        let mut grid: Vec<f64> = Vec::new();
        match window {
            None => {
                assert!(
                    self.left_tail.abs() <= 1e-12 && self.right_tail.abs() <= 1e-12,
                    "full-line distance requires a compactly supported profile"
                );
                grid.extend_from_slice(&self.breakpoints);
                grid.extend_from_slice(g.breakpoints());
                grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
                grid.dedup();
            }
            Some((lo, hi)) => {
                assert!(lo < hi, "empty window");
                grid.push(lo);
                for &b in self.breakpoints.iter().chain(g.breakpoints()) {
                    if b > lo && b < hi {
                        grid.push(b);
                    }
                }
                grid.push(hi);
                grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
                grid.dedup();
            }
        }
        let mut total = 0.0;
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let (s, c) = self.piece_at(mid);
            let gv = g.eval(mid);
            let alpha = s * a + c - gv;
            let beta = s * b + c - gv;
            total += if alpha * beta >= 0.0 {
                0.5 * (alpha.abs() + beta.abs()) * (b - a)
            } else {
                // One sign change: the root splits the cell into two
                // triangles.
                let r = a + (b - a) * alpha.abs() / (alpha.abs() + beta.abs());
                0.5 * (alpha.abs() * (r - a) + beta.abs() * (b - r))
            };
        }
        total
    }
}

/// One resolved wave of the Greenshields Riemann problem.
#[derive(Clone, Copy, Debug)]
enum Wave {
    /// Jump at initial position `x` traveling at `speed`.
    Shock { x: f64, speed: f64 },
    /// Fan centered at `x` between edge speeds `lo < hi`.
    Fan { x: f64, lo: f64, hi: f64 },
}

impl Wave {
    fn min_speed(&self) -> f64 {
        match *self {
            Wave::Shock { speed, .. } => speed,
            Wave::Fan { lo, .. } => lo,
        }
    }

    fn max_speed(&self) -> f64 {
        match *self {
            Wave::Shock { speed, .. } => speed,
            Wave::Fan { hi, .. } => hi,
        }
    }

    fn x(&self) -> f64 {
        match *self {
            Wave::Shock { x, .. } | Wave::Fan { x, .. } => x,
        }
    }
}

/// The entropy-respecting wave for a jump from `ul` to `ur` at `x`.
fn jump_wave(ul: f64, ur: f64, x: f64) -> Wave {
    if ul < ur {
        Wave::Shock {
            x,
            speed: 1.0 - ul - ur,
        }
    } else {
        Wave::Fan {
            x,
            lo: 1.0 - 2.0 * ul,
            hi: 1.0 - 2.0 * ur,
        }
    }
}

/// The profile of a single jump `(ul, ur)` at `x0` after time `t > 0`, with
/// constant tails `ul` and `ur`.
pub fn riemann_wave(ul: f64, ur: f64, x0: f64, t: f64) -> Result<PiecewiseLinearField> {
    for u in [ul, ur] {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("density {u} outside [0, 1]")));
        }
    }
    if !x0.is_finite() || !(t > 0.0) {
        return Err(Error::Domain(format!("bad wave origin {x0} or time {t}")));
    }
    if ul == ur {
        return PiecewiseLinearField::new(vec![x0], vec![], vec![], ul, ur);
    }
    assemble(&[ul, ur], &[jump_wave(ul, ur, x0)], t)
}

fn assemble(states: &[f64], waves: &[Wave], t: f64) -> Result<PiecewiseLinearField> {
    let mut bps = Vec::new();
    let mut slopes = Vec::new();
    let mut intercepts = Vec::new();
    for (j, w) in waves.iter().enumerate() {
        let (el, er, piece) = match *w {
            Wave::Shock { x, speed } => {
                let p = x + speed * t;
                (p, p, None)
            }
            Wave::Fan { x, lo, hi } => (
                x + lo * t,
                x + hi * t,
                Some((-0.5 / t, 0.5 + 0.5 * x / t)),
            ),
        };
        if j > 0 {
            slopes.push(0.0);
            intercepts.push(states[j]);
        }
        bps.push(el);
        if let Some((s, c)) = piece {
            slopes.push(s);
            intercepts.push(c);
            bps.push(er);
        }
    }
    PiecewiseLinearField::new(bps, slopes, intercepts, states[0], states[states.len() - 1])
}

/// Exact evolution of piecewise-constant data under the Greenshields flux,
/// valid until the first two waves meet.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    /// Constant states between waves; `states[j]` sits left of `waves[j]`.
    states: Vec<f64>,
    waves: Vec<Wave>,
    valid_until: f64,
}

impl ExactSolution {
    /// Resolve every jump of a compactly supported step profile, including
    /// the jumps into vacuum at its edges.
    pub fn greenshields(initial: &StepFunction) -> Result<Self> {
        let bps = initial.breakpoints();
        let vals = initial.values();
        let mut states = vec![0.0];
        let mut waves = Vec::new();
        for (j, &x) in bps.iter().enumerate() {
            let right = if j < vals.len() { vals[j] } else { 0.0 };
            let left = states[states.len() - 1];
            if (right - left).abs() <= 1e-15 {
                continue;
            }
            if !(0.0..=1.0).contains(&right) {
                return Err(Error::Domain(format!("density {right} outside [0, 1]")));
            }
            waves.push(jump_wave(left, right, x));
            states.push(right);
        }
        if waves.is_empty() {
            return Err(Error::Domain("profile has no jumps to evolve".into()));
        }
        if states[states.len() - 1].abs() > 1e-15 {
            return Err(Error::Domain("profile is not compactly supported".into()));
        }
        let mut valid_until = f64::INFINITY;
        for w in waves.windows(2) {
            let closing = w[0].max_speed() - w[1].min_speed();
            if closing > 1e-15 {
                valid_until = valid_until.min((w[1].x() - w[0].x()) / closing);
            }
        }
        Ok(ExactSolution {
            states,
            waves,
            valid_until,
        })
    }

    /// Time before which no two waves have met.
    pub fn valid_until(&self) -> f64 {
        self.valid_until
    }

    /// The profile at time `t ∈ [0, valid_until)`.
    pub fn at_time(&self, t: f64) -> Result<PiecewiseLinearField> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("negative time {t}")));
        }
        if t >= self.valid_until {
            return Err(Error::Domain(format!(
                "time {t} at or beyond the first wave interaction ({})",
                self.valid_until
            )));
        }
        if t == 0.0 {
            // The undistorted step data.
            let bps: Vec<f64> = self.waves.iter().map(|w| w.x()).collect();
            let slopes = vec![0.0; bps.len() - 1];
            let intercepts = self.states[1..self.states.len() - 1].to_vec();
            return PiecewiseLinearField::new(bps, slopes, intercepts, self.states[0], 0.0);
        }
        assemble(&self.states, &self.waves, t)
    }
}
