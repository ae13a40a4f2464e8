//! Continuum reconstructions of a particle state.
//!
//! Each pair of adjacent boundaries carries mass `ell`, so the natural
//! density reconstruction is piecewise constant on the gaps:
//!
//! ```text
//! ρ(z) = 1/y_i = ell/(z_i − z_{i−1})   for z ∈ [z_{i−1}, z_i),
//! ```
//!
//! zero outside the platoon. The matching speed field is `v(ρ(z))` on the
//! same cells. Both integrate exactly against step functions, which is what
//! the error metrics downstream rely on.

use crate::ftl::FtlState;
use crate::step_fn::StepFunction;
use crate::velocity::VelocityModel;

/// Piecewise-constant density carried by a particle state: value `1/y_i`
/// between consecutive boundaries, zero outside. Its mass is exactly
/// `(n − 1)·ell`.
pub fn density_field(state: &FtlState) -> StepFunction {
    StepFunction::new(state.positions().to_vec(), state.densities())
        .expect("particle positions are strictly increasing")
}

/// Piecewise-constant speed field `v(ρ)` on the same cells as
/// [`density_field`], zero outside the platoon.
pub fn velocity_field(state: &FtlState, model: &VelocityModel) -> StepFunction {
    let values = state
        .spacings()
        .iter()
        .map(|&y| model.speed_raw(y.max(1.0)))
        .collect();
    StepFunction::new(state.positions().to_vec(), values)
        .expect("particle positions are strictly increasing")
}
