//! JSON experiment configuration.
//!
//! One document drives all three CLI modes; fields irrelevant to a mode are
//! ignored by it but still validated structurally. Unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::InitialDensity;
use crate::entropy::BumpTestFunction;
use crate::error::{Error, Result};
use crate::velocity::VelocityModel;

fn default_cfl_particle() -> f64 {
    0.9
}

fn default_cfl_grid() -> f64 {
    0.45
}

/// Which CLI mode a config is being validated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Single,
    Converge,
    Entropy,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Single => "run",
            Mode::Converge => "converge",
            Mode::Entropy => "entropy",
        }
    }
}

/// Initial density: a named preset or explicit piecewise-constant data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho_left: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho_right: Option<f64>,
    },
    Explicit {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

/// A separable bump test function, by center and radii.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub t_center: f64,
    pub t_radius: f64,
    pub z_center: f64,
    pub z_radius: f64,
}

impl PhiSpec {
    pub fn to_bump(&self) -> Result<BumpTestFunction> {
        BumpTestFunction::new(self.t_center, self.t_radius, self.z_center, self.z_radius)
    }
}

/// The full experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Velocity model name: "greenshields" or "quadratic".
    pub model: String,
    pub initial: InitialSpec,
    pub t_end: f64,
    /// Snapshot/comparison times; each must lie in [0, t_end].
    #[serde(default)]
    pub output_times: Vec<f64>,
    /// Vehicle count for single runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Vehicle counts for convergence and entropy sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_list: Vec<usize>,
    /// Particle time-step safety factor in (0, 1].
    #[serde(default = "default_cfl_particle")]
    pub cfl_particle: f64,
    /// Finite-volume time-step safety factor in (0, 1].
    #[serde(default = "default_cfl_grid")]
    pub cfl_grid: f64,
    /// Grid resolution of the finite-volume reference; defaults to
    /// 8 × the largest vehicle count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cells: Option<usize>,
    /// Entropy levels k, each in [0, 1].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entropy_ks: Vec<f64>,
    /// Bump test functions for entropy residuals.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phis: Vec<PhiSpec>,
    /// Where to write outputs; the CLI --out flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn velocity_model(&self) -> Result<VelocityModel> {
        VelocityModel::by_name(&self.model)
            .map_err(|_| Error::Config(format!(
                "model: unknown name '{}' (expected \"greenshields\" or \"quadratic\")",
                self.model
            )))
    }

    /// Materialize the initial density (not yet normalized).
    pub fn build_density(&self) -> Result<InitialDensity> {
        match &self.initial {
            InitialSpec::Preset {
                preset,
                rho_left,
                rho_right,
            } => match preset.as_str() {
                "block" => {
                    Self::reject_riemann_params(preset, rho_left, rho_right)?;
                    Ok(InitialDensity::block())
                }
                "two_blocks" => {
                    Self::reject_riemann_params(preset, rho_left, rho_right)?;
                    Ok(InitialDensity::two_blocks())
                }
                "riemann" => {
                    let l = rho_left.ok_or_else(|| {
                        Error::Config("initial: riemann preset needs rho_left".into())
                    })?;
                    let r = rho_right.ok_or_else(|| {
                        Error::Config("initial: riemann preset needs rho_right".into())
                    })?;
                    InitialDensity::riemann(l, r)
                }
                other => Err(Error::Config(format!(
                    "initial: unknown preset '{other}' (expected \"block\", \"two_blocks\", or \"riemann\")"
                ))),
            },
            InitialSpec::Explicit {
                breakpoints,
                values,
            } => InitialDensity::new(breakpoints.clone(), values.clone()),
        }
    }

    fn reject_riemann_params(
        preset: &str,
        rho_left: &Option<f64>,
        rho_right: &Option<f64>,
    ) -> Result<()> {
        if rho_left.is_some() || rho_right.is_some() {
            return Err(Error::Config(format!(
                "initial: rho_left/rho_right only apply to the riemann preset, not '{preset}'"
            )));
        }
        Ok(())
    }

    /// True when the initial data is the two-state preset (which has a
    /// closed-form reference solution under the Greenshields model).
    pub fn is_riemann_preset(&self) -> bool {
        matches!(&self.initial, InitialSpec::Preset { preset, .. } if preset == "riemann")
    }

    /// Full semantic validation for one mode.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        self.velocity_model()?;
        self.build_density()?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config(format!(
                "t_end: must be positive and finite, got {}",
                self.t_end
            )));
        }
        for &t in &self.output_times {
            if !t.is_finite() || t < 0.0 || t > self.t_end * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "output_times: {t} outside [0, t_end = {}]",
                    self.t_end
                )));
            }
        }
        for (name, cfl) in [("cfl_particle", self.cfl_particle), ("cfl_grid", self.cfl_grid)] {
            if !(cfl > 0.0 && cfl <= 1.0) {
                return Err(Error::Config(format!("{name}: {cfl} outside (0, 1]")));
            }
        }
        if let Some(cells) = self.reference_cells {
            if cells < 2 {
                return Err(Error::Config(format!(
                    "reference_cells: need at least 2, got {cells}"
                )));
            }
        }
        for &k in &self.entropy_ks {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::Config(format!("entropy_ks: level {k} outside [0, 1]")));
            }
        }
        for (i, phi) in self.phis.iter().enumerate() {
            let bump = phi
                .to_bump()
                .map_err(|e| Error::Config(format!("phis[{i}]: {e}")))?;
            let (lo, hi) = bump.t_support();
            if lo < -1e-12 || hi > self.t_end + 1e-12 {
                return Err(Error::Config(format!(
                    "phis[{i}]: time support [{lo}, {hi}] escapes [0, t_end = {}]",
                    self.t_end
                )));
            }
        }

        match mode {
            Mode::Single => {
                let n = self.n.ok_or_else(|| {
                    Error::Config("n: required for single runs".into())
                })?;
                if n < 2 {
                    return Err(Error::Config(format!("n: need at least 2 vehicles, got {n}")));
                }
            }
            Mode::Converge => {
                self.validate_n_list(3)?;
                if self.output_times.is_empty() {
                    return Err(Error::Config(
                        "output_times: convergence needs at least one comparison time".into(),
                    ));
                }
            }
            Mode::Entropy => {
                self.validate_n_list(2)?;
                if self.entropy_ks.is_empty() {
                    return Err(Error::Config("entropy_ks: must not be empty".into()));
                }
                if self.phis.is_empty() {
                    return Err(Error::Config("phis: must not be empty".into()));
                }
            }
        }
        Ok(())
    }

    fn validate_n_list(&self, min_len: usize) -> Result<()> {
        if self.n_list.len() < min_len {
            return Err(Error::Config(format!(
                "n_list: need at least {min_len} entries, got {}",
                self.n_list.len()
            )));
        }
        for w in self.n_list.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "n_list: must be strictly increasing, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        if self.n_list[0] < 2 {
            return Err(Error::Config(format!(
                "n_list: vehicle counts must be at least 2, got {}",
                self.n_list[0]
            )));
        }
        Ok(())
    }
}
