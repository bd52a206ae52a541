//! Case configuration: a TOML tree mirroring [`CaseConfig`].
//!
//! ```toml
//! name = "stationary_cylinder_re550"
//! mode = "unsteady"                 # unsteady | stokes
//! initial_velocity = [1.0, 0.0]
//!
//! [grid]
//! origin = [-6.0, -6.0]
//! extents = [18.0, 12.0]
//! nx = 900
//! ny = 600
//!
//! [fluid]
//! rho = 1.0
//! mu = 0.0018181818181818182
//! dt = { mode = "fixed", dt = 0.0025 }
//!
//! [boundary]
//! left = { kind = "velocity", u = 1.0, v = 0.0 }
//! right = { kind = "outflow" }
//! bottom = { kind = "velocity", u = 1.0, v = 0.0 }
//! top = { kind = "velocity", u = 1.0, v = 0.0 }
//!
//! [[bodies]]
//! name = "cylinder"
//! shape = { kind = "disc", diameter = 1.0 }
//! center = [0.0, 0.0]
//! kinematics = { mode = "stationary" }
//!
//! [[control_volumes]]
//! name = "cv"
//! body = "cylinder"
//! lower = [-1.0, -1.0]
//! upper = [1.5, 1.0]
//! policy = { mode = "stationary" }
//!
//! [run]
//! duration = 5.0
//! methods = ["cv", "noca", "lm"]
//!
//! [normalization]
//! rho = 1.0
//! velocity = 1.0
//! length = 1.0
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bodies::{Kinematics, Repulsion, Shape};
use crate::cv_forces::{MotionPolicy, Normalization};
use crate::error::{Error, Result};
use crate::mesh::{BoundarySpec, GridSpec};
use crate::navier::{DtPolicy, FluidParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    #[default]
    Unsteady,
    /// One steady, inertia-free solve with surface markers.
    Stokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub origin: [f64; 2],
    pub extents: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.origin, self.extents, self.nx, self.ny)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyConfig {
    pub name: String,
    pub shape: Shape,
    pub center: [f64; 2],
    pub kinematics: Kinematics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub name: String,
    /// Body whose force the box reports and which moving policies follow.
    pub body: String,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    /// Corners are offsets from the body's initial center.
    #[serde(default)]
    pub relative: bool,
    #[serde(default = "stationary")]
    pub policy: MotionPolicy,
}

fn stationary() -> MotionPolicy {
    MotionPolicy::Stationary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodToggle {
    /// Single-location control-volume estimator.
    Cv,
    /// Two-location control-volume estimator.
    Noca,
    Lm,
}

impl std::str::FromStr for MethodToggle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cv" => Ok(MethodToggle::Cv),
            "noca" => Ok(MethodToggle::Noca),
            "lm" => Ok(MethodToggle::Lm),
            other => Err(Error::config(format!("unknown method '{other}' (expected cv, noca or lm)"))),
        }
    }
}

fn all_methods() -> Vec<MethodToggle> {
    vec![MethodToggle::Cv, MethodToggle::Noca, MethodToggle::Lm]
}

fn stokes_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub duration: f64,
    #[serde(default = "all_methods")]
    pub methods: Vec<MethodToggle>,
    /// Steps between field dumps; 0 disables them.
    #[serde(default)]
    pub field_stride: u64,
    /// Steps between checkpoints; 0 disables them.
    #[serde(default)]
    pub checkpoint_every: u64,
    /// Write per-control-volume momentum bookkeeping.
    #[serde(default)]
    pub momentum: bool,
    /// Backward-error tolerance of the Stokes solve.
    #[serde(default = "stokes_tol")]
    pub stokes_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub name: String,
    #[serde(default)]
    pub mode: CaseMode,
    pub grid: GridConfig,
    pub fluid: FluidParams,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub initial_velocity: [f64; 2],
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub control_volumes: Vec<CvConfig>,
    #[serde(default)]
    pub repulsion: Option<Repulsion>,
    pub run: RunConfig,
    pub normalization: Normalization,
}

/// Dimensionless groups recomputed from a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensionless {
    /// `ρ U L / μ` with the normalization scales.
    pub re: f64,
    /// `U_0 / (f D)` of an in-line oscillation.
    pub kc: Option<f64>,
    /// Cross-flow forcing frequency over `0.193 U / D`.
    pub frequency_ratio: Option<f64>,
}

/// Strouhal number of the stationary-cylinder shedding used for `f_0`.
pub const SHEDDING_STROUHAL: f64 = 0.193;

impl CaseConfig {
    /// Parses TOML text; unknown keys are reported as configuration errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let mut unknown = Vec::new();
        let cfg: CaseConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
            .map_err(|e| Error::config(format!("cannot parse configuration: {}", e.message().trim())))?;
        if !unknown.is_empty() {
            return Err(Error::Config(unknown.into_iter().map(|k| format!("unknown key '{k}'")).collect()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Checks every cross-reference and positivity requirement, reporting
    /// all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                match e {
                    Error::Config(v) => errs.extend(v),
                    other => errs.push(other.to_string()),
                }
            }
        };
        push(self.grid.build().map(|_| ()));
        push(self.fluid.validate());
        push(self.boundary.validate());
        for b in &self.bodies {
            push(b.shape.validate());
        }
        let mut errs2 = Vec::new();
        if self.name.trim().is_empty() {
            errs2.push("case name is empty".to_string());
        }
        if !(self.run.duration > 0.0 && self.run.duration.is_finite()) && self.mode == CaseMode::Unsteady {
            errs2.push(format!("run.duration must be positive, got {}", self.run.duration));
        }
        if !(self.run.stokes_tol > 0.0) {
            errs2.push("run.stokes_tol must be positive".into());
        }
        let n = &self.normalization;
        if !(n.rho > 0.0 && n.velocity > 0.0 && n.length > 0.0) {
            errs2.push("normalization rho, velocity and length must be positive".into());
        }
        let mut names = BTreeSet::new();
        for b in &self.bodies {
            if !names.insert(b.name.as_str()) {
                errs2.push(format!("duplicate body name '{}'", b.name));
            }
        }
        let mut cv_names = BTreeSet::new();
        for c in &self.control_volumes {
            if !cv_names.insert(c.name.as_str()) {
                errs2.push(format!("duplicate control volume name '{}'", c.name));
            }
            if !names.contains(c.body.as_str()) {
                errs2.push(format!("control volume '{}' refers to unknown body '{}'", c.name, c.body));
            }
            if let MotionPolicy::Schedule { every: 0, .. } = c.policy {
                errs2.push(format!("control volume '{}' has a schedule with every = 0", c.name));
            }
        }
        if self.run.methods.is_empty() {
            errs2.push("run.methods is empty".into());
        }
        if self.mode == CaseMode::Stokes {
            if self.bodies.len() != 1 {
                errs2.push("a Stokes case needs exactly one body".into());
            }
            for b in &self.bodies {
                if !matches!(b.shape, Shape::CircleSurface { .. }) {
                    errs2.push(format!("Stokes body '{}' must be a circle surface", b.name));
                }
                if b.kinematics.is_free() {
                    errs2.push(format!("Stokes body '{}' cannot move freely", b.name));
                }
            }
            for c in &self.control_volumes {
                if c.policy != MotionPolicy::Stationary {
                    errs2.push(format!("Stokes control volume '{}' must be stationary", c.name));
                }
            }
        } else if self.fluid.rho <= 0.0 {
            errs2.push("unsteady cases need rho > 0".into());
        }
        errs.extend(errs2);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn dimensionless(&self) -> Dimensionless {
        let n = &self.normalization;
        let re = n.rho * n.velocity * n.length / self.fluid.mu;
        let mut kc = None;
        let mut frequency_ratio = None;
        for b in &self.bodies {
            let d = b.shape.half_extents()[1] * 2.0;
            match b.kinematics {
                Kinematics::InlineOscillation { u0, frequency } => kc = Some(u0 / (frequency * d)),
                Kinematics::CrossflowOscillation { frequency, .. } => {
                    frequency_ratio = Some(frequency / (SHEDDING_STROUHAL * n.velocity / d))
                }
                _ => {}
            }
        }
        Dimensionless { re, kc, frequency_ratio }
    }

    /// Coarsens the grid by `scale` and shortens the run by the same factor,
    /// keeping every physical parameter (and so every dimensionless group).
    pub fn scaled(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config(format!("scale must be positive, got {scale}")));
        }
        if scale == 1.0 {
            return Ok(self);
        }
        let coarsen = |n: usize| ((n as f64 / scale).round() as usize).max(8);
        self.grid.nx = coarsen(self.grid.nx);
        self.grid.ny = coarsen(self.grid.ny);
        self.fluid.dt = match self.fluid.dt {
            DtPolicy::Fixed { dt } => DtPolicy::Fixed { dt: dt * scale },
            DtPolicy::Cfl { cfl, dt_max } => DtPolicy::Cfl { cfl, dt_max: dt_max * scale },
        };
        if self.mode == CaseMode::Unsteady {
            self.run.duration /= scale;
        }
        if let Some(r) = self.repulsion.as_mut() {
            r.gap *= scale;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"
initial_velocity = [1.0, 0.0]

[grid]
origin = [-4.0, -2.0]
extents = [8.0, 4.0]
nx = 64
ny = 32

[fluid]
rho = 1.0
mu = 0.01
dt = { mode = "fixed", dt = 0.01 }

[boundary]
left = { kind = "velocity", u = 1.0, v = 0.0 }
right = { kind = "outflow" }
bottom = { kind = "velocity", u = 1.0 }
top = { kind = "velocity", u = 1.0 }

[[bodies]]
name = "c"
shape = { kind = "disc", diameter = 1.0 }
center = [0.0, 0.0]
kinematics = { mode = "stationary" }

[[control_volumes]]
name = "cv"
body = "c"
lower = [-1.0, -1.0]
upper = [1.5, 1.0]

[run]
duration = 1.0

[normalization]
rho = 1.0
velocity = 1.0
length = 1.0
"#;

    #[test]
    fn sample_parses_and_round_trips() {
        let c = CaseConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.run.methods.len(), 3);
        assert!((c.dimensionless().re - 100.0).abs() < 1e-9);
        let again = CaseConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let text = SAMPLE.replace("nx = 64", "nx = 64\nnz = 3").replace("duration = 1.0", "duration = 1.0\nspeed = 2");
        match CaseConfig::from_toml(&text) {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 2, "{v:?}");
                assert!(v.iter().any(|k| k.contains("grid.nz")));
                assert!(v.iter().any(|k| k.contains("run.speed")));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_references_are_rejected() {
        let text = SAMPLE.replace("body = \"c\"", "body = \"missing\"");
        let e = CaseConfig::from_toml(&text).unwrap_err();
        assert!(e.to_string().contains("unknown body 'missing'"));
        let text = SAMPLE.replace("mu = 0.01", "mu = -1.0");
        assert!(matches!(CaseConfig::from_toml(&text), Err(Error::Config(_))));
    }
}
