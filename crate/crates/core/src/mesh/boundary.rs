use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::grid::Axis;

/// Scalar function of time used for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeFn {
    Constant(f64),
    /// `mean + amplitude * sin(2π frequency t + phase)`
    Harmonic {
        mean: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Default for TimeFn {
    fn default() -> Self {
        TimeFn::Constant(0.0)
    }
}

impl TimeFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFn::Constant(c) => c,
            TimeFn::Harmonic {
                mean,
                amplitude,
                frequency,
                phase,
            } => mean + amplitude * (2.0 * PI * frequency * t + phase).sin(),
        }
    }

    /// `∫_0^t f(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            TimeFn::Constant(c) => c * t,
            TimeFn::Harmonic {
                mean,
                amplitude,
                frequency,
                phase,
            } => {
                let w = 2.0 * PI * frequency;
                if w == 0.0 {
                    (mean + amplitude * phase.sin()) * t
                } else {
                    mean * t - amplitude / w * ((w * t + phase).cos() - phase.cos())
                }
            }
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            TimeFn::Constant(c) => c.is_finite(),
            TimeFn::Harmonic {
                mean,
                amplitude,
                frequency,
                phase,
            } => mean.is_finite() && amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
        }
    }
}

/// Condition on one side of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Periodic,
    /// Prescribed velocity `(u, v)`. The normal component lands on the
    /// boundary faces; the tangential one enters through ghost values.
    Velocity {
        #[serde(default)]
        u: TimeFn,
        #[serde(default)]
        v: TimeFn,
    },
    /// Zero traction: homogeneous Neumann on both velocity components and
    /// `p = 0` on the boundary.
    Outflow,
}

impl BoundaryCondition {
    pub fn wall() -> Self {
        BoundaryCondition::Velocity {
            u: TimeFn::Constant(0.0),
            v: TimeFn::Constant(0.0),
        }
    }

    pub fn inflow(u: f64, v: f64) -> Self {
        BoundaryCondition::Velocity {
            u: TimeFn::Constant(u),
            v: TimeFn::Constant(v),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryCondition::Periodic)
    }

    /// Velocity value of component `comp` at time `t`; `None` unless Dirichlet.
    pub fn velocity(&self, comp: Axis, t: f64) -> Option<f64> {
        match self {
            BoundaryCondition::Velocity { u, v } => Some(match comp {
                Axis::X => u.eval(t),
                Axis::Y => v.eval(t),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

/// Conditions on the four sides of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub bottom: BoundaryCondition,
    pub top: BoundaryCondition,
}

impl BoundarySpec {
    pub fn periodic() -> Self {
        BoundarySpec {
            left: BoundaryCondition::Periodic,
            right: BoundaryCondition::Periodic,
            bottom: BoundaryCondition::Periodic,
            top: BoundaryCondition::Periodic,
        }
    }

    pub fn walls() -> Self {
        let w = BoundaryCondition::wall();
        BoundarySpec {
            left: w,
            right: w,
            bottom: w,
            top: w,
        }
    }

    pub fn side(&self, axis: Axis, side: Side) -> &BoundaryCondition {
        match (axis, side) {
            (Axis::X, Side::Low) => &self.left,
            (Axis::X, Side::High) => &self.right,
            (Axis::Y, Side::Low) => &self.bottom,
            (Axis::Y, Side::High) => &self.top,
        }
    }

    pub fn periodic_along(&self, axis: Axis) -> bool {
        self.side(axis, Side::Low).is_periodic()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (axis, name) in [(Axis::X, "left/right"), (Axis::Y, "bottom/top")] {
            let lo = self.side(axis, Side::Low).is_periodic();
            let hi = self.side(axis, Side::High).is_periodic();
            if lo != hi {
                problems.push(format!("periodic boundary on {name} must be paired"));
            }
        }
        for bc in [&self.left, &self.right, &self.bottom, &self.top] {
            if let BoundaryCondition::Velocity { u, v } = bc {
                if !(u.is_finite() && v.is_finite()) {
                    problems.push("boundary velocity parameters must be finite".into());
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// True when no side is an outflow and no axis is periodic, i.e. the
    /// pressure is only determined up to a constant and the boundary flux
    /// must balance.
    pub fn is_closed(&self) -> bool {
        [&self.left, &self.right, &self.bottom, &self.top]
            .iter()
            .all(|bc| matches!(bc, BoundaryCondition::Velocity { .. }))
    }
}
