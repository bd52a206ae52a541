//! Lagrangian bodies: marker clouds, prescribed and free kinematics, and the
//! auxiliary gravity and repulsion forces.
//!
//! Positions are always rebuilt from the reference configuration by an
//! exact rotation and translation (plus, for the eel, the analytic backbone
//! deformation), so marker spacing never drifts.

pub mod eel;
pub mod forces;
pub mod shapes;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Coupling, DeltaKernel};
use crate::mesh::{BoundarySpec, FaceField, GridSpec, TimeFn};

pub use eel::{eel_frame, lateral_displacement, lateral_velocity, EelFrame};
pub use forces::{collision_force, gravity_force, gravity_total, Repulsion};
pub use shapes::{generate_markers, EelWidth, Shape};

#[inline]
pub fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn rotate(a: f64, r: [f64; 2]) -> [f64; 2] {
    let (s, c) = a.sin_cos();
    [c * r[0] - s * r[1], s * r[0] + c * r[1]]
}

pub fn weighted_centroid(x: &[[f64; 2]], w: &[f64]) -> [f64; 2] {
    let (mut c, mut m) = ([0.0; 2], 0.0);
    for (p, w) in x.iter().zip(w) {
        c[0] += p[0] * w;
        c[1] += p[1] * w;
        m += w;
    }
    [c[0] / m, c[1] / m]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Kinematics {
    Stationary,
    /// Center velocity `(u(t), v(t))`, no rotation.
    Translation {
        #[serde(default)]
        u: TimeFn,
        #[serde(default)]
        v: TimeFn,
    },
    /// `U_b = (-U_0 cos 2πft, 0)`.
    InlineOscillation { u0: f64, frequency: f64 },
    /// `U_b = (0, -V_0 sin 2πft)`.
    CrossflowOscillation { v0: f64, frequency: f64 },
    /// `ω_b = A sin 2πft` about the center.
    RotationalOscillation { amplitude: f64, frequency: f64 },
    /// Self-propelled undulation with the given period; the shape must be an eel.
    Eel { period: f64 },
    /// Freely moving, with net weight `(ρ_s - ρ) g V` downward.
    Free { solid_density: f64, gravity: f64 },
}

impl Kinematics {
    pub fn is_free(&self) -> bool {
        matches!(self, Kinematics::Eel { .. } | Kinematics::Free { .. })
    }

    fn validate(&self, shape: &Shape) -> Result<()> {
        let ok = match *self {
            Kinematics::Stationary | Kinematics::Translation { .. } => true,
            Kinematics::InlineOscillation { u0, frequency } => u0.is_finite() && frequency > 0.0,
            Kinematics::CrossflowOscillation { v0, frequency } => v0.is_finite() && frequency > 0.0,
            Kinematics::RotationalOscillation { amplitude, frequency } => {
                amplitude.is_finite() && frequency > 0.0
            }
            Kinematics::Eel { period } => {
                if !matches!(shape, Shape::Eel { .. }) {
                    return Err(Error::config("eel kinematics require an eel shape"));
                }
                period > 0.0
            }
            Kinematics::Free {
                solid_density,
                gravity,
            } => solid_density > 0.0 && gravity.is_finite(),
        };
        if !ok {
            return Err(Error::config(format!("invalid kinematics parameters {self:?}")));
        }
        if matches!(shape, Shape::Eel { .. }) && !matches!(self, Kinematics::Eel { .. }) {
            return Err(Error::config("an eel shape requires eel kinematics"));
        }
        Ok(())
    }

    /// Center displacement and rotation angle at `t` for prescribed modes.
    fn pose(&self, t: f64) -> Option<([f64; 2], f64)> {
        match *self {
            Kinematics::Stationary => Some(([0.0, 0.0], 0.0)),
            Kinematics::Translation { u, v } => Some(([u.integral(t), v.integral(t)], 0.0)),
            Kinematics::InlineOscillation { u0, frequency } => {
                let w = 2.0 * PI * frequency;
                Some(([-u0 / w * (w * t).sin(), 0.0], 0.0))
            }
            Kinematics::CrossflowOscillation { v0, frequency } => {
                let w = 2.0 * PI * frequency;
                Some(([0.0, v0 / w * ((w * t).cos() - 1.0)], 0.0))
            }
            Kinematics::RotationalOscillation { amplitude, frequency } => {
                let w = 2.0 * PI * frequency;
                Some(([0.0, 0.0], amplitude / w * (1.0 - (w * t).cos())))
            }
            Kinematics::Eel { .. } | Kinematics::Free { .. } => None,
        }
    }

    /// Center velocity and angular velocity at `t` for prescribed modes.
    fn rates(&self, t: f64) -> Option<([f64; 2], f64)> {
        match *self {
            Kinematics::Stationary => Some(([0.0, 0.0], 0.0)),
            Kinematics::Translation { u, v } => Some(([u.eval(t), v.eval(t)], 0.0)),
            Kinematics::InlineOscillation { u0, frequency } => {
                Some(([-u0 * (2.0 * PI * frequency * t).cos(), 0.0], 0.0))
            }
            Kinematics::CrossflowOscillation { v0, frequency } => {
                Some(([0.0, -v0 * (2.0 * PI * frequency * t).sin()], 0.0))
            }
            Kinematics::RotationalOscillation { amplitude, frequency } => {
                Some(([0.0, 0.0], amplitude * (2.0 * PI * frequency * t).sin()))
            }
            Kinematics::Eel { .. } | Kinematics::Free { .. } => None,
        }
    }
}

/// Kinematic state of a body at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub t: f64,
    pub center: [f64; 2],
    pub theta: f64,
    /// Integrated angular velocity removed from the eel deformation.
    pub phi_d: f64,
    pub u_r: [f64; 2],
    pub w_r: f64,
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
}

/// Midstep quantities for the step in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfStep {
    pub t: f64,
    pub dt: f64,
    pub positions: Vec<[f64; 2]>,
    pub center: [f64; 2],
    pub target: Option<Vec<[f64; 2]>>,
    pub next_rates: Option<([f64; 2], f64)>,
}

/// Constraint-force record written by the integrator for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmRecord {
    pub t_half: f64,
    pub dt: f64,
    pub positions: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Constraint force density `F^{n+1/2}`.
    pub force: Vec<[f64; 2]>,
    /// Other body force densities (gravity, repulsion) applied this step.
    pub extra: Vec<[f64; 2]>,
    /// Torque reference point for this step.
    pub x0: [f64; 2],
    pub momentum: [[f64; 2]; 2],
    pub angular_momentum: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidBody {
    pub name: String,
    pub shape: Shape,
    pub kinematics: Kinematics,
    pub initial_center: [f64; 2],
    /// Body-frame marker coordinates (eel: backbone x and lateral offset).
    pub reference: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub state: BodyState,
    pub half: Option<HalfStep>,
    pub lm: Option<LmRecord>,
}

impl RigidBody {
    pub fn new(name: impl Into<String>, shape: Shape, kinematics: Kinematics, center: [f64; 2], g: &GridSpec) -> Result<Self> {
        kinematics.validate(&shape)?;
        let m = generate_markers(&shape, g)?;
        let mut body = RigidBody {
            name: name.into(),
            shape,
            kinematics,
            initial_center: center,
            reference: m.positions,
            weights: m.weights,
            state: BodyState {
                t: 0.0,
                center,
                theta: 0.0,
                phi_d: 0.0,
                u_r: [0.0; 2],
                w_r: 0.0,
                positions: Vec::new(),
                velocities: Vec::new(),
            },
            half: None,
            lm: None,
        };
        if let Shape::Eel { .. } = shape {
            // Place the head (backbone x = 0) at `center` at t = 0.
            let f = body.eel_shape(0.0);
            let q0 = [body.reference[0][0], body.reference[0][1] + body.lateral(0, 0.0)];
            let c = [q0[0] - f.r[0][0], q0[1] - f.r[0][1]];
            body.state.center = [center[0] + c[0], center[1] + c[1]];
        }
        if let Some((u, w)) = kinematics.rates(0.0) {
            body.state.u_r = u;
            body.state.w_r = w;
        }
        body.rebuild();
        Ok(body)
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn is_free(&self) -> bool {
        self.kinematics.is_free()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn period_length(&self) -> (f64, f64) {
        match (self.kinematics, self.shape) {
            (Kinematics::Eel { period }, Shape::Eel { length, .. }) => (period, length),
            _ => (1.0, 1.0),
        }
    }

    fn lateral(&self, k: usize, t: f64) -> f64 {
        let (period, l) = self.period_length();
        lateral_displacement(self.reference[k][0], t, period, l)
    }

    fn eel_shape(&self, t: f64) -> EelFrame {
        let (period, l) = self.period_length();
        eel_frame(&self.reference, &self.weights, t, period, l)
    }

    fn is_eel(&self) -> bool {
        matches!(self.kinematics, Kinematics::Eel { .. })
    }

    /// Recomputes marker positions and velocities from the pose in `state`.
    fn rebuild(&mut self) {
        let s = &self.state;
        let (c, u_r, w_r) = (s.center, s.u_r, s.w_r);
        let (x, v): (Vec<_>, Vec<_>) = if self.is_eel() {
            let f = self.eel_shape(s.t);
            let psi = s.theta - s.phi_d;
            (0..self.len())
                .map(|k| {
                    let r = rotate(psi, f.r[k]);
                    let uk = rotate(psi, f.uk[k]);
                    (
                        [c[0] + r[0], c[1] + r[1]],
                        [u_r[0] - w_r * r[1] + uk[0], u_r[1] + w_r * r[0] + uk[1]],
                    )
                })
                .unzip()
        } else {
            self.reference
                .iter()
                .map(|r0| {
                    let r = rotate(s.theta, *r0);
                    ([c[0] + r[0], c[1] + r[1]], [u_r[0] - w_r * r[1], u_r[1] + w_r * r[0]])
                })
                .unzip()
        };
        self.state.positions = x;
        self.state.velocities = v;
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.state.positions
    }

    pub fn velocities(&self) -> &[[f64; 2]] {
        &self.state.velocities
    }

    pub fn center(&self) -> [f64; 2] {
        self.state.center
    }

    /// Prescribed marker velocities at time `t` evaluated at the current
    /// positions.
    pub fn desired_velocity(&self, t: f64) -> Result<Vec<[f64; 2]>> {
        let (u, w) = self.kinematics.rates(t).ok_or_else(|| {
            Error::State(format!(
                "body '{}' moves freely; its velocity comes from update_free_motion",
                self.name
            ))
        })?;
        let c = self.state.center;
        Ok(self
            .state
            .positions
            .iter()
            .map(|x| [u[0] - w * (x[1] - c[1]), u[1] + w * (x[0] - c[0])])
            .collect())
    }

    /// Predicts `X^{n+1/2} = X^n + Δt/2 U^n` and opens a step.
    pub fn begin_step(&mut self, dt: f64) {
        let positions: Vec<[f64; 2]> = self
            .state
            .positions
            .iter()
            .zip(&self.state.velocities)
            .map(|(x, u)| [x[0] + 0.5 * dt * u[0], x[1] + 0.5 * dt * u[1]])
            .collect();
        let center = weighted_centroid(&positions, &self.weights);
        self.half = Some(HalfStep {
            t: self.state.t + 0.5 * dt,
            dt,
            positions,
            center,
            target: None,
            next_rates: None,
        });
    }

    pub fn half_step(&self) -> Result<&HalfStep> {
        self.half
            .as_ref()
            .ok_or_else(|| Error::State(format!("body '{}' has no step in progress", self.name)))
    }

    /// Momentum-conserving rigid velocities from marker samples `jt` of the
    /// intermediate velocity, taken at the midstep positions.
    pub fn free_rates(&self, jt: &[[f64; 2]]) -> Result<([f64; 2], f64)> {
        let h = self.half_step()?;
        update_free_motion(&h.positions, &self.weights, jt)
    }

    /// Interpolates `(u, v)` at the midstep markers and returns the
    /// resulting free rigid velocities.
    pub fn update_free_motion(&self, u: &FaceField, v: &FaceField, g: &GridSpec, bcs: &BoundarySpec, kernel: DeltaKernel) -> Result<([f64; 2], f64)> {
        let h = self.half_step()?;
        let c = Coupling::new(&h.positions, g, bcs, kernel)?;
        self.free_rates(&c.interpolate(u, v))
    }

    /// Target marker velocity `U_b^{n+1}` at the midstep positions. Free
    /// bodies need the interpolated intermediate velocity `jt`.
    pub fn target_velocity(&mut self, jt: Option<&[[f64; 2]]>) -> Result<Vec<[f64; 2]>> {
        let (u, w) = if self.is_free() {
            let jt = jt.ok_or_else(|| Error::State("free body needs interpolated velocity".into()))?;
            self.free_rates(jt)?
        } else {
            let t1 = self.half_step()?.t + 0.5 * self.half_step()?.dt;
            self.kinematics.rates(t1).expect("prescribed")
        };
        let eel = self.is_eel().then(|| {
            let h = self.half.as_ref().expect("checked");
            let t1 = h.t + 0.5 * h.dt;
            let s = &self.state;
            let wd = self.eel_shape(s.t).omega_d;
            let psi = s.theta - s.phi_d + 0.5 * h.dt * (s.w_r - wd);
            let f = self.eel_shape(t1);
            f.uk.iter().map(|uk| rotate(psi, *uk)).collect::<Vec<_>>()
        });
        let h = self.half.as_mut().expect("checked");
        let c = h.center;
        let target: Vec<[f64; 2]> = h
            .positions
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let mut ub = [u[0] - w * (x[1] - c[1]), u[1] + w * (x[0] - c[0])];
                if let Some(uk) = &eel {
                    ub[0] += uk[k][0];
                    ub[1] += uk[k][1];
                }
                ub
            })
            .collect();
        h.target = Some(target.clone());
        h.next_rates = Some((u, w));
        Ok(target)
    }

    /// Advances the pose to `t^{n+1}` and rebuilds markers there.
    pub fn finish_step(&mut self) -> Result<()> {
        let h = self
            .half
            .take()
            .ok_or_else(|| Error::State(format!("body '{}' has no step in progress", self.name)))?;
        let (u1, w1) = h
            .next_rates
            .ok_or_else(|| Error::State("finish_step before target_velocity".into()))?;
        let t0 = self.state.t;
        let t1 = t0 + h.dt;
        if let Some((d, th)) = self.kinematics.pose(t1) {
            self.state.center = [self.initial_center[0] + d[0], self.initial_center[1] + d[1]];
            self.state.theta = th;
        } else {
            let s = &mut self.state;
            s.center[0] += 0.5 * h.dt * (s.u_r[0] + u1[0]);
            s.center[1] += 0.5 * h.dt * (s.u_r[1] + u1[1]);
            s.theta += 0.5 * h.dt * (s.w_r + w1);
        }
        if self.is_eel() {
            let (period, l) = self.period_length();
            self.state.phi_d += eel::integrate_omega_d(&self.reference, &self.weights, t0, t1, period, l);
        }
        self.state.t = t1;
        self.state.u_r = u1;
        self.state.w_r = w1;
        self.rebuild();
        Ok(())
    }

    /// `ρ Σ U Δs` at the current level.
    pub fn momentum(&self, rho: f64) -> [f64; 2] {
        body_momentum(&self.state.velocities, &self.weights, rho)
    }

    /// `ρ Σ (X - x0) ∧ U Δs` at the current level.
    pub fn angular_momentum(&self, rho: f64, x0: [f64; 2]) -> f64 {
        body_angular_momentum(&self.state.positions, &self.state.velocities, &self.weights, rho, x0)
    }

    /// Axis-aligned bounding box `[lower, upper]` of the current markers.
    pub fn bounding_box(&self) -> [[f64; 2]; 2] {
        bounding_box(&self.state.positions)
    }
}

pub fn bounding_box(x: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in x {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    [lo, hi]
}

pub fn body_momentum(u: &[[f64; 2]], w: &[f64], rho: f64) -> [f64; 2] {
    let mut p = [0.0; 2];
    for (u, w) in u.iter().zip(w) {
        p[0] += rho * u[0] * w;
        p[1] += rho * u[1] * w;
    }
    p
}

pub fn body_angular_momentum(x: &[[f64; 2]], u: &[[f64; 2]], w: &[f64], rho: f64, x0: [f64; 2]) -> f64 {
    x.iter()
        .zip(u)
        .zip(w)
        .map(|((x, u), w)| rho * cross([x[0] - x0[0], x[1] - x0[1]], *u) * w)
        .sum()
}

/// Rigid velocities `(U_r, W_r)` conserving the linear and angular momentum
/// of the marker samples `ju` about the weighted centroid of `x`.
pub fn update_free_motion(x: &[[f64; 2]], w: &[f64], ju: &[[f64; 2]]) -> Result<([f64; 2], f64)> {
    if ju.len() != x.len() || w.len() != x.len() {
        return Err(Error::Shape("marker arrays differ in length".into()));
    }
    let c = weighted_centroid(x, w);
    let (mut m, mut i) = (0.0, 0.0);
    let (mut p, mut l) = ([0.0; 2], 0.0);
    for k in 0..x.len() {
        let r = [x[k][0] - c[0], x[k][1] - c[1]];
        m += w[k];
        i += (r[0] * r[0] + r[1] * r[1]) * w[k];
        p[0] += ju[k][0] * w[k];
        p[1] += ju[k][1] * w[k];
        l += cross(r, ju[k]) * w[k];
    }
    if !(m > 0.0 && i > 0.0) {
        return Err(Error::Geometry("body mass and inertia must be positive".into()));
    }
    Ok(([p[0] / m, p[1] / m], l / i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new([-4.0, -4.0], [8.0, 8.0], 200, 200).unwrap()
    }

    #[test]
    fn inline_oscillation_starts_at_minus_u0() {
        let b = RigidBody::new(
            "c",
            Shape::Disc { diameter: 1.0 },
            Kinematics::InlineOscillation { u0: 1.0, frequency: 0.2 },
            [0.0, 0.0],
            &grid(),
        )
        .unwrap();
        let u = b.desired_velocity(0.0).unwrap();
        assert!(u.iter().all(|u| *u == [-1.0, 0.0]));
    }

    #[test]
    fn rotation_vanishes_at_start_and_at_center() {
        let mut b = RigidBody::new(
            "c",
            Shape::Disc { diameter: 1.0 },
            Kinematics::RotationalOscillation { amplitude: 1.0, frequency: 0.1 },
            [0.0, 0.0],
            &grid(),
        )
        .unwrap();
        assert!(b.desired_velocity(0.0).unwrap().iter().all(|u| *u == [0.0, 0.0]));
        b.state.positions.push([0.0, 0.0]);
        for t in [0.3, 1.7, 4.2] {
            let u = b.desired_velocity(t).unwrap();
            assert_eq!(*u.last().unwrap(), [0.0, 0.0]);
        }
    }

    #[test]
    fn free_body_refuses_desired_velocity() {
        let b = RigidBody::new(
            "p",
            Shape::Disc { diameter: 0.5 },
            Kinematics::Free { solid_density: 1.01, gravity: 980.0 },
            [0.0, 0.0],
            &grid(),
        )
        .unwrap();
        assert!(matches!(b.desired_velocity(0.0), Err(Error::State(_))));
    }

    #[test]
    fn free_motion_of_uniform_and_rotating_samples() {
        let b = RigidBody::new("d", Shape::Disc { diameter: 1.0 }, Kinematics::Stationary, [0.3, -0.2], &grid()).unwrap();
        let x = b.positions();
        let uni = vec![[0.5, -2.0]; x.len()];
        let (u, w) = update_free_motion(x, &b.weights, &uni).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-14 && (u[1] + 2.0).abs() < 1e-14 && w.abs() < 1e-13);
        let om = 1.3;
        let rot: Vec<_> = x.iter().map(|p| [-om * (p[1] + 0.2), om * (p[0] - 0.3)]).collect();
        let (u, w) = update_free_motion(x, &b.weights, &rot).unwrap();
        assert!((w - om).abs() < 1e-12 && u[0].abs() < 1e-12);
        let zero = vec![[0.0; 2]; x.len()];
        assert_eq!(update_free_motion(x, &b.weights, &zero).unwrap(), ([0.0, 0.0], 0.0));
    }

    #[test]
    fn eel_head_starts_at_requested_point() {
        let g = GridSpec::new([-2.0, -1.0], [4.0, 2.0], 256, 128).unwrap();
        let b = RigidBody::new(
            "eel",
            Shape::Eel { length: 1.0, width: EelWidth::default() },
            Kinematics::Eel { period: 1.0 },
            [0.0, 0.0],
            &g,
        )
        .unwrap();
        let bb = b.bounding_box();
        assert!(bb[0][0] > 0.0 && bb[0][0] < 0.01, "{bb:?}");
        assert!(bb[1][0] < 1.0 && bb[1][0] > 0.99);
        // Deformation carries no momentum, so a body at rest has none.
        let p = b.momentum(1.0);
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
    }
}
