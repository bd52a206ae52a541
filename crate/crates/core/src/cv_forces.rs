//! Control-volume and Lagrange-multiplier force/torque estimators.
//!
//! A control volume is a box whose sides lie on grid face lines. Surface
//! integrals are Riemann sums over the faces of the four sides; volume
//! integrals are face sums with half weights on the box boundary, so the
//! weights of each component add up to the box area.
//!
//! All reductions run in a fixed order (sides left, right, bottom, top;
//! faces in increasing index), so results are deterministic.

use serde::{Deserialize, Serialize};

use crate::bodies::{bounding_box, cross, LmRecord, RigidBody};
use crate::error::{Error, Result};
use crate::mesh::{CellField, FaceField, GridSpec};
use crate::navier::FlowState;

/// Snap tolerance in cells: corners within this of a face line count as on it.
const SNAP_TOL: f64 = 1e-9;

/// Cells between a control surface and a non-periodic boundary: the surface
/// stencils read the pressure cell on the far side of each face.
const WALL_CLEARANCE: isize = 1;

/// Axis-aligned box with corners on face lines `lo` and `hi` (face indices;
/// may lie outside `0..=n` on periodic axes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlVolume {
    pub lo: [isize; 2],
    pub hi: [isize; 2],
}

impl ControlVolume {
    /// Physical corners `[lower, upper]`.
    pub fn bounds(&self, g: &GridSpec) -> [[f64; 2]; 2] {
        [
            [g.x_face(self.lo[0]), g.y_face(self.lo[1])],
            [g.x_face(self.hi[0]), g.y_face(self.hi[1])],
        ]
    }

    pub fn area(&self, g: &GridSpec) -> f64 {
        (self.hi[0] - self.lo[0]) as f64 * g.dx * (self.hi[1] - self.lo[1]) as f64 * g.dy
    }

    pub fn shifted(&self, d: [isize; 2]) -> Self {
        ControlVolume {
            lo: [self.lo[0] + d[0], self.lo[1] + d[1]],
            hi: [self.hi[0] + d[0], self.hi[1] + d[1]],
        }
    }

    /// True if any of `points` lies inside the closed box.
    pub fn intersects(&self, points: &[[f64; 2]], g: &GridSpec) -> bool {
        let [lo, hi] = self.bounds(g);
        points
            .iter()
            .any(|p| p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1])
    }

    fn validate(&self, g: &GridSpec, periodic: [bool; 2]) -> Result<()> {
        let n = [g.nx as isize, g.ny as isize];
        for a in 0..2 {
            if self.hi[a] <= self.lo[a] {
                return Err(Error::Geometry(format!("control volume {self:?} is degenerate")));
            }
            if periodic[a] {
                if self.hi[a] - self.lo[a] > n[a] {
                    return Err(Error::Geometry(format!("control volume {self:?} is wider than the domain")));
                }
            } else if self.lo[a] < WALL_CLEARANCE || self.hi[a] > n[a] - WALL_CLEARANCE {
                return Err(Error::Geometry(format!(
                    "control volume {self:?} leaves the domain or touches a non-periodic boundary"
                )));
            }
        }
        Ok(())
    }

    /// Limits `shift` so the moved box keeps its clearance from
    /// non-periodic boundaries; the box stops following along that axis.
    fn clamp_shift(&self, shift: [isize; 2], g: &GridSpec, periodic: [bool; 2]) -> [isize; 2] {
        let n = [g.nx as isize, g.ny as isize];
        let mut s = shift;
        for a in 0..2 {
            if !periodic[a] {
                let min = WALL_CLEARANCE - self.lo[a];
                let max = n[a] - WALL_CLEARANCE - self.hi[a];
                if min <= max {
                    s[a] = s[a].clamp(min, max);
                }
            }
        }
        s
    }
}

/// Smallest face-aligned box containing `[lower, upper]`.
pub fn snap_cv(lower: [f64; 2], upper: [f64; 2], g: &GridSpec, periodic: [bool; 2]) -> Result<ControlVolume> {
    let mut lo = [0isize; 2];
    let mut hi = [0isize; 2];
    for a in 0..2 {
        if !(lower[a].is_finite() && upper[a].is_finite()) {
            return Err(Error::Geometry("control volume corners must be finite".into()));
        }
        let h = if a == 0 { g.dx } else { g.dy };
        let sl = (lower[a] - g.origin[a]) / h;
        let su = (upper[a] - g.origin[a]) / h;
        lo[a] = (sl + SNAP_TOL).floor() as isize;
        hi[a] = (su - SNAP_TOL).ceil() as isize;
    }
    let cv = ControlVolume { lo, hi };
    cv.validate(g, periodic)?;
    Ok(cv)
}

/// How a control volume moves with time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MotionPolicy {
    Stationary,
    /// Shift by whole cells whenever the body's bounding box comes closer
    /// than `margin` cells to a side.
    FollowBody {
        #[serde(default = "default_margin")]
        margin: usize,
    },
    /// Shift by whole cells so the box keeps its initial offset from the
    /// body's center.
    TrackCenter,
    /// Shift by `shift` cells every `every` steps.
    Schedule { every: u64, shift: [isize; 2] },
}

fn default_margin() -> usize {
    3
}

/// One follow-body update: returns the moved box and the shift in cells.
pub fn move_cv(cv: &ControlVolume, margin: usize, body_box: [[f64; 2]; 2], g: &GridSpec, periodic: [bool; 2]) -> Result<(ControlVolume, [isize; 2])> {
    let [lo, hi] = cv.bounds(g);
    let m = margin as f64;
    let mut shift = [0isize; 2];
    for a in 0..2 {
        let h = if a == 0 { g.dx } else { g.dy };
        let gap_lo = (body_box[0][a] - lo[a]) / h;
        let gap_hi = (hi[a] - body_box[1][a]) / h;
        let need_lo = gap_lo < m;
        let need_hi = gap_hi < m;
        if need_lo && need_hi {
            return Err(Error::Geometry(format!(
                "control volume {cv:?} is too small to keep a {margin}-cell margin around the body"
            )));
        }
        if need_lo {
            shift[a] = -((m - gap_lo - SNAP_TOL).ceil() as isize);
        } else if need_hi {
            shift[a] = (m - gap_hi - SNAP_TOL).ceil() as isize;
        }
    }
    let shift = cv.clamp_shift(shift, g, periodic);
    let moved = cv.shifted(shift);
    moved.validate(g, periodic)?;
    let [nlo, nhi] = moved.bounds(g);
    for a in 0..2 {
        if body_box[0][a] <= nlo[a] || body_box[1][a] >= nhi[a] {
            return Err(Error::Geometry("body does not fit inside its control volume".into()));
        }
    }
    Ok((moved, shift))
}

/// A control volume together with its motion policy and the state needed
/// to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingCv {
    pub cv: ControlVolume,
    pub policy: MotionPolicy,
    /// Box of the previous step (before the last update).
    pub previous: ControlVolume,
    /// Shift of the last update in cells.
    pub last_shift: [isize; 2],
    /// Body center minus box lower corner at placement, in cells.
    anchor: [f64; 2],
}

impl MovingCv {
    pub fn new(cv: ControlVolume, policy: MotionPolicy, body_center: Option<[f64; 2]>, g: &GridSpec) -> Self {
        let [lo, _] = cv.bounds(g);
        let anchor = body_center.map_or([0.0; 2], |c| [(c[0] - lo[0]) / g.dx, (c[1] - lo[1]) / g.dy]);
        MovingCv {
            cv,
            policy,
            previous: cv,
            last_shift: [0, 0],
            anchor,
        }
    }

    pub fn moved(&self) -> bool {
        self.last_shift != [0, 0]
    }

    /// Applies the policy after step `step` completed; `body` is the body the
    /// box follows, at its new position.
    pub fn update(&mut self, body: Option<&RigidBody>, step: u64, g: &GridSpec, periodic: [bool; 2]) -> Result<bool> {
        self.previous = self.cv;
        let shift = match &self.policy {
            MotionPolicy::Stationary => [0, 0],
            MotionPolicy::FollowBody { margin } => {
                let b = body.ok_or_else(|| Error::State("follow-body control volume without a body".into()))?;
                let (cv, s) = move_cv(&self.cv, *margin, b.bounding_box(), g, periodic)?;
                self.cv = cv;
                s
            }
            MotionPolicy::TrackCenter => {
                let b = body.ok_or_else(|| Error::State("tracking control volume without a body".into()))?;
                let c = b.center();
                let [lo, _] = self.cv.bounds(g);
                let d = [
                    ((c[0] - lo[0]) / g.dx - self.anchor[0]).round() as isize,
                    ((c[1] - lo[1]) / g.dy - self.anchor[1]).round() as isize,
                ];
                let d = self.cv.clamp_shift(d, g, periodic);
                self.cv = self.cv.shifted(d);
                d
            }
            MotionPolicy::Schedule { every, shift } => {
                if *every > 0 && step % every == 0 {
                    self.cv = self.cv.shifted(*shift);
                    *shift
                } else {
                    [0, 0]
                }
            }
        };
        self.cv.validate(g, periodic)?;
        self.last_shift = shift;
        Ok(shift != [0, 0])
    }

    /// Control-surface velocity over the last step.
    pub fn surface_velocity(&self, g: &GridSpec, dt: f64) -> [f64; 2] {
        [
            (self.cv.lo[0] - self.previous.lo[0]) as f64 * g.dx / dt,
            (self.cv.lo[1] - self.previous.lo[1]) as f64 * g.dy / dt,
        ]
    }
}

/// Pressure, convective and viscous contributions of one side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SideFlux {
    pub pressure: [f64; 2],
    pub convective: [f64; 2],
    pub viscous: [f64; 2],
    pub pressure_torque: f64,
    pub convective_torque: f64,
    pub viscous_torque: f64,
}

impl SideFlux {
    fn add(&mut self, o: &SideFlux) {
        for a in 0..2 {
            self.pressure[a] += o.pressure[a];
            self.convective[a] += o.convective[a];
            self.viscous[a] += o.viscous[a];
        }
        self.pressure_torque += o.pressure_torque;
        self.convective_torque += o.convective_torque;
        self.viscous_torque += o.viscous_torque;
    }

    pub fn force(&self) -> [f64; 2] {
        [
            self.pressure[0] + self.convective[0] + self.viscous[0],
            self.pressure[1] + self.convective[1] + self.viscous[1],
        ]
    }

    pub fn torque(&self) -> f64 {
        self.pressure_torque + self.convective_torque + self.viscous_torque
    }
}

/// `∮ n·[-p I - (u - u_S) ρ u + T] dS` and its moment about `x0`, per side
/// (left, right, bottom, top) and summed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfaceFlux {
    pub sides: [SideFlux; 4],
    pub total: SideFlux,
}

struct Fields<'a> {
    u: &'a FaceField,
    v: &'a FaceField,
    p: &'a CellField,
}

fn missing() -> Error {
    Error::Geometry("control volume stencil reaches outside the domain".into())
}

impl Fields<'_> {
    #[inline]
    fn u(&self, i: isize, j: isize) -> Result<f64> {
        self.u.get(i, j).ok_or_else(missing)
    }
    #[inline]
    fn v(&self, i: isize, j: isize) -> Result<f64> {
        self.v.get(i, j).ok_or_else(missing)
    }
    #[inline]
    fn p(&self, i: isize, j: isize) -> Result<f64> {
        self.p.get(i, j).ok_or_else(missing)
    }
}

/// Parameters shared by the estimators.
#[derive(Debug, Clone, Copy)]
pub struct FluxParams<'a> {
    pub g: &'a GridSpec,
    pub rho: f64,
    pub mu: f64,
}

/// Discrete surface integrals over the sides of `cv`. `u_s` is the
/// control-surface velocity entering the convective flux; pass zero for
/// the modified estimator.
pub fn surface_flux(u: &FaceField, v: &FaceField, p: &CellField, cv: &ControlVolume, fp: FluxParams, x0: [f64; 2], u_s: [f64; 2]) -> Result<SurfaceFlux> {
    let (g, rho, mu) = (fp.g, fp.rho, fp.mu);
    let f = Fields { u, v, p };
    let (dx, dy) = (g.dx, g.dy);
    let mut out = SurfaceFlux::default();

    // Vertical sides: left (outward normal -e_x) and right (+e_x).
    for (k, (i, s)) in [(cv.lo[0], -1.0), (cv.hi[0], 1.0)].into_iter().enumerate() {
        let mut side = SideFlux::default();
        for j in cv.lo[1]..cv.hi[1] {
            let u0 = f.u(i, j)?;
            let pbar = 0.5 * (f.p(i - 1, j)? + f.p(i, j)?);
            let vbar = 0.25 * (f.v(i - 1, j)? + f.v(i, j)? + f.v(i - 1, j + 1)? + f.v(i, j + 1)?);
            let dudx = (f.u(i + 1, j)? - f.u(i - 1, j)?) / (2.0 * dx);
            let dudy = (f.u(i, j + 1)? - f.u(i, j - 1)?) / (2.0 * dy);
            let dvdx = (f.v(i, j)? - f.v(i - 1, j)? + f.v(i, j + 1)? - f.v(i - 1, j + 1)?) / (2.0 * dx);
            let pr = [-s * pbar * dy, 0.0];
            let m = -s * rho * (u0 - u_s[0]) * dy;
            let cf = [m * u0, m * vbar];
            let vf = [s * mu * 2.0 * dudx * dy, s * mu * (dudy + dvdx) * dy];
            let r = [g.x_face(i) - x0[0], g.y_center(j) - x0[1]];
            accumulate(&mut side, pr, cf, vf, r);
        }
        out.sides[k] = side;
    }
    // Horizontal sides: bottom (outward normal -e_y) and top (+e_y).
    for (k, (j, s)) in [(cv.lo[1], -1.0), (cv.hi[1], 1.0)].into_iter().enumerate() {
        let mut side = SideFlux::default();
        for i in cv.lo[0]..cv.hi[0] {
            let v0 = f.v(i, j)?;
            let pbar = 0.5 * (f.p(i, j)? + f.p(i, j - 1)?);
            let ubar = 0.25 * (f.u(i, j)? + f.u(i + 1, j)? + f.u(i, j - 1)? + f.u(i + 1, j - 1)?);
            let dudy = (f.u(i + 1, j)? - f.u(i + 1, j - 1)? + f.u(i, j)? - f.u(i, j - 1)?) / (2.0 * dy);
            let dvdx = (f.v(i + 1, j)? - f.v(i - 1, j)?) / (2.0 * dx);
            let dvdy = (f.v(i, j + 1)? - f.v(i, j - 1)?) / (2.0 * dy);
            let pr = [0.0, -s * pbar * dx];
            let m = -s * rho * (v0 - u_s[1]) * dx;
            let cf = [m * ubar, m * v0];
            let vf = [s * mu * (dudy + dvdx) * dx, s * mu * 2.0 * dvdy * dx];
            let r = [g.x_center(i) - x0[0], g.y_face(j) - x0[1]];
            accumulate(&mut side, pr, cf, vf, r);
        }
        out.sides[2 + k] = side;
    }
    let mut total = SideFlux::default();
    for s in &out.sides {
        total.add(s);
    }
    out.total = total;
    Ok(out)
}

#[inline]
fn accumulate(side: &mut SideFlux, pr: [f64; 2], cf: [f64; 2], vf: [f64; 2], r: [f64; 2]) {
    for a in 0..2 {
        side.pressure[a] += pr[a];
        side.convective[a] += cf[a];
        side.viscous[a] += vf[a];
    }
    side.pressure_torque += cross(r, pr);
    side.convective_torque += cross(r, cf);
    side.viscous_torque += cross(r, vf);
}

/// `∫_CV ρ u dV` with half weights on faces lying on the control surface.
pub fn cv_momentum(u: &FaceField, v: &FaceField, cv: &ControlVolume, g: &GridSpec, rho: f64) -> Result<[f64; 2]> {
    let dv = g.cell_area();
    let mut mx = 0.0;
    for j in cv.lo[1]..cv.hi[1] {
        for i in cv.lo[0]..=cv.hi[0] {
            let w = if i == cv.lo[0] || i == cv.hi[0] { 0.5 } else { 1.0 };
            mx += w * u.get(i, j).ok_or_else(missing)?;
        }
    }
    let mut my = 0.0;
    for j in cv.lo[1]..=cv.hi[1] {
        let w = if j == cv.lo[1] || j == cv.hi[1] { 0.5 } else { 1.0 };
        for i in cv.lo[0]..cv.hi[0] {
            my += w * v.get(i, j).ok_or_else(missing)?;
        }
    }
    Ok([rho * mx * dv, rho * my * dv])
}

/// `∫_CV ρ r ∧ u dV` about `x0`, looping over x-faces with a four-point
/// average of v.
pub fn cv_angular_momentum(u: &FaceField, v: &FaceField, cv: &ControlVolume, g: &GridSpec, rho: f64, x0: [f64; 2]) -> Result<f64> {
    let dv = g.cell_area();
    let mut l = 0.0;
    for j in cv.lo[1]..cv.hi[1] {
        let ry = g.y_center(j) - x0[1];
        for i in cv.lo[0]..=cv.hi[0] {
            let w = if i == cv.lo[0] || i == cv.hi[0] { 0.5 } else { 1.0 };
            let rx = g.x_face(i) - x0[0];
            let uu = u.get(i, j).ok_or_else(missing)?;
            let vb = 0.25
                * (v.get(i - 1, j).ok_or_else(missing)?
                    + v.get(i, j).ok_or_else(missing)?
                    + v.get(i - 1, j + 1).ok_or_else(missing)?
                    + v.get(i, j + 1).ok_or_else(missing)?);
            l += w * (rx * vb - ry * uu);
        }
    }
    Ok(rho * l * dv)
}

/// Body linear and angular momentum at two consecutive levels, about `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyMomenta {
    pub p0: [f64; 2],
    pub p1: [f64; 2],
    pub l0: f64,
    pub l1: f64,
    pub x0: [f64; 2],
}

impl BodyMomenta {
    pub fn from_lm(lm: &LmRecord) -> Self {
        BodyMomenta {
            p0: lm.momentum[0],
            p1: lm.momentum[1],
            l0: lm.angular_momentum[0],
            l1: lm.angular_momentum[1],
            x0: lm.x0,
        }
    }

    /// No body inside the box.
    pub fn none(x0: [f64; 2]) -> Self {
        BodyMomenta {
            p0: [0.0; 2],
            p1: [0.0; 2],
            l0: 0.0,
            l1: 0.0,
            x0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CvModified,
    CvNoca,
    Lm,
    StokesCv,
    StokesLm,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::CvModified => "cv-modified",
            Method::CvNoca => "cv-noca",
            Method::Lm => "lm",
            Method::StokesCv => "stokes-cv",
            Method::StokesLm => "stokes-lm",
        }
    }
}

/// Additive decomposition of a force or torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Terms<T> {
    /// `-Δ(CV momentum)/Δt`.
    pub volume: T,
    /// `Δ(body momentum)/Δt`.
    pub body: T,
    /// `-Σ (F + extra) Δs` (LM estimators only).
    pub lagrangian: T,
    pub pressure: T,
    pub convective: T,
    pub viscous: T,
}

impl Terms<[f64; 2]> {
    pub fn sum(&self) -> [f64; 2] {
        let mut s = [0.0; 2];
        for a in 0..2 {
            s[a] = self.volume[a] + self.body[a] + self.lagrangian[a] + self.pressure[a] + self.convective[a] + self.viscous[a];
        }
        s
    }
}

impl Terms<f64> {
    pub fn sum(&self) -> f64 {
        self.volume + self.body + self.lagrangian + self.pressure + self.convective + self.viscous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceTorqueRecord {
    pub t: f64,
    pub body: String,
    pub method: Method,
    pub force: [f64; 2],
    pub torque: f64,
    pub force_terms: Terms<[f64; 2]>,
    pub torque_terms: Terms<f64>,
    pub cv: Option<ControlVolume>,
    pub cv_moved: bool,
}

impl ForceTorqueRecord {
    fn from_terms(t: f64, body: &str, method: Method, ft: Terms<[f64; 2]>, tt: Terms<f64>, cv: Option<ControlVolume>, cv_moved: bool) -> Self {
        ForceTorqueRecord {
            t,
            body: body.to_string(),
            method,
            force: ft.sum(),
            torque: tt.sum(),
            force_terms: ft,
            torque_terms: tt,
            cv,
            cv_moved,
        }
    }
}

fn flux_terms(ft: &mut Terms<[f64; 2]>, tt: &mut Terms<f64>, s: &SideFlux) {
    ft.pressure = s.pressure;
    ft.convective = s.convective;
    ft.viscous = s.viscous;
    tt.pressure = s.pressure_torque;
    tt.convective = s.convective_torque;
    tt.viscous = s.viscous_torque;
}

/// Single-location estimator: both momentum integrals over `cv` at its
/// `t^{n+1}` position, no surface-velocity terms.
pub fn force_modified(prev: &FlowState, next: &FlowState, cv: &ControlVolume, bm: &BodyMomenta, fp: FluxParams, dt: f64, body: &str) -> Result<ForceTorqueRecord> {
    let (g, rho) = (fp.g, fp.rho);
    let m1 = cv_momentum(&next.u, &next.v, cv, g, rho)?;
    let m0 = cv_momentum(&prev.u, &prev.v, cv, g, rho)?;
    let l1 = cv_angular_momentum(&next.u, &next.v, cv, g, rho, bm.x0)?;
    let l0 = cv_angular_momentum(&prev.u, &prev.v, cv, g, rho, bm.x0)?;
    let sf = surface_flux(&next.u, &next.v, &next.p, cv, fp, bm.x0, [0.0; 2])?;
    let mut ft = Terms::<[f64; 2]> {
        volume: [-(m1[0] - m0[0]) / dt, -(m1[1] - m0[1]) / dt],
        body: [(bm.p1[0] - bm.p0[0]) / dt, (bm.p1[1] - bm.p0[1]) / dt],
        ..Default::default()
    };
    let mut tt = Terms::<f64> {
        volume: -(l1 - l0) / dt,
        body: (bm.l1 - bm.l0) / dt,
        ..Default::default()
    };
    flux_terms(&mut ft, &mut tt, &sf.total);
    Ok(ForceTorqueRecord::from_terms(next.t, body, Method::CvModified, ft, tt, Some(*cv), false))
}

/// Two-location estimator on the fluid region `V = CV \ body`, with the
/// control-surface velocity `u_s` in the convective flux.
#[allow(clippy::too_many_arguments)]
pub fn force_noca(
    prev: &FlowState,
    next: &FlowState,
    cv_prev: &ControlVolume,
    cv_next: &ControlVolume,
    bm: &BodyMomenta,
    fp: FluxParams,
    dt: f64,
    u_s: [f64; 2],
    body: &str,
) -> Result<ForceTorqueRecord> {
    let (g, rho) = (fp.g, fp.rho);
    let m1 = cv_momentum(&next.u, &next.v, cv_next, g, rho)?;
    let m0 = cv_momentum(&prev.u, &prev.v, cv_prev, g, rho)?;
    let l1 = cv_angular_momentum(&next.u, &next.v, cv_next, g, rho, bm.x0)?;
    let l0 = cv_angular_momentum(&prev.u, &prev.v, cv_prev, g, rho, bm.x0)?;
    let sf = surface_flux(&next.u, &next.v, &next.p, cv_next, fp, bm.x0, u_s)?;
    // -(M_V^{n+1} - M_V^n)/Δt with M_V = M_CV - P_b, kept as two terms.
    let mut ft = Terms::<[f64; 2]> {
        volume: [-(m1[0] - m0[0]) / dt, -(m1[1] - m0[1]) / dt],
        body: [(bm.p1[0] - bm.p0[0]) / dt, (bm.p1[1] - bm.p0[1]) / dt],
        ..Default::default()
    };
    let mut tt = Terms::<f64> {
        volume: -(l1 - l0) / dt,
        body: (bm.l1 - bm.l0) / dt,
        ..Default::default()
    };
    flux_terms(&mut ft, &mut tt, &sf.total);
    let moved = cv_prev != cv_next;
    Ok(ForceTorqueRecord::from_terms(next.t, body, Method::CvNoca, ft, tt, Some(*cv_next), moved))
}

/// Force and torque from the body's momentum balance and the stored
/// constraint (and other body) forces.
pub fn force_lm(lm: &LmRecord, t: f64, body: &str) -> ForceTorqueRecord {
    let dt = lm.dt;
    let mut fsum = [0.0; 2];
    let mut tsum = 0.0;
    for k in 0..lm.positions.len() {
        let f = [lm.force[k][0] + lm.extra[k][0], lm.force[k][1] + lm.extra[k][1]];
        let w = lm.weights[k];
        fsum[0] += f[0] * w;
        fsum[1] += f[1] * w;
        let r = [lm.positions[k][0] - lm.x0[0], lm.positions[k][1] - lm.x0[1]];
        tsum += cross(r, f) * w;
    }
    let p = lm.momentum;
    let ft = Terms::<[f64; 2]> {
        body: [(p[1][0] - p[0][0]) / dt, (p[1][1] - p[0][1]) / dt],
        lagrangian: [-fsum[0], -fsum[1]],
        ..Default::default()
    };
    let tt = Terms::<f64> {
        body: (lm.angular_momentum[1] - lm.angular_momentum[0]) / dt,
        lagrangian: -tsum,
        ..Default::default()
    };
    ForceTorqueRecord::from_terms(t, body, Method::Lm, ft, tt, None, false)
}

/// Steady Stokes control-volume force: pressure and viscous fluxes only.
pub fn stokes_force_cv(u: &FaceField, v: &FaceField, p: &CellField, cv: &ControlVolume, g: &GridSpec, mu: f64, x0: [f64; 2], body: &str) -> Result<ForceTorqueRecord> {
    let fp = FluxParams { g, rho: 0.0, mu };
    let sf = surface_flux(u, v, p, cv, fp, x0, [0.0; 2])?;
    let ft = Terms::<[f64; 2]> {
        pressure: sf.total.pressure,
        viscous: sf.total.viscous,
        ..Default::default()
    };
    let tt = Terms::<f64> {
        pressure: sf.total.pressure_torque,
        viscous: sf.total.viscous_torque,
        ..Default::default()
    };
    Ok(ForceTorqueRecord::from_terms(0.0, body, Method::StokesCv, ft, tt, Some(*cv), false))
}

/// Steady Stokes Lagrangian force `-Σ F Δs` and torque `-Σ R ∧ F Δs`.
pub fn stokes_force_lm(positions: &[[f64; 2]], weights: &[f64], force: &[[f64; 2]], x0: [f64; 2], body: &str) -> ForceTorqueRecord {
    let mut fsum = [0.0; 2];
    let mut tsum = 0.0;
    for k in 0..positions.len() {
        let w = weights[k];
        fsum[0] += force[k][0] * w;
        fsum[1] += force[k][1] * w;
        tsum += cross([positions[k][0] - x0[0], positions[k][1] - x0[1]], force[k]) * w;
    }
    let ft = Terms::<[f64; 2]> {
        lagrangian: [-fsum[0], -fsum[1]],
        ..Default::default()
    };
    let tt = Terms::<f64> {
        lagrangian: -tsum,
        ..Default::default()
    };
    ForceTorqueRecord::from_terms(0.0, body, Method::StokesLm, ft, tt, None, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumSnapshot {
    pub t: f64,
    pub cv_momentum: [f64; 2],
    pub cv_angular_momentum: f64,
    pub body_momentum: [f64; 2],
    pub body_angular_momentum: f64,
    /// `∫_Ω ρ u dV`.
    pub domain_momentum: [f64; 2],
    /// `∫_Ω ρ r ∧ u dV` about `x0`.
    pub domain_angular_momentum: f64,
    /// `-∫_CV ρ ∂u/∂t dV + ∮ n·[-p I - ρ u u + T] dS`.
    pub residual: [f64; 2],
}

/// `∫_Ω ρ r ∧ u dV`, summing `-r_y u` over x-faces and `r_x v` over
/// y-faces with half weights on non-periodic boundary faces.
pub fn domain_angular_momentum(u: &FaceField, v: &FaceField, g: &GridSpec, rho: f64, x0: [f64; 2]) -> f64 {
    let mut l = 0.0;
    for j in 0..u.nj {
        let ry = g.y_center(j as isize) - x0[1];
        for i in 0..u.ni {
            let w = if !u.periodic[0] && (i == 0 || i + 1 == u.ni) { 0.5 } else { 1.0 };
            l -= w * ry * u.at(i, j);
        }
    }
    for j in 0..v.nj {
        let w = if !v.periodic[1] && (j == 0 || j + 1 == v.nj) { 0.5 } else { 1.0 };
        for i in 0..v.ni {
            let rx = g.x_center(i as isize) - x0[0];
            l += w * rx * v.at(i, j);
        }
    }
    rho * l * g.cell_area()
}

/// Momentum bookkeeping for one step, built on the modified estimator.
pub fn momentum_diagnostics(prev: &FlowState, next: &FlowState, cv: &ControlVolume, bm: &BodyMomenta, fp: FluxParams, dt: f64) -> Result<MomentumSnapshot> {
    let (g, rho) = (fp.g, fp.rho);
    let rec = force_modified(prev, next, cv, bm, fp, dt, "")?;
    let t = &rec.force_terms;
    let mut residual = [0.0; 2];
    for a in 0..2 {
        residual[a] = t.volume[a] + t.pressure[a] + t.convective[a] + t.viscous[a];
    }
    Ok(MomentumSnapshot {
        t: next.t,
        cv_momentum: cv_momentum(&next.u, &next.v, cv, g, rho)?,
        cv_angular_momentum: cv_angular_momentum(&next.u, &next.v, cv, g, rho, bm.x0)?,
        body_momentum: bm.p1,
        body_angular_momentum: bm.l1,
        domain_momentum: next.momentum(g, rho),
        domain_angular_momentum: domain_angular_momentum(&next.u, &next.v, g, rho, bm.x0),
        residual,
    })
}

/// Reference scales for dimensionless coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub rho: f64,
    pub velocity: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub cd: f64,
    pub cl: f64,
    pub ct: f64,
}

/// `C_D = F_x / q`, `C_L = F_y / q`, `C_T = M_z / q` with
/// `q = ρ U² L / 2`.
pub fn coefficients(rec: &ForceTorqueRecord, n: &Normalization) -> Result<Coefficients> {
    let q = 0.5 * n.rho * n.velocity * n.velocity * n.length;
    if !(q.is_finite() && q != 0.0) {
        return Err(Error::config("normalization needs nonzero density, velocity and length"));
    }
    Ok(Coefficients {
        cd: rec.force[0] / q,
        cl: rec.force[1] / q,
        ct: rec.torque / q,
    })
}

/// Markers of a body, used for CV intersection warnings.
pub fn body_box(body: &RigidBody) -> [[f64; 2]; 2] {
    bounding_box(body.positions())
}
