//! Direct-forcing immersed-boundary time integrator.
//!
//! One step: Adams–Bashforth convection, Crank–Nicolson viscous solve,
//! incremental pressure projection, then the direct-forcing correction
//! `u = ũ + Δt/ρ S F` with `F = ρ/Δt (U_b - J ũ)` at the midstep markers.

use serde::{Deserialize, Serialize};

use crate::bodies::{body_angular_momentum, collision_force, gravity_force, Kinematics, LmRecord, Repulsion, RigidBody};
use crate::error::{Error, Result};
use crate::kernels::{Coupling, DeltaKernel};
use crate::mesh::ghost::{enforce_normal_bc, pad_velocity, velocity_rules, GhostRule, Padded};
use crate::mesh::{active_range, compute_dt, divergence, gradient, Axis, BoundaryCondition, BoundarySpec, CellField, FaceField, GridSpec, Side};
use crate::poisson::PoissonSolver;

fn default_div_tol() -> f64 {
    1e-10
}
fn default_solve_tol() -> f64 {
    1e-9
}
fn default_max_iter() -> usize {
    500
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// `Δt = min(C min(dx/|u|, dy/|v|), dt_max)`, recomputed every step.
    Cfl { cfl: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub rho: f64,
    pub mu: f64,
    pub dt: DtPolicy,
    #[serde(default = "default_div_tol")]
    pub div_tol: f64,
    /// Relative residual tolerance of the viscous solves.
    #[serde(default = "default_solve_tol")]
    pub solve_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Re-project after the forcing correction. Off by default: the
    /// correction is applied to the projected field and left as is.
    #[serde(default)]
    pub project_after_forcing: bool,
    #[serde(default)]
    pub kernel: DeltaKernel,
}

impl FluidParams {
    pub fn new(rho: f64, mu: f64, dt: DtPolicy) -> Self {
        FluidParams {
            rho,
            mu,
            dt,
            div_tol: default_div_tol(),
            solve_tol: default_solve_tol(),
            max_iter: default_max_iter(),
            project_after_forcing: false,
            kernel: DeltaKernel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            p.push(format!("rho must be non-negative, got {}", self.rho));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            p.push(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.div_tol > 0.0) || !(self.solve_tol > 0.0) || self.max_iter == 0 {
            p.push("tolerances and iteration cap must be positive".into());
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => p.push(format!("dt must be positive, got {dt}")),
            DtPolicy::Cfl { cfl, dt_max } if !(cfl > 0.0 && cfl <= 1.0 && dt_max > 0.0) => {
                p.push(format!("CFL policy needs 0 < cfl <= 1 and dt_max > 0, got {cfl}, {dt_max}"))
            }
            _ => {}
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }
}

/// Velocity at `t^n`, pressure at `t^{n-1/2}`, and the convective term of
/// the previous step for Adams–Bashforth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub u: FaceField,
    pub v: FaceField,
    pub p: CellField,
    pub t: f64,
    pub step: u64,
    pub conv_prev: Option<(FaceField, FaceField)>,
    pub dt_prev: Option<f64>,
}

impl FlowState {
    /// Fluid at rest apart from the prescribed normal boundary velocity.
    pub fn new(g: &GridSpec, bcs: &BoundarySpec) -> Self {
        Self::from_fn(g, bcs, |_, _| 0.0, |_, _| 0.0)
    }

    /// Samples initial velocity components; boundary normal values are then
    /// overwritten by the boundary conditions at `t = 0`.
    pub fn from_fn(g: &GridSpec, bcs: &BoundarySpec, u0: impl Fn(f64, f64) -> f64, v0: impl Fn(f64, f64) -> f64) -> Self {
        let per = crate::mesh::periodicity(bcs);
        let mut u = FaceField::from_fn(g, Axis::X, per, u0);
        let mut v = FaceField::from_fn(g, Axis::Y, per, v0);
        enforce_normal_bc(&mut u, bcs, 0.0);
        enforce_normal_bc(&mut v, bcs, 0.0);
        FlowState {
            u,
            v,
            p: CellField::zeros(g, per),
            t: 0.0,
            step: 0,
            conv_prev: None,
            dt_prev: None,
        }
    }

    /// Total fluid momentum `Σ ρ u ΔV` over the whole grid (boundary faces
    /// weighted by one half).
    pub fn momentum(&self, g: &GridSpec, rho: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, f) in [&self.u, &self.v].into_iter().enumerate() {
            let per = f.periodic[c];
            let (n_along, stride_is_i) = if c == 0 { (f.ni, true) } else { (f.nj, false) };
            let mut s = 0.0;
            for j in 0..f.nj {
                for i in 0..f.ni {
                    let k = if stride_is_i { i } else { j };
                    let w = if !per && (k == 0 || k + 1 == n_along) { 0.5 } else { 1.0 };
                    s += w * f.at(i, j);
                }
            }
            out[c] = rho * s * g.cell_area();
        }
        out
    }
}

/// `(∇·(u u), ∇·(u v))` in conservative centred flux form at time `t`,
/// evaluated on the unknown faces (zero elsewhere).
pub fn advection(u: &FaceField, v: &FaceField, g: &GridSpec, bcs: &BoundarySpec, t: f64) -> Result<(FaceField, FaceField)> {
    u.check(g)?;
    v.check(g)?;
    let pu = pad_velocity(u, bcs, t, 1);
    let pv = pad_velocity(v, bcs, t, 1);
    let (idx, idy) = (1.0 / g.dx, 1.0 / g.dy);
    let mut nu = FaceField::zeros(g, Axis::X, u.periodic);
    let mut nv = FaceField::zeros(g, Axis::Y, v.periodic);
    let (xl, xh) = active_range(bcs, Axis::X, Axis::X, u.ni);
    for j in 0..u.nj {
        let jj = j as isize;
        for i in xl..=xh {
            let ii = i as isize;
            let c = pu.at(ii, jj);
            let e = 0.5 * (c + pu.at(ii + 1, jj));
            let w = 0.5 * (pu.at(ii - 1, jj) + c);
            let un = 0.5 * (c + pu.at(ii, jj + 1));
            let us = 0.5 * (pu.at(ii, jj - 1) + c);
            let vn = 0.5 * (pv.at(ii - 1, jj + 1) + pv.at(ii, jj + 1));
            let vs = 0.5 * (pv.at(ii - 1, jj) + pv.at(ii, jj));
            nu.data[j * u.ni + i] = (e * e - w * w) * idx + (un * vn - us * vs) * idy;
        }
    }
    let (yl, yh) = active_range(bcs, Axis::Y, Axis::Y, v.nj);
    for j in yl..=yh {
        let jj = j as isize;
        for i in 0..v.ni {
            let ii = i as isize;
            let c = pv.at(ii, jj);
            let n = 0.5 * (c + pv.at(ii, jj + 1));
            let s = 0.5 * (pv.at(ii, jj - 1) + c);
            let ve = 0.5 * (c + pv.at(ii + 1, jj));
            let vw = 0.5 * (pv.at(ii - 1, jj) + c);
            let ue = 0.5 * (pu.at(ii + 1, jj - 1) + pu.at(ii + 1, jj));
            let uw = 0.5 * (pu.at(ii, jj - 1) + pu.at(ii, jj));
            nv.data[j * v.ni + i] = (ue * ve - uw * vw) * idx + (n * n - s * s) * idy;
        }
    }
    Ok((nu, nv))
}

/// Adams–Bashforth extrapolation of the convective term to `t^{n+1/2}`.
/// Without a previous term (first step) this is forward Euler.
pub fn convective_term(
    current: &(FaceField, FaceField),
    previous: Option<&(FaceField, FaceField)>,
    dt: f64,
    dt_prev: Option<f64>,
) -> (FaceField, FaceField) {
    let mut out = current.clone();
    if let (Some(prev), Some(dtp)) = (previous, dt_prev) {
        let r = dt / dtp;
        let (a, b) = (1.0 + 0.5 * r, -0.5 * r);
        for (o, (c, p)) in [(&mut out.0, (&current.0, &prev.0)), (&mut out.1, (&current.1, &prev.1))] {
            for k in 0..o.data.len() {
                o.data[k] = a * c.data[k] + b * p.data[k];
            }
        }
    }
    out
}

#[inline(always)]
fn lap(p: &Padded, i: isize, j: isize, idx2: f64, idy2: f64) -> f64 {
    let c = p.at(i, j);
    (p.at(i + 1, j) - 2.0 * c + p.at(i - 1, j)) * idx2 + (p.at(i, j + 1) - 2.0 * c + p.at(i, j - 1)) * idy2
}

/// Discrete vector Laplacian of one component with boundary ghosts at `t`,
/// on unknown faces.
pub fn laplacian(f: &FaceField, g: &GridSpec, bcs: &BoundarySpec, t: f64) -> FaceField {
    let p = pad_velocity(f, bcs, t, 1);
    let mut out = FaceField::zeros(g, f.axis, f.periodic);
    let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let rx = active_range(bcs, f.axis, Axis::X, f.ni);
    let ry = active_range(bcs, f.axis, Axis::Y, f.nj);
    for j in ry.0..=ry.1 {
        for i in rx.0..=rx.1 {
            out.data[j * f.ni + i] = lap(&p, i as isize, j as isize, idx2, idy2);
        }
    }
    out
}

/// `(ρ/Δt) I - (μ/2) L` on the unknown faces of one component, with
/// homogeneous boundary ghosts.
struct Helmholtz {
    ni: usize,
    nj: usize,
    rx: (usize, usize),
    ry: (usize, usize),
    rules: ([GhostRule; 2], [GhostRule; 2]),
    /// Inner-product weights; zero on prescribed faces.
    w: Vec<f64>,
    a: f64,
    b: f64,
    idx2: f64,
    idy2: f64,
}

impl Helmholtz {
    fn new(proto: &FaceField, g: &GridSpec, bcs: &BoundarySpec, a: f64, b: f64) -> Self {
        let comp = proto.axis;
        let (ni, nj) = (proto.ni, proto.nj);
        let rx = active_range(bcs, comp, Axis::X, ni);
        let ry = active_range(bcs, comp, Axis::Y, nj);
        let mut w = vec![0.0; ni * nj];
        for j in ry.0..=ry.1 {
            for i in rx.0..=rx.1 {
                w[j * ni + i] = 1.0;
            }
        }
        // Outflow normal faces carry half a control volume; this weight makes
        // the operator symmetric.
        for side in [Side::Low, Side::High] {
            if !matches!(bcs.side(comp, side), BoundaryCondition::Outflow) {
                continue;
            }
            for j in ry.0..=ry.1 {
                for i in rx.0..=rx.1 {
                    let k = if comp == Axis::X { i } else { j };
                    let n = if comp == Axis::X { ni } else { nj };
                    let hit = match side {
                        Side::Low => k == 0,
                        Side::High => k + 1 == n,
                    };
                    if hit {
                        w[j * ni + i] = 0.5;
                    }
                }
            }
        }
        Helmholtz {
            ni,
            nj,
            rx,
            ry,
            rules: velocity_rules(bcs, comp, 0.0, true),
            w,
            a,
            b,
            idx2: 1.0 / (g.dx * g.dx),
            idy2: 1.0 / (g.dy * g.dy),
        }
    }

    fn apply(&self, x: &[f64], buf: &mut Padded, out: &mut [f64]) {
        buf.load(x);
        buf.fill(self.rules.0, self.rules.1);
        for j in self.ry.0..=self.ry.1 {
            for i in self.rx.0..=self.rx.1 {
                let (ii, jj) = (i as isize, j as isize);
                out[j * self.ni + i] = self.a * buf.at(ii, jj) - self.b * lap(buf, ii, jj, self.idx2, self.idy2);
            }
        }
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
    }

    /// Solves `A δ = r` by conjugate gradients in the weighted inner product.
    fn solve(&self, r: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
        let n = r.len();
        let mut x = vec![0.0; n];
        let mut res: Vec<f64> = r.iter().zip(&self.w).map(|(r, w)| if *w > 0.0 { *r } else { 0.0 }).collect();
        let bnorm = self.dot(&res, &res).sqrt();
        if bnorm == 0.0 {
            return Ok((x, 0));
        }
        let mut p = res.clone();
        let mut ap = vec![0.0; n];
        let mut buf = Padded::new(self.ni, self.nj, 1);
        let mut rr = bnorm * bnorm;
        let mut history = Vec::new();
        for it in 1..=max_iter {
            self.apply(&p, &mut buf, &mut ap);
            let pap = self.dot(&p, &ap);
            if !(pap > 0.0) {
                history.push(rr.sqrt() / bnorm);
                break;
            }
            let alpha = rr / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                res[k] -= alpha * ap[k];
            }
            let rr_new = self.dot(&res, &res);
            let rel = rr_new.sqrt() / bnorm;
            history.push(rel);
            if !rel.is_finite() {
                break;
            }
            if rel <= tol {
                return Ok((x, it));
            }
            let beta = rr_new / rr;
            for k in 0..n {
                p[k] = res[k] + beta * p[k];
            }
            rr = rr_new;
        }
        Err(Error::Numerical {
            message: format!("viscous solve did not reach tolerance {tol} in {max_iter} iterations"),
            residuals: history,
        })
    }
}

/// Output of the viscous solve and projection.
#[derive(Debug, Clone)]
pub struct MomentumSolution {
    /// Projected intermediate velocity `ũ^{n+1}`.
    pub u: FaceField,
    pub v: FaceField,
    /// `p^{n+1/2}`.
    pub p: CellField,
    pub iterations: [usize; 2],
    /// `‖∇·ũ‖_∞` after projection.
    pub divergence: f64,
}

/// Per-step diagnostics of the integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub iterations: [usize; 2],
    /// `‖∇·ũ‖_∞` of the projected field.
    pub divergence: f64,
    /// `‖J u^{n+1} - U_b^{n+1}‖_∞` over all bodies.
    pub slip: f64,
}

/// Eulerian body force `(f_x, f_y)` on both face sets.
pub type ForceField = (FaceField, FaceField);

pub struct Integrator {
    pub grid: GridSpec,
    pub bcs: BoundarySpec,
    pub params: FluidParams,
    /// Particle-particle repulsion, applied between bodies with a radius.
    pub repulsion: Option<Repulsion>,
    poisson: PoissonSolver,
}

impl std::fmt::Debug for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrator")
            .field("grid", &self.grid)
            .field("params", &self.params)
            .finish()
    }
}

impl Integrator {
    pub fn new(grid: GridSpec, bcs: BoundarySpec, params: FluidParams) -> Result<Self> {
        params.validate()?;
        if params.rho <= 0.0 {
            return Err(Error::config("the unsteady integrator needs rho > 0"));
        }
        let poisson = PoissonSolver::new(&grid, &bcs)?;
        Ok(Integrator {
            grid,
            bcs,
            params,
            repulsion: None,
            poisson,
        })
    }

    pub fn with_repulsion(mut self, r: Option<Repulsion>) -> Self {
        self.repulsion = r;
        self
    }

    pub fn choose_dt(&self, state: &FlowState) -> Result<f64> {
        match self.params.dt {
            DtPolicy::Fixed { dt } => Ok(dt),
            DtPolicy::Cfl { cfl, dt_max } => compute_dt(&state.u, &state.v, &self.grid, cfl, dt_max),
        }
    }

    fn project(&self, us: &FaceField, vs: &FaceField, dt: f64) -> Result<(FaceField, FaceField, CellField, CellField, f64)> {
        let (g, rho) = (&self.grid, self.params.rho);
        let div_star = divergence(us, vs, g)?;
        let mut u = us.clone();
        let mut v = vs.clone();
        let mut phi = CellField::zeros(g, us.periodic);
        let mut div = div_star.clone();
        let mut dmax = f64::INFINITY;
        // A direct solve; the extra passes only mop up round-off.
        for _ in 0..3 {
            let mut rhs = div.clone();
            rhs.data.iter_mut().for_each(|x| *x *= rho / dt);
            let dphi = self.poisson.solve(&rhs)?;
            let (gx, gy) = gradient(&dphi, g, &self.bcs);
            u.axpy(-dt / rho, &gx);
            v.axpy(-dt / rho, &gy);
            for (a, b) in phi.data.iter_mut().zip(&dphi.data) {
                *a += b;
            }
            div = divergence(&u, &v, g)?;
            dmax = div.max_abs();
            if dmax <= self.params.div_tol {
                break;
            }
        }
        if !dmax.is_finite() {
            return Err(Error::numerical("non-finite divergence after projection"));
        }
        if dmax > self.params.div_tol {
            return Err(Error::Numerical {
                message: format!("divergence {dmax:e} exceeds div_tol {:e} after projection", self.params.div_tol),
                residuals: vec![dmax],
            });
        }
        Ok((u, v, phi, div_star, dmax))
    }

    /// Crank–Nicolson viscous solve followed by the pressure projection.
    /// `body_force` is an Eulerian force density added to the right-hand side.
    pub fn momentum_solve(&self, state: &FlowState, conv: &(FaceField, FaceField), body_force: Option<&ForceField>, dt: f64) -> Result<MomentumSolution> {
        let (g, bcs) = (&self.grid, &self.bcs);
        let (rho, mu) = (self.params.rho, self.params.mu);
        state.u.check(g)?;
        state.v.check(g)?;
        let t1 = state.t + dt;
        let (gpx, gpy) = gradient(&state.p, g, bcs);
        let mut out: Vec<FaceField> = Vec::with_capacity(2);
        let mut iters = [0; 2];
        for (c, (f, nf, gp)) in [(&state.u, &conv.0, &gpx), (&state.v, &conv.1, &gpy)].into_iter().enumerate() {
            let op = Helmholtz::new(f, g, bcs, rho / dt, 0.5 * mu);
            let lap_n = laplacian(f, g, bcs, state.t);
            let mut guess = f.clone();
            enforce_normal_bc(&mut guess, bcs, t1);
            // Full operator on the guess, with inhomogeneous ghosts at t^{n+1}.
            let lap_guess = laplacian(&guess, g, bcs, t1);
            let bf = body_force.map(|b| if c == 0 { &b.0 } else { &b.1 });
            let mut r = vec![0.0; f.data.len()];
            for k in 0..r.len() {
                if op.w[k] == 0.0 {
                    continue;
                }
                let rhs = (rho / dt) * f.data[k] - rho * nf.data[k] - gp.data[k] + 0.5 * mu * lap_n.data[k] + bf.map_or(0.0, |b| b.data[k]);
                let a_guess = (rho / dt) * guess.data[k] - 0.5 * mu * lap_guess.data[k];
                r[k] = rhs - a_guess;
            }
            let (delta, it) = op.solve(&r, self.params.solve_tol, self.params.max_iter)?;
            iters[c] = it;
            for (x, d) in guess.data.iter_mut().zip(&delta) {
                *x += d;
            }
            out.push(guess);
        }
        let vs = out.pop().expect("two components");
        let us = out.pop().expect("two components");
        let (u, v, phi, div_star, dmax) = self.project(&us, &vs, dt)?;
        let mut p = state.p.clone();
        for k in 0..p.data.len() {
            p.data[k] += phi.data[k] - 0.5 * mu * div_star.data[k];
        }
        Ok(MomentumSolution {
            u,
            v,
            p,
            iterations: iters,
            divergence: dmax,
        })
    }

    /// Gravity and repulsion force densities per body at the midstep.
    fn extra_forces(&self, bodies: &[RigidBody]) -> Result<Vec<Vec<[f64; 2]>>> {
        let rho = self.params.rho;
        let mut out: Vec<Vec<[f64; 2]>> = bodies
            .iter()
            .map(|b| match b.kinematics {
                Kinematics::Free { solid_density, gravity } => {
                    let vol = b.shape.area();
                    gravity_force(&b.weights, solid_density, rho, gravity, vol)
                }
                _ => vec![[0.0; 2]; b.len()],
            })
            .collect();
        if let Some(rep) = &self.repulsion {
            let mut totals = vec![[0.0; 2]; bodies.len()];
            for i in 0..bodies.len() {
                for j in i + 1..bodies.len() {
                    let (Some(ri), Some(rj)) = (bodies[i].shape.radius(), bodies[j].shape.radius()) else {
                        continue;
                    };
                    let xi = bodies[i].half_step()?.center;
                    let xj = bodies[j].half_step()?.center;
                    let f = collision_force(xi, ri, xj, rj, rep)?;
                    totals[i][0] += f[0];
                    totals[i][1] += f[1];
                    totals[j][0] -= f[0];
                    totals[j][1] -= f[1];
                }
            }
            for (k, b) in bodies.iter().enumerate() {
                let vol: f64 = b.weights.iter().sum();
                for e in out[k].iter_mut() {
                    e[0] += totals[k][0] / vol;
                    e[1] += totals[k][1] / vol;
                }
            }
        }
        Ok(out)
    }

    /// Advances the flow and all bodies by one step of size `dt`. Each body's
    /// constraint-force record is left in `body.lm`.
    pub fn step(&self, state: &FlowState, bodies: &mut [RigidBody], dt: f64) -> Result<(FlowState, StepReport)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::numerical(format!("invalid time step {dt}")));
        }
        let (g, bcs) = (&self.grid, &self.bcs);
        let (rho, kernel) = (self.params.rho, self.params.kernel);
        for b in bodies.iter_mut() {
            b.begin_step(dt);
        }
        let couplings = bodies
            .iter()
            .map(|b| Coupling::new(&b.half_step()?.positions, g, bcs, kernel))
            .collect::<Result<Vec<_>>>()?;

        let n_now = advection(&state.u, &state.v, g, bcs, state.t)?;
        let conv = convective_term(&n_now, state.conv_prev.as_ref(), dt, state.dt_prev);

        let extra = self.extra_forces(bodies)?;
        let body_force = if extra.iter().flatten().any(|f| *f != [0.0; 2]) {
            let mut fx = FaceField::for_bcs(g, Axis::X, bcs);
            let mut fy = FaceField::for_bcs(g, Axis::Y, bcs);
            for ((c, b), e) in couplings.iter().zip(bodies.iter()).zip(&extra) {
                c.spread_add(e, &b.weights, &mut fx, &mut fy);
            }
            Some((fx, fy))
        } else {
            None
        };

        let sol = self.momentum_solve(state, &conv, body_force.as_ref(), dt)?;
        let (mut u, mut v) = (sol.u, sol.v);

        let mut forces = Vec::with_capacity(bodies.len());
        let mut targets = Vec::with_capacity(bodies.len());
        for (b, c) in bodies.iter_mut().zip(&couplings) {
            let jt = c.interpolate(&u, &v);
            let ub = b.target_velocity(Some(&jt))?;
            let f: Vec<[f64; 2]> = ub
                .iter()
                .zip(&jt)
                .map(|(ub, j)| [rho / dt * (ub[0] - j[0]), rho / dt * (ub[1] - j[1])])
                .collect();
            forces.push(f);
            targets.push(ub);
        }
        if !bodies.is_empty() {
            let mut fx = FaceField::for_bcs(g, Axis::X, bcs);
            let mut fy = FaceField::for_bcs(g, Axis::Y, bcs);
            for ((c, b), f) in couplings.iter().zip(bodies.iter()).zip(&forces) {
                c.spread_add(f, &b.weights, &mut fx, &mut fy);
            }
            u.axpy(dt / rho, &fx);
            v.axpy(dt / rho, &fy);
        }
        if self.params.project_after_forcing {
            let (pu, pv, _, _, _) = self.project(&u, &v, dt)?;
            u = pu;
            v = pv;
        }
        if u.has_nan() || v.has_nan() {
            return Err(Error::numerical(format!("NaN in velocity at step {}", state.step + 1)));
        }

        let mut slip: f64 = 0.0;
        for (c, ub) in couplings.iter().zip(&targets) {
            for (a, b) in c.interpolate(&u, &v).iter().zip(ub) {
                slip = slip.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
            }
        }

        for ((b, f), e) in bodies.iter_mut().zip(forces).zip(extra) {
            let h = b.half_step()?.clone();
            let x0 = h.center;
            let p0 = b.momentum(rho);
            let l0 = b.angular_momentum(rho, x0);
            b.finish_step()?;
            let p1 = b.momentum(rho);
            let l1 = body_angular_momentum(b.positions(), b.velocities(), &b.weights, rho, x0);
            b.lm = Some(LmRecord {
                t_half: h.t,
                dt,
                positions: h.positions,
                weights: b.weights.clone(),
                force: f,
                extra: e,
                x0,
                momentum: [p0, p1],
                angular_momentum: [l0, l1],
            });
        }

        let next = FlowState {
            u,
            v,
            p: sol.p,
            t: state.t + dt,
            step: state.step + 1,
            conv_prev: Some(n_now),
            dt_prev: Some(dt),
        };
        Ok((
            next,
            StepReport {
                dt,
                iterations: sol.iterations,
                divergence: sol.divergence,
                slip,
            },
        ))
    }
}
