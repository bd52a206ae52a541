//! Steady Stokes flow with rigidity constraints on surface markers.
//!
//! Unknowns are the free faces of `u` and `v`, every pressure cell and the
//! marker forces `F`. The blocks are
//!
//! ```text
//! -μ L u + G p - S F = 0
//!        D u         = 0
//!        J u         = U_b
//! ```
//!
//! When no boundary fixes the pressure level one continuity row is
//! redundant; it is traded for `p_0 = 0` and the mean pressure removed
//! after the solve. The system is
//! assembled once and factored with a sparse LU.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Coupling, DeltaKernel};
use crate::mesh::ghost::{pressure_rules, velocity_rules, GhostRule};
use crate::mesh::{active_range, periodicity, Axis, BoundaryCondition, BoundarySpec, CellField, FaceField, GridSpec, Side};
use crate::poisson::pressure_is_dirichlet;

/// Marker spacing accepted on the closed surface, in cells.
const SPACING_RANGE: (f64, f64) = (0.5, 4.0);

const REFINE_PASSES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesProblem {
    pub grid: GridSpec,
    pub mu: f64,
    pub bcs: BoundarySpec,
    /// Surface markers, consecutive entries adjacent along a closed curve.
    pub positions: Vec<[f64; 2]>,
    /// Arc-length weights `Δs`.
    pub weights: Vec<f64>,
    /// Prescribed marker velocities.
    pub velocities: Vec<[f64; 2]>,
    #[serde(default)]
    pub kernel: DeltaKernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesSolution {
    pub u: FaceField,
    pub v: FaceField,
    pub p: CellField,
    /// Marker force densities `F`.
    pub force: Vec<[f64; 2]>,
    /// Componentwise backward errors of the momentum, continuity and
    /// constraint blocks.
    pub residuals: [f64; 3],
    /// `max |J u - U_b|`.
    pub slip: f64,
}

impl StokesProblem {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            errs.push(format!("viscosity must be positive, got {}", self.mu));
        }
        let n = self.positions.len();
        if n < 8 {
            errs.push(format!("a Stokes body needs at least 8 surface markers, got {n}"));
        }
        if self.weights.len() != n || self.velocities.len() != n {
            errs.push("marker positions, weights and velocities differ in length".into());
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            errs.push("marker weights must be positive".into());
        }
        if n >= 8 {
            let h = self.grid.dx.max(self.grid.dy);
            for k in 0..n {
                let a = self.positions[k];
                let b = self.positions[(k + 1) % n];
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() / h;
                if !(SPACING_RANGE.0..=SPACING_RANGE.1).contains(&d) {
                    errs.push(format!(
                        "markers {k} and {} are {d:.2} cells apart; surface markers must form a closed curve about 2 cells apart",
                        (k + 1) % n
                    ));
                    break;
                }
            }
        }
        if let Err(e) = self.bcs.validate() {
            errs.push(e.to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Global numbering of the unknowns.
struct Layout {
    g: GridSpec,
    bcs: BoundarySpec,
    per: [bool; 2],
    /// `(ni, nj)` per component.
    dims: [(usize, usize); 2],
    /// Face index to unknown, `usize::MAX` on prescribed faces.
    map: [Vec<usize>; 2],
    n_vel: usize,
    p0: usize,
    f0: usize,
    /// No boundary fixes the pressure level.
    pin: bool,
    n: usize,
    vrules: [([GhostRule; 2], [GhostRule; 2]); 2],
    prules: ([GhostRule; 2], [GhostRule; 2]),
}

/// One linear row: `Σ coef x + constant`.
#[derive(Default, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Layout {
    fn new(g: &GridSpec, bcs: &BoundarySpec, n_markers: usize) -> Self {
        let per = periodicity(bcs);
        let mut dims = [(0, 0); 2];
        let mut map = [Vec::new(), Vec::new()];
        let mut next = 0;
        for (c, comp) in [Axis::X, Axis::Y].into_iter().enumerate() {
            let proto = FaceField::zeros(g, comp, per);
            let (ni, nj) = (proto.ni, proto.nj);
            dims[c] = (ni, nj);
            let rx = active_range(bcs, comp, Axis::X, ni);
            let ry = active_range(bcs, comp, Axis::Y, nj);
            let mut m = vec![usize::MAX; ni * nj];
            for j in ry.0..=ry.1 {
                for i in rx.0..=rx.1 {
                    m[j * ni + i] = next;
                    next += 1;
                }
            }
            map[c] = m;
        }
        let n_vel = next;
        let p0 = n_vel;
        let f0 = p0 + g.nx * g.ny;
        let n = f0 + 2 * n_markers;
        let dirichlet = [Axis::X, Axis::Y]
            .into_iter()
            .any(|a| pressure_is_dirichlet(bcs, a, false) || pressure_is_dirichlet(bcs, a, true));
        Layout {
            g: *g,
            bcs: *bcs,
            per,
            dims,
            map,
            n_vel,
            p0,
            f0,
            pin: !dirichlet,
            n,
            vrules: [velocity_rules(bcs, Axis::X, 0.0, false), velocity_rules(bcs, Axis::Y, 0.0, false)],
            prules: pressure_rules(bcs),
        }
    }

    /// Adds `coef * comp(i, j)` to `row`, resolving ghosts and prescribed
    /// faces. Indices may lie one layer outside the stored range.
    fn add_vel(&self, c: usize, i: isize, j: isize, coef: f64, row: &mut Row) {
        let (ni, nj) = self.dims[c];
        let (rx, ry) = self.vrules[c];
        let axis_n = [ni as isize, nj as isize];
        let idx = [i, j];
        for a in 0..2 {
            let k = idx[a];
            if k >= 0 && k < axis_n[a] {
                continue;
            }
            let low = k < 0;
            let rule = if a == 0 { rx[usize::from(!low)] } else { ry[usize::from(!low)] };
            let n = axis_n[a];
            let at = |kk: isize| if a == 0 { (kk, j) } else { (i, kk) };
            match rule {
                GhostRule::Wrap => {
                    let (ii, jj) = at(k.rem_euclid(n));
                    return self.add_vel(c, ii, jj, coef, row);
                }
                GhostRule::Extrapolate => {
                    let (b, inner) = if low { (0, 1) } else { (n - 1, n - 2) };
                    let m = if low { -k } else { k - (n - 1) } as f64;
                    let (i0, j0) = at(b);
                    let (i1, j1) = at(inner);
                    self.add_vel(c, i0, j0, coef * (1.0 + m), row);
                    return self.add_vel(c, i1, j1, -coef * m, row);
                }
                GhostRule::MirrorFace => {
                    let (ii, jj) = at(if low { -k } else { 2 * (n - 1) - k });
                    return self.add_vel(c, ii, jj, coef, row);
                }
                GhostRule::Odd(w) => {
                    row.constant += 2.0 * w * coef;
                    let (ii, jj) = at(if low { -k - 1 } else { 2 * n - 1 - k });
                    return self.add_vel(c, ii, jj, -coef, row);
                }
                GhostRule::Even => {
                    let (ii, jj) = at(if low { -k - 1 } else { 2 * n - 1 - k });
                    return self.add_vel(c, ii, jj, coef, row);
                }
            }
        }
        let (iu, ju) = (i as usize, j as usize);
        let col = self.map[c][ju * ni + iu];
        if col != usize::MAX {
            row.terms.push((col, coef));
        } else {
            // Prescribed normal velocity on a boundary face.
            let comp = if c == 0 { Axis::X } else { Axis::Y };
            let k = if c == 0 { iu } else { ju };
            let side = if k == 0 { Side::Low } else { Side::High };
            let val = self.bcs.side(comp, side).velocity(comp, 0.0).unwrap_or(0.0);
            row.constant += coef * val;
        }
    }

    fn add_p(&self, i: isize, j: isize, coef: f64, row: &mut Row) {
        let n = [self.g.nx as isize, self.g.ny as isize];
        let mut idx = [i, j];
        let mut coef = coef;
        for a in 0..2 {
            let k = idx[a];
            if k >= 0 && k < n[a] {
                continue;
            }
            let low = k < 0;
            let rules = if a == 0 { self.prules.0 } else { self.prules.1 };
            match rules[usize::from(!low)] {
                GhostRule::Wrap => idx[a] = k.rem_euclid(n[a]),
                GhostRule::Odd(w) => {
                    row.constant += 2.0 * w * coef;
                    coef = -coef;
                    idx[a] = if low { -k - 1 } else { 2 * n[a] - 1 - k };
                }
                _ => idx[a] = if low { -k - 1 } else { 2 * n[a] - 1 - k },
            }
        }
        row.terms.push((self.p0 + idx[1] as usize * self.g.nx + idx[0] as usize, coef));
    }
}

/// Solves the constrained problem; `tol` bounds the componentwise backward
/// error of every block.
pub fn solve_constrained_stokes(problem: &StokesProblem, tol: f64) -> Result<StokesSolution> {
    problem.validate()?;
    let g = &problem.grid;
    let bcs = &problem.bcs;
    if bcs.is_closed() {
        let flux = boundary_flux(g, bcs);
        if flux.abs() > 1e-12 * (g.extents[0] + g.extents[1]) {
            return Err(Error::config(format!("boundary velocities carry a net flux of {flux:e} into a closed box")));
        }
    }
    let m = problem.positions.len();
    let coupling = Coupling::new(&problem.positions, g, bcs, problem.kernel)?;
    let lay = Layout::new(g, bcs, m);
    let mu = problem.mu;
    let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let inv_area = 1.0 / g.cell_area();

    let mut rows: Vec<Row> = (0..lay.n).map(|_| Row::default()).collect();

    // Momentum rows, numbered like the velocity unknowns.
    for c in 0..2 {
        let (ni, nj) = lay.dims[c];
        for j in 0..nj {
            for i in 0..ni {
                let r = lay.map[c][j * ni + i];
                if r == usize::MAX {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let row = &mut rows[r];
                lay.add_vel(c, ii, jj, 2.0 * mu * (idx2 + idy2), row);
                lay.add_vel(c, ii - 1, jj, -mu * idx2, row);
                lay.add_vel(c, ii + 1, jj, -mu * idx2, row);
                lay.add_vel(c, ii, jj - 1, -mu * idy2, row);
                lay.add_vel(c, ii, jj + 1, -mu * idy2, row);
                if c == 0 {
                    lay.add_p(ii, jj, 1.0 / g.dx, row);
                    lay.add_p(ii - 1, jj, -1.0 / g.dx, row);
                } else {
                    lay.add_p(ii, jj, 1.0 / g.dy, row);
                    lay.add_p(ii, jj - 1, -1.0 / g.dy, row);
                }
            }
        }
    }
    for k in 0..m {
        let ds = problem.weights[k];
        coupling.for_each_weight(k, |c, idx, w| {
            let r = lay.map[c][idx];
            rows[r].terms.push((lay.f0 + 2 * k + c, -w * ds * inv_area));
            // Constraint row for marker k, component c.
            rows[lay.f0 + 2 * k + c].terms.push((r, w));
        });
        for c in 0..2 {
            rows[lay.f0 + 2 * k + c].constant -= problem.velocities[k][c];
        }
    }
    // Continuity rows, numbered like the pressure unknowns.
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let row = &mut rows[lay.p0 + j * g.nx + i];
            let wrap_x = |k: isize| if lay.per[0] { k.rem_euclid(lay.dims[0].0 as isize) } else { k };
            let wrap_y = |k: isize| if lay.per[1] { k.rem_euclid(lay.dims[1].1 as isize) } else { k };
            lay.add_vel(0, wrap_x(ii + 1), jj, 1.0 / g.dx, row);
            lay.add_vel(0, ii, jj, -1.0 / g.dx, row);
            lay.add_vel(1, ii, wrap_y(jj + 1), 1.0 / g.dy, row);
            lay.add_vel(1, ii, jj, -1.0 / g.dy, row);
        }
    }
    let b: Vec<f64> = rows.iter().map(|r| -r.constant).collect();
    // Without a pressure level from the boundary the continuity rows sum to
    // the (zero) boundary flux, so one of them is redundant: it is replaced
    // by `p_0 = 0` and the mean removed afterwards.
    let mut sys = rows.clone();
    if lay.pin {
        sys[lay.p0] = Row {
            terms: vec![(lay.p0, 1.0 / g.dx)],
            constant: 0.0,
        };
    }
    let mut trip = Vec::new();
    let mut bs = vec![0.0; lay.n];
    for (r, row) in sys.iter().enumerate() {
        for &(c, a) in &row.terms {
            trip.push(Triplet::new(r, c, a));
        }
        bs[r] = -row.constant;
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(lay.n, lay.n, &trip)
        .map_err(|e| Error::numerical(format!("could not assemble the Stokes system: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::config(format!("singular Stokes system ({e:?}); check boundary conditions and marker spacing")))?;
    let rhs = Col::from_fn(lay.n, |i| bs[i]);
    let mut x: Vec<f64> = {
        let s = lu.solve(&rhs);
        (0..lay.n).map(|i| s[i]).collect()
    };
    // Iterative refinement; the constraint block is poorly scaled against
    // the momentum block, so a few passes are usually needed.
    let mut last = f64::INFINITY;
    for _ in 0..REFINE_PASSES {
        let res = residual(&sys, &x, &bs);
        let norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if !(norm < last) || norm == 0.0 {
            break;
        }
        last = norm;
        let corr = lu.solve(&Col::from_fn(lay.n, |i| res[i]));
        for i in 0..lay.n {
            x[i] += corr[i];
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("singular Stokes system; check boundary conditions and marker spacing"));
    }
    if lay.pin {
        let pm = x[lay.p0..lay.f0].iter().sum::<f64>() / (lay.f0 - lay.p0) as f64;
        x[lay.p0..lay.f0].iter_mut().for_each(|p| *p -= pm);
    }

    let res = residual(&rows, &x, &b);
    let mut errs = [0.0f64; 3];
    for (r, row) in rows.iter().enumerate() {
        let mag: f64 = row.terms.iter().map(|(c, a)| (a * x[*c]).abs()).sum::<f64>() + b[r].abs();
        let e = if mag > 0.0 { res[r].abs() / mag } else { res[r].abs() };
        let block = if r < lay.p0 {
            0
        } else if r < lay.f0 {
            1
        } else {
            2
        };
        errs[block] = errs[block].max(e);
    }

    let per = lay.per;
    let mut u = FaceField::zeros(g, Axis::X, per);
    let mut v = FaceField::zeros(g, Axis::Y, per);
    for (c, f) in [&mut u, &mut v].into_iter().enumerate() {
        let (ni, nj) = lay.dims[c];
        for j in 0..nj {
            for i in 0..ni {
                let k = lay.map[c][j * ni + i];
                f.data[j * ni + i] = if k == usize::MAX {
                    let mut row = Row::default();
                    lay.add_vel(c, i as isize, j as isize, 1.0, &mut row);
                    row.constant
                } else {
                    x[k]
                };
            }
        }
    }
    let mut p = CellField::zeros(g, per);
    p.data.copy_from_slice(&x[lay.p0..lay.f0]);
    let force: Vec<[f64; 2]> = (0..m).map(|k| [x[lay.f0 + 2 * k], x[lay.f0 + 2 * k + 1]]).collect();
    let ub = coupling.interpolate(&u, &v);
    let slip = ub
        .iter()
        .zip(&problem.velocities)
        .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
        .fold(0.0, f64::max);
    debug_assert_eq!(lay.n_vel, lay.p0);
    if errs.iter().any(|e| !(*e <= tol)) {
        return Err(Error::Numerical {
            message: format!("Stokes solve missed tolerance {tol:e}"),
            residuals: errs.to_vec(),
        });
    }
    Ok(StokesSolution {
        u,
        v,
        p,
        force,
        residuals: errs,
        slip,
    })
}

fn residual(rows: &[Row], x: &[f64], b: &[f64]) -> Vec<f64> {
    rows.iter()
        .zip(b)
        .map(|(row, b)| b - row.terms.iter().map(|(c, a)| a * x[*c]).sum::<f64>())
        .collect()
}

/// Net inflow through the domain boundary.
fn boundary_flux(g: &GridSpec, bcs: &BoundarySpec) -> f64 {
    let val = |bc: &BoundaryCondition, comp: Axis| bc.velocity(comp, 0.0).unwrap_or(0.0);
    (val(&bcs.left, Axis::X) - val(&bcs.right, Axis::X)) * g.extents[1]
        + (val(&bcs.bottom, Axis::Y) - val(&bcs.top, Axis::Y)) * g.extents[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{generate_markers, Shape};

    fn problem(n: usize, wall_u: f64, body_u: [f64; 2], mu: f64) -> StokesProblem {
        let g = GridSpec::new([-2.0, -2.0], [4.0, 4.0], n, n).unwrap();
        let bcs = BoundarySpec {
            left: BoundaryCondition::inflow(wall_u, 0.0),
            right: BoundaryCondition::inflow(wall_u, 0.0),
            bottom: BoundaryCondition::inflow(wall_u, 0.0),
            top: BoundaryCondition::inflow(wall_u, 0.0),
        };
        let m = generate_markers(&Shape::CircleSurface { diameter: 1.0, spacing_cells: 2.0 }, &g).unwrap();
        let n = m.len();
        StokesProblem {
            grid: g,
            mu,
            bcs,
            positions: m.positions,
            weights: m.weights,
            velocities: vec![body_u; n],
            kernel: DeltaKernel::default(),
        }
    }

    #[test]
    fn quiescent_problem_has_no_force() {
        let s = solve_constrained_stokes(&problem(32, 0.0, [0.0, 0.0], 1.0), 1e-10).unwrap();
        assert!(s.u.max_abs() < 1e-12 && s.v.max_abs() < 1e-12);
        assert!(s.p.max_abs() < 1e-12);
        assert!(s.force.iter().all(|f| f[0].abs() < 1e-10 && f[1].abs() < 1e-10));
    }

    #[test]
    fn passive_body_in_uniform_stream_feels_nothing() {
        let s = solve_constrained_stokes(&problem(32, 1.0, [1.0, 0.0], 1.0), 1e-10).unwrap();
        assert!(s.force.iter().all(|f| f[0].abs() < 1e-8 && f[1].abs() < 1e-8));
        assert!(s.u.data.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn held_body_drag_is_linear_and_symmetric() {
        let a = solve_constrained_stokes(&problem(32, 1.0, [0.0, 0.0], 1.0), 1e-10).unwrap();
        assert!(a.slip < 1e-9);
        let drag = |s: &StokesSolution, p: &StokesProblem| -> [f64; 2] {
            let mut f = [0.0; 2];
            for (k, fk) in s.force.iter().enumerate() {
                f[0] -= fk[0] * p.weights[k];
                f[1] -= fk[1] * p.weights[k];
            }
            f
        };
        let pa = problem(32, 1.0, [0.0, 0.0], 1.0);
        let fa = drag(&a, &pa);
        assert!(fa[0] > 0.0);
        assert!(fa[1].abs() < 1e-8 * fa[0]);
        let pb = problem(32, 2.0, [0.0, 0.0], 3.0);
        let b = solve_constrained_stokes(&pb, 1e-10).unwrap();
        let fb = drag(&b, &pb);
        assert!((fb[0] / fa[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn bad_problems_are_rejected() {
        let mut p = problem(32, 1.0, [0.0, 0.0], 1.0);
        p.positions.truncate(5);
        assert!(matches!(solve_constrained_stokes(&p, 1e-10), Err(Error::Config(_))));
        let mut p = problem(32, 1.0, [0.0, 0.0], 1.0);
        p.bcs.left = BoundaryCondition::inflow(2.0, 0.0);
        assert!(solve_constrained_stokes(&p, 1e-10).is_err());
    }
}
