//! Direct solver for the cell-centered pressure Poisson problem `D G φ = r`
//! on a uniform grid, by separable real transforms.
//!
//! Each axis is diagonalized by the transform matching its pair of
//! pressure conditions (even mirror at velocity boundaries, odd mirror at
//! outflows, wrap when periodic). Periodic axes use the discrete Hartley
//! transform computed from a complex FFT; it diagonalizes the symmetric
//! circulant second difference with the same eigenvalues as the DFT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3, TransformType4};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::mesh::boundary::{BoundaryCondition, BoundarySpec};
use crate::mesh::field::{periodicity, CellField};
use crate::mesh::grid::{Axis, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PBc {
    Neumann,
    Dirichlet,
}

fn pbc(bc: &BoundaryCondition) -> PBc {
    match bc {
        BoundaryCondition::Outflow => PBc::Dirichlet,
        _ => PBc::Neumann,
    }
}

enum LineTransform {
    Hartley(Arc<dyn Fft<f64>>),
    Cos2(Arc<dyn TransformType2And3<f64>>),
    Sin2(Arc<dyn TransformType2And3<f64>>),
    Cos4(Arc<dyn TransformType4<f64>>),
    Sin4(Arc<dyn TransformType4<f64>>),
}

struct AxisSolver {
    n: usize,
    transform: LineTransform,
    /// Eigenvalues of the unit-spacing second difference, one per mode.
    eig: Vec<f64>,
}

impl AxisSolver {
    fn new(n: usize, bcs: (Option<PBc>, Option<PBc>)) -> Self {
        let nf = n as f64;
        let s2 = |a: f64| -4.0 * a.sin().powi(2);
        let mut dct = DctPlanner::new();
        let (transform, eig): (LineTransform, Vec<f64>) = match bcs {
            (None, _) | (_, None) => {
                let fft = FftPlanner::new().plan_fft_forward(n);
                (
                    LineTransform::Hartley(fft),
                    (0..n).map(|k| s2(PI * k as f64 / nf)).collect(),
                )
            }
            (Some(PBc::Neumann), Some(PBc::Neumann)) => (
                LineTransform::Cos2(dct.plan_dct2(n)),
                (0..n).map(|k| s2(PI * k as f64 / (2.0 * nf))).collect(),
            ),
            (Some(PBc::Dirichlet), Some(PBc::Dirichlet)) => (
                LineTransform::Sin2(dct.plan_dst2(n)),
                (0..n).map(|k| s2(PI * (k + 1) as f64 / (2.0 * nf))).collect(),
            ),
            (Some(PBc::Neumann), Some(PBc::Dirichlet)) => (
                LineTransform::Cos4(dct.plan_dct4(n)),
                (0..n).map(|k| s2(PI * (2 * k + 1) as f64 / (4.0 * nf))).collect(),
            ),
            (Some(PBc::Dirichlet), Some(PBc::Neumann)) => (
                LineTransform::Sin4(dct.plan_dst4(n)),
                (0..n).map(|k| s2(PI * (2 * k + 1) as f64 / (4.0 * nf))).collect(),
            ),
        };
        AxisSolver { n, transform, eig }
    }

    fn forward(&self, line: &mut [f64], cbuf: &mut Vec<Complex<f64>>) {
        match &self.transform {
            LineTransform::Hartley(fft) => hartley(fft.as_ref(), line, cbuf),
            LineTransform::Cos2(t) => t.process_dct2(line),
            LineTransform::Sin2(t) => t.process_dst2(line),
            LineTransform::Cos4(t) => t.process_dct4(line),
            LineTransform::Sin4(t) => t.process_dst4(line),
        }
    }

    fn inverse(&self, line: &mut [f64], cbuf: &mut Vec<Complex<f64>>) {
        let scale = match &self.transform {
            LineTransform::Hartley(fft) => {
                hartley(fft.as_ref(), line, cbuf);
                1.0 / self.n as f64
            }
            LineTransform::Cos2(t) => {
                t.process_dct3(line);
                2.0 / self.n as f64
            }
            LineTransform::Sin2(t) => {
                t.process_dst3(line);
                2.0 / self.n as f64
            }
            LineTransform::Cos4(t) => {
                t.process_dct4(line);
                2.0 / self.n as f64
            }
            LineTransform::Sin4(t) => {
                t.process_dst4(line);
                2.0 / self.n as f64
            }
        };
        line.iter_mut().for_each(|v| *v *= scale);
    }
}

fn hartley(fft: &dyn Fft<f64>, line: &mut [f64], cbuf: &mut Vec<Complex<f64>>) {
    cbuf.clear();
    cbuf.extend(line.iter().map(|&x| Complex::new(x, 0.0)));
    fft.process(cbuf);
    for (x, c) in line.iter_mut().zip(cbuf.iter()) {
        *x = c.re - c.im;
    }
}

/// Fast solver for `D G φ = r` with the pressure conditions implied by a
/// velocity boundary specification.
pub struct PoissonSolver {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    periodic: [bool; 2],
    xs: AxisSolver,
    ys: AxisSolver,
    singular: bool,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("singular", &self.singular)
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(g: &GridSpec, bcs: &BoundarySpec) -> Result<Self> {
        bcs.validate()?;
        let side = |bc: &BoundaryCondition| (!bc.is_periodic()).then(|| pbc(bc));
        let xs = AxisSolver::new(g.nx, (side(&bcs.left), side(&bcs.right)));
        let ys = AxisSolver::new(g.ny, (side(&bcs.bottom), side(&bcs.top)));
        let singular = xs.eig[0] == 0.0 && ys.eig[0] == 0.0;
        Ok(PoissonSolver {
            nx: g.nx,
            ny: g.ny,
            dx: g.dx,
            dy: g.dy,
            periodic: periodicity(bcs),
            xs,
            ys,
            singular,
        })
    }

    /// True when constants are in the nullspace; the returned solution is
    /// then the mean-zero one and the right-hand side's mean is ignored.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, rhs: &CellField) -> Result<CellField> {
        if rhs.nx != self.nx || rhs.ny != self.ny || rhs.data.len() != self.nx * self.ny {
            return Err(Error::Shape("Poisson right-hand side does not conform".into()));
        }
        let (nx, ny) = (self.nx, self.ny);
        let mut a = rhs.data.clone();
        let mut cbuf = Vec::with_capacity(nx.max(ny));
        let mut col = vec![0.0; ny];

        for row in a.chunks_exact_mut(nx) {
            self.xs.forward(row, &mut cbuf);
        }
        for i in 0..nx {
            for j in 0..ny {
                col[j] = a[j * nx + i];
            }
            self.ys.forward(&mut col, &mut cbuf);
            let lx = self.xs.eig[i] / (self.dx * self.dx);
            for j in 0..ny {
                let lam = lx + self.ys.eig[j] / (self.dy * self.dy);
                col[j] = if lam == 0.0 { 0.0 } else { col[j] / lam };
            }
            self.ys.inverse(&mut col, &mut cbuf);
            for j in 0..ny {
                a[j * nx + i] = col[j];
            }
        }
        for row in a.chunks_exact_mut(nx) {
            self.xs.inverse(row, &mut cbuf);
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite pressure solution"));
        }
        Ok(CellField {
            nx,
            ny,
            periodic: self.periodic,
            data: a,
        })
    }
}

/// Applies the discrete `D G` operator with the same pressure conditions;
/// the reference used by tests and residual checks.
pub fn apply_dg(p: &CellField, g: &GridSpec, bcs: &BoundarySpec) -> CellField {
    use crate::mesh::ghost::pad_pressure;
    let pp = pad_pressure(p, bcs, 1);
    let mut out = CellField::zeros(g, p.periodic);
    let periodic = periodicity(bcs);
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let c = pp.at(i, j);
            // Flux through faces with prescribed normal velocity is zero.
            let west = if i == 0 && !periodic[0] && !matches!(bcs.left, BoundaryCondition::Outflow) {
                0.0
            } else {
                c - pp.at(i - 1, j)
            };
            let east = if i == g.nx as isize - 1
                && !periodic[0]
                && !matches!(bcs.right, BoundaryCondition::Outflow)
            {
                0.0
            } else {
                pp.at(i + 1, j) - c
            };
            let south = if j == 0 && !periodic[1] && !matches!(bcs.bottom, BoundaryCondition::Outflow) {
                0.0
            } else {
                c - pp.at(i, j - 1)
            };
            let north = if j == g.ny as isize - 1
                && !periodic[1]
                && !matches!(bcs.top, BoundaryCondition::Outflow)
            {
                0.0
            } else {
                pp.at(i, j + 1) - c
            };
            out.data[j as usize * g.nx + i as usize] =
                (east - west) / (g.dx * g.dx) + (north - south) / (g.dy * g.dy);
        }
    }
    out
}

/// Axis helper for callers that need to know the pressure condition type.
pub fn pressure_is_dirichlet(bcs: &BoundarySpec, axis: Axis, high: bool) -> bool {
    use crate::mesh::boundary::Side;
    let side = if high { Side::High } else { Side::Low };
    matches!(bcs.side(axis, side), BoundaryCondition::Outflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_roundtrip(bcs: BoundarySpec, nx: usize, ny: usize) {
        let g = GridSpec::new([-0.3, 0.1], [1.7, 1.1], nx, ny).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64((nx * 31 + ny) as u64);
        let mut p = CellField::zeros(&g, periodicity(&bcs));
        p.data.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let solver = PoissonSolver::new(&g, &bcs).unwrap();
        if solver.is_singular() {
            let m = p.mean();
            p.data.iter_mut().for_each(|v| *v -= m);
        }
        let rhs = apply_dg(&p, &g, &bcs);
        let q = solver.solve(&rhs).unwrap();
        let err = p
            .data
            .iter()
            .zip(&q.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{bcs:?}: max error {err}");
    }

    #[test]
    fn inverts_dg_for_every_condition_pair() {
        let out = BoundaryCondition::Outflow;
        let wall = BoundaryCondition::wall();
        let per = BoundaryCondition::Periodic;
        let combos = [
            (per, per, per, per),
            (wall, wall, wall, wall),
            (out, out, wall, wall),
            (wall, out, per, per),
            (out, wall, out, out),
            (per, per, wall, out),
            (wall, out, wall, wall),
        ];
        for (l, r, b, t) in combos {
            let bcs = BoundarySpec {
                left: l,
                right: r,
                bottom: b,
                top: t,
            };
            check_roundtrip(bcs, 12, 9);
            check_roundtrip(bcs, 7, 16);
        }
    }

    #[test]
    fn singular_solution_has_zero_mean() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
        let bcs = BoundarySpec::walls();
        let rhs = CellField::from_fn(&g, [false, false], |x, y| (3.0 * x).cos() * y);
        let s = PoissonSolver::new(&g, &bcs).unwrap();
        assert!(s.is_singular());
        let q = s.solve(&rhs).unwrap();
        assert!(q.mean().abs() < 1e-13);
    }
}
