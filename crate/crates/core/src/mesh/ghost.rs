//! Ghost-padded copies of fields for stencil evaluation.
//!
//! Ghost rules, per side:
//! - periodic: wrap.
//! - normal component at a velocity boundary: the boundary face holds the
//!   prescribed value; faces beyond it are linearly extrapolated.
//! - normal component at an outflow: mirror about the boundary face (zero
//!   normal derivative).
//! - tangential component at a velocity boundary: `2 w - f` (linear
//!   interpolation hits `w` on the boundary).
//! - tangential component at an outflow: even mirror.
//! - pressure: even mirror at velocity boundaries, odd mirror (`p = 0` on
//!   the boundary) at outflows.

use crate::mesh::boundary::{BoundaryCondition, BoundarySpec, Side};
use crate::mesh::field::{CellField, FaceField};
use crate::mesh::grid::Axis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum GhostRule {
    Wrap,
    /// Boundary face is entry 0 (or n-1); extrapolate linearly beyond.
    Extrapolate,
    /// Boundary face is entry 0 (or n-1); mirror about it.
    MirrorFace,
    /// Boundary lies half a spacing outside entry 0; `ghost = 2 w - f`.
    Odd(f64),
    /// Boundary lies half a spacing outside entry 0; `ghost = f`.
    Even,
}

/// Array with `pad` ghost layers on every side. Index `(i, j)` may range
/// over `-pad..n + pad`.
#[derive(Debug, Clone)]
pub struct Padded {
    pub ni: usize,
    pub nj: usize,
    pub pad: usize,
    pub stride: usize,
    pub data: Vec<f64>,
}

impl Padded {
    pub fn new(ni: usize, nj: usize, pad: usize) -> Self {
        let stride = ni + 2 * pad;
        Padded {
            ni,
            nj,
            pad,
            stride,
            data: vec![0.0; stride * (nj + 2 * pad)],
        }
    }

    #[inline(always)]
    pub fn offset(&self, i: isize, j: isize) -> usize {
        ((j + self.pad as isize) as usize) * self.stride + (i + self.pad as isize) as usize
    }

    #[inline(always)]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.data[self.offset(i, j)]
    }

    pub(crate) fn load(&mut self, src: &[f64]) {
        for j in 0..self.nj {
            let o = self.offset(0, j as isize);
            self.data[o..o + self.ni].copy_from_slice(&src[j * self.ni..(j + 1) * self.ni]);
        }
    }

    pub(crate) fn fill(&mut self, x: [GhostRule; 2], y: [GhostRule; 2]) {
        let pad = self.pad;
        for j in 0..self.nj {
            let base = self.offset(0, j as isize);
            fill_line(&mut self.data, base, 1, self.ni, pad, x);
        }
        for i in 0..self.stride {
            let base = pad * self.stride + i;
            fill_line(&mut self.data, base, self.stride, self.nj, pad, y);
        }
    }
}

fn fill_line(d: &mut [f64], base: usize, s: usize, n: usize, pad: usize, rules: [GhostRule; 2]) {
    let at = |k: usize| base + k * s;
    let last = base + (n - 1) * s;
    for m in 1..=pad {
        let lo = base - m * s;
        d[lo] = match rules[0] {
            GhostRule::Wrap => d[at(n - m)],
            GhostRule::Extrapolate => (1 + m) as f64 * d[at(0)] - m as f64 * d[at(1)],
            GhostRule::MirrorFace => d[at(m)],
            GhostRule::Odd(w) => 2.0 * w - d[at(m - 1)],
            GhostRule::Even => d[at(m - 1)],
        };
        let hi = last + m * s;
        d[hi] = match rules[1] {
            GhostRule::Wrap => d[at(m - 1)],
            GhostRule::Extrapolate => {
                (1 + m) as f64 * d[at(n - 1)] - m as f64 * d[at(n - 2)]
            }
            GhostRule::MirrorFace => d[at(n - 1 - m)],
            GhostRule::Odd(w) => 2.0 * w - d[at(n - m)],
            GhostRule::Even => d[at(n - m)],
        };
    }
}

fn velocity_rule(bc: &BoundaryCondition, comp: Axis, along: Axis, t: f64, homogeneous: bool) -> GhostRule {
    match bc {
        BoundaryCondition::Periodic => GhostRule::Wrap,
        BoundaryCondition::Velocity { .. } if comp == along => GhostRule::Extrapolate,
        BoundaryCondition::Velocity { .. } => {
            let w = if homogeneous {
                0.0
            } else {
                bc.velocity(comp, t).unwrap_or(0.0)
            };
            GhostRule::Odd(w)
        }
        BoundaryCondition::Outflow if comp == along => GhostRule::MirrorFace,
        BoundaryCondition::Outflow => GhostRule::Even,
    }
}

pub(crate) fn velocity_rules(
    bcs: &BoundarySpec,
    comp: Axis,
    t: f64,
    homogeneous: bool,
) -> ([GhostRule; 2], [GhostRule; 2]) {
    let r = |axis: Axis, side: Side| velocity_rule(bcs.side(axis, side), comp, axis, t, homogeneous);
    (
        [r(Axis::X, Side::Low), r(Axis::X, Side::High)],
        [r(Axis::Y, Side::Low), r(Axis::Y, Side::High)],
    )
}

/// Padded copy of a velocity component with ghosts filled for time `t`.
/// Boundary-face values are taken from `f` as stored; see
/// [`enforce_normal_bc`] to set them.
pub fn pad_velocity(f: &FaceField, bcs: &BoundarySpec, t: f64, pad: usize) -> Padded {
    let mut p = Padded::new(f.ni, f.nj, pad);
    p.load(&f.data);
    let (x, y) = velocity_rules(bcs, f.axis, t, false);
    p.fill(x, y);
    p
}

fn pressure_rule(bc: &BoundaryCondition) -> GhostRule {
    match bc {
        BoundaryCondition::Periodic => GhostRule::Wrap,
        BoundaryCondition::Velocity { .. } => GhostRule::Even,
        BoundaryCondition::Outflow => GhostRule::Odd(0.0),
    }
}

pub(crate) fn pressure_rules(bcs: &BoundarySpec) -> ([GhostRule; 2], [GhostRule; 2]) {
    (
        [pressure_rule(&bcs.left), pressure_rule(&bcs.right)],
        [pressure_rule(&bcs.bottom), pressure_rule(&bcs.top)],
    )
}

pub fn pad_pressure(p: &CellField, bcs: &BoundarySpec, pad: usize) -> Padded {
    let mut out = Padded::new(p.nx, p.ny, pad);
    out.load(&p.data);
    let (x, y) = pressure_rules(bcs);
    out.fill(x, y);
    out
}

/// Writes the prescribed normal velocity onto the boundary faces of `f`.
pub fn enforce_normal_bc(f: &mut FaceField, bcs: &BoundarySpec, t: f64) {
    let comp = f.axis;
    for side in [Side::Low, Side::High] {
        let Some(val) = bcs.side(comp, side).velocity(comp, t) else {
            continue;
        };
        match comp {
            Axis::X => {
                let i = if side == Side::Low { 0 } else { f.ni - 1 };
                for j in 0..f.nj {
                    f.set(i, j, val);
                }
            }
            Axis::Y => {
                let j = if side == Side::Low { 0 } else { f.nj - 1 };
                for i in 0..f.ni {
                    f.set(i, j, val);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::field::periodicity;
    use crate::mesh::grid::GridSpec;

    #[test]
    fn tangential_wall_ghost_interpolates_to_wall_value() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 6, 5).unwrap();
        let mut bcs = BoundarySpec::walls();
        bcs.top = BoundaryCondition::inflow(2.0, 0.0);
        let u = FaceField::from_fn(&g, Axis::X, periodicity(&bcs), |x, y| x * y + 1.0);
        let p = pad_velocity(&u, &bcs, 0.0, 2);
        for i in 0..u.ni as isize {
            let top = 0.5 * (p.at(i, 4) + p.at(i, 5));
            assert!((top - 2.0).abs() < 1e-14);
            let bot = 0.5 * (p.at(i, 0) + p.at(i, -1));
            assert!(bot.abs() < 1e-14);
        }
    }

    #[test]
    fn normal_ghosts_extrapolate_linear_profiles() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 6, 5).unwrap();
        let bcs = BoundarySpec::walls();
        let v = FaceField::from_fn(&g, Axis::Y, [false, false], |_, y| 3.0 * y - 1.0);
        let p = pad_velocity(&v, &bcs, 0.0, 2);
        for m in 1..=2isize {
            let y = g.y_face(-m);
            assert!((p.at(2, -m) - (3.0 * y - 1.0)).abs() < 1e-13);
            let y = g.y_face(5 + m);
            assert!((p.at(2, 5 + m) - (3.0 * y - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_wrap_and_outflow_pressure() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 4, 4).unwrap();
        let mut bcs = BoundarySpec::periodic();
        let p = CellField::from_fn(&g, [true, true], |x, y| x + 3.0 * y);
        let pp = pad_pressure(&p, &bcs, 2);
        assert_eq!(pp.at(-1, -2), p.at(3, 2));
        assert_eq!(pp.at(5, 4), p.at(1, 0));
        bcs.left = BoundaryCondition::wall();
        bcs.right = BoundaryCondition::Outflow;
        let p = CellField::from_fn(&g, [false, true], |x, _| x);
        let pp = pad_pressure(&p, &bcs, 1);
        assert_eq!(pp.at(-1, 0), pp.at(0, 0));
        assert_eq!(pp.at(4, 0), -pp.at(3, 0));
    }
}
