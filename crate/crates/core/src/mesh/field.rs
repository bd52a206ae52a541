use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::boundary::BoundarySpec;
use crate::mesh::grid::{Axis, GridSpec};

/// Entry counts `(ni, nj)` of a face component on `g`.
///
/// Along its own axis a component has one entry per face line, minus the
/// duplicated seam when that axis is periodic.
pub fn face_dims(g: &GridSpec, comp: Axis, periodic: [bool; 2]) -> (usize, usize) {
    match comp {
        Axis::X => (g.nx + usize::from(!periodic[0]), g.ny),
        Axis::Y => (g.nx, g.ny + usize::from(!periodic[1])),
    }
}

fn wrap(k: isize, n: usize, periodic: bool) -> Option<usize> {
    if periodic {
        Some(k.rem_euclid(n as isize) as usize)
    } else if k >= 0 && (k as usize) < n {
        Some(k as usize)
    } else {
        None
    }
}

/// One velocity component stored on the faces normal to `axis`.
///
/// Storage is row-major with `i` fastest: entry `(i, j)` is `data[j * ni + i]`.
/// For `axis = X`, `(i, j)` is the face at `(x_face(i), y_center(j))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceField {
    pub axis: Axis,
    pub nx: usize,
    pub ny: usize,
    pub periodic: [bool; 2],
    pub ni: usize,
    pub nj: usize,
    pub data: Vec<f64>,
}

impl FaceField {
    pub fn zeros(g: &GridSpec, axis: Axis, periodic: [bool; 2]) -> Self {
        let (ni, nj) = face_dims(g, axis, periodic);
        FaceField {
            axis,
            nx: g.nx,
            ny: g.ny,
            periodic,
            ni,
            nj,
            data: vec![0.0; ni * nj],
        }
    }

    pub fn for_bcs(g: &GridSpec, axis: Axis, bcs: &BoundarySpec) -> Self {
        Self::zeros(g, axis, periodicity(bcs))
    }

    /// Samples `f(x, y)` at the face locations.
    pub fn from_fn(
        g: &GridSpec,
        axis: Axis,
        periodic: [bool; 2],
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut out = Self::zeros(g, axis, periodic);
        for j in 0..out.nj {
            for i in 0..out.ni {
                let (x, y) = out.position(g, i as isize, j as isize);
                out.data[j * out.ni + i] = f(x, y);
            }
        }
        out
    }

    /// Physical location of face `(i, j)`.
    pub fn position(&self, g: &GridSpec, i: isize, j: isize) -> (f64, f64) {
        match self.axis {
            Axis::X => (g.x_face(i), g.y_center(j)),
            Axis::Y => (g.x_center(i), g.y_face(j)),
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ni + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.ni + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    /// Value at a possibly out-of-range index, wrapping periodic axes.
    /// On a periodic axis face `n` is the same storage as face `0`.
    pub fn get(&self, i: isize, j: isize) -> Option<f64> {
        let ii = wrap(i, self.ni, self.periodic[0])?;
        let jj = wrap(j, self.nj, self.periodic[1])?;
        Some(self.data[jj * self.ni + ii])
    }

    pub fn conforms(&self, g: &GridSpec) -> bool {
        let (ni, nj) = face_dims(g, self.axis, self.periodic);
        self.nx == g.nx
            && self.ny == g.ny
            && self.ni == ni
            && self.nj == nj
            && self.data.len() == ni * nj
    }

    pub fn check(&self, g: &GridSpec) -> Result<()> {
        if self.conforms(g) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{:?}-face field {}x{} ({} values) does not conform to a {}x{} grid",
                self.axis,
                self.ni,
                self.nj,
                self.data.len(),
                g.nx,
                g.ny
            )))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }

    pub fn axpy(&mut self, a: f64, x: &FaceField) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += a * x;
        }
    }
}

/// Scalar stored at cell centers, row-major with `i` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField {
    pub nx: usize,
    pub ny: usize,
    pub periodic: [bool; 2],
    pub data: Vec<f64>,
}

impl CellField {
    pub fn zeros(g: &GridSpec, periodic: [bool; 2]) -> Self {
        CellField {
            nx: g.nx,
            ny: g.ny,
            periodic,
            data: vec![0.0; g.nx * g.ny],
        }
    }

    pub fn from_fn(g: &GridSpec, periodic: [bool; 2], f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(g, periodic);
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.data[j * g.nx + i] = f(g.x_center(i as isize), g.y_center(j as isize));
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    pub fn get(&self, i: isize, j: isize) -> Option<f64> {
        let ii = wrap(i, self.nx, self.periodic[0])?;
        let jj = wrap(j, self.ny, self.periodic[1])?;
        Some(self.data[jj * self.nx + ii])
    }

    pub fn conforms(&self, g: &GridSpec) -> bool {
        self.nx == g.nx && self.ny == g.ny && self.data.len() == g.nx * g.ny
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

pub fn periodicity(bcs: &BoundarySpec) -> [bool; 2] {
    [bcs.periodic_along(Axis::X), bcs.periodic_along(Axis::Y)]
}

/// Inclusive index range of the unknown (not prescribed) entries of a
/// `comp` face field along `along`, given `n` stored entries on that axis.
/// Only boundary faces carrying a prescribed normal velocity are excluded.
pub fn active_range(bcs: &BoundarySpec, comp: Axis, along: Axis, n: usize) -> (usize, usize) {
    use crate::mesh::boundary::{BoundaryCondition, Side};
    if comp != along {
        return (0, n - 1);
    }
    let fixed = |s: Side| matches!(bcs.side(along, s), BoundaryCondition::Velocity { .. });
    (
        usize::from(fixed(Side::Low)),
        n - 1 - usize::from(fixed(Side::High)),
    )
}
