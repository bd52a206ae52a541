//! Regularized delta kernels and the spread/interpolate pair that couples
//! Lagrangian markers to the staggered grid.
//!
//! Both operators are built from the same per-marker stencil, so they are
//! exact adjoints: `<S F, w>_grid = <F, J w>_markers` with grid weight
//! `dx dy` and marker weights `Δs`.
//!
//! Near a non-periodic boundary the stencil is clipped to unknown faces and
//! the one-dimensional weights renormalized to sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{active_range, periodicity, Axis, BoundarySpec, FaceField, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKernel {
    #[default]
    Peskin4,
    Peskin3,
}

impl DeltaKernel {
    /// Number of grid points touched along one axis.
    pub fn width(self) -> usize {
        match self {
            DeltaKernel::Peskin4 => 4,
            DeltaKernel::Peskin3 => 3,
        }
    }

    /// Support half-width in cells.
    pub fn half_width(self) -> f64 {
        self.width() as f64 / 2.0
    }

    pub fn weight(self, r: f64) -> f64 {
        kernel_weight(self, r)
    }
}

/// One-dimensional kernel `φ(r)`, `r` in units of the grid spacing.
pub fn kernel_weight(kernel: DeltaKernel, r: f64) -> f64 {
    let a = r.abs();
    match kernel {
        DeltaKernel::Peskin4 => {
            if a < 1.0 {
                0.125 * (3.0 - 2.0 * a + (1.0 + 4.0 * a - 4.0 * a * a).sqrt())
            } else if a < 2.0 {
                0.125 * (5.0 - 2.0 * a - (-7.0 + 12.0 * a - 4.0 * a * a).max(0.0).sqrt())
            } else {
                0.0
            }
        }
        DeltaKernel::Peskin3 => {
            if a < 0.5 {
                (1.0 + (1.0 - 3.0 * a * a).sqrt()) / 3.0
            } else if a < 1.5 {
                let b = 1.0 - a;
                (5.0 - 3.0 * a - (1.0 - 3.0 * b * b).max(0.0).sqrt()) / 6.0
            } else {
                0.0
            }
        }
    }
}

/// Lagrangian point cloud with per-marker volumes and vector values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub positions: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<[f64; 2]>,
}

impl MarkerSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone)]
struct CompStencil {
    /// `start[k]..start[k + 1]` indexes the entries of marker `k`.
    start: Vec<usize>,
    idx: Vec<usize>,
    w: Vec<f64>,
}

/// Per-marker interpolation stencils for both velocity components.
#[derive(Debug, Clone)]
pub struct Coupling {
    comps: [CompStencil; 2],
    cell_area: f64,
    n_markers: usize,
}

fn axis_weights(
    kernel: DeltaKernel,
    s: f64,
    n: usize,
    periodic: bool,
    range: (usize, usize),
    out: &mut Vec<(usize, f64)>,
) {
    out.clear();
    let width = kernel.width();
    let k0 = (s - kernel.half_width()).floor() as isize + 1;
    let mut total = 0.0;
    for m in 0..width as isize {
        let k = k0 + m;
        let w = kernel_weight(kernel, s - k as f64);
        if w == 0.0 {
            continue;
        }
        let kk = if periodic {
            k.rem_euclid(n as isize) as usize
        } else if k < range.0 as isize || k > range.1 as isize {
            continue;
        } else {
            k as usize
        };
        total += w;
        out.push((kk, w));
    }
    if !periodic && total > 0.0 && (total - 1.0).abs() > 0.0 {
        for e in out.iter_mut() {
            e.1 /= total;
        }
    }
}

impl Coupling {
    pub fn new(positions: &[[f64; 2]], g: &GridSpec, bcs: &BoundarySpec, kernel: DeltaKernel) -> Result<Self> {
        let per = periodicity(bcs);
        let up = g.upper();
        for (k, x) in positions.iter().enumerate() {
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(Error::Geometry(format!("marker {k} has a non-finite position")));
            }
            for a in 0..2 {
                if !per[a] && (x[a] < g.origin[a] || x[a] > up[a]) {
                    return Err(Error::Geometry(format!(
                        "marker {k} at ({}, {}) lies outside the domain",
                        x[0], x[1]
                    )));
                }
            }
        }
        let make = |comp: Axis| -> CompStencil {
            let proto = FaceField::zeros(g, comp, per);
            let (ni, nj) = (proto.ni, proto.nj);
            let rx = active_range(bcs, comp, Axis::X, ni);
            let ry = active_range(bcs, comp, Axis::Y, nj);
            let (shx, shy) = match comp {
                Axis::X => (0.0, 0.5),
                Axis::Y => (0.5, 0.0),
            };
            let mut st = CompStencil {
                start: Vec::with_capacity(positions.len() + 1),
                idx: Vec::new(),
                w: Vec::new(),
            };
            let (mut wx, mut wy) = (Vec::new(), Vec::new());
            st.start.push(0);
            for x in positions {
                let sx = (x[0] - g.origin[0]) / g.dx - shx;
                let sy = (x[1] - g.origin[1]) / g.dy - shy;
                axis_weights(kernel, sx, ni, per[0], rx, &mut wx);
                axis_weights(kernel, sy, nj, per[1], ry, &mut wy);
                for &(j, b) in &wy {
                    for &(i, a) in &wx {
                        st.idx.push(j * ni + i);
                        st.w.push(a * b);
                    }
                }
                st.start.push(st.idx.len());
            }
            st
        };
        Ok(Coupling {
            comps: [make(Axis::X), make(Axis::Y)],
            cell_area: g.cell_area(),
            n_markers: positions.len(),
        })
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    /// `J u`: velocity at each marker.
    pub fn interpolate(&self, u: &FaceField, v: &FaceField) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.n_markers];
        for (c, f) in [u, v].into_iter().enumerate() {
            let st = &self.comps[c];
            for (k, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for e in st.start[k]..st.start[k + 1] {
                    acc += st.w[e] * f.data[st.idx[e]];
                }
                o[c] = acc;
            }
        }
        out
    }

    /// Adds `S F`, the Eulerian force density of marker densities `values`
    /// with volumes `weights`, into `(fx, fy)`. Markers are visited in order,
    /// so the result is deterministic.
    pub fn spread_add(&self, values: &[[f64; 2]], weights: &[f64], fx: &mut FaceField, fy: &mut FaceField) {
        let inv = 1.0 / self.cell_area;
        for (c, f) in [fx, fy].into_iter().enumerate() {
            let st = &self.comps[c];
            for k in 0..self.n_markers {
                let q = values[k][c] * weights[k] * inv;
                if q == 0.0 {
                    continue;
                }
                for e in st.start[k]..st.start[k + 1] {
                    f.data[st.idx[e]] += st.w[e] * q;
                }
            }
        }
    }

    /// Visits `(component, flat face index, weight)` for marker `k`.
    pub fn for_each_weight(&self, k: usize, mut f: impl FnMut(usize, usize, f64)) {
        for c in 0..2 {
            let st = &self.comps[c];
            for e in st.start[k]..st.start[k + 1] {
                f(c, st.idx[e], st.w[e]);
            }
        }
    }
}

/// Eulerian force density `f = Σ F_k δ_h(x - X_k) Δs_k` on both face sets.
pub fn spread(markers: &MarkerSet, g: &GridSpec, bcs: &BoundarySpec, kernel: DeltaKernel) -> Result<(FaceField, FaceField)> {
    if markers.weights.len() != markers.len() || markers.values.len() != markers.len() {
        return Err(Error::Shape("marker arrays differ in length".into()));
    }
    if let Some(k) = markers.weights.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::Geometry(format!("marker {k} has non-positive volume")));
    }
    let c = Coupling::new(&markers.positions, g, bcs, kernel)?;
    let mut fx = FaceField::for_bcs(g, Axis::X, bcs);
    let mut fy = FaceField::for_bcs(g, Axis::Y, bcs);
    c.spread_add(&markers.values, &markers.weights, &mut fx, &mut fy);
    Ok((fx, fy))
}

/// Marker velocities `U_k = Σ u φ φ`.
pub fn interpolate(
    u: &FaceField,
    v: &FaceField,
    positions: &[[f64; 2]],
    g: &GridSpec,
    bcs: &BoundarySpec,
    kernel: DeltaKernel,
) -> Result<Vec<[f64; 2]>> {
    u.check(g)?;
    v.check(g)?;
    Ok(Coupling::new(positions, g, bcs, kernel)?.interpolate(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        // 4-point inner branch at 0: (3 + 1) / 8.
        assert_eq!(kernel_weight(DeltaKernel::Peskin4, 0.0), 0.5);
        assert_eq!(kernel_weight(DeltaKernel::Peskin4, 2.5), 0.0);
        assert_eq!(kernel_weight(DeltaKernel::Peskin4, -2.0), 0.0);
        // Branches meet at |r| = 1: inner (1 + 1)/8, outer (3 - 1)/8.
        let a = kernel_weight(DeltaKernel::Peskin4, 1.0 - 1e-12);
        assert!((a - 0.25).abs() < 1e-6);
        assert!((kernel_weight(DeltaKernel::Peskin4, 1.0) - 0.25).abs() < 1e-15);
        assert!((kernel_weight(DeltaKernel::Peskin3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_second_moment() {
        for kernel in [DeltaKernel::Peskin4, DeltaKernel::Peskin3] {
            for r in [0.0, 0.37, 0.5, 0.81, 1.0] {
                let (s, sq, m1): (f64, f64, f64) = (-4..=4)
                    .map(|j| {
                        let w = kernel_weight(kernel, r - j as f64);
                        (w, w * w, w * (r - j as f64))
                    })
                    .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
                assert!((s - 1.0).abs() < 1e-14, "{kernel:?} r={r}: {s}");
                assert!(m1.abs() < 1e-14);
                if kernel == DeltaKernel::Peskin4 {
                    assert!((sq - 3.0 / 8.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn marker_outside_walled_domain_is_rejected() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 8, 8).unwrap();
        let bcs = BoundarySpec::walls();
        let r = Coupling::new(&[[1.2, 0.5]], &g, &bcs, DeltaKernel::Peskin4);
        assert!(matches!(r, Err(Error::Geometry(_))));
        assert!(Coupling::new(&[[1.2, 0.5]], &g, &BoundarySpec::periodic(), DeltaKernel::Peskin4).is_ok());
    }

    #[test]
    fn clipped_stencil_still_sums_to_one() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 16, 16).unwrap();
        let bcs = BoundarySpec::walls();
        let c = Coupling::new(&[[0.02, 0.97]], &g, &bcs, DeltaKernel::Peskin4).unwrap();
        let mut sums = [0.0; 2];
        c.for_each_weight(0, |comp, _, w| sums[comp] += w);
        assert!((sums[0] - 1.0).abs() < 1e-14 && (sums[1] - 1.0).abs() < 1e-14);
    }
}
