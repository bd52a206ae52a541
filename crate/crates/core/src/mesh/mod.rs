//! Uniform staggered grid, field storage, boundary conditions and the basic
//! discrete operators.

pub mod boundary;
pub mod dump;
pub mod field;
pub mod ghost;
pub mod grid;
pub mod ops;

pub use boundary::{BoundaryCondition, BoundarySpec, Side, TimeFn};
pub use field::{active_range, face_dims, periodicity, CellField, FaceField};
pub use grid::{Axis, GridSpec};
pub use ops::{compute_dt, divergence, gradient};

/// Alias matching the operation name used in the docs.
pub fn make_grid(origin: [f64; 2], extents: [f64; 2], nx: usize, ny: usize) -> crate::Result<GridSpec> {
    GridSpec::new(origin, extents, nx, ny)
}
