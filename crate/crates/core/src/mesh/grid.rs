use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Uniform cell-centered grid on a rectangle.
///
/// Cell `(i, j)` has its center at `origin + ((i + 1/2) dx, (j + 1/2) dy)`
/// and owns its left x-face `(i - 1/2, j)` and bottom y-face `(i, j - 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub extents: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub const MIN_CELLS: usize = 4;

    pub fn new(origin: [f64; 2], extents: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            problems.push(format!("grid origin must be finite, got {origin:?}"));
        }
        for (name, e) in [("x", extents[0]), ("y", extents[1])] {
            if !(e.is_finite() && e > 0.0) {
                problems.push(format!("grid extent along {name} must be positive, got {e}"));
            }
        }
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < Self::MIN_CELLS {
                problems.push(format!(
                    "grid {name} must be at least {}, got {n}",
                    Self::MIN_CELLS
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(GridSpec {
            origin,
            extents,
            nx,
            ny,
            dx: extents[0] / nx as f64,
            dy: extents[1] / ny as f64,
        })
    }

    pub fn cells(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx,
            Axis::Y => self.dy,
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// x coordinate of the face line with index `i` (faces are at integer
    /// multiples of `dx` from the origin).
    pub fn x_face(&self, i: isize) -> f64 {
        self.origin[0] + i as f64 * self.dx
    }

    pub fn y_face(&self, j: isize) -> f64 {
        self.origin[1] + j as f64 * self.dy
    }

    pub fn x_center(&self, i: isize) -> f64 {
        self.origin[0] + (i as f64 + 0.5) * self.dx
    }

    pub fn y_center(&self, j: isize) -> f64 {
        self.origin[1] + (j as f64 + 0.5) * self.dy
    }

    /// Face-line coordinate along `axis`.
    pub fn face_coord(&self, axis: Axis, k: isize) -> f64 {
        match axis {
            Axis::X => self.x_face(k),
            Axis::Y => self.y_face(k),
        }
    }

    pub fn upper(&self) -> [f64; 2] {
        [
            self.origin[0] + self.extents[0],
            self.origin[1] + self.extents[1],
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let up = self.upper();
        x >= self.origin[0] && x <= up[0] && y >= self.origin[1] && y <= up[1]
    }
}
