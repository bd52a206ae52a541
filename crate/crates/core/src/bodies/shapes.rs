use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::MarkerSet;
use crate::mesh::GridSpec;

/// Half-width profile of the eel around its backbone, as fractions of the
/// body length: rounded head up to `s_b`, quadratic taper to `s_t`, then a
/// linear taper to the tail tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EelWidth {
    pub w_h: f64,
    pub s_b: f64,
    pub s_t: f64,
    pub w_t: f64,
}

impl Default for EelWidth {
    fn default() -> Self {
        EelWidth {
            w_h: 0.04,
            s_b: 0.04,
            s_t: 0.95,
            w_t: 0.01,
        }
    }
}

impl EelWidth {
    /// Half-width at backbone coordinate `x`, for body length `l`.
    pub fn half_width(&self, x: f64, l: f64) -> f64 {
        let s = x / l;
        let w = if s < 0.0 || s > 1.0 {
            0.0
        } else if s < self.s_b {
            (2.0 * self.w_h * s - s * s).max(0.0).sqrt()
        } else if s < self.s_t {
            let r = (s - self.s_b) / (self.s_t - self.s_b);
            self.w_h - (self.w_h - self.w_t) * r * r
        } else {
            self.w_t * (1.0 - s) / (1.0 - self.s_t)
        };
        w * l
    }

    fn validate(&self) -> Result<()> {
        let ok = self.w_h > 0.0
            && self.w_t >= 0.0
            && self.s_b > 0.0
            && self.s_b < self.s_t
            && self.s_t < 1.0
            && self.w_t <= self.w_h;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("inconsistent eel width profile {self:?}")))
        }
    }
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Filled disc, one marker per grid cell.
    Disc { diameter: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    /// Zero-thickness plate normal to x, one marker per transverse cell.
    Plate { height: f64 },
    /// Undulating eel of projected length `length` with head at the origin.
    Eel {
        length: f64,
        #[serde(default)]
        width: EelWidth,
    },
    /// Circle boundary only, markers about `spacing_cells` apart.
    CircleSurface {
        diameter: f64,
        #[serde(default = "two")]
        spacing_cells: f64,
    },
}

impl Shape {
    /// Half extents of the shape's bounding box in its reference frame.
    pub fn half_extents(&self) -> [f64; 2] {
        match *self {
            Shape::Disc { diameter } | Shape::CircleSurface { diameter, .. } => [diameter / 2.0; 2],
            Shape::Ellipse { semi_x, semi_y } => [semi_x, semi_y],
            Shape::Plate { height } => [0.0, height / 2.0],
            Shape::Eel { length, .. } => [length, length],
        }
    }

    /// Exact area of volumetric shapes; `None` for plate and surface.
    pub fn area(&self) -> Option<f64> {
        match *self {
            Shape::Disc { diameter } => Some(PI * diameter * diameter / 4.0),
            Shape::Ellipse { semi_x, semi_y } => Some(PI * semi_x * semi_y),
            _ => None,
        }
    }

    /// Radius used by the particle repulsion model.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Shape::Disc { diameter } | Shape::CircleSurface { diameter, .. } => Some(diameter / 2.0),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = match *self {
            Shape::Disc { diameter } => diameter > 0.0,
            Shape::Ellipse { semi_x, semi_y } => semi_x > 0.0 && semi_y > 0.0,
            Shape::Plate { height } => height > 0.0,
            Shape::Eel { length, width } => {
                width.validate()?;
                length > 0.0
            }
            Shape::CircleSurface {
                diameter,
                spacing_cells,
            } => diameter > 0.0 && spacing_cells > 0.0,
        };
        if positive {
            Ok(())
        } else {
            Err(Error::config(format!("shape dimensions must be positive: {self:?}")))
        }
    }
}

/// Reference-frame markers for `shape` on grid `g`, centered at the origin
/// except for the eel, whose entries are `(backbone x, lateral offset)`.
/// Values are zero.
pub fn generate_markers(shape: &Shape, g: &GridSpec) -> Result<MarkerSet> {
    shape.validate()?;
    let he = shape.half_extents();
    let span = match shape {
        Shape::Eel { length, .. } => [*length, *length],
        _ => [2.0 * he[0], 2.0 * he[1]],
    };
    if span[0] > g.extents[0] || span[1] > g.extents[1] {
        return Err(Error::Geometry(format!(
            "{shape:?} does not fit in a {} x {} domain",
            g.extents[0], g.extents[1]
        )));
    }
    let (dx, dy) = (g.dx, g.dy);
    let mut m = MarkerSet::default();
    match *shape {
        Shape::Disc { .. } | Shape::Ellipse { .. } => {
            let (a, b) = (he[0], he[1]);
            // Lattice offset by half a cell so the cloud is symmetric about
            // the center in both directions.
            let ni = (a / dx).ceil() as i64 + 1;
            let nj = (b / dy).ceil() as i64 + 1;
            for j in -nj..nj {
                let y = (j as f64 + 0.5) * dy;
                for i in -ni..ni {
                    let x = (i as f64 + 0.5) * dx;
                    if (x / a).powi(2) + (y / b).powi(2) < 1.0 {
                        m.positions.push([x, y]);
                    }
                }
            }
            m.weights = vec![dx * dy; m.positions.len()];
        }
        Shape::Plate { height } => {
            let n = (height / dy).round() as usize + 1;
            let h = height / (n - 1) as f64;
            for k in 0..n {
                m.positions.push([0.0, -height / 2.0 + k as f64 * h]);
            }
            m.weights = vec![dx * h; n];
        }
        Shape::Eel { length, width } => {
            let ns = (length / dx).ceil() as usize;
            let hx = length / ns as f64;
            for i in 0..ns {
                let x = (i as f64 + 0.5) * hx;
                let w = width.half_width(x, length);
                if w <= 0.0 {
                    continue;
                }
                let ne = ((2.0 * w / dy).round() as usize).max(1);
                let he = 2.0 * w / ne as f64;
                for k in 0..ne {
                    m.positions.push([x, -w + (k as f64 + 0.5) * he]);
                    m.weights.push(hx * he);
                }
            }
        }
        Shape::CircleSurface {
            diameter,
            spacing_cells,
        } => {
            let h = spacing_cells * dx.max(dy);
            let n = ((PI * diameter / h).round() as usize).max(8);
            let r = diameter / 2.0;
            for k in 0..n {
                let th = 2.0 * PI * k as f64 / n as f64;
                m.positions.push([r * th.cos(), r * th.sin()]);
            }
            m.weights = vec![PI * diameter / n as f64; n];
        }
    }
    if m.positions.is_empty() {
        return Err(Error::Geometry(format!("{shape:?} is not resolved by the grid")));
    }
    m.values = vec![[0.0; 2]; m.positions.len()];
    Ok(m)
}
