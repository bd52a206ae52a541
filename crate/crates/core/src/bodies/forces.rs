use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Net buoyancy-corrected weight `-(ρ_s - ρ) g V e_y`.
pub fn gravity_total(rho_s: f64, rho: f64, g: f64, volume: f64) -> [f64; 2] {
    [0.0, -(rho_s - rho) * g * volume]
}

/// Uniform per-marker force density whose volume-weighted sum is
/// [`gravity_total`]. `V` defaults to `Σ Δs`.
pub fn gravity_force(weights: &[f64], rho_s: f64, rho: f64, g: f64, volume: Option<f64>) -> Vec<[f64; 2]> {
    let sum: f64 = weights.iter().sum();
    let total = gravity_total(rho_s, rho, g, volume.unwrap_or(sum));
    vec![[total[0] / sum, total[1] / sum]; weights.len()]
}

/// Parameters of the short-range particle repulsion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repulsion {
    /// Force scale `c_ij`.
    pub scale: f64,
    /// Stiffness `ε_P`.
    pub stiffness: f64,
    /// Activation gap `ζ`.
    pub gap: f64,
}

/// Repulsive force on particle `i` from particle `j` (centers and radii).
/// The force on `j` is the exact negative.
pub fn collision_force(xi: [f64; 2], ri: f64, xj: [f64; 2], rj: f64, p: &Repulsion) -> Result<[f64; 2]> {
    let d = [xi[0] - xj[0], xi[1] - xj[1]];
    let dist = d[0].hypot(d[1]);
    if dist == 0.0 {
        return Err(Error::Geometry("coincident particle centers".into()));
    }
    // `ri + rj` commutes exactly, so swapping the pair negates the force bitwise.
    let contact = ri + rj;
    if dist > contact + p.gap {
        return Ok([0.0, 0.0]);
    }
    let b = (dist - contact - p.gap) / p.gap;
    let mag = p.scale / p.stiffness * b * b;
    Ok([mag * d[0] / dist, mag * d[1] / dist])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gravity_examples() {
        let w = vec![0.1; 10];
        assert_eq!(gravity_force(&w, 1.0, 1.0, 980.0, None)[3], [0.0, 0.0]);
        let total = gravity_total(1.01, 1.0, 980.0, PI * 0.01);
        assert!((total[1].abs() - 0.3079).abs() < 1e-4);
        let f = gravity_force(&w, 1.01, 1.0, 980.0, Some(PI * 0.01));
        let s: f64 = f.iter().zip(&w).map(|(f, w)| f[1] * w).sum();
        assert!((s - total[1]).abs() < 1e-14);
        let t2 = gravity_total(1.01, 1.0, 980.0, 2.0 * PI * 0.01);
        assert!((t2[1] - 2.0 * total[1]).abs() < 1e-14);
    }

    #[test]
    fn repulsion_cutoff_and_contact() {
        let p = Repulsion {
            scale: 3.0,
            stiffness: 2.0,
            gap: 0.01,
        };
        let r = 0.1;
        assert_eq!(collision_force([0.0, 0.0], r, [0.0, 0.3], r, &p).unwrap(), [0.0, 0.0]);
        let f = collision_force([0.0, 0.0], r, [0.0, 0.21], r, &p).unwrap();
        assert!(f[1].abs() < 1e-20);
        let f = collision_force([0.0, 0.0], r, [0.0, 0.2], r, &p).unwrap();
        assert!((f[1] + 1.5).abs() < 1e-12);
        let g = collision_force([0.0, 0.2], r, [0.0, 0.0], r, &p).unwrap();
        assert_eq!([f[0] + g[0], f[1] + g[1]], [0.0, 0.0]);
        assert!(collision_force([1.0, 1.0], r, [1.0, 1.0], r, &p).is_err());
    }
}
