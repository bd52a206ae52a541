use std::f64::consts::PI;

use crate::bodies::{cross, weighted_centroid};

/// Lateral backbone displacement `y(x, t)` for projected length `l` and
/// period `period`.
pub fn lateral_displacement(x: f64, t: f64, period: f64, l: f64) -> f64 {
    let s = x / l;
    0.125 * l * (s + 0.03125) / 1.03125 * (2.0 * PI * (s - t / period)).sin()
}

/// `∂y/∂t` of [`lateral_displacement`].
pub fn lateral_velocity(x: f64, t: f64, period: f64, l: f64) -> f64 {
    let s = x / l;
    -0.125 * l * (s + 0.03125) / 1.03125 * (2.0 * PI / period) * (2.0 * PI * (s - t / period)).cos()
}

/// Body-frame configuration of the eel at one instant.
#[derive(Debug, Clone)]
pub struct EelFrame {
    /// Marker offsets from the weighted centroid.
    pub r: Vec<[f64; 2]>,
    /// Deformation velocity with net linear and angular momentum removed.
    pub uk: Vec<[f64; 2]>,
    /// Angular velocity removed from the raw deformation.
    pub omega_d: f64,
}

/// Deformed shape and deformation velocity at time `t`.
///
/// `reference` holds `(backbone x, lateral offset)` per marker; markers are
/// displaced laterally so each column keeps its width and the deformation
/// conserves area exactly.
pub fn eel_frame(reference: &[[f64; 2]], weights: &[f64], t: f64, period: f64, l: f64) -> EelFrame {
    let q: Vec<[f64; 2]> = reference
        .iter()
        .map(|p| [p[0], p[1] + lateral_displacement(p[0], t, period, l)])
        .collect();
    let raw: Vec<[f64; 2]> = reference
        .iter()
        .map(|p| [0.0, lateral_velocity(p[0], t, period, l)])
        .collect();
    let c = weighted_centroid(&q, weights);
    let cv = weighted_centroid(&raw, weights);
    let r: Vec<[f64; 2]> = q.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
    let mut uk: Vec<[f64; 2]> = raw.iter().map(|u| [u[0] - cv[0], u[1] - cv[1]]).collect();
    let (mut l_d, mut i_d) = (0.0, 0.0);
    for k in 0..r.len() {
        l_d += cross(r[k], uk[k]) * weights[k];
        i_d += (r[k][0] * r[k][0] + r[k][1] * r[k][1]) * weights[k];
    }
    let omega_d = l_d / i_d;
    for k in 0..r.len() {
        uk[k][0] += omega_d * r[k][1];
        uk[k][1] -= omega_d * r[k][0];
    }
    EelFrame { r, uk, omega_d }
}

/// `∫ ω_d` over `[t0, t1]` by composite Simpson with a fixed number of
/// panels, so the result depends only on the endpoints.
pub fn integrate_omega_d(reference: &[[f64; 2]], weights: &[f64], t0: f64, t1: f64, period: f64, l: f64) -> f64 {
    const PANELS: usize = 8;
    let h = (t1 - t0) / PANELS as f64;
    let f = |t: f64| eel_frame(reference, weights, t, period, l).omega_d;
    let mut s = f(t0) + f(t1);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(t0 + k as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::shapes::{generate_markers, Shape};
    use crate::mesh::GridSpec;

    #[test]
    fn envelope_and_head() {
        assert_eq!(lateral_displacement(0.0, 0.0, 1.0, 1.0), 0.0);
        // Tail amplitude: 0.125 * 1.03125 / 1.03125.
        let peak = lateral_displacement(1.0, -0.25, 1.0, 1.0);
        assert!((peak.abs() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let (x, t, h) = (0.63, 0.41, 1e-6);
        let fd = (lateral_displacement(x, t + h, 1.0, 1.0) - lateral_displacement(x, t - h, 1.0, 1.0)) / (2.0 * h);
        assert!((fd - lateral_velocity(x, t, 1.0, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn projected_deformation_carries_no_momentum() {
        let g = GridSpec::new([-2.0, -1.0], [4.0, 2.0], 256, 128).unwrap();
        let m = generate_markers(&Shape::Eel { length: 1.0, width: Default::default() }, &g).unwrap();
        for t in [0.0, 0.3, 0.77] {
            let f = eel_frame(&m.positions, &m.weights, t, 1.0, 1.0);
            let (mut p, mut a) = ([0.0; 2], 0.0);
            for k in 0..f.r.len() {
                p[0] += f.uk[k][0] * m.weights[k];
                p[1] += f.uk[k][1] * m.weights[k];
                a += cross(f.r[k], f.uk[k]) * m.weights[k];
            }
            assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12 && a.abs() < 1e-12);
        }
    }
}
