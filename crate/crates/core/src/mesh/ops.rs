use crate::error::{Error, Result};
use crate::mesh::boundary::{BoundaryCondition, BoundarySpec, Side};
use crate::mesh::field::{periodicity, CellField, FaceField};
use crate::mesh::ghost::pad_pressure;
use crate::mesh::grid::{Axis, GridSpec};

fn check_pair(u: &FaceField, v: &FaceField, g: &GridSpec) -> Result<()> {
    if u.axis != Axis::X || v.axis != Axis::Y {
        return Err(Error::Shape("expected (x, y) face components".into()));
    }
    u.check(g)?;
    v.check(g)?;
    if u.periodic != v.periodic {
        return Err(Error::Shape("components disagree on periodicity".into()));
    }
    Ok(())
}

/// Discrete divergence at cell centers.
pub fn divergence(u: &FaceField, v: &FaceField, g: &GridSpec) -> Result<CellField> {
    check_pair(u, v, g)?;
    let mut out = CellField::zeros(g, u.periodic);
    let (px, py) = (u.periodic[0], v.periodic[1]);
    for j in 0..g.ny {
        let jn = if py && j + 1 == g.ny { 0 } else { j + 1 };
        for i in 0..g.nx {
            let ie = if px && i + 1 == g.nx { 0 } else { i + 1 };
            out.data[j * g.nx + i] =
                (u.at(ie, j) - u.at(i, j)) / g.dx + (v.at(i, jn) - v.at(i, j)) / g.dy;
        }
    }
    Ok(out)
}

/// Face gradient of a cell-centered scalar. Faces carrying a prescribed
/// normal velocity get zero; outflow faces see `p = 0` on the boundary.
pub fn gradient(p: &CellField, g: &GridSpec, bcs: &BoundarySpec) -> (FaceField, FaceField) {
    let per = periodicity(bcs);
    let pp = pad_pressure(p, bcs, 1);
    let mut gx = FaceField::zeros(g, Axis::X, per);
    let mut gy = FaceField::zeros(g, Axis::Y, per);
    for j in 0..gx.nj {
        for i in 0..gx.ni {
            let ii = i as isize;
            let jj = j as isize;
            gx.data[j * gx.ni + i] = (pp.at(ii, jj) - pp.at(ii - 1, jj)) / g.dx;
        }
    }
    for j in 0..gy.nj {
        for i in 0..gy.ni {
            let ii = i as isize;
            let jj = j as isize;
            gy.data[j * gy.ni + i] = (pp.at(ii, jj) - pp.at(ii, jj - 1)) / g.dy;
        }
    }
    zero_dirichlet_faces(&mut gx, bcs);
    zero_dirichlet_faces(&mut gy, bcs);
    (gx, gy)
}

/// Sets the boundary faces with a prescribed normal velocity to zero.
pub fn zero_dirichlet_faces(f: &mut FaceField, bcs: &BoundarySpec) {
    let comp = f.axis;
    for side in [Side::Low, Side::High] {
        if !matches!(bcs.side(comp, side), BoundaryCondition::Velocity { .. }) {
            continue;
        }
        match comp {
            Axis::X => {
                let i = if side == Side::Low { 0 } else { f.ni - 1 };
                for j in 0..f.nj {
                    f.set(i, j, 0.0);
                }
            }
            Axis::Y => {
                let j = if side == Side::Low { 0 } else { f.nj - 1 };
                for i in 0..f.ni {
                    f.set(i, j, 0.0);
                }
            }
        }
    }
}

/// Convective time step `C min(dx / max|u|, dy / max|v|)`, never above `dt_max`.
pub fn compute_dt(u: &FaceField, v: &FaceField, g: &GridSpec, c: f64, dt_max: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::config(format!("CFL number must lie in (0, 1], got {c}")));
    }
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(Error::config(format!("dt_max must be positive, got {dt_max}")));
    }
    if u.has_nan() || v.has_nan() {
        return Err(Error::numerical("NaN in velocity field while computing the time step"));
    }
    let (mu, mv) = (u.max_abs(), v.max_abs());
    if !(mu.is_finite() && mv.is_finite()) {
        return Err(Error::numerical("infinite velocity while computing the time step"));
    }
    let mut dt = f64::INFINITY;
    if mu > 0.0 {
        dt = dt.min(c * g.dx / mu);
    }
    if mv > 0.0 {
        dt = dt.min(c * g.dy / mv);
    }
    Ok(dt.min(dt_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new([0.0, 0.0], [1.0, 1.0], n, n).unwrap()
    }

    #[test]
    fn constant_field_has_zero_divergence() {
        let g = grid(8);
        let u = FaceField::from_fn(&g, Axis::X, [false, false], |_, _| 1.5);
        let v = FaceField::from_fn(&g, Axis::Y, [false, false], |_, _| -0.5);
        assert_eq!(divergence(&u, &v, &g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn linear_field_divergence_is_one() {
        let g = grid(8);
        let u = FaceField::from_fn(&g, Axis::X, [false, false], |x, _| x);
        let v = FaceField::zeros(&g, Axis::Y, [false, false]);
        let d = divergence(&u, &v, &g).unwrap();
        for x in &d.data {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_random_matches_direct_loop() {
        let g = GridSpec::new([0.0, 0.0], [2.0, 1.0], 12, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut u = FaceField::zeros(&g, Axis::X, [true, true]);
        let mut v = FaceField::zeros(&g, Axis::Y, [true, true]);
        u.data.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        v.data.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        let d = divergence(&u, &v, &g).unwrap();
        for j in 0..7isize {
            for i in 0..12isize {
                let expect = (u.get(i + 1, j).unwrap() - u.get(i, j).unwrap()) / g.dx
                    + (v.get(i, j + 1).unwrap() - v.get(i, j).unwrap()) / g.dy;
                assert_eq!(d.get(i, j).unwrap(), expect);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = grid(8);
        let u = FaceField::zeros(&g, Axis::X, [false, false]);
        let v = FaceField::zeros(&grid(6), Axis::Y, [false, false]);
        assert!(matches!(divergence(&u, &v, &g), Err(Error::Shape(_))));
    }

    #[test]
    fn cfl_examples() {
        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 50, 50).unwrap();
        let u = FaceField::from_fn(&g, Axis::X, [false, false], |_, _| 1.0);
        let v = FaceField::zeros(&g, Axis::Y, [false, false]);
        let dt = compute_dt(&u, &v, &g, 0.3, 1.0).unwrap();
        assert!((dt - 0.006).abs() < 1e-15);

        let g = GridSpec::new([0.0, 0.0], [1.0, 1.0], 10, 10).unwrap();
        let u = FaceField::from_fn(&g, Axis::X, [false, false], |_, _| 2.0);
        let v = FaceField::from_fn(&g, Axis::Y, [false, false], |_, _| -4.0);
        let dt = compute_dt(&u, &v, &g, 0.5, 1.0).unwrap();
        assert!((dt - 0.0125).abs() < 1e-15);

        let z = FaceField::zeros(&g, Axis::X, [false, false]);
        let zv = FaceField::zeros(&g, Axis::Y, [false, false]);
        assert_eq!(compute_dt(&z, &zv, &g, 0.3, 0.01).unwrap(), 0.01);

        let mut n = z.clone();
        n.data[3] = f64::NAN;
        assert!(matches!(
            compute_dt(&n, &zv, &g, 0.3, 0.01),
            Err(Error::Numerical { .. })
        ));
    }

    #[test]
    fn gradient_of_linear_pressure() {
        let g = grid(8);
        let bcs = BoundarySpec::walls();
        let p = CellField::from_fn(&g, [false, false], |x, y| 2.0 * x - y);
        let (gx, gy) = gradient(&p, &g, &bcs);
        assert!((gx.at(3, 4) - 2.0).abs() < 1e-12);
        assert!((gy.at(3, 4) + 1.0).abs() < 1e-12);
        assert_eq!(gx.at(0, 4), 0.0);
        assert_eq!(gy.at(3, 8), 0.0);
    }
}
