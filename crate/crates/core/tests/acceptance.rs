//! Acceptance suite: runs every benchmark criterion at its stated tolerance
//! and prints one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=2,4` restricts the run; results (CSVs) land in
//! `$CARGO_TARGET_TMPDIR/acceptance/<case>`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ibcv::bodies::Kinematics;
use ibcv::cv_forces::{force_modified, force_noca, snap_cv, surface_flux, BodyMomenta, FluxParams};
use ibcv::harness::metrics::{max_jump_ratio, mean, rel_linf, rms};
use ibcv::harness::{builtin, jump_metric, run_case_with, CaseConfig, CaseResult, ForceRow, MethodToggle, RunOptions};
use ibcv::kernels::{spread, Coupling, DeltaKernel, MarkerSet};
use ibcv::mesh::{periodicity, Axis, BoundarySpec, CellField, FaceField, GridSpec};
use ibcv::navier::{DtPolicy, FlowState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn out_dir(case: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(case)
}

fn run(cfg: &CaseConfig) -> CaseResult {
    let t0 = Instant::now();
    let res = run_case_with(cfg, &RunOptions { out: Some(out_dir(&cfg.name)), ..Default::default() })
        .unwrap_or_else(|e| panic!("{} failed: {e}", cfg.name));
    eprintln!(
        "  [{}] {} steps on {}x{} in {:.1} s",
        cfg.name,
        res.summary.stats.steps,
        cfg.grid.nx,
        cfg.grid.ny,
        t0.elapsed().as_secs_f64()
    );
    res
}

fn fixed_dt(cfg: &mut CaseConfig, dt: f64) {
    cfg.fluid.dt = DtPolicy::Fixed { dt };
}

/// `(t, value)` of one series restricted to `t` in `[a, b]`.
fn window(res: &CaseResult, target: &str, method: &str, a: f64, b: f64, f: impl Fn(&ForceRow) -> f64) -> (Vec<f64>, Vec<f64>) {
    res.series(target, method)
        .into_iter()
        .filter(|r| r.t >= a - 1e-9 && r.t <= b + 1e-9)
        .map(|r| (r.t, f(r)))
        .unzip()
}

fn cd(r: &ForceRow) -> f64 {
    r.cd
}

/// Translating plate at Re 20 on the b/32 grid.
fn criterion_1() -> Outcome {
    let mut cfg = builtin("translating_plate_re20", 1.0).unwrap();
    cfg.grid.origin = [-12.0, -5.5];
    cfg.grid.extents = [16.0, 11.0];
    cfg.grid.nx = 512;
    cfg.grid.ny = 352;
    cfg.run.methods = vec![MethodToggle::Cv, MethodToggle::Lm];
    let res = run(&cfg);
    let (_, late) = window(&res, "cv", "cv-modified", 8.0, 10.0, cd);
    let (_, late_lm) = window(&res, "plate", "lm", 8.0, 10.0, cd);
    let avg = mean(&late);
    let (_, a) = window(&res, "cv", "cv-modified", 1.0, 10.0, cd);
    let (_, b) = window(&res, "plate", "lm", 1.0, 10.0, cd);
    let err = rel_linf(&a, &b);
    let dev = (avg - 2.09).abs() / 2.09;
    check(
        dev <= 0.10 && err <= 0.03,
        format!(
            "mean C_D(8..10) = {avg:.4} (LM {:.4}), {:.1}% from 2.09 (tol 10%); CV vs LM L_inf over t >= 1: {:.2}% (tol 3%)",
            mean(&late_lm),
            100.0 * dev,
            100.0 * err
        ),
    )
}

fn stationary_cylinder() -> CaseResult {
    let mut cfg = builtin("stationary_cylinder_re550", 2.0).unwrap();
    cfg.run.duration = 5.0;
    cfg.run.methods = vec![MethodToggle::Cv, MethodToggle::Lm];
    run(&cfg)
}

/// Stationary cylinder at Re 550 on 450x300.
fn criterion_2(res: &CaseResult) -> Outcome {
    let (_, a) = window(res, "cv", "cv-modified", 0.5, 5.0, cd);
    let (_, b) = window(res, "cylinder", "lm", 0.5, 5.0, cd);
    let err = rel_linf(&a, &b);
    let (ja, jb) = (max_jump_ratio(&a), max_jump_ratio(&b));
    check(
        err < 0.03 && ja <= 10.0 && jb <= 10.0,
        format!(
            "|C_D(CV) - C_D(LM)| / max|C_D| = {:.3}% (tol 3%); max jump / median step: CV {ja:.2}, LM {jb:.2} (tol 10)",
            100.0 * err
        ),
    )
}

/// Translating cylinder: the two-location estimator jumps at box moves.
fn criterion_3() -> Outcome {
    let mut cfg = builtin("translating_cylinder_re550", 2.0).unwrap();
    cfg.run.duration = 5.0;
    let res = run(&cfg);
    let rows = |m: &str| -> (Vec<f64>, Vec<bool>) {
        res.series("cv", m).into_iter().filter(|r| r.t >= 0.5 - 1e-9).map(|r| (r.cd, r.cv_moved)).unzip()
    };
    let (noca, moves) = rows("cv-noca");
    let (modified, moves2) = rows("cv-modified");
    assert_eq!(moves, moves2);
    let n_moves = moves.iter().filter(|m| **m).count();
    let jn = jump_metric(&noca, &moves);
    let jm = jump_metric(&modified, &moves);
    let (_, a) = window(&res, "cv", "cv-modified", 0.5, 5.0, cd);
    let (_, b) = window(&res, "cylinder", "lm", 0.5, 5.0, cd);
    let err = rel_linf(&a, &b);
    match (jn, jm) {
        (Ok(jn), Ok(jm)) => {
            let factor = jn.ratio / jm.ratio;
            check(
                factor >= 5.0 && err <= 0.03,
                format!(
                    "{n_moves} box moves; jump ratio noca {:.2}, modified {:.2}, factor {factor:.1} (tol >= 5); modified vs LM L_inf {:.2}% (tol 3%)",
                    jn.ratio,
                    jm.ratio,
                    100.0 * err
                ),
            )
        }
        (a, b) => check(false, format!("jump metric undefined: {:?} / {:?}", a.err(), b.err())),
    }
}

/// Two cylinders against the single-cylinder drag.
fn criterion_4(single: &CaseResult) -> Outcome {
    let (_, s) = window(single, "cv", "cv-modified", 0.5, 5.0, cd);
    let single_cd = mean(&s);
    let mut cfg = builtin("two_cylinders_re550", 2.0).unwrap();
    cfg.run.duration = 5.0;
    let res = run(&cfg);
    let m = |target: &str| mean(&window(&res, target, "cv-modified", 0.5, 5.0, cd).1);
    let mut pass = true;
    let mut parts = Vec::new();
    for (target, factor, tol) in [
        ("disjoint_bottom", 1.0, 0.10),
        ("disjoint_top", 1.0, 0.10),
        ("one_and_half_bottom", 1.5, 0.15),
        ("one_and_half_top", 1.5, 0.15),
        ("both_bottom", 2.0, 0.15),
        ("both_top", 2.0, 0.15),
    ] {
        let v = m(target);
        let dev = (v / (factor * single_cd) - 1.0).abs();
        pass &= dev <= tol;
        parts.push(format!("{target} {v:.3} ({:+.1}% vs {factor}x)", 100.0 * (v / (factor * single_cd) - 1.0)));
    }
    check(pass, format!("single mean C_D(0.5..5) = {single_cd:.3}; {}", parts.join(", ")))
}

/// In-line oscillation, Re 100, KC 5, dx = 0.04 D.
fn criterion_5() -> Outcome {
    let mut cfg = builtin("inline_osc", 1.0).unwrap();
    cfg.run.methods = vec![MethodToggle::Cv, MethodToggle::Lm];
    // The body starts impulsively at -U_0 from rest; the added-mass impulse of
    // the first steps is physical, so the two periods scored follow one
    // start-up period.
    let period = match cfg.bodies[0].kinematics {
        Kinematics::InlineOscillation { frequency, .. } => 1.0 / frequency,
        k => panic!("unexpected kinematics {k:?}"),
    };
    cfg.run.duration = 3.0 * period;
    let res = run(&cfg);
    let (_, a) = window(&res, "cv", "cv-modified", period, 3.0 * period, cd);
    let (_, b) = window(&res, "cylinder", "lm", period, 3.0 * period, cd);
    let err = rel_linf(&a, &b);
    let (ja, jb) = (max_jump_ratio(&a), max_jump_ratio(&b));
    check(
        err <= 0.03 && ja <= 5.0 && jb <= 5.0,
        format!(
            "CV vs LM L_inf over periods 2-3 {:.2}% (tol 3%); max jump / median step: CV {ja:.2}, LM {jb:.2} (tol 5)",
            100.0 * err
        ),
    )
}

/// Rotational oscillation at dx = 0.04 D.
fn criterion_6() -> Outcome {
    let mut cfg = builtin("rotational_osc", 1.0).unwrap();
    cfg.grid.origin = [-8.0, -8.0];
    cfg.grid.extents = [16.0, 16.0];
    cfg.grid.nx = 400;
    cfg.grid.ny = 400;
    fixed_dt(&mut cfg, 0.01);
    cfg.run.methods = vec![MethodToggle::Cv, MethodToggle::Lm];
    let res = run(&cfg);
    let (_, a) = window(&res, "cv", "cv-modified", 0.0, cfg.run.duration, |r| r.ct);
    let (_, b) = window(&res, "cylinder", "lm", 0.0, cfg.run.duration, |r| r.ct);
    let err = rel_linf(&a, &b);
    check(
        err <= 0.03,
        format!("C_T CV vs LM L_inf over one period {:.2}% (tol 3%), max |C_T| {:.3}", 100.0 * err, ibcv::harness::metrics::max_abs(&b)),
    )
}

/// Free-swimming eel at dx = L/128 and Re = 500.
fn criterion_7() -> Outcome {
    let mut cfg = builtin("eel", 1.0).unwrap();
    cfg.grid.nx = 1024;
    cfg.grid.ny = 512;
    let vmax = cfg.normalization.velocity;
    cfg.fluid.mu = vmax * 1.0 / 500.0;
    let period = match cfg.bodies[0].kinematics {
        Kinematics::Eel { period } => period,
        k => panic!("unexpected kinematics {k:?}"),
    };
    fixed_dt(&mut cfg, 0.004 * period);
    // From rest the swimmer accelerates for several periods and the mean
    // axial force is the growth rate of its momentum; the zero-mean test
    // is applied to the last three of ten periods.
    cfg.run.duration = 10.0 * period;
    cfg.run.methods = vec![MethodToggle::Cv, MethodToggle::Lm];
    let res = run(&cfg);
    let t0 = cfg.run.duration - 3.0 * period;
    let rows: Vec<&ForceRow> = res.series("cv", "cv-modified").into_iter().filter(|r| r.t > t0 + 1e-9).collect();
    let fx: Vec<f64> = rows.iter().map(|r| r.fx).collect();
    let fy: Vec<f64> = rows.iter().map(|r| r.fy).collect();
    let mz: Vec<f64> = rows.iter().map(|r| r.mz).collect();
    let q = |v: &[f64]| mean(v).abs() / rms(v);
    let (qx, qy, qm) = (q(&fx), q(&fy), q(&mz));
    let scale = cfg.fluid.rho * vmax * 1.0;
    let pmax = res
        .momentum
        .iter()
        .map(|m| m.domain_px.hypot(m.domain_py) / scale)
        .fold(0.0, f64::max);
    let b = &res.bodies;
    let (x0, x1) = (b.first().unwrap().x, b.last().unwrap().x);
    check(
        qx < 0.05 && qy < 0.05 && qm < 0.05 && pmax < 0.02 && x1 < x0,
        format!(
            "|mean|/rms over periods 8-10: F_x {:.2}%, F_y {:.2}%, M_z {:.2}% (tol 5%); max |P|/(rho V L^2) {:.3}% (tol 2%); center x {x0:.4} -> {x1:.4}",
            100.0 * qx,
            100.0 * qy,
            100.0 * qm,
            100.0 * pmax
        ),
    )
}

/// Drafting, kissing and tumbling at half resolution.
fn criterion_8() -> Outcome {
    let mut cfg = builtin("dkt", 2.0).unwrap();
    cfg.run.duration = 5.0;
    let d = cfg.bodies[0].shape.half_extents()[0] * 2.0;
    let zeta = cfg.repulsion.unwrap().gap;
    let fg = match cfg.bodies[0].kinematics {
        Kinematics::Free { solid_density, gravity } => (solid_density - cfg.fluid.rho) * cfg.bodies[0].shape.area().unwrap() * gravity,
        _ => unreachable!(),
    };
    let res = run(&cfg);
    // Vertical separation per step.
    let mut by_step: BTreeMap<u64, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in &res.bodies {
        by_step.entry(r.step).or_default().push((r.t, r.x, r.y));
    }
    let sep: Vec<(u64, f64, f64)> = by_step.iter().map(|(s, v)| (*s, v[0].0, (v[0].2 - v[1].2).abs())).collect();
    let (kmin, &(step_min, t_min, dmin)) = sep
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
        .unwrap();
    let after_max = sep[kmin..].iter().map(|s| s.2).fold(0.0, f64::max);
    let kissed = dmin < d + 2.0 * zeta;
    let tumbled = after_max > d + 2.0 * zeta;
    // Separated: vertical distance again above D + 2 zeta after the minimum.
    let t_sep = sep[kmin..].iter().find(|s| s.2 > d + 2.0 * zeta).map(|s| s.1);
    let mut lm_ok = false;
    let mut lm_detail = "no separation".to_string();
    if let Some(ts) = t_sep {
        let t_end = cfg.run.duration;
        let a = ts + 0.5 * (t_end - ts);
        let devs: Vec<f64> = ["p1", "p2"]
            .iter()
            .map(|p| {
                let (_, fy) = window(&res, p, "lm", a, t_end, |r| r.fy);
                (mean(&fy) / fg - 1.0).abs()
            })
            .collect();
        lm_ok = devs.iter().all(|d| *d <= 0.10);
        lm_detail = format!(
            "separated at t = {ts:.3}; mean LM F_y over [{a:.2}, {t_end}] vs |F_g| = {fg:.4}: p1 {:.1}%, p2 {:.1}% (tol 10%)",
            100.0 * devs[0],
            100.0 * devs[1]
        );
    }
    // CV against LM away from the multi-body window.
    let mut worst: f64 = 0.0;
    for (cv, p) in [("cv_p1", "p1"), ("cv_p2", "p2")] {
        let cvr = res.series(cv, "cv-modified");
        let lm = res.series(p, "lm");
        let fmax = lm.iter().map(|r| r.fx.hypot(r.fy)).fold(0.0, f64::max);
        for (c, l) in cvr.iter().zip(&lm) {
            assert_eq!(c.step, l.step);
            if !c.multi_body {
                worst = worst.max((c.fx - l.fx).hypot(c.fy - l.fy) / fmax);
            }
        }
    }
    let flagged = res.series("cv_p1", "cv-modified").iter().filter(|r| r.multi_body).count();
    check(
        kissed && tumbled && lm_ok && worst <= 0.05,
        format!(
            "min vertical separation {dmin:.4} at t = {t_min:.3} (step {step_min}) vs D + 2 zeta = {:.4}, later max {after_max:.4}; {lm_detail}; CV vs LM outside {flagged} flagged steps {:.2}% (tol 5%)",
            d + 2.0 * zeta,
            100.0 * worst
        ),
    )
}

/// Steady Stokes equivalence of the surface-marker and box forces.
fn criterion_9() -> Outcome {
    let cfg = builtin("stokes_2d", 1.0).unwrap();
    let res = run(&cfg);
    let get = |target: &str| res.forces.iter().find(|r| r.target == target).unwrap().clone();
    let (inner, outer, lm) = (get("inner"), get("outer"), get("cylinder"));
    let rel = |a: &ForceRow, b: &ForceRow| (a.fx - b.fx).hypot(a.fy - b.fy) / b.fx.hypot(b.fy);
    let (e_in, e_out, e_nest) = (rel(&inner, &lm), rel(&outer, &lm), rel(&inner, &outer));
    let lift = [&inner, &outer, &lm].iter().map(|r| (r.fy / r.fx).abs()).fold(0.0, f64::max);
    check(
        e_in <= 1e-2 && e_out <= 1e-2 && e_nest <= 1e-2 && lift < 1e-8,
        format!(
            "drag LM {:.6}, inner CV {:.6}, outer CV {:.6}; rel diff inner {e_in:.2e}, outer {e_out:.2e}, nested {e_nest:.2e} (tol 1e-2); max |lift/drag| {lift:.2e} (tol 1e-8)",
            lm.fx, inner.fx, outer.fx
        ),
    )
}

/// Machine-precision identities.
fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = BTreeMap::<&str, f64>::new();
    let mut note = |k: &'static str, v: f64| {
        let e = worst.entry(k).or_insert(0.0);
        *e = e.max(v);
    };
    for kernel in [DeltaKernel::Peskin4, DeltaKernel::Peskin3] {
        for _ in 0..200 {
            let r: f64 = rng.gen_range(-3.0..3.0);
            let s: f64 = (-6..=6).map(|j| kernel.weight(r - j as f64)).sum();
            note("partition of unity", (s - 1.0).abs());
        }
    }
    let g = GridSpec::new([0.0, 0.0], [2.0, 1.0], 64, 32).unwrap();
    for bcs in [BoundarySpec::periodic(), BoundarySpec::walls()] {
        let per = periodicity(&bcs);
        let n = 40;
        let positions: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(0.3..1.7), rng.gen_range(0.2..0.8)]).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.01)).collect();
        let values: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let c = Coupling::new(&positions, &g, &bcs, DeltaKernel::Peskin4).unwrap();
        let u = FaceField::from_fn(&g, Axis::X, per, |x, y| (3.0 * x).sin() * y.cos() + 0.3);
        let v = FaceField::from_fn(&g, Axis::Y, per, |x, y| (2.0 * y).cos() * x - 0.1);
        let mut fx = FaceField::for_bcs(&g, Axis::X, &bcs);
        let mut fy = FaceField::for_bcs(&g, Axis::Y, &bcs);
        c.spread_add(&values, &weights, &mut fx, &mut fy);
        let grid_side: f64 = (fx.data.iter().zip(&u.data).map(|(a, b)| a * b).sum::<f64>()
            + fy.data.iter().zip(&v.data).map(|(a, b)| a * b).sum::<f64>())
            * g.cell_area();
        let ju = c.interpolate(&u, &v);
        let marker_side: f64 = (0..n).map(|k| (values[k][0] * ju[k][0] + values[k][1] * ju[k][1]) * weights[k]).sum();
        note("spread/interpolate adjointness", (grid_side - marker_side).abs() / marker_side.abs());
        let markers = MarkerSet { positions: positions.clone(), weights: weights.clone(), values: values.clone() };
        let (sx, sy) = spread(&markers, &g, &bcs, DeltaKernel::Peskin4).unwrap();
        for (comp, f) in [(0, &sx), (1, &sy)] {
            let eul: f64 = f.data.iter().sum::<f64>() * g.cell_area();
            let lag: f64 = (0..n).map(|k| values[k][comp] * weights[k]).sum();
            let scale: f64 = (0..n).map(|k| (values[k][comp] * weights[k]).abs()).sum();
            note("Lagrangian-Eulerian force sum", (eul - lag).abs() / scale);
        }
    }
    // Constant fields: zero net flux through every closed box.
    let bcs = BoundarySpec::periodic();
    let per = periodicity(&bcs);
    let u = FaceField::from_fn(&g, Axis::X, per, |_, _| 0.7);
    let v = FaceField::from_fn(&g, Axis::Y, per, |_, _| -1.3);
    let p = CellField::from_fn(&g, per, |_, _| 2.1);
    let fp = FluxParams { g: &g, rho: 1.2, mu: 0.05 };
    for _ in 0..20 {
        let lo = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.4)];
        let hi = [lo[0] + rng.gen_range(0.3..0.9), lo[1] + rng.gen_range(0.2..0.5)];
        let cv = snap_cv(lo, hi, &g, per).unwrap();
        let sf = surface_flux(&u, &v, &p, &cv, fp, [1.0, 0.5], [0.0; 2]).unwrap();
        let scale = 2.1 * (hi[0] - lo[0] + hi[1] - lo[1]) + 1.2 * 1.3 * 1.3 * (hi[0] - lo[0]);
        let f = sf.total.force();
        note("closed surface, constant fields", f[0].abs().max(f[1].abs()).max(sf.total.torque().abs()) / scale);
    }
    // Stationary body and box: two-location and single-location estimators agree.
    let mk = |seed: f64, t: f64| {
        let mut s = FlowState::from_fn(&g, &bcs, |x, y| (x + seed).sin() * (2.0 * y).cos(), |x, y| (y - seed).cos() * x);
        s.p = CellField::from_fn(&g, per, |x, y| x * y + seed);
        s.t = t;
        s
    };
    let (s0, s1) = (mk(0.1, 0.0), mk(0.13, 0.01));
    let cv = snap_cv([0.5, 0.25], [1.5, 0.75], &g, per).unwrap();
    let bm = BodyMomenta { p0: [0.1, 0.2], p1: [0.15, 0.1], l0: 0.01, l1: 0.02, x0: [1.0, 0.5] };
    let a = force_modified(&s0, &s1, &cv, &bm, fp, 0.01, "b").unwrap();
    let b = force_noca(&s0, &s1, &cv, &cv, &bm, fp, 0.01, [0.0; 2], "b").unwrap();
    let dn = (a.force[0] - b.force[0]).abs().max((a.force[1] - b.force[1]).abs()).max((a.torque - b.torque).abs());
    note("Noca = modified when stationary", dn / a.force[0].abs().max(a.force[1].abs()));
    for rec in [&a, &b] {
        let t = &rec.force_terms;
        for c in 0..2 {
            let parts = [t.volume[c], t.body[c], t.lagrangian[c], t.pressure[c], t.convective[c], t.viscous[c]];
            let s: f64 = parts.iter().sum();
            let scale: f64 = parts.iter().map(|x| x.abs()).sum();
            note("force breakdown sums", (s - rec.force[c]).abs() / scale);
        }
        let t = &rec.torque_terms;
        let parts = [t.volume, t.body, t.lagrangian, t.pressure, t.convective, t.viscous];
        let scale: f64 = parts.iter().map(|x| x.abs()).sum();
        note("force breakdown sums", (parts.iter().sum::<f64>() - rec.torque).abs() / scale);
    }
    let pass = worst.values().all(|v| *v <= 1e-12);
    let detail = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect::<Vec<_>>().join(", ");
    check(pass, format!("{detail} (tol 1e-12)"))
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().map_or(true, |o| o.contains(&n));
    let names = [
        "translating plate, Re 20",
        "stationary cylinder, Re 550",
        "translating cylinder, Re 550",
        "two stationary cylinders",
        "in-line oscillation, KC 5",
        "rotational oscillation",
        "free-swimming eel",
        "drafting, kissing, tumbling",
        "steady Stokes equivalence",
        "identity suite",
    ];
    let mut single = None;
    let mut failed = 0;
    for n in 1..=10u32 {
        if !wanted(n) {
            continue;
        }
        eprintln!("criterion {n}: {}", names[n as usize - 1]);
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| match n {
            1 => criterion_1(),
            2 => criterion_2(single.get_or_insert_with(stationary_cylinder)),
            3 => criterion_3(),
            4 => criterion_4(single.get_or_insert_with(stationary_cylinder)),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        }))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            check(false, format!("aborted: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {} [{}] {} ({:.0} s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            names[n as usize - 1],
            outcome.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
