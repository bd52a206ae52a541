//! Builtin benchmark cases.
//!
//! Scale 1 is the full benchmark resolution on a single uniform grid, at the
//! finest spacing where a case would normally use local refinement.
//! `scale > 1` coarsens the grid and shortens the run by that factor; all
//! physical parameters are recomputed from the same dimensionless groups.

use std::f64::consts::PI;

use crate::bodies::{EelWidth, Kinematics, Repulsion, Shape};
use crate::cv_forces::{MotionPolicy, Normalization};
use crate::error::{Error, Result};
use crate::harness::config::{BodyConfig, CaseConfig, CaseMode, CvConfig, GridConfig, MethodToggle, RunConfig, SHEDDING_STROUHAL};
use crate::mesh::{BoundaryCondition, BoundarySpec, TimeFn};
use crate::navier::{DtPolicy, FluidParams};

/// Names accepted by [`builtin`], in listing order.
pub const BUILTIN_CASES: &[(&str, &str)] = &[
    ("stationary_cylinder_re550", "impulsively started flow past a fixed cylinder, Re 550"),
    ("translating_cylinder_re550", "cylinder dragged through a periodic box, Re 550, moving CV"),
    ("two_cylinders_re550", "two fixed cylinders with four CV configurations, Re 550"),
    ("inline_osc", "cylinder oscillating in line in quiescent fluid, Re 100, KC 5"),
    ("crossflow_osc", "cylinder oscillating across a free stream, Re 185, f_e/f_0 = 1"),
    ("rotational_osc", "cylinder in rotary oscillation, Re 300"),
    ("translating_plate_re20", "flat plate dragged normal to itself, Re 20"),
    ("eel", "self-propelled undulating eel, Re 5609"),
    ("dkt", "two sedimenting discs: drafting, kissing, tumbling"),
    ("stokes_2d", "steady Stokes flow past a held cylinder in a driven box"),
];

pub fn builtin_cases() -> Vec<&'static str> {
    BUILTIN_CASES.iter().map(|(n, _)| *n).collect()
}

/// The named case at the given scale.
pub fn builtin(name: &str, scale: f64) -> Result<CaseConfig> {
    let base = match name {
        "stationary_cylinder_re550" => stationary_cylinder(),
        "translating_cylinder_re550" => translating_cylinder(),
        "two_cylinders_re550" => two_cylinders(),
        "inline_osc" => inline_osc(),
        "crossflow_osc" => crossflow_osc(),
        "rotational_osc" => rotational_osc(),
        "translating_plate_re20" => translating_plate(),
        "eel" => eel(),
        "dkt" => dkt(),
        "stokes_2d" => stokes_2d(),
        other => {
            return Err(Error::config(format!(
                "unknown case '{other}'; known cases: {}",
                builtin_cases().join(", ")
            )))
        }
    };
    base.scaled(scale)
}

fn fluid(rho: f64, mu: f64, dt: f64) -> FluidParams {
    FluidParams::new(rho, mu, DtPolicy::Fixed { dt })
}

fn stream(u: f64) -> BoundaryCondition {
    BoundaryCondition::inflow(u, 0.0)
}

fn run(duration: f64, methods: &[MethodToggle]) -> RunConfig {
    RunConfig {
        duration,
        methods: methods.to_vec(),
        field_stride: 0,
        checkpoint_every: 0,
        momentum: false,
        stokes_tol: 1e-9,
    }
}

fn disc(name: &str, d: f64, center: [f64; 2], kinematics: Kinematics) -> BodyConfig {
    BodyConfig {
        name: name.into(),
        shape: Shape::Disc { diameter: d },
        center,
        kinematics,
    }
}

fn cv(name: &str, body: &str, lower: [f64; 2], upper: [f64; 2], policy: MotionPolicy) -> CvConfig {
    CvConfig {
        name: name.into(),
        body: body.into(),
        lower,
        upper,
        relative: false,
        policy,
    }
}

fn unit_norm(velocity: f64, length: f64) -> Normalization {
    Normalization { rho: 1.0, velocity, length }
}

const ALL: &[MethodToggle] = &[MethodToggle::Cv, MethodToggle::Noca, MethodToggle::Lm];

/// Constant step of the Re 550 cases on the `D/50` grid: convective CFL
/// about 0.25 at the peak speed `2 U`.
const CHANNEL_DT: f64 = 0.0025;

/// Channel `18D × 12D`, cylinder at the origin six diameters from the inlet.
fn cylinder_channel(name: &str) -> CaseConfig {
    let (d, u, re) = (1.0, 1.0, 550.0);
    CaseConfig {
        name: name.into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-6.0 * d, -6.0 * d], extents: [18.0 * d, 12.0 * d], nx: 900, ny: 600 },
        fluid: fluid(1.0, u * d / re, CHANNEL_DT),
        boundary: BoundarySpec { left: stream(u), right: BoundaryCondition::Outflow, bottom: stream(u), top: stream(u) },
        initial_velocity: [u, 0.0],
        bodies: vec![],
        control_volumes: vec![],
        repulsion: None,
        run: run(5.0, ALL),
        normalization: unit_norm(u, d),
    }
}

fn stationary_cylinder() -> CaseConfig {
    let mut c = cylinder_channel("stationary_cylinder_re550");
    c.bodies.push(disc("cylinder", 1.0, [0.0, 0.0], Kinematics::Stationary));
    c.control_volumes.push(cv("cv", "cylinder", [-1.0, -1.0], [1.5, 1.0], MotionPolicy::Stationary));
    c
}

fn translating_cylinder() -> CaseConfig {
    let (d, ub, re) = (1.0, 1.0, 550.0);
    CaseConfig {
        name: "translating_cylinder_re550".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-12.0 * d, -6.0 * d], extents: [18.0 * d, 12.0 * d], nx: 900, ny: 600 },
        fluid: fluid(1.0, ub * d / re, CHANNEL_DT),
        boundary: BoundarySpec::periodic(),
        initial_velocity: [0.0, 0.0],
        bodies: vec![disc(
            "cylinder",
            d,
            [0.0, 0.0],
            Kinematics::Translation { u: TimeFn::Constant(-ub), v: TimeFn::Constant(0.0) },
        )],
        control_volumes: vec![cv("cv", "cylinder", [-d, -d], [1.5 * d, d], MotionPolicy::FollowBody { margin: 3 })],
        repulsion: None,
        run: run(5.0, ALL),
        normalization: unit_norm(ub, d),
    }
}

fn two_cylinders() -> CaseConfig {
    let mut c = cylinder_channel("two_cylinders_re550");
    c.bodies.push(disc("bottom", 1.0, [0.0, -2.0], Kinematics::Stationary));
    c.bodies.push(disc("top", 1.0, [0.0, 2.0], Kinematics::Stationary));
    let configs: [(&str, [f64; 2], [f64; 2]); 4] = [
        ("disjoint", [-3.0, -1.0], [1.0, 3.0]),
        ("overlap", [-3.0, 1.0], [-1.0, 3.0]),
        ("one_and_half", [-3.0, 2.0], [-2.0, 3.0]),
        ("both", [-3.0, 2.7], [-2.7, 3.0]),
    ];
    for (tag, bottom_y, top_y) in configs {
        c.control_volumes.push(cv(&format!("{tag}_bottom"), "bottom", [-1.0, bottom_y[0]], [1.0, bottom_y[1]], MotionPolicy::Stationary));
        c.control_volumes.push(cv(&format!("{tag}_top"), "top", [-1.0, top_y[0]], [1.0, top_y[1]], MotionPolicy::Stationary));
    }
    c.run.methods = vec![MethodToggle::Cv, MethodToggle::Lm];
    c
}

fn inline_osc() -> CaseConfig {
    let (d, u0, re, kc) = (1.0, 1.0, 100.0, 5.0);
    let f = u0 / (kc * d);
    CaseConfig {
        name: "inline_osc".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-16.0 * d, -8.0 * d], extents: [32.0 * d, 16.0 * d], nx: 800, ny: 400 },
        fluid: fluid(1.0, u0 * d / re, 0.005 * d / u0),
        boundary: BoundarySpec::walls(),
        initial_velocity: [0.0, 0.0],
        bodies: vec![disc("cylinder", d, [0.0, 0.0], Kinematics::InlineOscillation { u0, frequency: f })],
        control_volumes: vec![cv("cv", "cylinder", [-4.0 * d, -2.0 * d], [4.0 * d, 2.0 * d], MotionPolicy::Stationary)],
        repulsion: None,
        run: run(2.0 / f, ALL),
        normalization: unit_norm(u0, d),
    }
}

fn crossflow_osc() -> CaseConfig {
    let (d, u, re) = (1.0, 1.0, 185.0);
    let fe = SHEDDING_STROUHAL * u / d;
    let v0 = 0.2 * fe * d / 0.159;
    CaseConfig {
        name: "crossflow_osc".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-5.0 * d, -8.0 * d], extents: [32.0 * d, 16.0 * d], nx: 800, ny: 384 },
        fluid: fluid(1.0, u * d / re, 0.005 * d / u),
        boundary: BoundarySpec { left: stream(u), right: BoundaryCondition::Outflow, bottom: stream(u), top: stream(u) },
        initial_velocity: [u, 0.0],
        bodies: vec![disc("cylinder", d, [0.0, 0.2 * d], Kinematics::CrossflowOscillation { v0, frequency: fe })],
        control_volumes: vec![cv("cv", "cylinder", [-d, -2.0 * d], [d, 2.0 * d], MotionPolicy::Stationary)],
        repulsion: None,
        run: run(100.0 * d / u, ALL),
        normalization: unit_norm(u, d),
    }
}

fn rotational_osc() -> CaseConfig {
    let (d, f, re) = (1.0, 0.1, 300.0);
    let am = 10.0 * f * d;
    let um = am * d / 2.0;
    let period = 1.0 / f;
    CaseConfig {
        name: "rotational_osc".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-20.0 * d, -20.0 * d], extents: [40.0 * d, 40.0 * d], nx: 2048, ny: 2048 },
        fluid: fluid(1.0, um * d / re, 1e-4 * period),
        boundary: BoundarySpec::walls(),
        initial_velocity: [0.0, 0.0],
        bodies: vec![disc("cylinder", d, [0.0, 0.0], Kinematics::RotationalOscillation { amplitude: am, frequency: f })],
        control_volumes: vec![cv("cv", "cylinder", [-1.01562 * d, -1.01562 * d], [1.01562 * d, 1.01562 * d], MotionPolicy::Stationary)],
        repulsion: None,
        run: run(period, ALL),
        normalization: unit_norm(um, d),
    }
}

fn translating_plate() -> CaseConfig {
    let (b, ub, re) = (1.0, 1.0, 20.0);
    CaseConfig {
        name: "translating_plate_re20".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-24.0 * b, -11.0 * b], extents: [32.0 * b, 22.0 * b], nx: 1024, ny: 704 },
        fluid: fluid(1.0, ub * b / re, 0.01 * b / ub),
        boundary: BoundarySpec::periodic(),
        initial_velocity: [0.0, 0.0],
        bodies: vec![BodyConfig {
            name: "plate".into(),
            shape: Shape::Plate { height: b },
            center: [0.0, 0.0],
            kinematics: Kinematics::Translation { u: TimeFn::Constant(-ub), v: TimeFn::Constant(0.0) },
        }],
        control_volumes: vec![cv("cv", "plate", [-2.0 * b, -b], [2.0 * b, b], MotionPolicy::FollowBody { margin: 3 })],
        repulsion: None,
        run: run(10.0 * b / ub, ALL),
        normalization: unit_norm(ub, b),
    }
}

/// Maximum undulation speed at the tail tip, `0.785 L / T`.
pub const EEL_VMAX: f64 = 0.785;

fn eel() -> CaseConfig {
    let (l, t, re) = (1.0, 1.0, 5609.0);
    let vmax = EEL_VMAX * l / t;
    let mut run = run(8.0 * t, ALL);
    run.momentum = true;
    CaseConfig {
        name: "eel".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-5.0 * l, -2.0 * l], extents: [8.0 * l, 4.0 * l], nx: 2048, ny: 1024 },
        fluid: fluid(1.0, vmax * l / re, 1e-4 * t),
        boundary: BoundarySpec::periodic(),
        initial_velocity: [0.0, 0.0],
        bodies: vec![BodyConfig {
            name: "eel".into(),
            shape: Shape::Eel { length: l, width: EelWidth::default() },
            center: [0.0, 0.0],
            kinematics: Kinematics::Eel { period: t },
        }],
        control_volumes: vec![cv("cv", "eel", [-1.02 * l, -0.7075 * l], [1.0425 * l, 0.73 * l], MotionPolicy::TrackCenter)],
        repulsion: None,
        run,
        normalization: unit_norm(vmax, l),
    }
}

fn dkt() -> CaseConfig {
    let d = 0.2;
    let (rho, mu, g) = (1.0, 0.01, 980.0);
    let r = d / 2.0;
    let (nx, ny) = (256, 1024);
    let h = 10.0 * d / nx as f64;
    // Boxes of half-width 20 fine cells around each particle center.
    let half = 20.0 * 0.0390625 * d;
    let free = Kinematics::Free { solid_density: 1.01 * rho, gravity: g };
    let mut c = CaseConfig {
        name: "dkt".into(),
        mode: CaseMode::Unsteady,
        grid: GridConfig { origin: [-5.0 * d, 0.0], extents: [10.0 * d, 40.0 * d], nx, ny },
        fluid: fluid(rho, mu, 5e-4),
        boundary: BoundarySpec {
            left: BoundaryCondition::wall(),
            right: BoundaryCondition::wall(),
            bottom: BoundaryCondition::Outflow,
            top: BoundaryCondition::Outflow,
        },
        initial_velocity: [0.0, 0.0],
        bodies: vec![disc("p1", d, [-0.005 * d, 36.0 * d], free), disc("p2", d, [0.0, 34.0 * d], free)],
        control_volumes: vec![],
        repulsion: Some(Repulsion { scale: rho * PI * r * r * g, stiffness: 2.0, gap: h }),
        run: run(5.0, &[MethodToggle::Cv, MethodToggle::Lm]),
        normalization: unit_norm(1.0, d),
    };
    for p in ["p1", "p2"] {
        c.control_volumes.push(CvConfig {
            name: format!("cv_{p}"),
            body: p.into(),
            lower: [-half, -half],
            upper: [half, half],
            relative: true,
            policy: MotionPolicy::TrackCenter,
        });
    }
    c
}

fn stokes_2d() -> CaseConfig {
    let (d, mu, u) = (1.0, 1.0, 1.0);
    let mut run = run(1.0, &[MethodToggle::Cv, MethodToggle::Lm]);
    run.stokes_tol = 1e-8;
    CaseConfig {
        name: "stokes_2d".into(),
        mode: CaseMode::Stokes,
        grid: GridConfig { origin: [-4.0 * d, -4.0 * d], extents: [8.0 * d, 8.0 * d], nx: 128, ny: 128 },
        fluid: FluidParams::new(0.0, mu, DtPolicy::Fixed { dt: 1.0 }),
        boundary: BoundarySpec { left: stream(u), right: stream(u), bottom: stream(u), top: stream(u) },
        initial_velocity: [0.0, 0.0],
        bodies: vec![BodyConfig {
            name: "cylinder".into(),
            shape: Shape::CircleSurface { diameter: d, spacing_cells: 2.0 },
            center: [0.0, 0.0],
            kinematics: Kinematics::Stationary,
        }],
        control_volumes: vec![
            cv("inner", "cylinder", [-d, -d], [d, d], MotionPolicy::Stationary),
            cv("outer", "cylinder", [-2.0 * d, -2.0 * d], [2.0 * d, 2.0 * d], MotionPolicy::Stationary),
        ],
        repulsion: None,
        run,
        normalization: unit_norm(u, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates_at_two_scales() {
        for name in builtin_cases() {
            let a = builtin(name, 1.0).unwrap();
            a.validate().unwrap();
            let b = builtin(name, 4.0).unwrap();
            b.validate().unwrap();
            // Dimensionless groups are recomputed from unchanged physics.
            assert_eq!(a.dimensionless(), b.dimensionless(), "{name}");
        }
    }

    #[test]
    fn benchmark_groups() {
        let c = builtin("inline_osc", 1.0).unwrap().dimensionless();
        assert!((c.re - 100.0).abs() < 1e-9);
        assert!((c.kc.unwrap() - 5.0).abs() < 1e-12);
        let c = builtin("crossflow_osc", 1.0).unwrap().dimensionless();
        assert!((c.frequency_ratio.unwrap() - 1.0).abs() < 1e-12);
        let c = builtin("dkt", 1.0).unwrap();
        match c.bodies[0].kinematics {
            Kinematics::Free { solid_density, .. } => assert!((solid_density / c.fluid.rho - 1.01).abs() < 1e-12),
            _ => panic!("dkt particles move freely"),
        }
        assert!((builtin("eel", 1.0).unwrap().dimensionless().re - 5609.0).abs() < 1e-6);
    }

    #[test]
    fn unknown_case_is_an_error() {
        assert!(matches!(builtin("wobbly_sphere", 1.0), Err(Error::Config(_))));
    }
}
