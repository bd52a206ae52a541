//! The case driver: time loop, diagnostics, CSV output and checkpoints.
//!
//! Output directory layout:
//! `forces.csv`, `bodies.csv`, `momentum.csv` (if enabled), `summary.json`,
//! `fields/{u,v,p}_NNNNNNNN.bin`, `checkpoint_NNNNNNNN.json`.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bodies::{cross, RigidBody};
use crate::cv_forces::{
    coefficients, force_lm, force_modified, force_noca, momentum_diagnostics, snap_cv, stokes_force_cv, stokes_force_lm, BodyMomenta,
    FluxParams, ForceTorqueRecord, MovingCv,
};
use crate::error::{Error, Result};
use crate::harness::config::{CaseConfig, CaseMode, MethodToggle};
use crate::harness::metrics::{max_jump_ratio, mean};
use crate::mesh::dump::{write_cell, write_face, Encoding};
use crate::mesh::{periodicity, GridSpec};
use crate::navier::{FlowState, Integrator};
use crate::stokes::{solve_constrained_stokes, StokesProblem};

/// One force/torque sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRow {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    /// Control volume name, or the body name for marker-based rows.
    pub target: String,
    pub body: String,
    pub method: String,
    pub fx: f64,
    pub fy: f64,
    pub mz: f64,
    pub cd: f64,
    pub cl: f64,
    pub ct: f64,
    pub cv_moved: bool,
    /// Markers of another body lie inside the box.
    pub multi_body: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumRow {
    pub step: u64,
    pub t: f64,
    pub target: String,
    pub cv_px: f64,
    pub cv_py: f64,
    pub cv_l: f64,
    pub body_px: f64,
    pub body_py: f64,
    pub body_l: f64,
    pub domain_px: f64,
    pub domain_py: f64,
    pub domain_l: f64,
    pub residual_x: f64,
    pub residual_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyRow {
    pub step: u64,
    pub t: f64,
    pub body: String,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub target: String,
    pub body: String,
    pub method: String,
    pub samples: usize,
    pub mean_cd: f64,
    pub mean_cl: f64,
    pub mean_ct: f64,
    /// Half the peak-to-peak range of `C_D`.
    pub amplitude_cd: f64,
    /// Largest step-to-step `C_D` change over the median change.
    pub max_jump_ratio_cd: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: u64,
    pub final_time: f64,
    pub max_divergence: f64,
    pub max_slip: f64,
    /// Largest `Δt max(|u|/Δx, |v|/Δy)` over the run.
    pub max_cfl: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub case: String,
    pub stats: RunStats,
    pub series: Vec<SeriesSummary>,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub out_dir: Option<PathBuf>,
    pub forces_csv: Option<PathBuf>,
    pub bodies_csv: Option<PathBuf>,
    pub momentum_csv: Option<PathBuf>,
    pub field_dumps: Vec<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
    pub forces: Vec<ForceRow>,
    pub bodies: Vec<BodyRow>,
    pub momentum: Vec<MomentumRow>,
    pub summary: Summary,
}

impl CaseResult {
    /// Rows of one `(target, method)` series in step order.
    pub fn series(&self, target: &str, method: &str) -> Vec<&ForceRow> {
        self.forces.iter().filter(|r| r.target == target && r.method == method).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where files are written; `None` keeps everything in memory.
    pub out: Option<PathBuf>,
    /// Checkpoint to resume from. Its CSVs must live in `out`.
    pub restart: Option<PathBuf>,
    /// Stop after this many steps in total (for interrupted-run tests).
    pub stop_after: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    config: CaseConfig,
    state: FlowState,
    bodies: Vec<RigidBody>,
    cvs: Vec<MovingCv>,
    /// Data rows already written to forces, bodies and momentum CSVs.
    rows: [usize; 3],
    stats: RunStats,
}

/// Runs a case with results kept in memory only.
pub fn run_case(config: &CaseConfig) -> Result<CaseResult> {
    run_case_with(config, &RunOptions::default())
}

pub fn run_case_with(config: &CaseConfig, opts: &RunOptions) -> Result<CaseResult> {
    config.validate()?;
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir)?;
    }
    match config.mode {
        CaseMode::Unsteady => Driver::new(config, opts)?.run(opts),
        CaseMode::Stokes => {
            if opts.restart.is_some() {
                return Err(Error::config("a Stokes case is a single solve and cannot be restarted"));
            }
            run_stokes(config, opts)
        }
    }
}

/// CSV sink that appends to a file when an output directory is set.
struct Sink<T> {
    path: Option<PathBuf>,
    writer: Option<csv::Writer<BufWriter<File>>>,
    rows: Vec<T>,
}

impl<T: Serialize + for<'de> Deserialize<'de>> Sink<T> {
    fn create(dir: Option<&Path>, name: &str) -> Result<Self> {
        let path = dir.map(|d| d.join(name));
        let writer = match &path {
            Some(p) => Some(csv::Writer::from_writer(BufWriter::new(File::create(p)?))),
            None => None,
        };
        Ok(Sink { path, writer, rows: Vec::new() })
    }

    /// Keeps the header and the first `n` data rows of an existing file and
    /// appends after them.
    fn resume(dir: &Path, name: &str, n: usize) -> Result<Self> {
        let path = dir.join(name);
        let f = File::open(&path).map_err(|e| Error::Io(e).context(&format!("cannot reopen {}", path.display())))?;
        let mut kept = Vec::new();
        for line in BufReader::new(f).lines().take(n + 1) {
            let line = line?;
            kept.extend_from_slice(line.as_bytes());
            kept.push(b'\n');
        }
        let mut rdr = csv::Reader::from_reader(kept.as_slice());
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if rows.len() != n {
            return Err(Error::State(format!(
                "{} holds {} rows but the checkpoint expects {n}",
                path.display(),
                rows.len()
            )));
        }
        fs::write(&path, &kept)?;
        let file = OpenOptions::new().append(true).open(&path)?;
        let writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
        Ok(Sink {
            path: Some(path),
            writer: Some(writer),
            rows,
        })
    }

    fn push(&mut self, row: T) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.serialize(&row).map_err(csv_err)?;
        }
        self.rows.push(row);
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Format(format!("{other:?}")),
    }
}

fn build_bodies(config: &CaseConfig, g: &GridSpec) -> Result<Vec<RigidBody>> {
    config
        .bodies
        .iter()
        .map(|b| {
            RigidBody::new(b.name.clone(), b.shape, b.kinematics, b.center, g).map_err(|e| e.context(&format!("body '{}'", b.name)))
        })
        .collect()
}

fn build_cvs(config: &CaseConfig, g: &GridSpec, bodies: &[RigidBody]) -> Result<Vec<MovingCv>> {
    let per = periodicity(&config.boundary);
    config
        .control_volumes
        .iter()
        .map(|c| {
            let body = body_index(bodies, &c.body)?;
            let center = bodies[body].center();
            let off = if c.relative { center } else { [0.0; 2] };
            let lower = [c.lower[0] + off[0], c.lower[1] + off[1]];
            let upper = [c.upper[0] + off[0], c.upper[1] + off[1]];
            let cv = snap_cv(lower, upper, g, per).map_err(|e| e.context(&format!("control volume '{}'", c.name)))?;
            Ok(MovingCv::new(cv, c.policy.clone(), Some(center), g))
        })
        .collect()
}

fn body_index(bodies: &[RigidBody], name: &str) -> Result<usize> {
    bodies
        .iter()
        .position(|b| b.name == name)
        .ok_or_else(|| Error::config(format!("unknown body '{name}'")))
}

fn force_row(step: u64, dt: f64, target: &str, rec: &ForceTorqueRecord, config: &CaseConfig, multi_body: bool) -> Result<ForceRow> {
    let c = coefficients(rec, &config.normalization)?;
    Ok(ForceRow {
        step,
        t: rec.t,
        dt,
        target: target.to_string(),
        body: rec.body.clone(),
        method: rec.method.tag().to_string(),
        fx: rec.force[0],
        fy: rec.force[1],
        mz: rec.torque,
        cd: c.cd,
        cl: c.cl,
        ct: c.ct,
        cv_moved: rec.cv_moved,
        multi_body,
    })
}

fn body_row(step: u64, b: &RigidBody) -> BodyRow {
    let s = &b.state;
    BodyRow {
        step,
        t: s.t,
        body: b.name.clone(),
        x: s.center[0],
        y: s.center[1],
        theta: s.theta,
        u: s.u_r[0],
        v: s.u_r[1],
        w: s.w_r,
    }
}

/// Momenta of every body whose center lies in the box, about the torque
/// reference of the step.
fn momenta_inside(bodies: &[RigidBody], cv: &crate::cv_forces::ControlVolume, g: &GridSpec, x0: [f64; 2]) -> Result<BodyMomenta> {
    let [lo, hi] = cv.bounds(g);
    let mut bm = BodyMomenta::none(x0);
    for b in bodies {
        let c = b.center();
        if !(c[0] > lo[0] && c[0] < hi[0] && c[1] > lo[1] && c[1] < hi[1]) {
            continue;
        }
        let lm = b
            .lm
            .as_ref()
            .ok_or_else(|| Error::State(format!("body '{}' has no constraint-force record", b.name)))?;
        let own = BodyMomenta::from_lm(lm);
        let r = [own.x0[0] - x0[0], own.x0[1] - x0[1]];
        for a in 0..2 {
            bm.p0[a] += own.p0[a];
            bm.p1[a] += own.p1[a];
        }
        bm.l0 += own.l0 + cross(r, own.p0);
        bm.l1 += own.l1 + cross(r, own.p1);
    }
    Ok(bm)
}

fn summarize(case: &str, forces: &[ForceRow], stats: RunStats) -> Summary {
    let mut keys: Vec<(String, String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in forces {
        let k = (r.target.clone(), r.body.clone(), r.method.clone());
        if seen.insert(k.clone()) {
            keys.push(k);
        }
    }
    let series = keys
        .into_iter()
        .map(|(target, body, method)| {
            let rows: Vec<&ForceRow> = forces.iter().filter(|r| r.target == target && r.method == method).collect();
            let cd: Vec<f64> = rows.iter().map(|r| r.cd).collect();
            let (lo, hi) = cd.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
            SeriesSummary {
                samples: rows.len(),
                mean_cd: mean(&cd),
                mean_cl: mean(&rows.iter().map(|r| r.cl).collect::<Vec<_>>()),
                mean_ct: mean(&rows.iter().map(|r| r.ct).collect::<Vec<_>>()),
                amplitude_cd: 0.5 * (hi - lo),
                max_jump_ratio_cd: if cd.len() >= 3 { max_jump_ratio(&cd) } else { 0.0 },
                target,
                body,
                method,
            }
        })
        .collect();
    Summary {
        case: case.to_string(),
        stats,
        series,
    }
}

fn write_summary(dir: Option<&Path>, summary: &Summary) -> Result<()> {
    if let Some(d) = dir {
        let f = BufWriter::new(File::create(d.join("summary.json"))?);
        serde_json::to_writer_pretty(f, summary).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(())
}

/// Configuration fields that may differ between a checkpoint and a restart.
fn restart_key(c: &CaseConfig) -> CaseConfig {
    let mut c = c.clone();
    c.run.checkpoint_every = 0;
    c.run.field_stride = 0;
    c
}

struct Driver<'a> {
    config: &'a CaseConfig,
    integ: Integrator,
    state: FlowState,
    bodies: Vec<RigidBody>,
    cvs: Vec<MovingCv>,
    cv_body: Vec<usize>,
    forces: Sink<ForceRow>,
    body_rows: Sink<BodyRow>,
    momentum: Option<Sink<MomentumRow>>,
    stats: RunStats,
    warned: BTreeSet<usize>,
    escaped: BTreeSet<usize>,
    dumps: Vec<PathBuf>,
    checkpoints: Vec<PathBuf>,
}

impl<'a> Driver<'a> {
    fn new(config: &'a CaseConfig, opts: &RunOptions) -> Result<Self> {
        let g = config.grid.build()?;
        let integ = Integrator::new(g, config.boundary, config.fluid)?.with_repulsion(config.repulsion);
        let dir = opts.out.as_deref();
        let (state, bodies, cvs, forces, body_rows, momentum, stats) = match &opts.restart {
            None => {
                let [u0, v0] = config.initial_velocity;
                let state = FlowState::from_fn(&g, &config.boundary, |_, _| u0, |_, _| v0);
                let bodies = build_bodies(config, &g)?;
                let cvs = build_cvs(config, &g, &bodies)?;
                let mut body_rows = Sink::create(dir, "bodies.csv")?;
                for b in &bodies {
                    body_rows.push(body_row(0, b))?;
                }
                let momentum = if config.run.momentum { Some(Sink::create(dir, "momentum.csv")?) } else { None };
                (state, bodies, cvs, Sink::create(dir, "forces.csv")?, body_rows, momentum, RunStats::default())
            }
            Some(path) => {
                let dir = dir.ok_or_else(|| Error::config("restarting needs the output directory holding the CSVs"))?;
                let f = BufReader::new(File::open(path)?);
                let ck: Checkpoint = serde_json::from_reader(f).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                if restart_key(&ck.config) != restart_key(config) {
                    return Err(Error::config(format!(
                        "checkpoint {} was written for a different configuration",
                        path.display()
                    )));
                }
                let momentum = if config.run.momentum { Some(Sink::resume(dir, "momentum.csv", ck.rows[2])?) } else { None };
                (
                    ck.state,
                    ck.bodies,
                    ck.cvs,
                    Sink::resume(dir, "forces.csv", ck.rows[0])?,
                    Sink::resume(dir, "bodies.csv", ck.rows[1])?,
                    momentum,
                    ck.stats,
                )
            }
        };
        let cv_body = config
            .control_volumes
            .iter()
            .map(|c| body_index(&bodies, &c.body))
            .collect::<Result<Vec<_>>>()?;
        Ok(Driver {
            config,
            integ,
            state,
            bodies,
            cvs,
            cv_body,
            forces,
            body_rows,
            momentum,
            stats,
            warned: BTreeSet::new(),
            escaped: BTreeSet::new(),
            dumps: Vec::new(),
            checkpoints: Vec::new(),
        })
    }

    fn run(mut self, opts: &RunOptions) -> Result<CaseResult> {
        let duration = self.config.run.duration;
        let mut decile = (10.0 * self.state.t / duration).floor() as i64;
        loop {
            if opts.stop_after.is_some_and(|n| self.state.step >= n) {
                break;
            }
            let dt = match self.next_dt()? {
                Some(dt) => dt,
                None => break,
            };
            let step = self.state.step + 1;
            self.advance(dt).map_err(|e| e.context(&format!("at step {step}, t = {:.6}", self.state.t)))?;
            let d = (10.0 * self.state.t / duration).floor() as i64;
            if d > decile {
                decile = d;
                log::info!("{}: step {} t = {:.4} ({}%)", self.config.name, self.state.step, self.state.t, 10 * d.min(10));
            }
        }
        self.finish(opts)
    }

    /// Step size for the next step; `None` once `duration` is reached.
    /// The last step is not shortened: an abrupt change of `Δt` divides the
    /// residual slip of the direct forcing by a smaller step and shows up as
    /// a force spike, so the run may end up to one step past `duration`.
    fn next_dt(&self) -> Result<Option<f64>> {
        let dt = self.integ.choose_dt(&self.state)?;
        if self.config.run.duration - self.state.t <= 1e-6 * dt {
            return Ok(None);
        }
        Ok(Some(dt))
    }

    fn advance(&mut self, dt: f64) -> Result<()> {
        let g = self.integ.grid;
        let per = periodicity(&self.config.boundary);
        let (next, report) = self.integ.step(&self.state, &mut self.bodies, dt)?;
        let step = next.step;
        self.stats.max_divergence = self.stats.max_divergence.max(report.divergence);
        self.stats.max_slip = self.stats.max_slip.max(report.slip);
        let cfl = dt * (next.u.max_abs() / g.dx).max(next.v.max_abs() / g.dy);
        self.stats.max_cfl = self.stats.max_cfl.max(cfl);
        for (k, cv) in self.cvs.iter_mut().enumerate() {
            cv.update(Some(&self.bodies[self.cv_body[k]]), step, &g, per)
                .map_err(|e| e.context(&format!("moving control volume '{}'", self.config.control_volumes[k].name)))?;
        }
        self.diagnostics(&next, dt)?;
        for b in &self.bodies {
            self.body_rows.push(body_row(step, b))?;
        }
        self.state = next;
        self.stats.steps = step;
        self.stats.final_time = self.state.t;
        self.dump_fields()?;
        self.checkpoint()?;
        Ok(())
    }

    fn diagnostics(&mut self, next: &FlowState, dt: f64) -> Result<()> {
        let cfg = self.config;
        let g = self.integ.grid;
        let fp = FluxParams {
            g: &g,
            rho: cfg.fluid.rho,
            mu: cfg.fluid.mu,
        };
        let methods = &cfg.run.methods;
        let step = next.step;
        for (k, mcv) in self.cvs.iter().enumerate() {
            let c = &cfg.control_volumes[k];
            let body = &self.bodies[self.cv_body[k]];
            let lm = body
                .lm
                .as_ref()
                .ok_or_else(|| Error::State(format!("body '{}' has no constraint-force record", body.name)))?;
            let bm = momenta_inside(&self.bodies, &mcv.cv, &g, lm.x0)?;
            let multi = self
                .bodies
                .iter()
                .enumerate()
                .any(|(i, b)| i != self.cv_body[k] && mcv.cv.intersects(b.positions(), &g));
            if multi && self.warned.insert(k) {
                let w = format!(
                    "control volume '{}' contains markers of more than one body from step {step}; its force includes them",
                    c.name
                );
                log::warn!("{w}");
                self.stats.warnings.push(w);
            }
            let [lo, hi] = mcv.cv.bounds(&g);
            let [blo, bhi] = body.bounding_box();
            let inside = (0..2).all(|a| blo[a] > lo[a] && bhi[a] < hi[a]);
            if !inside && self.escaped.insert(k) {
                let w = format!(
                    "body '{}' extends outside control volume '{}' from step {step}; its force is incomplete",
                    body.name, c.name
                );
                log::warn!("{w}");
                self.stats.warnings.push(w);
            }
            if methods.contains(&MethodToggle::Cv) {
                let mut rec = force_modified(&self.state, next, &mcv.cv, &bm, fp, dt, &body.name)?;
                rec.cv_moved = mcv.moved();
                self.forces.push(force_row(step, dt, &c.name, &rec, cfg, multi)?)?;
            }
            if methods.contains(&MethodToggle::Noca) {
                let us = mcv.surface_velocity(&g, dt);
                let rec = force_noca(&self.state, next, &mcv.previous, &mcv.cv, &bm, fp, dt, us, &body.name)?;
                self.forces.push(force_row(step, dt, &c.name, &rec, cfg, multi)?)?;
            }
            if let Some(sink) = self.momentum.as_mut() {
                let s = momentum_diagnostics(&self.state, next, &mcv.cv, &bm, fp, dt)?;
                sink.push(MomentumRow {
                    step,
                    t: s.t,
                    target: c.name.clone(),
                    cv_px: s.cv_momentum[0],
                    cv_py: s.cv_momentum[1],
                    cv_l: s.cv_angular_momentum,
                    body_px: s.body_momentum[0],
                    body_py: s.body_momentum[1],
                    body_l: s.body_angular_momentum,
                    domain_px: s.domain_momentum[0],
                    domain_py: s.domain_momentum[1],
                    domain_l: s.domain_angular_momentum,
                    residual_x: s.residual[0],
                    residual_y: s.residual[1],
                })?;
            }
        }
        if methods.contains(&MethodToggle::Lm) {
            for b in &self.bodies {
                let lm = b
                    .lm
                    .as_ref()
                    .ok_or_else(|| Error::State(format!("body '{}' has no constraint-force record", b.name)))?;
                let rec = force_lm(lm, next.t, &b.name);
                self.forces.push(force_row(step, dt, &b.name, &rec, cfg, false)?)?;
            }
        }
        Ok(())
    }

    fn dump_fields(&mut self) -> Result<()> {
        let stride = self.config.run.field_stride;
        let (Some(dir), true) = (self.forces.path.as_ref().and_then(|p| p.parent()), stride > 0) else {
            return Ok(());
        };
        if self.state.step % stride != 0 {
            return Ok(());
        }
        let fields = dir.join("fields");
        fs::create_dir_all(&fields)?;
        let g = &self.integ.grid;
        let s = &self.state;
        for (name, is_cell) in [("u", false), ("v", false), ("p", true)] {
            let path = fields.join(format!("{name}_{:08}.bin", s.step));
            let mut w = BufWriter::new(File::create(&path)?);
            if is_cell {
                write_cell(&mut w, g, &s.p, s.t, Encoding::BinaryLe)?;
            } else {
                let f = if name == "u" { &s.u } else { &s.v };
                write_face(&mut w, g, f, s.t, Encoding::BinaryLe)?;
            }
            w.flush()?;
            self.dumps.push(path);
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<()> {
        let every = self.config.run.checkpoint_every;
        let (Some(dir), true) = (self.forces.path.as_ref().and_then(|p| p.parent()), every > 0) else {
            return Ok(());
        };
        if self.state.step % every != 0 {
            return Ok(());
        }
        let dir = dir.to_path_buf();
        self.forces.flush()?;
        self.body_rows.flush()?;
        if let Some(m) = self.momentum.as_mut() {
            m.flush()?;
        }
        let ck = Checkpoint {
            config: self.config.clone(),
            state: self.state.clone(),
            bodies: self.bodies.clone(),
            cvs: self.cvs.clone(),
            rows: [
                self.forces.rows.len(),
                self.body_rows.rows.len(),
                self.momentum.as_ref().map_or(0, |m| m.rows.len()),
            ],
            stats: self.stats.clone(),
        };
        let path = dir.join(format!("checkpoint_{:08}.json", self.state.step));
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer(&mut w, &ck).map_err(|e| Error::Format(e.to_string()))?;
        w.flush()?;
        self.checkpoints.push(path);
        Ok(())
    }

    fn finish(mut self, opts: &RunOptions) -> Result<CaseResult> {
        self.forces.flush()?;
        self.body_rows.flush()?;
        if let Some(m) = self.momentum.as_mut() {
            m.flush()?;
        }
        let summary = summarize(&self.config.name, &self.forces.rows, self.stats.clone());
        write_summary(opts.out.as_deref(), &summary)?;
        let (momentum_csv, momentum) = match self.momentum {
            Some(m) => (m.path, m.rows),
            None => (None, Vec::new()),
        };
        Ok(CaseResult {
            out_dir: opts.out.clone(),
            forces_csv: self.forces.path,
            bodies_csv: self.body_rows.path,
            momentum_csv,
            field_dumps: self.dumps,
            checkpoints: self.checkpoints,
            forces: self.forces.rows,
            bodies: self.body_rows.rows,
            momentum,
            summary,
        })
    }
}

/// One steady solve; rows are written at step 0.
fn run_stokes(config: &CaseConfig, opts: &RunOptions) -> Result<CaseResult> {
    let g = config.grid.build()?;
    let dir = opts.out.as_deref();
    let bodies = build_bodies(config, &g)?;
    let cvs = build_cvs(config, &g, &bodies)?;
    let body = &bodies[0];
    let problem = StokesProblem {
        grid: g,
        mu: config.fluid.mu,
        bcs: config.boundary,
        positions: body.positions().to_vec(),
        weights: body.weights.clone(),
        velocities: body.desired_velocity(0.0)?,
        kernel: config.fluid.kernel,
    };
    let sol = solve_constrained_stokes(&problem, config.run.stokes_tol)?;
    let x0 = body.center();
    let mut forces = Sink::create(dir, "forces.csv")?;
    let mut body_rows = Sink::create(dir, "bodies.csv")?;
    body_rows.push(body_row(0, body))?;
    if config.run.methods.contains(&MethodToggle::Cv) {
        for (c, mcv) in config.control_volumes.iter().zip(&cvs) {
            let rec = stokes_force_cv(&sol.u, &sol.v, &sol.p, &mcv.cv, &g, config.fluid.mu, x0, &body.name)?;
            forces.push(force_row(0, 0.0, &c.name, &rec, config, false)?)?;
        }
    }
    if config.run.methods.contains(&MethodToggle::Lm) {
        let rec = stokes_force_lm(&problem.positions, &problem.weights, &sol.force, x0, &body.name);
        forces.push(force_row(0, 0.0, &body.name, &rec, config, false)?)?;
    }
    forces.flush()?;
    body_rows.flush()?;
    let stats = RunStats {
        steps: 0,
        final_time: 0.0,
        max_divergence: sol.residuals[1],
        max_slip: sol.slip,
        max_cfl: 0.0,
        warnings: Vec::new(),
    };
    let summary = summarize(&config.name, &forces.rows, stats);
    write_summary(dir, &summary)?;
    Ok(CaseResult {
        out_dir: opts.out.clone(),
        forces_csv: forces.path,
        bodies_csv: body_rows.path,
        momentum_csv: None,
        field_dumps: Vec::new(),
        checkpoints: Vec::new(),
        forces: forces.rows,
        bodies: body_rows.rows,
        momentum: Vec::new(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{Kinematics, Shape};
    use crate::cv_forces::{MotionPolicy, Normalization};
    use crate::harness::config::{BodyConfig, CvConfig, GridConfig, RunConfig};
    use crate::mesh::{BoundarySpec, TimeFn};
    use crate::navier::{DtPolicy, FluidParams};

    /// A small moving-cylinder case that exercises every output path.
    fn tiny() -> CaseConfig {
        CaseConfig {
            name: "tiny".into(),
            mode: CaseMode::Unsteady,
            grid: GridConfig { origin: [-2.0, -1.0], extents: [4.0, 2.0], nx: 40, ny: 20 },
            fluid: FluidParams::new(1.0, 0.02, DtPolicy::Fixed { dt: 0.02 }),
            boundary: BoundarySpec::periodic(),
            initial_velocity: [0.0, 0.0],
            bodies: vec![BodyConfig {
                name: "c".into(),
                shape: Shape::Disc { diameter: 0.5 },
                center: [0.0, 0.0],
                kinematics: Kinematics::Translation { u: TimeFn::Constant(-1.0), v: TimeFn::Constant(0.0) },
            }],
            control_volumes: vec![CvConfig {
                name: "box".into(),
                body: "c".into(),
                lower: [-0.5, -0.5],
                upper: [0.5, 0.5],
                relative: false,
                policy: MotionPolicy::FollowBody { margin: 2 },
            }],
            repulsion: None,
            run: RunConfig {
                duration: 0.3,
                methods: vec![MethodToggle::Cv, MethodToggle::Noca, MethodToggle::Lm],
                field_stride: 5,
                checkpoint_every: 0,
                momentum: true,
                stokes_tol: 1e-9,
            },
            normalization: Normalization { rho: 1.0, velocity: 1.0, length: 0.5 },
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = tiny();
        let ra = run_case_with(&cfg, &RunOptions { out: Some(a.path().into()), ..Default::default() }).unwrap();
        run_case_with(&cfg, &RunOptions { out: Some(b.path().into()), ..Default::default() }).unwrap();
        for f in ["forces.csv", "bodies.csv", "momentum.csv", "summary.json"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        assert_eq!(ra.summary.stats.steps, 15);
        assert_eq!(ra.forces.len(), 15 * 3);
        assert_eq!(ra.field_dumps.len(), 3 * 3);
        assert!(ra.forces.iter().any(|r| r.cv_moved), "the box should follow the body");
        // The CSV parses back to the in-memory rows.
        let back: Vec<ForceRow> = csv::Reader::from_path(a.path().join("forces.csv"))
            .unwrap()
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, ra.forces);
    }

    #[test]
    fn restart_reproduces_uninterrupted_run() {
        let mut cfg = tiny();
        cfg.run.checkpoint_every = 6;
        let full = tempfile::tempdir().unwrap();
        run_case_with(&cfg, &RunOptions { out: Some(full.path().into()), ..Default::default() }).unwrap();

        let part = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: Some(part.path().into()), stop_after: Some(9), ..Default::default() };
        let r = run_case_with(&cfg, &opts).unwrap();
        assert_eq!(r.summary.stats.steps, 9);
        let ck = part.path().join("checkpoint_00000006.json");
        let opts = RunOptions { out: Some(part.path().into()), restart: Some(ck), stop_after: None };
        let r = run_case_with(&cfg, &opts).unwrap();
        assert_eq!(r.forces.len(), 45);
        for f in ["forces.csv", "bodies.csv", "momentum.csv", "summary.json"] {
            assert_eq!(fs::read(full.path().join(f)).unwrap(), fs::read(part.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn restart_rejects_other_config() {
        let mut cfg = tiny();
        cfg.run.checkpoint_every = 5;
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: Some(dir.path().into()), stop_after: Some(5), ..Default::default() };
        run_case_with(&cfg, &opts).unwrap();
        cfg.fluid.mu *= 2.0;
        let opts = RunOptions {
            out: Some(dir.path().into()),
            restart: Some(dir.path().join("checkpoint_00000005.json")),
            stop_after: None,
        };
        assert!(matches!(run_case_with(&cfg, &opts), Err(Error::Config(_))));
    }

    #[test]
    fn errors_carry_step_context() {
        let mut cfg = tiny();
        // In a walled box the followed control volume eventually reaches
        // the left wall.
        cfg.boundary = BoundarySpec::walls();
        cfg.run.duration = 2.0;
        cfg.run.field_stride = 0;
        let err = run_case(&cfg).unwrap_err();
        assert!(err.to_string().contains("at step"), "{err}");
    }
}
