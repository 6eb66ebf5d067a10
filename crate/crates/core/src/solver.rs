//! Time integration with unit viscosity on the periodic box.
//!
//! * plane: vorticity form `∂ₜω + v·∇ω = Δω`, `v = biot_savart(ω)`
//! * exterior: velocity form with Brinkman penalization of the disk
//!   `|x| < obstacle_radius`, `u ← u/(1 + χ·dt/η)` after each step, then
//!   re-projection
//! * stokes_*: the same without advection
//!
//! Diffusion is integrated exactly per mode and advection with Williamson's
//! low-storage RK3 in the integrating-factor frame.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField2};
use crate::lorentz::{spacetime_norm_from_powers, lp_norm, Sampled};
use crate::snapshot::Snapshot;
use crate::spectral::{Spec, Spectral};

const RK_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
const RK_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
const RK_C: [f64; 3] = [0.0, 1.0 / 3.0, 3.0 / 4.0];

/// Largest admissible `dt·max|v|/dx`.
pub const CFL_NUMBER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Plane,
    Exterior,
    StokesPlane,
    StokesExterior,
}

impl Mode {
    pub fn has_obstacle(self) -> bool {
        matches!(self, Mode::Exterior | Mode::StokesExterior)
    }

    pub fn has_advection(self) -> bool {
        matches!(self, Mode::Plane | Mode::Exterior)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimConfigSpec", into = "SimConfigSpec")]
pub struct SimConfig {
    pub grid: Grid,
    pub dt: f64,
    /// Length of the integration interval, measured from the initial time.
    pub t_end: f64,
    pub snapshot_every: u64,
    pub mode: Mode,
    pub penalization_eta: f64,
    pub obstacle_radius: f64,
    /// Substep when the CFL bound is violated instead of failing.
    pub adaptive_dt: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfigSpec {
    grid: Grid,
    dt: f64,
    t_end: f64,
    #[serde(default = "default_snapshot_every")]
    snapshot_every: u64,
    mode: Mode,
    #[serde(default)]
    penalization_eta: Option<f64>,
    #[serde(default)]
    obstacle_radius: Option<f64>,
    #[serde(default = "default_adaptive")]
    adaptive_dt: bool,
}

fn default_snapshot_every() -> u64 {
    10
}

fn default_adaptive() -> bool {
    true
}

impl TryFrom<SimConfigSpec> for SimConfig {
    type Error = Error;

    fn try_from(s: SimConfigSpec) -> Result<Self> {
        SimConfig {
            grid: s.grid,
            dt: s.dt,
            t_end: s.t_end,
            snapshot_every: s.snapshot_every,
            mode: s.mode,
            penalization_eta: s.penalization_eta.unwrap_or(s.dt / 10.0),
            obstacle_radius: s.obstacle_radius.unwrap_or(s.grid.obstacle_radius()),
            adaptive_dt: s.adaptive_dt,
        }
        .validated()
    }
}

impl From<SimConfig> for SimConfigSpec {
    fn from(c: SimConfig) -> Self {
        SimConfigSpec {
            grid: c.grid,
            dt: c.dt,
            t_end: c.t_end,
            snapshot_every: c.snapshot_every,
            mode: c.mode,
            penalization_eta: Some(c.penalization_eta),
            obstacle_radius: Some(c.obstacle_radius),
            adaptive_dt: c.adaptive_dt,
        }
    }
}

impl SimConfig {
    /// Defaults: `η = dt/10`, obstacle `R/4`, snapshots every 10 steps,
    /// adaptive stepping on.
    pub fn new(grid: Grid, mode: Mode, dt: f64, t_end: f64) -> Result<Self> {
        SimConfig {
            grid,
            dt,
            t_end,
            snapshot_every: default_snapshot_every(),
            mode,
            penalization_eta: dt / 10.0,
            obstacle_radius: grid.obstacle_radius(),
            adaptive_dt: true,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |field: &str, why: String| Err(Error::config(field, why));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", format!("must be nonnegative, got {}", self.t_end));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every", "must be at least 1".into());
        }
        if !(self.obstacle_radius >= 0.0 && self.obstacle_radius < self.grid.ball_radius() / 2.0) {
            return bad(
                "obstacle_radius",
                format!(
                    "must lie in [0, R/2) = [0, {}), got {}",
                    self.grid.ball_radius() / 2.0,
                    self.obstacle_radius
                ),
            );
        }
        if !(self.penalization_eta > 0.0 && self.penalization_eta <= self.dt) {
            return bad(
                "penalization_eta",
                format!("must lie in (0, dt], got {}", self.penalization_eta),
            );
        }
        Ok(self)
    }

    pub fn with_snapshot_every(mut self, every: u64) -> Result<Self> {
        self.snapshot_every = every;
        self.validated()
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_obstacle_radius(mut self, r: f64) -> Result<Self> {
        self.obstacle_radius = r;
        self.validated()
    }

    pub fn with_adaptive_dt(mut self, on: bool) -> Self {
        self.adaptive_dt = on;
        self
    }

    /// Number of steps, the last one shortened if `t_end` is not a multiple of `dt`.
    pub fn step_count(&self) -> u64 {
        let raw = self.t_end / self.dt;
        let whole = raw.round();
        if (raw - whole).abs() < 1e-9 * raw.max(1.0) {
            whole as u64
        } else {
            raw.ceil() as u64
        }
    }

    /// `(step, target time, record snapshot)` for every step from `t0`.
    pub fn schedule(&self, t0: f64) -> impl Iterator<Item = (u64, f64, bool)> + '_ {
        let steps = self.step_count();
        (1..=steps).map(move |k| {
            let target = (t0 + k as f64 * self.dt).min(t0 + self.t_end);
            (k, target, k % self.snapshot_every == 0 || k == steps)
        })
    }

    /// `10√η·‖u‖∞`, the admissible velocity inside the obstacle.
    pub fn leak_tolerance(&self, max_u: f64) -> f64 {
        10.0 * self.penalization_eta.sqrt() * max_u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowField {
    Vorticity(ScalarField),
    Velocity(VectorField2),
}

impl FlowField {
    pub fn grid(&self) -> &Grid {
        match self {
            FlowField::Vorticity(w) => w.grid(),
            FlowField::Velocity(v) => v.grid(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FlowField::Vorticity(w) => w.is_finite(),
            FlowField::Velocity(v) => v.is_finite(),
        }
    }

    pub fn components(&self) -> Vec<&ScalarField> {
        match self {
            FlowField::Vorticity(w) => vec![w],
            FlowField::Velocity(v) => vec![&v.u1, &v.u2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub field: FlowField,
    pub step_count: u64,
}

impl SimState {
    pub fn vorticity(time: f64, omega: ScalarField) -> Self {
        SimState {
            time,
            field: FlowField::Vorticity(omega),
            step_count: 0,
        }
    }

    pub fn velocity(time: f64, v: VectorField2) -> Self {
        SimState {
            time,
            field: FlowField::Velocity(v),
            step_count: 0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn velocity_field(&self, sp: &Spectral) -> VectorField2 {
        match &self.field {
            FlowField::Vorticity(w) => sp.biot_savart(w),
            FlowField::Velocity(v) => v.clone(),
        }
    }

    pub fn vorticity_field(&self, sp: &Spectral) -> ScalarField {
        match &self.field {
            FlowField::Vorticity(w) => w.clone(),
            FlowField::Velocity(v) => sp.curl(v),
        }
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot::from_fields(self.time, &self.field.components())
            .expect("state components share one grid")
    }

    /// One component is read as vorticity, two as velocity.
    pub fn from_snapshot(s: &Snapshot, grid: Grid) -> Result<Self> {
        let mut fields = s.fields(grid)?;
        let field = match fields.len() {
            1 => FlowField::Vorticity(fields.remove(0)),
            2 => {
                let u2 = fields.remove(1);
                let u1 = fields.remove(0);
                FlowField::Velocity(VectorField2::new(u1, u2)?)
            }
            k => {
                return Err(Error::Format {
                    offset: 24,
                    reason: format!("expected 1 or 2 components, found {k}"),
                })
            }
        };
        Ok(SimState {
            time: s.time,
            field,
            step_count: 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub snapshots: Vec<SimState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn velocities(&self, sp: &Spectral) -> Vec<(f64, VectorField2)> {
        self.snapshots
            .iter()
            .map(|s| (s.time, s.velocity_field(sp)))
            .collect()
    }

    pub fn last(&self) -> &SimState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// `(∫ ‖v(t)‖₄⁴ dt)^{1/4}` over the snapshots with `t ≤ t_max`.
    pub fn spacetime_l4_norm(&self, sp: &Spectral, t_max: f64) -> Result<f64> {
        let samples: Vec<(f64, f64)> = self
            .snapshots
            .iter()
            .filter(|s| s.time <= t_max * (1.0 + 1e-12))
            .map(|s| lp_norm(&s.velocity_field(sp), 4.0).map(|n| (s.time, n.powi(4))))
            .collect::<Result<_>>()?;
        Ok(spacetime_norm_from_powers(&samples)?.powf(0.25))
    }
}

/// One diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub step: u64,
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub max_u: f64,
    pub obstacle_leak: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "step,t,energy,enstrophy,max_u,obstacle_leak";

impl Diagnostics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e}",
            self.step, self.t, self.energy, self.enstrophy, self.max_u, self.obstacle_leak
        )
    }
}

/// Owns the transforms and per-mode tables for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SimConfig,
    sp: Spectral,
    /// `|k|²` per slot.
    k2: Vec<f64>,
    /// Obstacle indicator.
    chi: Vec<bool>,
}

impl Solver {
    pub fn new(config: SimConfig) -> Result<Self> {
        let config = config.validated()?;
        let grid = config.grid;
        let sp = Spectral::new(grid);
        let n = grid.n_points();
        let k: Vec<f64> = (0..n).map(|m| grid.wavenumber(m)).collect();
        let k2 = (0..grid.len())
            .map(|idx| k[idx / n].powi(2) + k[idx % n].powi(2))
            .collect();
        let chi = (0..grid.len())
            .map(|idx| config.mode.has_obstacle() && grid.in_ball(idx, config.obstacle_radius))
            .collect();
        Ok(Solver { config, sp, k2, chi })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    fn factors(&self, s: f64) -> Vec<f64> {
        self.k2.par_iter().map(|k2| (-k2 * s).exp()).collect()
    }

    /// Low-storage RK3 for `q' = e^{|k|²τ}N(e^{-|k|²τ}q)` over one step.
    fn integrate<const M: usize>(&self, q0: [Spec; M], dt: f64, rhs: impl Fn(&[Spec; M]) -> [Spec; M]) -> [Spec; M] {
        let mut q = q0;
        let mut dq: [Spec; M] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); self.k2.len()]);
        for s in 0..3 {
            let e = self.factors(RK_C[s] * dt);
            let staged: [Spec; M] = std::array::from_fn(|c| q[c].iter().zip(&e).map(|(z, f)| z * f).collect());
            let nl = rhs(&staged);
            for c in 0..M {
                dq[c]
                    .par_iter_mut()
                    .zip(nl[c].par_iter())
                    .zip(e.par_iter())
                    .for_each(|((d, r), f)| *d = RK_A[s] * *d + dt * r / f);
                q[c].par_iter_mut()
                    .zip(dq[c].par_iter())
                    .for_each(|(z, d)| *z += RK_B[s] * d);
            }
        }
        let e = self.factors(dt);
        for c in q.iter_mut() {
            c.par_iter_mut().zip(e.par_iter()).for_each(|(z, f)| *z *= f);
        }
        q
    }

    fn heat(&self, hat: &mut Spec, dt: f64) {
        let e = self.factors(dt);
        hat.par_iter_mut().zip(e.par_iter()).for_each(|(z, f)| *z *= f);
    }

    fn check_finite(&self, field: &FlowField, step: u64, time: f64) -> Result<()> {
        if field.is_finite() {
            Ok(())
        } else {
            Err(Error::Diverged {
                step,
                time,
                reason: "non-finite values in the state".into(),
            })
        }
    }

    /// One step of the vorticity equation (advection switched off in Stokes mode).
    pub fn step_plane(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let omega = match &state.field {
            FlowField::Vorticity(w) => w,
            FlowField::Velocity(v) if !self.config.mode.has_advection() => {
                return self.step_velocity(state, v, dt, false);
            }
            FlowField::Velocity(_) => {
                return Err(Error::RejectedInput("plane mode integrates vorticity".into()))
            }
        };
        let sp = &self.sp;
        let mut hat = sp.hat(omega);
        if self.config.mode.has_advection() {
            let [h] = self.integrate([hat], dt, |[w]| {
                let w = sp.dealias_hat(w);
                let (a, b) = sp.biot_savart_hat(&w);
                let (u1, u2) = (sp.ifft(a), sp.ifft(b));
                let adv = sp.scalar_advection_hat(&u1, &u2, &w);
                [adv.into_iter().map(|c| -c).collect()]
            });
            hat = h;
        } else {
            self.heat(&mut hat, dt);
        }
        let next = SimState {
            time: state.time + dt,
            field: FlowField::Vorticity(sp.real(hat)),
            step_count: state.step_count + 1,
        };
        self.check_finite(&next.field, next.step_count, next.time)?;
        Ok(next)
    }

    /// One penalized velocity step.
    pub fn step_exterior(&self, state: &SimState, dt: f64) -> Result<SimState> {
        match &state.field {
            FlowField::Velocity(v) => self.step_velocity(state, v, dt, self.config.mode.has_obstacle()),
            FlowField::Vorticity(_) => Err(Error::RejectedInput("exterior mode integrates velocity".into())),
        }
    }

    fn step_velocity(&self, state: &SimState, v: &VectorField2, dt: f64, penalize: bool) -> Result<SimState> {
        let sp = &self.sp;
        let mut a = sp.hat(&v.u1);
        let mut b = sp.hat(&v.u2);
        if self.config.mode.has_advection() {
            let [na, nb] = self.integrate([a, b], dt, |[a, b]| {
                let (n1, n2) = sp.advection_hat(a, b);
                let (p1, p2) = sp.leray_hat(&n1, &n2);
                [p1.into_iter().map(|c| -c).collect(), p2.into_iter().map(|c| -c).collect()]
            });
            a = na;
            b = nb;
        } else {
            self.heat(&mut a, dt);
            self.heat(&mut b, dt);
            let (pa, pb) = sp.leray_hat(&a, &b);
            a = pa;
            b = pb;
        }
        let mut u1 = sp.ifft(a);
        let mut u2 = sp.ifft(b);
        if penalize {
            self.penalize(&mut u1, &mut u2, dt);
            let (pa, pb) = sp.leray_hat(&sp.fft(&u1), &sp.fft(&u2));
            u1 = sp.ifft(pa);
            u2 = sp.ifft(pb);
        }
        let grid = self.config.grid;
        let next = SimState {
            time: state.time + dt,
            field: FlowField::Velocity(VectorField2 {
                u1: ScalarField::from_values_unchecked(grid, u1),
                u2: ScalarField::from_values_unchecked(grid, u2),
            }),
            step_count: state.step_count + 1,
        };
        self.check_finite(&next.field, next.step_count, next.time)?;
        Ok(next)
    }

    /// Implicit Brinkman update `u ← u/(1 + χ·dt/η)`.
    fn penalize(&self, u1: &mut [f64], u2: &mut [f64], dt: f64) {
        let damp = 1.0 / (1.0 + dt / self.config.penalization_eta);
        for (idx, &inside) in self.chi.iter().enumerate() {
            if inside {
                u1[idx] *= damp;
                u2[idx] *= damp;
            }
        }
    }

    /// `dt·max|v|/dx ≤ 0.5` bound on the step.
    pub fn cfl_limit(&self, state: &SimState) -> f64 {
        if !self.config.mode.has_advection() {
            return f64::INFINITY;
        }
        let max_u = state.velocity_field(&self.sp).max_abs();
        if max_u > 0.0 {
            CFL_NUMBER * self.config.grid.dx() / max_u
        } else {
            f64::INFINITY
        }
    }

    /// A step of length `dt`, split into equal substeps if the CFL bound
    /// requires it and adaptive stepping is on.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let limit = self.cfl_limit(state);
        let substeps = if dt <= limit {
            1
        } else if self.config.adaptive_dt {
            let m = (dt / limit).ceil() as u64;
            log::info!(
                "t = {:.6}: dt = {dt:e} exceeds CFL limit {limit:e}, using {m} substeps",
                state.time
            );
            m
        } else {
            return Err(Error::Cfl {
                step: state.step_count,
                dt,
                limit,
            });
        };
        let h = dt / substeps as f64;
        let mut s = state.clone();
        for _ in 0..substeps {
            s = match (self.config.mode, &s.field) {
                (Mode::Plane, _) | (Mode::StokesPlane, _) => self.step_plane(&s, h)?,
                _ => self.step_exterior(&s, h)?,
            };
        }
        s.step_count = state.step_count + 1;
        s.time = state.time + dt;
        Ok(s)
    }

    /// [`Solver::step`] landing exactly on `target`.
    pub fn advance_to(&self, state: &SimState, target: f64) -> Result<SimState> {
        let mut s = self.step(state, target - state.time)?;
        s.time = target;
        Ok(s)
    }

    pub fn diagnostics(&self, state: &SimState) -> Diagnostics {
        let v = state.velocity_field(&self.sp);
        let w = state.vorticity_field(&self.sp);
        let grid = self.config.grid;
        let leak = (0..grid.len())
            .filter(|&i| self.chi[i])
            .map(|i| v.magnitude_at(i))
            .fold(0.0, f64::max);
        Diagnostics {
            step: state.step_count,
            t: state.time,
            energy: v.energy(),
            enstrophy: w.inner(&w),
            max_u: v.max_abs(),
            obstacle_leak: leak,
        }
    }

    fn check_initial(&self, initial: &FlowField) -> Result<()> {
        self.config.grid.check_same(initial.grid(), "initial data")?;
        match (self.config.mode, initial) {
            (Mode::Plane, FlowField::Velocity(_)) => Err(Error::RejectedInput(
                "plane mode needs vorticity initial data".into(),
            )),
            (Mode::Exterior | Mode::StokesExterior, FlowField::Vorticity(_)) => Err(Error::RejectedInput(
                "exterior modes need velocity initial data".into(),
            )),
            _ if !initial.is_finite() => Err(Error::RejectedInput("initial data is not finite".into())),
            _ => Ok(()),
        }
    }

    /// Integrates from `initial` at time `t0` over `t_end`, recording every
    /// `snapshot_every`-th state and the final one. With an output directory,
    /// snapshots (`snap_<step>.nsf2`) and `diagnostics.csv` are written as the
    /// run proceeds, so a failed run leaves its prefix on disk.
    pub fn run(&self, initial: FlowField, t0: f64, output: Option<&Path>) -> Result<Trajectory> {
        self.check_initial(&initial)?;
        let mut sink = output.map(OutputSink::create).transpose()?;
        let mut state = SimState {
            time: t0,
            field: initial,
            step_count: 0,
        };
        let mut snapshots = Vec::new();
        let mut record = |state: &SimState, sink: &mut Option<OutputSink>| -> Result<()> {
            if let Some(sink) = sink {
                sink.record(state, &self.diagnostics(state))?;
            }
            snapshots.push(state.clone());
            Ok(())
        };
        record(&state, &mut sink)?;
        for (_, target, snap) in self.config.schedule(t0) {
            state = match self.advance_to(&state, target) {
                Ok(s) => s,
                Err(e) => {
                    if let Some(sink) = &mut sink {
                        sink.flush()?;
                    }
                    return Err(e);
                }
            };
            if snap {
                record(&state, &mut sink)?;
            }
        }
        if let Some(sink) = &mut sink {
            sink.flush()?;
        }
        Ok(Trajectory {
            config: self.config,
            snapshots,
        })
    }
}

struct OutputSink {
    dir: PathBuf,
    diag: BufWriter<File>,
    diag_path: PathBuf,
}

impl OutputSink {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let diag_path = dir.join("diagnostics.csv");
        let file = File::create(&diag_path).map_err(|e| Error::io(&diag_path, e))?;
        let mut diag = BufWriter::new(file);
        writeln!(diag, "{DIAGNOSTICS_HEADER}").map_err(|e| Error::io(&diag_path, e))?;
        Ok(OutputSink {
            dir: dir.to_path_buf(),
            diag,
            diag_path,
        })
    }

    fn record(&mut self, state: &SimState, d: &Diagnostics) -> Result<()> {
        writeln!(self.diag, "{}", d.csv_row()).map_err(|e| Error::io(&self.diag_path, e))?;
        let path = self.dir.join(format!("snap_{:06}.nsf2", state.step_count));
        state.to_snapshot().write(&path)
    }

    fn flush(&mut self) -> Result<()> {
        self.diag.flush().map_err(|e| Error::io(&self.diag_path, e))
    }
}

/// Runs `config` from `initial` starting at `t0`.
pub fn run(config: SimConfig, initial: FlowField, t0: f64, output: Option<&Path>) -> Result<Trajectory> {
    Solver::new(config)?.run(initial, t0, output)
}

/// Linear evolution `e^{-tA}v₀` in the configured plane or exterior mode.
pub fn stokes_evolve(v0: &VectorField2, config: SimConfig, t0: f64) -> Result<Trajectory> {
    let mode = match config.mode {
        Mode::Plane | Mode::StokesPlane => Mode::StokesPlane,
        Mode::Exterior | Mode::StokesExterior => Mode::StokesExterior,
    };
    let solver = Solver::new(config.with_mode(mode))?;
    let div = solver.spectral().divergence(v0).max_abs();
    if div > 1e-8 * v0.max_abs() / config.grid.dx() {
        return Err(Error::Precondition(format!(
            "Stokes evolution needs divergence-free data, max|div| = {div:e}"
        )));
    }
    solver.run(FlowField::Velocity(v0.clone()), t0, None)
}
