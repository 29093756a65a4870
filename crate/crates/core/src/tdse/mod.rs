//! Two-dimensional time-dependent Schrödinger solver.
//!
//! The wavefunction is propagated in a frame moving with velocity `u` along
//! `x` (by default the electron velocity), which removes the fast carrier
//! `exp(i k_el x)` from the grid; see [`hamiltonian`] for the transformed
//! Hamiltonian. Each step applies `exp(-i H(t + dt/2) dt/ħ)` with a Lanczos
//! approximation built from the pseudospectral Hamiltonian.

pub mod fft;
pub mod grid;
pub mod hamiltonian;
pub mod krylov;
pub mod snapshot;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeamConfig, ElectronConfig, HBAR, M_ELECTRON};
use crate::par::{self, Exec};

pub use fft::Fft2;
pub use grid::Grid2D;
pub use hamiltonian::{Hamiltonian, HamiltonianMode};
pub use krylov::{KrylovStats, Lanczos};

/// Largest allowed relative norm drift over a run before it is aborted.
pub const NORM_ABORT: f64 = 1e-6;

/// Reference frame of the propagation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Moves with the electron carrier velocity.
    #[default]
    CoMoving,
    Lab,
}

impl Frame {
    pub fn velocity(self, electron: &ElectronConfig) -> f64 {
        match self {
            Frame::CoMoving => electron.v_el(),
            Frame::Lab => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbsorbingMask {
    #[default]
    Off,
    /// `cos^{1/8}` ramp over `width_m` at every edge.
    CosineRamp {
        #[serde(rename = "width_m")]
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    #[serde(rename = "dt_s")]
    pub dt: f64,
    #[serde(default = "default_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_tol")]
    pub krylov_tol: f64,
    #[serde(default)]
    pub absorbing_mask: AbsorbingMask,
    #[serde(default)]
    pub mode: HamiltonianMode,
    #[serde(default)]
    pub frame: Frame,
    /// Number of photon orders the grid must resolve along each axis.
    #[serde(default = "default_orders")]
    pub nyquist_orders: usize,
}

fn default_dim() -> usize {
    16
}

fn default_tol() -> f64 {
    1e-12
}

fn default_orders() -> usize {
    2
}

impl PropagatorConfig {
    /// `steps_per_cycle` steps per optical period, other settings default.
    pub fn for_beam(beam: &BeamConfig, steps_per_cycle: usize) -> Self {
        Self {
            dt: beam.period() / steps_per_cycle as f64,
            krylov_dim: default_dim(),
            krylov_tol: default_tol(),
            absorbing_mask: AbsorbingMask::Off,
            mode: HamiltonianMode::Full,
            frame: Frame::CoMoving,
            nyquist_orders: default_orders(),
        }
    }

    pub fn validate(&self, beam: &BeamConfig) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be > 0, got {}", self.dt)));
        }
        let limit = 2.0 * PI / 40.0;
        if beam.omega() * self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "omega dt = {} exceeds 2 pi / 40; use at least 40 steps per optical cycle",
                beam.omega() * self.dt
            )));
        }
        if !(4..=64).contains(&self.krylov_dim) {
            return Err(Error::config(format!("krylov_dim = {} must lie in [4, 64]", self.krylov_dim)));
        }
        if !(self.krylov_tol > 0.0 && self.krylov_tol < 1.0) {
            return Err(Error::config("krylov_tol must lie in (0, 1)"));
        }
        if let AbsorbingMask::CosineRamp { width } = self.absorbing_mask {
            if !(width > 0.0) {
                return Err(Error::config("absorbing mask width must be > 0"));
            }
        }
        Ok(())
    }
}

/// Complex amplitudes on a grid, in the frame moving with `frame_velocity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction2D {
    pub grid: Grid2D,
    /// x-major amplitudes (1/m).
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
    /// Velocity of the frame the amplitudes are expressed in (m/s).
    pub frame_velocity: f64,
    /// Probability removed by the absorbing mask so far.
    pub absorbed: f64,
}

impl Wavefunction2D {
    pub fn norm(&self) -> f64 {
        par::norm_sqr(Exec::Parallel, &self.amplitudes) * self.grid.cell_area()
    }

    /// `m u / ħ`, the momentum offset between frame and lab.
    pub fn frame_wavenumber(&self) -> f64 {
        M_ELECTRON * self.frame_velocity / HBAR
    }

    /// Lab-frame `x` of grid column `i`.
    pub fn lab_x(&self, i: usize) -> f64 {
        self.grid.x(i) + self.frame_velocity * self.time
    }

    /// Lab-frame phase factor `exp(i(q x - q u t / 2))` at lab position `x`.
    pub fn boost_phase(&self, x_lab: f64) -> Complex64 {
        let q = self.frame_wavenumber();
        Complex64::from_polar(1.0, q * x_lab - 0.5 * q * self.frame_velocity * self.time)
    }

    /// Probability-weighted lab-frame centroid `(⟨x⟩, ⟨y⟩)`.
    pub fn centroid(&self) -> [f64; 2] {
        let g = self.grid;
        let w = g.cell_area() / self.norm();
        let mut c = [0.0; 2];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr() * w;
            c[0] += p * self.lab_x(idx / g.ny);
            c[1] += p * g.y(idx % g.ny);
        }
        c
    }
}

/// Normalized Gaussian packet in the lab frame.
pub fn init_gaussian(electron: &ElectronConfig, grid: &Grid2D) -> Result<Wavefunction2D> {
    init_gaussian_in_frame(electron, grid, 0.0)
}

/// `ψ ∝ exp(-(x-x0)²/2W_x² - (y-y0)²/2W_y²) exp(i k x)` with the carrier
/// reduced to `k = k_el - m u/ħ` in the frame moving with `u`.
pub fn init_gaussian_in_frame(electron: &ElectronConfig, grid: &Grid2D, frame_u: f64) -> Result<Wavefunction2D> {
    electron.validate()?;
    grid.validate()?;
    if electron.plane_wave {
        return Err(Error::precondition("the TDSE needs a finite wavepacket (plane_wave = false)"));
    }
    if electron.w_x < 4.0 * grid.dx || electron.w_y < 4.0 * grid.dy {
        return Err(Error::precondition(format!(
            "packet widths ({:e}, {:e}) m are not resolved; need W_x >= 4 dx = {:e} and W_y >= 4 dy = {:e}",
            electron.w_x,
            electron.w_y,
            4.0 * grid.dx,
            4.0 * grid.dy
        )));
    }
    let k_res = electron.k_el() - M_ELECTRON * frame_u / HBAR;
    if 2.0 * k_res.abs() > grid.nyquist()[0] {
        return Err(Error::precondition(format!(
            "carrier wavenumber {k_res:e} 1/m in this frame exceeds half the Nyquist momentum {:e} 1/m",
            grid.nyquist()[0]
        )));
    }
    let mut amps: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let x = grid.x(idx / grid.ny) - electron.x0;
            let y = grid.y(idx % grid.ny) - electron.y0;
            let env = (-x * x / (2.0 * electron.w_x.powi(2)) - y * y / (2.0 * electron.w_y.powi(2))).exp();
            Complex64::from_polar(env, k_res * x)
        })
        .collect();
    let norm = (par::norm_sqr(Exec::Sequential, &amps) * grid.cell_area()).sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(Wavefunction2D { grid: *grid, amplitudes: amps, time: 0.0, frame_velocity: frame_u, absorbed: 0.0 })
}

/// Largest |k| the grid is expected to carry along each axis.
fn expected_k_max(beam: &BeamConfig, electron: &ElectronConfig, frame_u: f64, orders: usize) -> [f64; 2] {
    let k_res = (electron.k_el() - M_ELECTRON * frame_u / HBAR).abs();
    let n = orders as f64 * beam.k_ph();
    [k_res + n, n]
}

/// Time stepper holding FFT plans, the Hamiltonian and the Krylov workspace.
#[derive(Debug)]
pub struct Propagator {
    beam: BeamConfig,
    config: PropagatorConfig,
    ham: Hamiltonian,
    lanczos: Lanczos,
    mask: Option<Vec<f64>>,
    frozen: Option<f64>,
    field_time: Option<f64>,
    exec: Exec,
}

impl Propagator {
    pub fn new(grid: Grid2D, beam: &BeamConfig, frame_u: f64, config: &PropagatorConfig, exec: Exec) -> Result<Self> {
        beam.validate()?;
        grid.validate()?;
        config.validate(beam)?;
        let mask = match config.absorbing_mask {
            AbsorbingMask::Off => None,
            AbsorbingMask::CosineRamp { width } => Some(cosine_mask(&grid, width)),
        };
        Ok(Self {
            beam: *beam,
            config: *config,
            ham: Hamiltonian::new(grid, config.mode, frame_u, exec),
            lanczos: Lanczos::default(),
            mask,
            frozen: None,
            field_time: None,
            exec,
        })
    }

    /// Holds the field at time `t` for every subsequent step.
    pub fn freeze_field_at(&mut self, t: f64) {
        self.frozen = Some(t);
    }

    pub fn hamiltonian(&mut self) -> &mut Hamiltonian {
        &mut self.ham
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    /// Advances `psi` by `dt` (or by `dt_override`) with the midpoint field.
    pub fn step_by(&mut self, psi: &mut Wavefunction2D, dt: f64) -> Result<KrylovStats> {
        if psi.frame_velocity != self.ham.frame_velocity() {
            return Err(Error::precondition("wavefunction and propagator use different frames"));
        }
        let t_field = self.frozen.unwrap_or(psi.time + 0.5 * dt);
        if self.field_time != Some(t_field) {
            self.ham.set_field(&self.beam, t_field);
            self.field_time = Some(t_field);
        }
        let ham = &mut self.ham;
        let stats = self.lanczos.expm(
            |x, out| ham.apply(x, out),
            &mut psi.amplitudes,
            dt,
            self.config.krylov_dim,
            self.config.krylov_tol,
            self.exec,
        )?;
        if let Some(mask) = &self.mask {
            let before = psi.norm();
            par::for_each_indexed_mut(self.exec, &mut psi.amplitudes, |i, a| *a *= mask[i]);
            psi.absorbed += before - psi.norm();
        }
        psi.time += dt;
        Ok(stats)
    }

    pub fn step(&mut self, psi: &mut Wavefunction2D) -> Result<KrylovStats> {
        self.step_by(psi, self.config.dt)
    }
}

fn cosine_mask(grid: &Grid2D, width: f64) -> Vec<f64> {
    let axis = |n: usize, d: f64| -> Vec<f64> {
        let len = n as f64 * d;
        (0..n)
            .map(|i| {
                let s = i as f64 * d;
                let edge = s.min(len - s);
                if edge >= width {
                    1.0
                } else {
                    (0.5 * PI * (width - edge) / width).cos().max(0.0).powf(0.125)
                }
            })
            .collect()
    };
    let (mx, my) = (axis(grid.nx, grid.dx), axis(grid.ny, grid.dy));
    (0..grid.len()).map(|idx| mx[idx / grid.ny] * my[idx % grid.ny]).collect()
}

/// One step of `psi` with a freshly built propagator.
pub fn step(psi: &mut Wavefunction2D, beam: &BeamConfig, config: &PropagatorConfig) -> Result<KrylovStats> {
    Propagator::new(psi.grid, beam, psi.frame_velocity, config, Exec::Parallel)?.step(psi)
}

/// Exact field-free evolution over `tau` seconds in momentum space.
pub fn free_flight(psi: &mut Wavefunction2D, tau: f64, exec: Exec) {
    let g = psi.grid;
    let (kx, ky) = (g.kx(), g.ky());
    let mut fft = Fft2::new(g.nx, g.ny, exec);
    fft.forward(&mut psi.amplitudes);
    let c = HBAR * tau / (2.0 * M_ELECTRON);
    par::for_each_indexed_mut(exec, &mut psi.amplitudes, |idx, a| {
        let (p, q) = (kx[idx / g.ny], ky[idx % g.ny]);
        *a *= Complex64::from_polar(1.0, -c * (p * p + q * q));
    });
    fft.inverse(&mut psi.amplitudes);
    psi.time += tau;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(rename = "t_end_s")]
    pub t_end: f64,
    /// Snapshot cadence in steps; 0 keeps only the first and last state.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Field-free drift appended after `t_end` (s).
    #[serde(rename = "free_flight_s", default)]
    pub free_flight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Interaction,
    FreeFlight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub index: usize,
    pub step: usize,
    pub stage: Stage,
    pub psi: Wavefunction2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub dt: f64,
    pub max_krylov_dim: usize,
    pub max_norm_drift: f64,
}

impl RunOutput {
    pub fn last(&self) -> &Wavefunction2D {
        &self.snapshots.last().expect("a run always has snapshots").psi
    }
}

/// Propagates a Gaussian packet from `t = 0` to `schedule.t_end`, recording
/// snapshots, then optionally drifts it freely.
pub fn run(
    electron: &ElectronConfig,
    beam: &BeamConfig,
    grid: &Grid2D,
    config: &PropagatorConfig,
    schedule: &Schedule,
    exec: Exec,
) -> Result<RunOutput> {
    beam.validate()?;
    electron.validate()?;
    config.validate(beam)?;
    if !(schedule.t_end >= 0.0 && schedule.free_flight >= 0.0) {
        return Err(Error::config("t_end and free_flight must be >= 0"));
    }
    let u = config.frame.velocity(electron);
    grid.check_nyquist(expected_k_max(beam, electron, u, config.nyquist_orders))?;
    let mut psi = init_gaussian_in_frame(electron, grid, u)?;
    let mut prop = Propagator::new(*grid, beam, u, config, exec)?;

    let steps = (schedule.t_end / config.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { schedule.t_end / steps as f64 };
    let mut out = RunOutput { snapshots: Vec::new(), steps, dt, max_krylov_dim: 0, max_norm_drift: 0.0 };
    let push = |out: &mut RunOutput, step: usize, stage: Stage, psi: &Wavefunction2D| {
        let index = out.snapshots.len();
        out.snapshots.push(Snapshot { index, step, stage, psi: psi.clone() });
    };
    push(&mut out, 0, Stage::Interaction, &psi);
    for s in 1..=steps {
        let stats = prop.step_by(&mut psi, dt)?;
        out.max_krylov_dim = out.max_krylov_dim.max(stats.dim);
        let drift = (psi.norm() + psi.absorbed - 1.0).abs();
        out.max_norm_drift = out.max_norm_drift.max(drift);
        if drift > NORM_ABORT {
            return Err(Error::NormDrift { drift, limit: NORM_ABORT, time: psi.time });
        }
        if s == steps || (schedule.snapshot_every > 0 && s % schedule.snapshot_every == 0) {
            push(&mut out, s, Stage::Interaction, &psi);
        }
    }
    if schedule.free_flight > 0.0 {
        free_flight(&mut psi, schedule.free_flight, exec);
        push(&mut out, steps, Stage::FreeFlight, &psi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
