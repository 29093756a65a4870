//! Closed-form Volkov/Bessel-series populations of the `|l,o⟩` states.
//!
//! Three channels are provided:
//!
//! * ponderomotive (`A²` only): `P_n = J_n(β)²` on the `(n, -n)` diagonal,
//!   with `β = cos 2φ · e²E0² x / (2 k_el ħ² ω²)`;
//! * absorptive (`A·k` only):
//!   `P_{l,o} = |Σ_m Σ_n i^{-(m+n)} J_{n-l}(α_s) J_{m-o}(α_s) J_n(α_c) J_m(α_c)|²`;
//! * combined:
//!   `P_{l,o} = |Σ_p Σ_n Σ_m i^{p-(l+n+o+m)} J_p(β) J_n(α_c) J_m(α_c) J_{n+p-l}(α_s) J_{m-o-p}(α_s)|²`.
//!
//! The `n` and `m` sums separate: with
//! `S_j = Σ_n i^{-n} J_n(α_c) J_{n-j}(α_s)` the absorptive amplitude is
//! `S_l S_o` and the combined one is `i^{-(l+o)} Σ_p i^p J_p(β) S_{l-p} S_{o+p}`.
//! Both are evaluated in that form, with every index range truncated from the
//! Bessel tail bound so that the amplitude error stays below the requested
//! tolerance.
//!
//! The textbook normal-incidence coupling `κ = e²E0²/(8 m0 ħ ω²)` uses a
//! different amplitude convention from the Bessel argument used here
//! (`e²E0²/(2 m0 ħ ω²)` per unit time); this module follows the latter
//! throughout.

pub mod bessel;
pub mod kahan;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Angle, BeamConfig, ElectronConfig, InteractionWindow, E_CHARGE, HBAR, M_ELECTRON};
use crate::par::{self, Exec};

use bessel::{tail_bound, truncation_for, BesselTable};
use kahan::{i_pow, sum_real, CompensatedSum};

/// Default index cap for all internal sums.
pub const DEFAULT_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub alpha_c: f64,
    pub alpha_s: f64,
    /// Bessel argument of the ponderomotive channel.
    pub beta: f64,
    /// Coefficient `g` of the non-diffracting phase `exp(-i g x)` (rad/m).
    pub global_phase_rate: f64,
}

impl CouplingParams {
    pub const ZERO: CouplingParams =
        CouplingParams { alpha_c: 0.0, alpha_s: 0.0, beta: 0.0, global_phase_rate: 0.0 };

    pub fn new(alpha_c: f64, alpha_s: f64, beta: f64) -> Self {
        Self { alpha_c, alpha_s, beta, global_phase_rate: 0.0 }
    }
}

/// `cos 2φ`, exactly zero at 45° and exactly ±1 at 0° and 90°.
pub fn cos_2phi(phi: Angle) -> f64 {
    let two = 2.0 * phi.degrees();
    if two.fract() == 0.0 {
        match (two as i64).rem_euclid(360) {
            90 | 270 => return 0.0,
            0 => return 1.0,
            180 => return -1.0,
            _ => {}
        }
    }
    (2.0 * phi.radians()).cos()
}

/// Normal-incidence Kapitza-Dirac Bessel argument
/// `e²E0² x / (2 k_el ħ² ω²)` after a propagation length `x`.
pub fn normal_kd_argument(beam: &BeamConfig, electron: &ElectronConfig, x: f64) -> Result<f64> {
    electron.validate()?;
    let omega = beam.omega();
    let num = E_CHARGE.powi(2) * beam.e0.powi(2);
    Ok(num / (2.0 * electron.k_el() * HBAR.powi(2) * omega.powi(2)) * x)
}

/// Inclined-beam ponderomotive Bessel argument `β = cos 2φ × normal_kd_argument`.
pub fn ponderomotive_argument(beam: &BeamConfig, electron: &ElectronConfig, x: f64) -> Result<f64> {
    Ok(cos_2phi(beam.phi) * normal_kd_argument(beam, electron, x)?)
}

/// Coupling strengths for an interaction window `δt` and propagation length `x`.
pub fn coupling_params(
    beam: &BeamConfig,
    electron: &ElectronConfig,
    window: &InteractionWindow,
    x: f64,
) -> Result<CouplingParams> {
    beam.validate()?;
    electron.validate()?;
    let omega = beam.omega();
    let k_el = electron.k_el();
    let strength = E_CHARGE * k_el * beam.e0 / (omega.powi(2) * M_ELECTRON) * beam.phi.radians().sin();
    // reduce to one period so whole periods give exact zeros
    let frac = window.periods.fract();
    let alpha_c = strength * 2.0 * (PI * frac).sin().powi(2);
    let alpha_s = strength * (2.0 * PI * frac).sin();
    let beta = ponderomotive_argument(beam, electron, x)?;
    let cos_phi = beam.phi.radians().cos();
    let global_phase_rate =
        E_CHARGE.powi(2) * beam.e0.powi(2) / (2.0 * HBAR.powi(2) * omega.powi(2) * k_el) * cos_phi.powi(2);
    Ok(CouplingParams { alpha_c, alpha_s, beta, global_phase_rate })
}

/// `J_n(β)²` for the inclined-beam ponderomotive channel.
pub fn p_ponderomotive(n: i64, beam: &BeamConfig, electron: &ElectronConfig, x: f64) -> Result<f64> {
    let beta = ponderomotive_argument(beam, electron, x)?;
    Ok(bessel::bessel_j(n, beta).powi(2))
}

/// Electron momentum state after exchanging `l` quanta with beam 1 and `o`
/// quanta with beam 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OrderState {
    pub l: i64,
    pub o: i64,
}

impl OrderState {
    pub const fn new(l: i64, o: i64) -> Self {
        Self { l, o }
    }

    /// Final wave vector `k_el x̂ + l k1 + o k2` (1/m).
    pub fn final_wavevector(&self, beam: &BeamConfig, electron: &ElectronConfig) -> [f64; 2] {
        let (k1, k2) = beam.wave_vectors();
        let (l, o) = (self.l as f64, self.o as f64);
        [electron.k_el() + l * k1[0] + o * k2[0], l * k1[1] + o * k2[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Ponderomotive,
    Absorptive,
    Combined,
}

/// Truncated evaluation of the series amplitudes for fixed couplings.
#[derive(Debug, Clone)]
pub struct SeriesEngine {
    /// `S_j` for `j` in `-j_range..=j_range`.
    s: Vec<Complex64>,
    j_range: i64,
    beta: BesselTable,
    p_max: i64,
    n_trunc: usize,
    bound: f64,
}

impl SeriesEngine {
    /// Prepares amplitudes for states with `|l|, |o| ≤ max_state` so that each
    /// amplitude is accurate to `tol`.
    pub fn new(channel: Channel, cp: &CouplingParams, tol: f64, cap: usize, max_state: usize) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::precondition(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        let fail = |x: f64| Error::Truncation { tol, cap, bound: tail_bound(x, cap) };
        let combined = channel == Channel::Combined;
        let beta = if combined { cp.beta } else { 0.0 };
        let p_max = if combined {
            truncation_for(beta, 0.5 * tol, cap).ok_or_else(|| fail(beta))?
        } else {
            0
        };
        let beta_tab = BesselTable::new(beta, p_max);
        let abs_jp = sum_real((-(p_max as i64)..=p_max as i64).map(|p| beta_tab.get(p).abs()));
        // |ΔA| ≤ tail(β) + (2ε + ε²) Σ|J_p(β)|, with ε the error on each S_j
        let eps_target = if combined { 0.5 * tol / (2.1 * abs_jp) } else { tol / 2.1 };
        let (n_trunc, eps) = if cp.alpha_c == 0.0 {
            (0, 0.0)
        } else {
            let n = truncation_for(cp.alpha_c, eps_target, cap).ok_or_else(|| fail(cp.alpha_c))?;
            (n, tail_bound(cp.alpha_c, n))
        };
        let j_range = (max_state + p_max) as i64;
        let jc = BesselTable::new(cp.alpha_c, n_trunc);
        let js = BesselTable::new(cp.alpha_s, n_trunc + j_range as usize);
        let n = n_trunc as i64;
        let s = (-j_range..=j_range)
            .map(|j| {
                let mut acc = CompensatedSum::default();
                for k in -n..=n {
                    let a = jc.get(k) * js.get(k - j);
                    if a != 0.0 {
                        acc.push(i_pow(-k) * a);
                    }
                }
                acc.value()
            })
            .collect();
        let bound = if combined {
            tail_bound(beta, p_max) + (2.0 * eps + eps * eps) * abs_jp
        } else {
            2.0 * eps + eps * eps
        };
        Ok(Self { s, j_range, beta: beta_tab, p_max: p_max as i64, n_trunc, bound })
    }

    fn s(&self, j: i64) -> Complex64 {
        if j.abs() > self.j_range {
            Complex64::new(0.0, 0.0)
        } else {
            self.s[(j + self.j_range) as usize]
        }
    }

    /// Largest index used in any internal sum.
    pub fn truncation(&self) -> usize {
        self.n_trunc.max(self.p_max as usize)
    }

    /// Upper bound on the amplitude truncation error.
    pub fn error_bound(&self) -> f64 {
        self.bound
    }

    /// Absorptive amplitude `S_l S_o`.
    pub fn absorptive_amplitude(&self, st: OrderState) -> Complex64 {
        self.s(st.l) * self.s(st.o)
    }

    /// Combined amplitude `i^{-(l+o)} Σ_p i^p J_p(β) S_{l-p} S_{o+p}`.
    pub fn combined_amplitude(&self, st: OrderState) -> Complex64 {
        let mut acc = CompensatedSum::default();
        for p in -self.p_max..=self.p_max {
            let jp = self.beta.get(p);
            if jp != 0.0 {
                acc.push(i_pow(p) * jp * self.s(st.l - p) * self.s(st.o + p));
            }
        }
        i_pow(-(st.l + st.o)) * acc.value()
    }
}

/// Absorptive population `P_{l,o}` with amplitude error below `tol`.
pub fn p_absorptive(state: OrderState, cp: &CouplingParams, tol: f64) -> Result<f64> {
    let max = state.l.unsigned_abs().max(state.o.unsigned_abs()) as usize;
    let eng = SeriesEngine::new(Channel::Absorptive, cp, tol, DEFAULT_CAP, max)?;
    Ok(eng.absorptive_amplitude(state).norm_sqr())
}

/// Combined ponderomotive + absorptive population `P_{l,o}`.
pub fn p_combined(state: OrderState, cp: &CouplingParams, tol: f64) -> Result<f64> {
    let max = state.l.unsigned_abs().max(state.o.unsigned_abs()) as usize;
    let eng = SeriesEngine::new(Channel::Combined, cp, tol, DEFAULT_CAP, max)?;
    Ok(eng.combined_amplitude(state).norm_sqr())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTable {
    #[serde(serialize_with = "ser_entries")]
    pub entries: BTreeMap<OrderState, f64>,
    /// Largest |index| used in the internal sums (series truncation).
    pub truncation: usize,
    /// `1 - Σ entries`.
    pub residual: f64,
}

fn ser_entries<S: serde::Serializer>(m: &BTreeMap<OrderState, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for (k, v) in m {
        seq.serialize_element(&(k.l, k.o, v))?;
    }
    seq.end()
}

impl PopulationTable {
    pub fn get(&self, l: i64, o: i64) -> f64 {
        self.entries.get(&OrderState::new(l, o)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        sum_real(self.entries.values().copied())
    }

    /// CSV with columns `l,o,probability,truncation,residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,o,probability,truncation,residual\n");
        for (k, p) in &self.entries {
            s.push_str(&format!("{},{},{:e},{},{:e}\n", k.l, k.o, p, self.truncation, self.residual));
        }
        s
    }
}

/// Amplitudes of every `|l,o⟩` state with `|l|, |o| ≤ l_max`, enlarged until
/// the unassigned probability drops below `tol`.
fn amplitude_table(
    channel: Channel,
    cp: &CouplingParams,
    tol: f64,
    exec: Exec,
    min_l: usize,
) -> Result<(BTreeMap<OrderState, Complex64>, usize, f64)> {
    // amplitudes are computed to a much tighter tolerance than the residual
    // target so that their rounding does not dominate it
    let amp_tol = (tol * 1e-3).max(1e-15);
    let rho = cp.alpha_c.hypot(cp.alpha_s);
    let reach = match channel {
        Channel::Ponderomotive => cp.beta.abs(),
        Channel::Absorptive => rho,
        Channel::Combined => rho + cp.beta.abs(),
    };
    let mut l_max = (reach.ceil() as usize + 8).max(min_l);
    loop {
        if l_max > DEFAULT_CAP {
            return Err(Error::Truncation { tol, cap: DEFAULT_CAP, bound: f64::NAN });
        }
        let side = 2 * l_max as i64 + 1;
        let states: Vec<OrderState> = match channel {
            Channel::Ponderomotive => (-(l_max as i64)..=l_max as i64).map(|n| OrderState::new(n, -n)).collect(),
            _ => (0..side * side)
                .map(|i| OrderState::new(i / side - l_max as i64, i % side - l_max as i64))
                .collect(),
        };
        let (amps, truncation): (Vec<Complex64>, usize) = match channel {
            Channel::Ponderomotive => {
                let t = BesselTable::new(cp.beta, l_max);
                let a = states.iter().map(|s| i_pow(s.l) * t.get(s.l)).collect();
                (a, l_max)
            }
            Channel::Absorptive | Channel::Combined => {
                let eng = SeriesEngine::new(channel, cp, amp_tol, DEFAULT_CAP, l_max)?;
                let a = par::map_indexed(exec, states.len(), |i| {
                    if channel == Channel::Absorptive {
                        eng.absorptive_amplitude(states[i])
                    } else {
                        eng.combined_amplitude(states[i])
                    }
                });
                (a, eng.truncation().max(l_max))
            }
        };
        let residual = 1.0 - sum_real(amps.iter().map(|a| a.norm_sqr()));
        if residual < tol {
            let map = states.into_iter().zip(amps).collect();
            return Ok((map, truncation, residual));
        }
        l_max *= 2;
    }
}

/// Population table for one channel.
pub fn population_table(channel: Channel, cp: &CouplingParams, tol: f64, exec: Exec) -> Result<PopulationTable> {
    let (amps, truncation, residual) = amplitude_table(channel, cp, tol, exec, 4)?;
    let entries = amps
        .into_iter()
        .map(|(k, a)| (k, a.norm_sqr()))
        .filter(|&(_, p)| p > 1e-30)
        .collect();
    Ok(PopulationTable { entries, truncation, residual })
}

/// Combined-channel electron wavefunction for a plane-wave electron, with the
/// couplings held fixed over the evaluation region.
#[derive(Debug, Clone)]
pub struct AnalyticWavefunction {
    amplitudes: Vec<(OrderState, Complex64)>,
    k1: [f64; 2],
    k2: [f64; 2],
    k_el: f64,
    omega_el: f64,
    global_phase_rate: f64,
}

impl AnalyticWavefunction {
    pub fn new(cp: &CouplingParams, beam: &BeamConfig, electron: &ElectronConfig, tol: f64) -> Result<Self> {
        electron.validate()?;
        if !electron.plane_wave {
            return Err(Error::precondition("the analytic wavefunction is defined for plane-wave electrons"));
        }
        // the lattice sum needs every amplitude above `tol`, not just the
        // probability mass, so the index range comes from the tail bound
        let reach = cp.alpha_c.hypot(cp.alpha_s) + cp.beta.abs();
        let min_l = truncation_for(reach, tol, DEFAULT_CAP)
            .ok_or(Error::Truncation { tol, cap: DEFAULT_CAP, bound: tail_bound(reach, DEFAULT_CAP) })?;
        let (amps, _, _) = amplitude_table(Channel::Combined, cp, tol, Exec::Sequential, min_l)?;
        let (k1, k2) = beam.wave_vectors();
        Ok(Self {
            amplitudes: amps.into_iter().filter(|(_, a)| a.norm_sqr() > 0.0).collect(),
            k1,
            k2,
            k_el: electron.k_el(),
            omega_el: electron.omega_kin(),
            global_phase_rate: cp.global_phase_rate,
        })
    }

    /// `(2π)^{-3/2} exp(-iΩt) exp(i(k_el - g)x)`.
    pub fn prefactor(&self, x: f64, t: f64) -> Complex64 {
        let phase = (self.k_el - self.global_phase_rate) * x - self.omega_el * t;
        Complex64::from_polar((2.0 * PI).powf(-1.5), phase)
    }

    /// Lattice sum `Σ A_{l,o} exp(i(l k1 + o k2)·r)` without the prefactor.
    pub fn lattice_sum(&self, x: f64, y: f64) -> Complex64 {
        let mut acc = CompensatedSum::default();
        for (st, a) in &self.amplitudes {
            let (l, o) = (st.l as f64, st.o as f64);
            let ph = (l * self.k1[0] + o * self.k2[0]) * x + (l * self.k1[1] + o * self.k2[1]) * y;
            acc.push(a * Complex64::from_polar(1.0, ph));
        }
        acc.value()
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> Complex64 {
        self.prefactor(x, t) * self.lattice_sum(x, y)
    }
}

/// Evaluates the truncated combined series at `r = (x, y)` and time `t`.
pub fn wavefunction_analytic(
    r: [f64; 2],
    t: f64,
    cp: &CouplingParams,
    beam: &BeamConfig,
    electron: &ElectronConfig,
    tol: f64,
) -> Result<Complex64> {
    Ok(AnalyticWavefunction::new(cp, beam, electron, tol)?.eval(r[0], r[1], t))
}

/// Vector-potential amplitude `2 m0 v_el / e` at which the ponderomotive and
/// absorptive interaction strengths coincide.
pub fn interference_criterion(electron: &ElectronConfig) -> f64 {
    2.0 * M_ELECTRON * electron.v_el() / E_CHARGE
}

#[cfg(test)]
mod tests;
