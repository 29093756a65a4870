//! Physical constants, validated configuration types and derived kinematics.
//!
//! Everything is SI. Configuration files carry the unit in every key name
//! (`E0_V_per_m`, `lambda_ph_m`, `phi_deg`, ...); angles are written in degrees
//! and held in radians.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// CODATA 2018 values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub e: f64,
    /// Electron rest mass (kg).
    pub m0: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Vacuum speed of light (m/s).
    pub c: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    e: 1.602_176_634e-19,
    m0: 9.109_383_701_5e-31,
    hbar: 1.054_571_817e-34,
    c: 299_792_458.0,
};

pub const E_CHARGE: f64 = CODATA.e;
pub const M_ELECTRON: f64 = CODATA.m0;
pub const HBAR: f64 = CODATA.hbar;
pub const C_LIGHT: f64 = CODATA.c;

/// An angle that remembers the degree value it was written with, so that a
/// config file survives a read/write cycle unchanged.
#[derive(Clone, Copy, PartialEq)]
pub struct Angle {
    radians: f64,
    degrees: f64,
}

impl Angle {
    pub fn from_degrees(degrees: f64) -> Self {
        Self { radians: degrees.to_radians(), degrees }
    }

    pub fn from_radians(radians: f64) -> Self {
        Self { radians, degrees: radians.to_degrees() }
    }

    pub fn radians(self) -> f64 {
        self.radians
    }

    pub fn degrees(self) -> f64 {
        self.degrees
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.degrees)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Angle::from_degrees)
    }
}

/// Spatial profile of each of the two beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    PlaneWave,
    GaussianParaxial {
        #[serde(rename = "waist_m")]
        waist: f64,
        #[serde(rename = "focus_x_m", default)]
        focus_x: f64,
        #[serde(rename = "focus_y_m", default)]
        focus_y: f64,
    },
}

/// Temporal switching of the field, used by the TDSE engine only.
///
/// The field rises with a `sin²` ramp over `ramp_cycles` optical periods, stays
/// on for `flat_cycles` periods and falls with the mirrored ramp. Without
/// `flat_cycles` the field never switches off. The default is a continuous wave
/// present from `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TemporalEnvelope {
    #[serde(default)]
    pub ramp_cycles: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_cycles: Option<f64>,
}

impl TemporalEnvelope {
    pub const CONTINUOUS: TemporalEnvelope = TemporalEnvelope { ramp_cycles: 0.0, flat_cycles: None };

    /// Envelope value and its time derivative at `t` for optical period `period`.
    pub fn eval(&self, t: f64, period: f64) -> (f64, f64) {
        let ramp = self.ramp_cycles * period;
        let (s, sign) = match self.flat_cycles {
            None => (t, 1.0),
            Some(flat) => {
                let off = ramp + flat * period;
                if t > off {
                    (ramp - (t - off), -1.0)
                } else {
                    (t, 1.0)
                }
            }
        };
        if s <= 0.0 {
            return (0.0, 0.0);
        }
        if ramp <= 0.0 || s >= ramp {
            return (1.0, 0.0);
        }
        let arg = 0.5 * PI * s / ramp;
        let g = arg.sin().powi(2);
        let dg = sign * (PI / ramp) * arg.sin() * arg.cos();
        (g, dg)
    }

    /// Time after which the field is identically zero, if it ever is.
    pub fn switch_off_time(&self, period: f64) -> Option<f64> {
        self.flat_cycles.map(|f| (2.0 * self.ramp_cycles + f) * period)
    }
}

fn is_continuous(t: &TemporalEnvelope) -> bool {
    *t == TemporalEnvelope::CONTINUOUS
}

/// The two-beam optical field. Each beam has amplitude `E0` and is inclined by
/// `±phi` to the electron axis (`+x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    #[serde(rename = "E0_V_per_m")]
    pub e0: f64,
    #[serde(rename = "lambda_ph_m")]
    pub lambda_ph: f64,
    #[serde(rename = "phi_deg")]
    pub phi: Angle,
    pub envelope: Envelope,
    #[serde(rename = "carrier_phase_rad", default)]
    pub carrier_phase: f64,
    #[serde(default, skip_serializing_if = "is_continuous")]
    pub temporal: TemporalEnvelope,
}

impl BeamConfig {
    pub fn plane_wave(e0: f64, lambda_ph: f64, phi_deg: f64) -> Self {
        Self {
            e0,
            lambda_ph,
            phi: Angle::from_degrees(phi_deg),
            envelope: Envelope::PlaneWave,
            carrier_phase: 0.0,
            temporal: TemporalEnvelope::CONTINUOUS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 >= 0.0 && self.e0.is_finite()) {
            return Err(Error::config(format!("E0 must be finite and >= 0, got {}", self.e0)));
        }
        if !(self.lambda_ph > 0.0 && self.lambda_ph.is_finite()) {
            return Err(Error::config(format!("lambda_ph must be > 0, got {}", self.lambda_ph)));
        }
        let phi = self.phi.radians();
        if !(0.0..=PI / 2.0 + 1e-15).contains(&phi) {
            return Err(Error::config(format!("phi must lie in [0, 90] deg, got {:?}", self.phi)));
        }
        if let Envelope::GaussianParaxial { waist, .. } = self.envelope {
            if !(waist >= 1.5 * self.lambda_ph) {
                return Err(Error::config(format!(
                    "paraxial waist {waist:e} m is below 1.5 lambda = {:e} m",
                    1.5 * self.lambda_ph
                )));
            }
        }
        let t = &self.temporal;
        if !(t.ramp_cycles >= 0.0) || t.flat_cycles.is_some_and(|f| !(f >= 0.0)) {
            return Err(Error::config("temporal envelope cycles must be >= 0"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * C_LIGHT / self.lambda_ph
    }

    pub fn k_ph(&self) -> f64 {
        2.0 * PI / self.lambda_ph
    }

    /// Vector-potential amplitude `A0 = E0/ω` (V s/m).
    pub fn a0(&self) -> f64 {
        self.e0 / self.omega()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    /// Wave vectors of the two beams, `k1 = k_ph (cos φ, sin φ)` and
    /// `k2 = k_ph (cos φ, -sin φ)`.
    pub fn wave_vectors(&self) -> ([f64; 2], [f64; 2]) {
        let k = self.k_ph();
        let (s, c) = self.phi.radians().sin_cos();
        ([k * c, k * s], [k * c, -k * s])
    }
}

/// The incident electron wavepacket, moving along `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronConfig {
    /// Carrier (group) velocity as a fraction of `c`.
    #[serde(rename = "v_el_over_c")]
    pub v_over_c: f64,
    /// Longitudinal width (m): `ψ ∝ exp(-x²/2W_x²)`, so `|ψ|²` falls to 1/e
    /// at `W_x`.
    #[serde(rename = "W_x_m", default)]
    pub w_x: f64,
    /// Transverse width (m), same convention as `w_x`.
    #[serde(rename = "W_y_m", default)]
    pub w_y: f64,
    #[serde(rename = "center_x_m", default)]
    pub x0: f64,
    #[serde(rename = "center_y_m", default)]
    pub y0: f64,
    #[serde(default)]
    pub plane_wave: bool,
}

impl ElectronConfig {
    pub fn plane_wave(v_over_c: f64) -> Self {
        Self { v_over_c, w_x: 0.0, w_y: 0.0, x0: 0.0, y0: 0.0, plane_wave: true }
    }

    pub fn packet(v_over_c: f64, w_x: f64, w_y: f64) -> Self {
        Self { v_over_c, w_x, w_y, x0: 0.0, y0: 0.0, plane_wave: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_over_c > 0.0) {
            return Err(Error::config(format!(
                "electron velocity must be > 0 (k_el = 0 is degenerate), got {} c",
                self.v_over_c
            )));
        }
        if self.v_over_c >= 1.0 {
            return Err(Error::config(format!(
                "v_el = {} c is not below c; the nonrelativistic model does not apply",
                self.v_over_c
            )));
        }
        if !self.plane_wave && !(self.w_x > 0.0 && self.w_y > 0.0) {
            return Err(Error::config("wavepacket widths W_x, W_y must be > 0"));
        }
        Ok(())
    }

    pub fn v_el(&self) -> f64 {
        self.v_over_c * C_LIGHT
    }

    /// Nonrelativistic carrier wavenumber `m0 v / ħ`.
    pub fn k_el(&self) -> f64 {
        M_ELECTRON * self.v_el() / HBAR
    }

    /// Kinetic energy over ħ, `Ω = m0 v² / 2ħ`.
    pub fn omega_kin(&self) -> f64 {
        0.5 * M_ELECTRON * self.v_el().powi(2) / HBAR
    }
}

/// Electron-light interaction duration, stored both in seconds and in optical
/// periods of the beam it was built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionWindow {
    pub delta_t: f64,
    pub periods: f64,
}

impl InteractionWindow {
    pub fn from_periods(periods: f64, beam: &BeamConfig) -> Result<Self> {
        if !(periods >= 0.0) {
            return Err(Error::config(format!("delta_t / T must be >= 0, got {periods}")));
        }
        Ok(Self { delta_t: periods * beam.period(), periods })
    }

    pub fn from_duration(delta_t: f64, beam: &BeamConfig) -> Result<Self> {
        if !(delta_t >= 0.0) {
            return Err(Error::config(format!("delta_t must be >= 0, got {delta_t}")));
        }
        Ok(Self { delta_t, periods: delta_t / beam.period() })
    }

    /// `ω δt`, taken from the period count so that whole periods give exact
    /// multiples of 2π.
    pub fn phase(&self) -> f64 {
        2.0 * PI * self.periods
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub omega: f64,
    pub k_ph: f64,
    pub a0: f64,
    pub period: f64,
    pub k_el: f64,
    /// Ω = kinetic energy / ħ.
    pub omega_el: f64,
}

pub fn derive_kinematics(beam: &BeamConfig, electron: &ElectronConfig) -> Result<DerivedQuantities> {
    beam.validate()?;
    electron.validate()?;
    Ok(DerivedQuantities {
        omega: beam.omega(),
        k_ph: beam.k_ph(),
        a0: beam.a0(),
        period: beam.period(),
        k_el: electron.k_el(),
        omega_el: electron.omega_kin(),
    })
}

/// Beam plus electron, the common top-level block of every config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub beam: BeamConfig,
    pub electron: ElectronConfig,
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        self.electron.validate()
    }
}

/// Reads a JSON (`.json`) or TOML (anything else) config file.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_config(&text, is_json).map_err(|msg| Error::Parse { path: path.to_owned(), msg })
}

pub fn parse_config<T: DeserializeOwned>(text: &str, json: bool) -> std::result::Result<T, String> {
    if json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::config(e.to_string()))
}
