//! Two-dimensional parameter scans over the analytic engine.
//!
//! Cells are independent and written into a preallocated grid by index, so the
//! result does not depend on the worker count or the schedule.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytic::{self, bessel, Channel, CouplingParams, OrderState, SeriesEngine, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::model::{Angle, BeamConfig, ElectronConfig, InteractionWindow, E_CHARGE, HBAR, M_ELECTRON};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameter {
    #[serde(rename = "E0_V_per_m")]
    E0,
    #[serde(rename = "v_el_over_c")]
    VEl,
    #[serde(rename = "lambda_ph_m")]
    LambdaPh,
    #[serde(rename = "phi_deg")]
    Phi,
    #[serde(rename = "dt_over_T")]
    DtOverT,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::E0 => "E0_V_per_m",
            Parameter::VEl => "v_el_over_c",
            Parameter::LambdaPh => "lambda_ph_m",
            Parameter::Phi => "phi_deg",
            Parameter::DtOverT => "dt_over_T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: Parameter,
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default)]
    pub scale: Scale,
}

fn default_points() -> usize {
    101
}

impl Axis {
    pub fn new(parameter: Parameter, min: f64, max: f64, n_points: usize) -> Self {
        Self { parameter, min, max, n_points, scale: Scale::Linear }
    }

    /// Grid values; both end points are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * f,
                    Scale::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let name = self.parameter.name();
        if self.n_points < 2 {
            return Err(Error::config(format!("axis {name}: n_points must be >= 2, got {}", self.n_points)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::config(format!("axis {name}: need min < max, got [{}, {}]", self.min, self.max)));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(Error::config(format!("axis {name}: log scale needs min > 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Observable {
    #[serde(rename = "P_ponderomotive")]
    Ponderomotive { n: i64 },
    #[serde(rename = "P_absorptive")]
    Absorptive { l: i64, o: i64 },
    #[serde(rename = "P_combined")]
    Combined { l: i64, o: i64 },
    #[serde(rename = "H1_H2_gap")]
    H1H2Gap,
}

impl Observable {
    pub fn is_probability(self) -> bool {
        self != Observable::H1H2Gap
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Ponderomotive { n } => write!(f, "P_ponderomotive({n})"),
            Observable::Absorptive { l, o } => write!(f, "P_absorptive({l};{o})"),
            Observable::Combined { l, o } => write!(f, "P_combined({l};{o})"),
            Observable::H1H2Gap => write!(f, "H1_H2_gap_J"),
        }
    }
}

/// Values of the parameters that are not swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub beam: BeamConfig,
    pub electron: ElectronConfig,
    #[serde(rename = "dt_over_T")]
    pub dt_over_t: f64,
    /// Interaction length for the ponderomotive argument. When absent,
    /// `x = v_el δt` with `δt = (δt/T) T`.
    #[serde(rename = "interaction_length_m", default, skip_serializing_if = "Option::is_none")]
    pub interaction_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: FixedParams,
    pub observable: Observable,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-10
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.parameter == self.axis2.parameter {
            return Err(Error::config(format!("both axes sweep {}", self.axis1.parameter.name())));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.fixed.dt_over_t >= 0.0) {
            return Err(Error::config("dt_over_T must be >= 0"));
        }
        if self.fixed.interaction_length.is_some_and(|x| !(x >= 0.0)) {
            return Err(Error::config("interaction_length_m must be >= 0"));
        }
        self.fixed.beam.validate()?;
        self.fixed.electron.validate()?;
        // every corner must describe a valid configuration
        for &a in &[self.axis1.min, self.axis1.max] {
            for &b in &[self.axis2.min, self.axis2.max] {
                let (beam, electron, _) = self.cell_config(a, b);
                beam.validate()?;
                electron.validate()?;
            }
        }
        Ok(())
    }

    /// Beam, electron and `δt/T` at one grid cell.
    pub fn cell_config(&self, a1: f64, a2: f64) -> (BeamConfig, ElectronConfig, f64) {
        let mut beam = self.fixed.beam;
        let mut electron = self.fixed.electron;
        let mut periods = self.fixed.dt_over_t;
        for (p, v) in [(self.axis1.parameter, a1), (self.axis2.parameter, a2)] {
            match p {
                Parameter::E0 => beam.e0 = v,
                Parameter::VEl => electron.v_over_c = v,
                Parameter::LambdaPh => beam.lambda_ph = v,
                Parameter::Phi => beam.phi = Angle::from_degrees(v),
                Parameter::DtOverT => periods = v,
            }
        }
        (beam, electron, periods)
    }
}

/// Per-cell status written to the `flag` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    Ok,
    /// The series needed a looser tolerance than requested.
    Relaxed,
    /// No tolerance could be met within the index cap; the value is 0.
    Truncated,
}

impl CellFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Relaxed => "relaxed",
            CellFlag::Truncated => "truncated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub value: f64,
    pub flag: CellFlag,
    pub truncation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanMetadata {
    pub engine_version: &'static str,
    pub observable: String,
    pub tol: f64,
    pub max_truncation: usize,
    pub flagged_cells: usize,
    pub workers: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub spec: ScanSpec,
    pub axis1_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    /// Row-major over `(axis1, axis2)`.
    pub values: Vec<f64>,
    pub flags: Vec<CellFlag>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2_values.len() + j]
    }

    pub fn csv_header(&self) -> String {
        format!(
            "{},{},{},flag",
            self.spec.axis1.parameter.name(),
            self.spec.axis2.parameter.name(),
            self.spec.observable
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.csv_header();
        s.push('\n');
        let n2 = self.axis2_values.len();
        for (idx, (v, f)) in self.values.iter().zip(&self.flags).enumerate() {
            let (a, b) = (self.axis1_values[idx / n2], self.axis2_values[idx % n2]);
            s.push_str(&format!("{a:e},{b:e},{v:e},{}\n", f.as_str()));
        }
        s
    }
}

/// `|e²A0²/2m0 − e A0 ħk_el/m0|` with `A0 = E0/ω`.
pub fn h1_h2_gap(beam: &BeamConfig, electron: &ElectronConfig) -> f64 {
    let ea = E_CHARGE * beam.a0();
    let p = HBAR * electron.k_el();
    (ea / M_ELECTRON * (0.5 * ea - p)).abs()
}

fn series_cell(channel: Channel, st: OrderState, cp: &CouplingParams, tol: f64) -> Result<(f64, usize)> {
    let max = st.l.unsigned_abs().max(st.o.unsigned_abs()) as usize;
    let eng = SeriesEngine::new(channel, cp, tol, DEFAULT_CAP, max)?;
    let amp = match channel {
        Channel::Combined => eng.combined_amplitude(st),
        _ => eng.absorptive_amplitude(st),
    };
    Ok((amp.norm_sqr(), eng.truncation()))
}

/// Evaluates the observable for one cell. Truncation failures are retried at
/// looser tolerances and flagged rather than returned.
pub fn evaluate_cell(spec: &ScanSpec, a1: f64, a2: f64) -> Result<Cell> {
    let (beam, electron, periods) = spec.cell_config(a1, a2);
    let window = InteractionWindow::from_periods(periods, &beam)?;
    let x = spec.fixed.interaction_length.unwrap_or(electron.v_el() * window.delta_t);
    let (channel, st) = match spec.observable {
        Observable::H1H2Gap => {
            return Ok(Cell { value: h1_h2_gap(&beam, &electron), flag: CellFlag::Ok, truncation: 0 });
        }
        Observable::Ponderomotive { n } => {
            let beta = analytic::ponderomotive_argument(&beam, &electron, x)?;
            let value = bessel::bessel_j(n, beta).powi(2);
            return Ok(Cell { value, flag: CellFlag::Ok, truncation: n.unsigned_abs() as usize });
        }
        Observable::Absorptive { l, o } => (Channel::Absorptive, OrderState::new(l, o)),
        Observable::Combined { l, o } => (Channel::Combined, OrderState::new(l, o)),
    };
    let cp = analytic::coupling_params(&beam, &electron, &window, x)?;
    let mut tol = spec.tol;
    let mut flag = CellFlag::Ok;
    loop {
        match series_cell(channel, st, &cp, tol) {
            Ok((value, truncation)) => return Ok(Cell { value: value.min(1.0), flag, truncation }),
            Err(Error::Truncation { .. }) if tol < 1e-2 => {
                tol = (tol * 1e3).min(1e-2);
                flag = CellFlag::Relaxed;
            }
            Err(Error::Truncation { .. }) => {
                return Ok(Cell { value: 0.0, flag: CellFlag::Truncated, truncation: DEFAULT_CAP })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs the scan on `workers` threads (`None`: rayon's default pool).
pub fn run_scan(spec: &ScanSpec, workers: Option<usize>) -> Result<ScanResult> {
    spec.validate()?;
    let start = Instant::now();
    let (v1, v2) = (spec.axis1.values(), spec.axis2.values());
    let n2 = v2.len();
    let eval = |exec: Exec| par::map_indexed(exec, v1.len() * n2, |idx| evaluate_cell(spec, v1[idx / n2], v2[idx % n2]));
    let (cells, used) = with_workers(workers, eval)?;
    let cells = cells.into_iter().collect::<Result<Vec<Cell>>>()?;
    let metadata = ScanMetadata {
        engine_version: env!("CARGO_PKG_VERSION"),
        observable: spec.observable.to_string(),
        tol: spec.tol,
        max_truncation: cells.iter().map(|c| c.truncation).max().unwrap_or(0),
        flagged_cells: cells.iter().filter(|c| c.flag != CellFlag::Ok).count(),
        workers: used,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(ScanResult {
        spec: *spec,
        axis1_values: v1,
        axis2_values: v2,
        values: cells.iter().map(|c| c.value).collect(),
        flags: cells.iter().map(|c| c.flag).collect(),
        metadata,
    })
}

/// Worker count from `KAPDIRAC_THREADS`, falling back to `requested`.
pub fn resolve_workers(requested: Option<usize>) -> Option<usize> {
    std::env::var("KAPDIRAC_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(requested)
}

#[cfg(feature = "parallel")]
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl Fn(Exec) -> T + Send + Sync) -> Result<(T, usize)> {
    match workers {
        Some(1) => Ok((f(Exec::Sequential), 1)),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot start {n} workers: {e}")))?;
            Ok((pool.install(|| f(Exec::Parallel)), n))
        }
        None => Ok((f(Exec::Parallel), rayon::current_num_threads())),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn with_workers<T: Send>(_workers: Option<usize>, f: impl Fn(Exec) -> T + Send + Sync) -> Result<(T, usize)> {
    Ok((f(Exec::Sequential), 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(observable: Observable) -> ScanSpec {
        ScanSpec {
            axis1: Axis::new(Parameter::E0, 0.0, 400e9, 9),
            axis2: Axis::new(Parameter::VEl, 0.005, 0.1, 7),
            fixed: FixedParams {
                beam: BeamConfig::plane_wave(0.0, 30e-9, 50.0),
                electron: ElectronConfig::plane_wave(0.03),
                dt_over_t: 0.3,
                interaction_length: None,
            },
            observable,
            tol: 1e-10,
        }
    }

    #[test]
    fn axis_values() {
        let a = Axis { scale: Scale::Log, ..Axis::new(Parameter::E0, 1.0, 100.0, 3) };
        let v = a.values();
        assert!((v[1] - 10.0).abs() < 1e-12 && v[0] == 1.0 && v[2] == 100.0);
        assert_eq!(Axis::new(Parameter::Phi, 0.0, 90.0, 4).values(), vec![0.0, 30.0, 60.0, 90.0]);
    }

    #[test]
    fn spec_validation() {
        let ok = spec(Observable::H1H2Gap);
        assert!(ok.validate().is_ok());
        let mut s = ok;
        s.axis1.n_points = 1;
        assert!(s.validate().is_err());
        let mut s = ok;
        s.axis2 = Axis::new(Parameter::E0, 0.0, 1.0, 3);
        assert!(s.validate().is_err());
        let mut s = ok;
        s.axis1.min = 500e9;
        assert!(s.validate().is_err());
        let mut s = ok;
        s.axis2.max = 1.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_field_row_is_trivial() {
        for obs in [
            Observable::Combined { l: 0, o: 0 },
            Observable::Absorptive { l: 0, o: 0 },
            Observable::Ponderomotive { n: 0 },
        ] {
            let r = run_scan(&spec(obs), Some(2)).unwrap();
            for j in 0..r.axis2_values.len() {
                assert_eq!(r.get(0, j), 1.0, "{obs}");
            }
        }
        let r = run_scan(&spec(Observable::Combined { l: 1, o: -1 }), Some(2)).unwrap();
        assert!((0..7).all(|j| r.get(0, j) == 0.0));
        assert!(r.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gap_zeros() {
        let e = ElectronConfig::plane_wave(0.05);
        let mut b = BeamConfig::plane_wave(0.0, 30e-9, 50.0);
        assert_eq!(h1_h2_gap(&b, &e), 0.0);
        let a_star = analytic::interference_criterion(&e);
        b.e0 = a_star * b.omega();
        let scale = (E_CHARGE * b.a0()).powi(2) / (2.0 * M_ELECTRON);
        assert!(h1_h2_gap(&b, &e) < 1e-12 * scale);
        b.e0 *= 0.5;
        assert!(h1_h2_gap(&b, &e) > 0.1 * scale);
    }

    #[test]
    fn csv_header_and_rows() {
        let r = run_scan(&spec(Observable::Combined { l: 1, o: -1 }), Some(1)).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "E0_V_per_m,v_el_over_c,P_combined(1;-1),flag");
        assert_eq!(lines.count(), 63);
    }

    #[test]
    fn flags_unreachable_tolerance() {
        // alpha far beyond the index cap
        let mut s = spec(Observable::Absorptive { l: 0, o: 0 });
        s.axis1 = Axis::new(Parameter::E0, 1e14, 2e14, 2);
        s.axis2 = Axis::new(Parameter::VEl, 0.5, 0.6, 2);
        let r = run_scan(&s, Some(1)).unwrap();
        assert!(r.flags.iter().all(|&f| f == CellFlag::Truncated));
        assert_eq!(r.metadata.flagged_cells, 4);
        assert!(r.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn serde_round_trip() {
        let s = spec(Observable::Combined { l: 1, o: -1 });
        let text = toml::to_string(&s).unwrap();
        let back: ScanSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
