//! Momentum-space analysis of TDSE wavefunctions.
//!
//! The momentum amplitude uses the unitary convention
//! `ψ̃(k) = (2π)^{-1} Σ ψ(r) e^{-ik·r} dx dy`, so that `Σ |ψ̃|² dkx dky`
//! equals the real-space norm exactly. All momenta are lab-frame angular
//! wavenumbers (1/m).

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{OrderState, PopulationTable};
use crate::error::{Error, Result};
use crate::model::{BeamConfig, ElectronConfig};
use crate::par::Exec;
use crate::tdse::grid::unshift;
use crate::tdse::{Fft2, Wavefunction2D};

/// Lab-frame momentum amplitudes in ascending `(kx, ky)` order, x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumWavefunction {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl MomentumWavefunction {
    pub fn from_wavefunction(psi: &Wavefunction2D, exec: Exec) -> Self {
        let g = psi.grid;
        let mut buf = psi.amplitudes.clone();
        Fft2::new(g.nx, g.ny, exec).forward(&mut buf);
        let q = psi.frame_wavenumber();
        let ut = psi.frame_velocity * psi.time;
        let kx_frame = g.kx();
        let ky = g.ky();
        let measure = g.cell_area() / (2.0 * PI);
        let mut amplitudes = Vec::with_capacity(g.len());
        for m in 0..g.nx {
            let i = unshift(m, g.nx);
            let kp = kx_frame[i];
            for n in 0..g.ny {
                let j = unshift(n, g.ny);
                // grid origin, then the boost back to the lab frame
                let phase = -(kp * g.x_min + ky[j] * g.y_min) - (0.5 * q * ut + kp * ut);
                amplitudes.push(buf[i * g.ny + j] * measure * Complex64::from_polar(1.0, phase));
            }
        }
        let kx = (0..g.nx).map(|m| kx_frame[unshift(m, g.nx)] + q).collect();
        Self { kx, ky: (0..g.ny).map(|n| ky[unshift(n, g.ny)]).collect(), amplitudes, time: psi.time }
    }

    pub fn dkx(&self) -> f64 {
        self.kx[1] - self.kx[0]
    }

    pub fn dky(&self) -> f64 {
        self.ky[1] - self.ky[0]
    }

    pub fn density(&self, m: usize, n: usize) -> f64 {
        self.amplitudes[m * self.ky.len() + n].norm_sqr()
    }

    pub fn total(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dkx() * self.dky()
    }

    /// Probability-weighted mean momentum.
    pub fn centroid(&self) -> [f64; 2] {
        let ny = self.ky.len();
        let mut c = [0.0; 3];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            c[0] += p * self.kx[idx / ny];
            c[1] += p * self.ky[idx % ny];
            c[2] += p;
        }
        [c[0] / c[2], c[1] / c[2]]
    }
}

/// `P(k_y) = ∫ dk_x |ψ̃|²` sampled on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransverseSpectrum {
    pub ky: Vec<f64>,
    /// Probability density per unit `k_y` (m).
    pub p: Vec<f64>,
    pub dky: f64,
}

impl TransverseSpectrum {
    pub fn integral(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.dky
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k_y,P\n");
        for (k, p) in self.ky.iter().zip(&self.p) {
            s.push_str(&format!("{k:e},{p:e}\n"));
        }
        s
    }
}

pub fn transverse_spectrum(psi: &Wavefunction2D) -> TransverseSpectrum {
    spectrum_of(&MomentumWavefunction::from_wavefunction(psi, Exec::Parallel))
}

pub fn spectrum_of(m: &MomentumWavefunction) -> TransverseSpectrum {
    let ny = m.ky.len();
    let dkx = m.dkx();
    let mut p = vec![0.0; ny];
    for (idx, a) in m.amplitudes.iter().enumerate() {
        p[idx % ny] += a.norm_sqr() * dkx;
    }
    TransverseSpectrum { ky: m.ky.clone(), p, dky: m.dky() }
}

/// Shortest non-zero vector `l k1 + o k2` of the order lattice.
pub fn lattice_spacing(beam: &BeamConfig) -> f64 {
    let (k1, k2) = beam.wave_vectors();
    let mut best = f64::INFINITY;
    for l in -3i64..=3 {
        for o in -3i64..=3 {
            if l == 0 && o == 0 {
                continue;
            }
            let v = [l as f64 * k1[0] + o as f64 * k2[0], l as f64 * k1[1] + o as f64 * k2[1]];
            best = best.min(v[0].hypot(v[1]));
        }
    }
    best
}

/// Default binning radius `k_ph sin φ / 4`.
pub fn default_window(beam: &BeamConfig) -> f64 {
    0.25 * beam.k_ph() * beam.phi.radians().sin()
}

/// Integrates `|ψ̃|²` over disks of radius `window` around every order point
/// `k_el x̂ + l k1 + o k2`. The residual is `1 - Σ entries`.
pub fn bin_orders(
    m: &MomentumWavefunction,
    beam: &BeamConfig,
    electron: &ElectronConfig,
    window: f64,
) -> Result<PopulationTable> {
    let spacing = lattice_spacing(beam);
    if !(window > 0.0) || spacing <= 2.0 * window * (1.0 + 1e-12) {
        return Err(Error::OverlappingWindows { window, spacing });
    }
    let (k1, k2) = beam.wave_vectors();
    let det = k1[0] * k2[1] - k1[1] * k2[0];
    let k_el = electron.k_el();
    let ny = m.ky.len();
    let cell = m.dkx() * m.dky();
    let mut bins = std::collections::BTreeMap::new();
    let mut l_max = 0i64;
    for (idx, a) in m.amplitudes.iter().enumerate() {
        let (px, py) = (m.kx[idx / ny] - k_el, m.ky[idx % ny]);
        // lattice coordinates of the pixel, then the nearby integer points
        let lf = (px * k2[1] - py * k2[0]) / det;
        let of = (k1[0] * py - k1[1] * px) / det;
        'search: for dl in 0..=1 {
            for do_ in 0..=1 {
                let (l, o) = (lf.floor() as i64 + dl, of.floor() as i64 + do_);
                let cx = l as f64 * k1[0] + o as f64 * k2[0];
                let cy = l as f64 * k1[1] + o as f64 * k2[1];
                if (px - cx).hypot(py - cy) <= window {
                    *bins.entry(OrderState::new(l, o)).or_insert(0.0) += a.norm_sqr() * cell;
                    l_max = l_max.max(l.abs()).max(o.abs());
                    break 'search;
                }
            }
        }
    }
    let total: f64 = bins.values().sum();
    Ok(PopulationTable { entries: bins, truncation: l_max as usize, residual: 1.0 - total })
}

/// Local maxima of `P(k_y)` whose bin probability `P dk_y` exceeds
/// `threshold`, refined by a parabola through the three neighbouring samples.
pub fn peak_extract(s: &TransverseSpectrum, threshold: f64) -> Vec<(f64, f64)> {
    let n = s.p.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (s.p[i - 1], s.p[i], s.p[i + 1]);
        if !(b > a && b >= c) || b * s.dky <= threshold {
            continue;
        }
        let denom = a - 2.0 * b + c;
        let (shift, height) = if denom < 0.0 {
            let d = 0.5 * (a - c) / denom;
            (d, b - 0.25 * (a - c) * d)
        } else {
            (0.0, b)
        };
        out.push((s.ky[i] + shift * s.dky, height));
    }
    out
}

/// `1e-4` of the largest bin probability.
pub fn default_peak_threshold(s: &TransverseSpectrum) -> f64 {
    1e-4 * s.p.iter().fold(0.0f64, |m, &v| m.max(v)) * s.dky
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EwaldFit {
    pub radius_fit: f64,
    /// Centre of the fitted circle on the `k_x` axis.
    pub center_kx: f64,
    /// RMS of `|k - c| - R` relative to `R`.
    pub rms_deviation: f64,
    pub n_peaks: usize,
    /// True when the peaks were too narrow in `k_x` to locate the centre and it
    /// was pinned at the origin.
    pub center_pinned: bool,
}

/// Local maxima of `|ψ̃|²` (8-neighbourhood) above `rel_threshold × max`,
/// refined per axis by parabolas.
pub fn momentum_peaks(m: &MomentumWavefunction, rel_threshold: f64) -> Vec<[f64; 3]> {
    let (nx, ny) = (m.kx.len(), m.ky.len());
    let d = |i: usize, j: usize| m.density(i, j);
    let max = m.amplitudes.iter().fold(0.0f64, |a, v| a.max(v.norm_sqr()));
    let level = rel_threshold * max;
    let mut out = Vec::new();
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let v = d(i, j);
            if v <= level {
                continue;
            }
            let mut is_max = true;
            for (di, dj) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let w = d((i as i64 + di) as usize, (j as i64 + dj) as usize);
                // ties are broken towards the lower index
                if w > v || (w == v && (di, dj) < (0, 0)) {
                    is_max = false;
                    break;
                }
            }
            if !is_max {
                continue;
            }
            let refine = |a: f64, b: f64, c: f64| {
                let den = a - 2.0 * b + c;
                if den < 0.0 {
                    0.5 * (a - c) / den
                } else {
                    0.0
                }
            };
            let sx = refine(d(i - 1, j), v, d(i + 1, j));
            let sy = refine(d(i, j - 1), v, d(i, j + 1));
            out.push([m.kx[i] + sx * m.dkx(), m.ky[j] + sy * m.dky(), v]);
        }
    }
    out
}

/// Least-squares circle with centre on the `k_x` axis through `points`.
///
/// Solves `kx² + ky² = 2 c kx + d` in coordinates shifted to the mean `k_x`.
/// When the points span less than `min_kx_spread` in `k_x` the centre is not
/// determined and is pinned at the origin.
pub fn fit_circle_on_axis(points: &[[f64; 2]], min_kx_spread: f64) -> Result<EwaldFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPeaks(points.len()));
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let spread = points.iter().fold(0.0f64, |m, p| m.max((p[0] - mean).abs()));
    let (center, pinned) = if spread < min_kx_spread {
        (0.0, true)
    } else {
        // u = kx - mean: u² + ky² = 2 c' u + d'
        let (mut suu, mut su, mut sz, mut suz) = (0.0, 0.0, 0.0, 0.0);
        for p in points {
            let u = p[0] - mean;
            let z = u * u + p[1] * p[1];
            suu += u * u;
            su += u;
            sz += z;
            suz += u * z;
        }
        let det = 4.0 * (suu * n - su * su);
        if det.abs() < 1e-300 {
            (0.0, true)
        } else {
            let cp = (2.0 * suz * n - 2.0 * su * sz) / det;
            (mean + cp, false)
        }
    };
    let dist: Vec<f64> = points.iter().map(|p| (p[0] - center).hypot(p[1])).collect();
    let radius = dist.iter().sum::<f64>() / n;
    let rms = (dist.iter().map(|r| (r - radius).powi(2)).sum::<f64>() / n).sqrt() / radius;
    Ok(EwaldFit { radius_fit: radius, center_kx: center, rms_deviation: rms, n_peaks: points.len(), center_pinned: pinned })
}

/// Fits the Ewald circle through the significant momentum peaks
/// (above `rel_threshold` of the maximum density).
pub fn ewald_check(m: &MomentumWavefunction, rel_threshold: f64) -> Result<EwaldFit> {
    let pts: Vec<[f64; 2]> = momentum_peaks(m, rel_threshold).iter().map(|p| [p[0], p[1]]).collect();
    fit_circle_on_axis(&pts, m.dkx())
}

/// Everything `analyze` reports for one wavefunction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffractionSpectrum {
    pub p_ky: TransverseSpectrum,
    pub order_populations: PopulationTable,
    pub peak_list: Vec<(f64, f64)>,
    pub ewald: Option<EwaldFit>,
}

pub fn analyze(
    psi: &Wavefunction2D,
    beam: &BeamConfig,
    electron: &ElectronConfig,
    window: f64,
    exec: Exec,
) -> Result<DiffractionSpectrum> {
    let m = MomentumWavefunction::from_wavefunction(psi, exec);
    let p_ky = spectrum_of(&m);
    let order_populations = bin_orders(&m, beam, electron, window)?;
    let peak_list = peak_extract(&p_ky, default_peak_threshold(&p_ky));
    let ewald = ewald_check(&m, 1e-2).ok();
    Ok(DiffractionSpectrum { p_ky, order_populations, peak_list, ewald })
}

/// Orders below this population are left out of `orders.csv` (they remain in
/// `orders.json`).
pub const ORDER_CSV_FLOOR: f64 = 1e-12;

/// Writes `spectrum.csv`, `orders.csv` and `ewald.json` into `dir`.
pub fn write_outputs(dir: &Path, d: &DiffractionSpectrum, json: bool) -> Result<()> {
    let write = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("spectrum.csv", d.p_ky.to_csv())?;
    let mut orders = String::from("l,o,P\n");
    for (k, p) in d.order_populations.entries.iter().filter(|(_, &p)| p >= ORDER_CSV_FLOOR) {
        orders.push_str(&format!("{},{},{:e}\n", k.l, k.o, p));
    }
    write("orders.csv", orders)?;
    let ewald = match &d.ewald {
        Some(f) => serde_json::json!({
            "radius": f.radius_fit,
            "residual": f.rms_deviation,
            "center_kx": f.center_kx,
            "n_peaks": f.n_peaks,
            "center_pinned": f.center_pinned,
        }),
        None => serde_json::json!({ "radius": null, "residual": null }),
    };
    write("ewald.json", serde_json::to_string_pretty(&ewald).expect("json value"))?;
    if json {
        write("spectrum.json", serde_json::to_string(&d.p_ky).expect("serializable"))?;
        write("orders.json", serde_json::to_string(&d.order_populations).expect("serializable"))?;
    }
    Ok(())
}
