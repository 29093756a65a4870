//! Classical two-beam vector potential and electric field.
//!
//! The beams are polarized in the simulation plane. For plane waves the pair
//! is
//!
//! ```text
//! A_x = -2 A0 sin φ cos(k sin φ y) cos(ωt + k cos φ x)
//! A_y = -2 A0 cos φ sin(k sin φ y) sin(ωt + k cos φ x)
//! ```
//!
//! which is the sum of beam 1 with phase `ωt + k1·r` and polarization
//! `(sin φ, -cos φ)` and beam 2 with phase `ωt + k2·r` and polarization
//! `(sin φ, cos φ)`. The paraxial Gaussian variant replaces each plane wave by a
//! TEM00 beam along its own inclined axis: amplitude `w0/w(z) exp(-ρ²/w(z)²)`,
//! wavefront curvature and Gouy phase `atan(z/z_R)`. The electric field is
//! `E = -∂A/∂t` (no scalar potential).

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{BeamConfig, Envelope};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    /// Vector potential (V s/m).
    pub a: [f64; 2],
    /// Electric field (V/m).
    pub e: [f64; 2],
}

impl FieldSample {
    fn scaled(self, g: f64, dg: f64) -> Self {
        // A -> g A, E -> g E - g' A
        Self {
            a: [g * self.a[0], g * self.a[1]],
            e: [g * self.e[0] - dg * self.a[0], g * self.e[1] - dg * self.a[1]],
        }
    }
}

/// Continuous-wave plane-wave pair at `(x, y, t)`.
pub fn eval_plane_pair(beam: &BeamConfig, x: f64, y: f64, t: f64) -> FieldSample {
    let omega = beam.omega();
    let k = beam.k_ph();
    let a0 = beam.a0();
    let (s, c) = beam.phi.radians().sin_cos();
    let (sy, cy) = (k * s * y).sin_cos();
    let (st, ct) = (omega * t + k * c * x + beam.carrier_phase).sin_cos();
    FieldSample {
        a: [-2.0 * a0 * s * cy * ct, -2.0 * a0 * c * sy * st],
        e: [-2.0 * a0 * omega * s * cy * st, 2.0 * a0 * omega * c * sy * ct],
    }
}

/// Geometry of one paraxial beam in the plane.
#[derive(Debug, Clone, Copy)]
struct ParaxialBeam {
    /// Unit vector of `k_b`; the wave travels along `-dir` for phase `ωt + k·r`.
    dir: [f64; 2],
    pol: [f64; 2],
    waist: f64,
    rayleigh: f64,
    focus: [f64; 2],
}

impl ParaxialBeam {
    fn pair(beam: &BeamConfig, waist: f64, focus: [f64; 2]) -> [ParaxialBeam; 2] {
        let (s, c) = beam.phi.radians().sin_cos();
        let rayleigh = PI * waist * waist / beam.lambda_ph;
        [
            ParaxialBeam { dir: [c, s], pol: [s, -c], waist, rayleigh, focus },
            ParaxialBeam { dir: [c, -s], pol: [s, c], waist, rayleigh, focus },
        ]
    }

    /// Axial coordinate along `dir`, transverse coordinate, and the
    /// propagation coordinate `z = -ζ` measured downstream from the focus.
    fn coords(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.focus[0];
        let dy = y - self.focus[1];
        let zeta = self.dir[0] * dx + self.dir[1] * dy;
        let rho = -self.dir[1] * dx + self.dir[0] * dy;
        (zeta, rho)
    }

    /// Amplitude factor and spatial phase (excluding `ωt`).
    fn amp_phase(&self, k: f64, x: f64, y: f64) -> (f64, f64) {
        let (zeta, rho) = self.coords(x, y);
        let z = -zeta;
        let zr = self.rayleigh;
        let ratio2 = 1.0 + (z / zr).powi(2);
        let w2 = self.waist * self.waist * ratio2;
        let amp = ratio2.sqrt().recip() * (-rho * rho / w2).exp();
        let curvature = k * rho * rho * z / (2.0 * (z * z + zr * zr));
        let gouy = (z / zr).atan();
        (amp, k * zeta - curvature + gouy)
    }
}

/// Continuous-wave paraxial Gaussian pair at `(x, y, t)`.
pub fn eval_gaussian_pair(beam: &BeamConfig, x: f64, y: f64, t: f64) -> Result<FieldSample> {
    let Envelope::GaussianParaxial { waist, focus_x, focus_y } = beam.envelope else {
        return Err(Error::precondition("eval_gaussian_pair needs a GaussianParaxial envelope"));
    };
    if waist < 1.5 * beam.lambda_ph {
        return Err(Error::config(format!(
            "paraxial waist {waist:e} m is below 1.5 lambda = {:e} m",
            1.5 * beam.lambda_ph
        )));
    }
    let omega = beam.omega();
    let k = beam.k_ph();
    let a0 = beam.a0();
    let mut out = FieldSample::default();
    for b in ParaxialBeam::pair(beam, waist, [focus_x, focus_y]) {
        let (amp, phase) = b.amp_phase(k, x, y);
        let (sp, cp) = (omega * t + phase + beam.carrier_phase).sin_cos();
        for i in 0..2 {
            out.a[i] -= a0 * amp * cp * b.pol[i];
            out.e[i] -= a0 * omega * amp * sp * b.pol[i];
        }
    }
    Ok(out)
}

/// Field at `(x, y, t)` for the configured spatial and temporal envelope.
pub fn eval_field(beam: &BeamConfig, x: f64, y: f64, t: f64) -> FieldSample {
    let cw = match beam.envelope {
        Envelope::PlaneWave => eval_plane_pair(beam, x, y, t),
        // validated configs only reach here
        Envelope::GaussianParaxial { .. } => {
            eval_gaussian_pair(beam, x, y, t).unwrap_or_default()
        }
    };
    let (g, dg) = beam.temporal.eval(t, beam.period());
    if g == 1.0 && dg == 0.0 {
        cw
    } else {
        cw.scaled(g, dg)
    }
}

/// Cycle-averaged envelope intensity `Σ_b amp_b²` (in units of a single
/// beam's focal value) with the standing-wave fringes removed.
pub fn envelope_intensity(beam: &BeamConfig, x: f64, y: f64) -> Result<f64> {
    let Envelope::GaussianParaxial { waist, focus_x, focus_y } = beam.envelope else {
        return Err(Error::precondition("plane-wave fields have no finite intensity contour"));
    };
    let k = beam.k_ph();
    Ok(ParaxialBeam::pair(beam, waist, [focus_x, focus_y])
        .iter()
        .map(|b| b.amp_phase(k, x, y).0.powi(2))
        .sum())
}

/// Closed polyline around the focus on which the envelope intensity has
/// dropped to `e⁻¹` of its focal value.
///
/// Found by bisection along 720 rays from the focus; the region is star-shaped
/// about the focus for both the single-beam ellipse and the two-beam cross.
pub fn intensity_contour_e1(beam: &BeamConfig) -> Result<Vec<[f64; 2]>> {
    let Envelope::GaussianParaxial { waist, focus_x, focus_y } = beam.envelope else {
        return Err(Error::precondition("plane-wave fields have no finite intensity contour"));
    };
    beam.validate()?;
    let peak = envelope_intensity(beam, focus_x, focus_y)?;
    let level = peak * (-1.0f64).exp();
    let rayleigh = PI * waist * waist / beam.lambda_ph;
    let r_max = 50.0 * rayleigh.max(waist);
    let step = waist / 64.0;
    let n_rays = 720;
    let mut out = Vec::with_capacity(n_rays);
    for i in 0..n_rays {
        let th = 2.0 * PI * i as f64 / n_rays as f64;
        let (s, c) = th.sin_cos();
        let f = |r: f64| envelope_intensity(beam, focus_x + r * c, focus_y + r * s).unwrap() - level;
        let mut hi = step;
        while f(hi) > 0.0 {
            hi += step;
            if hi > r_max {
                return Err(Error::precondition("intensity contour does not close"));
            }
        }
        let mut lo = hi - step;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        out.push([focus_x + r * c, focus_y + r * s]);
    }
    Ok(out)
}

/// Writes `x,y,Ax,Ay,Ex,Ey` on a regular grid to CSV.
pub fn write_field_csv(
    path: &Path,
    beam: &BeamConfig,
    xs: &[f64],
    ys: &[f64],
    t: f64,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut body = String::from("x,y,Ax,Ay,Ex,Ey\n");
    for &y in ys {
        for &x in xs {
            let f = eval_field(beam, x, y, t);
            body.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                x, y, f.a[0], f.a[1], f.e[0], f.e[1]
            ));
        }
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
