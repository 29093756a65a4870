//! Matrix-free pseudospectral Hamiltonian.
//!
//! In a frame moving with velocity `u` along `x` (`x' = x - u t`) the
//! Schrödinger equation for `φ(x', y, t)`, with
//! `ψ = exp(i(m u x - m u² t/2)/ħ) φ`, has the Hamiltonian
//!
//! ```text
//! H' = (p + eA)²/2m + e u A_x,       A evaluated at (x' + u t, y, t)
//! ```
//!
//! The cross term is applied in the symmetrized form `(p·A + A·p)/2`, which is
//! `A·p` for a transverse field and keeps the discrete operator Hermitian.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Fft2;
use super::grid::Grid2D;
use crate::fields::eval_field;
use crate::model::{BeamConfig, E_CHARGE, HBAR, M_ELECTRON};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianMode {
    /// Kinetic, `A·p` and `A²` terms.
    #[default]
    Full,
    /// Kinetic and `e²A²/2m` only.
    PonderomotiveOnly,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Hamiltonian on a grid with the field frozen at one instant.
#[derive(Debug)]
pub struct Hamiltonian {
    grid: Grid2D,
    mode: HamiltonianMode,
    frame_u: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    ax: Vec<f64>,
    ay: Vec<f64>,
    field_on: bool,
    fft: Fft2,
    buf: [Vec<Complex64>; 5],
    exec: Exec,
}

impl Hamiltonian {
    pub fn new(grid: Grid2D, mode: HamiltonianMode, frame_u: f64, exec: Exec) -> Self {
        let n = grid.len();
        Self {
            grid,
            mode,
            frame_u,
            kx: grid.kx(),
            ky: grid.ky(),
            ax: vec![0.0; n],
            ay: vec![0.0; n],
            field_on: false,
            fft: Fft2::new(grid.nx, grid.ny, exec),
            buf: std::array::from_fn(|_| vec![ZERO; n]),
            exec,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn mode(&self) -> HamiltonianMode {
        self.mode
    }

    pub fn frame_velocity(&self) -> f64 {
        self.frame_u
    }

    /// Samples `A` at time `t` (lab coordinates `x' + u t`).
    pub fn set_field(&mut self, beam: &BeamConfig, t: f64) {
        let g = self.grid;
        let shift = self.frame_u * t;
        let samples = par::map_indexed(self.exec, g.len(), |idx| {
            let (i, j) = (idx / g.ny, idx % g.ny);
            eval_field(beam, g.x(i) + shift, g.y(j), t).a
        });
        let mut any = false;
        for (idx, a) in samples.into_iter().enumerate() {
            self.ax[idx] = a[0];
            self.ay[idx] = a[1];
            any |= a[0] != 0.0 || a[1] != 0.0;
        }
        self.field_on = any;
    }

    pub fn clear_field(&mut self) {
        self.ax.iter_mut().for_each(|v| *v = 0.0);
        self.ay.iter_mut().for_each(|v| *v = 0.0);
        self.field_on = false;
    }

    pub fn field(&self) -> (&[f64], &[f64]) {
        (&self.ax, &self.ay)
    }

    /// Overrides the sampled field (test hook and for externally computed fields).
    pub fn set_field_arrays(&mut self, ax: Vec<f64>, ay: Vec<f64>) {
        assert_eq!(ax.len(), self.grid.len());
        assert_eq!(ay.len(), self.grid.len());
        self.field_on = ax.iter().chain(&ay).any(|&v| v != 0.0);
        self.ax = ax;
        self.ay = ay;
    }

    /// `out = H psi` in joules times the amplitude units of `psi`.
    pub fn apply(&mut self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.len();
        assert_eq!(psi.len(), n);
        assert_eq!(out.len(), n);
        let exec = self.exec;
        let ny = self.grid.ny;
        let kin = HBAR * HBAR / (2.0 * M_ELECTRON);
        let (kx, ky) = (&self.kx, &self.ky);
        let full = self.mode == HamiltonianMode::Full && self.field_on;

        let [b0, b1, b2, c1, c2] = &mut self.buf;
        b0.copy_from_slice(psi);
        self.fft.forward(b0);

        if full {
            // momentum-space p_x ψ, p_y ψ
            par::for_each_indexed_mut(exec, b1, |idx, v| *v = HBAR * kx[idx / ny] * b0[idx]);
            par::for_each_indexed_mut(exec, b2, |idx, v| *v = HBAR * ky[idx % ny] * b0[idx]);
            self.fft.inverse(b1);
            self.fft.inverse(b2);
            let (ax, ay) = (&self.ax, &self.ay);
            par::for_each_indexed_mut(exec, c1, |idx, v| *v = ax[idx] * psi[idx]);
            par::for_each_indexed_mut(exec, c2, |idx, v| *v = ay[idx] * psi[idx]);
            self.fft.forward(c1);
            self.fft.forward(c2);
        }

        let cross = E_CHARGE / (2.0 * M_ELECTRON);
        par::for_each_indexed_mut(exec, out, |idx, v| {
            let (qx, qy) = (kx[idx / ny], ky[idx % ny]);
            let mut acc = kin * (qx * qx + qy * qy) * b0[idx];
            if full {
                acc += cross * HBAR * (qx * c1[idx] + qy * c2[idx]);
            }
            *v = acc;
        });
        self.fft.inverse(out);

        if !self.field_on {
            return;
        }
        let (ax, ay) = (&self.ax, &self.ay);
        let pond = E_CHARGE * E_CHARGE / (2.0 * M_ELECTRON);
        let drift = E_CHARGE * self.frame_u;
        par::for_each_indexed_mut(exec, out, |idx, v| {
            let (a, b) = (ax[idx], ay[idx]);
            *v += pond * (a * a + b * b) * psi[idx];
            if full {
                *v += cross * (a * b1[idx] + b * b2[idx]) + drift * a * psi[idx];
            }
        });
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` (J).
    pub fn expectation(&mut self, psi: &[Complex64]) -> f64 {
        let mut h = vec![ZERO; psi.len()];
        self.apply(psi, &mut h);
        par::dot(self.exec, psi, &h).re / par::norm_sqr(self.exec, psi)
    }
}
