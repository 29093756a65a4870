use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid, stored x-major: index `i * ny + j` for `(x_i, y_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "dx_m")]
    pub dx: f64,
    #[serde(rename = "dy_m")]
    pub dy: f64,
    #[serde(rename = "x_min_m")]
    pub x_min: f64,
    #[serde(rename = "y_min_m")]
    pub y_min: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: [f64; 2]) -> Result<Self> {
        let g = Self { nx, ny, dx, dy, x_min: origin[0], y_min: origin[1] };
        g.validate()?;
        Ok(g)
    }

    /// Grid with `x = 0, y = 0` at index `(nx/2, ny/2)`.
    pub fn centered(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        Self::new(nx, ny, dx, dy, [-(nx as f64 / 2.0) * dx, -(ny as f64 / 2.0) * dy])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n < 16 || !n.is_power_of_two() {
                return Err(Error::config(format!("{name} = {n} must be a power of two >= 16")));
            }
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return Err(Error::config("grid spacings must be > 0"));
        }
        if !(self.x_min.is_finite() && self.y_min.is_finite()) {
            return Err(Error::config("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn dkx(&self) -> f64 {
        2.0 * PI / (self.nx as f64 * self.dx)
    }

    pub fn dky(&self) -> f64 {
        2.0 * PI / (self.ny as f64 * self.dy)
    }

    /// Angular wavenumbers in FFT order.
    pub fn kx(&self) -> Vec<f64> {
        fft_freqs(self.nx, self.dkx())
    }

    pub fn ky(&self) -> Vec<f64> {
        fft_freqs(self.ny, self.dky())
    }

    pub fn nyquist(&self) -> [f64; 2] {
        [PI / self.dx, PI / self.dy]
    }

    /// Requires the Nyquist momenta to exceed the expected maximum |k| on each
    /// axis by a factor of two.
    pub fn check_nyquist(&self, k_max: [f64; 2]) -> Result<()> {
        let ny = self.nyquist();
        for (axis, (&nq, &k)) in ["x", "y"].iter().zip(ny.iter().zip(&k_max)) {
            if nq < 2.0 * k {
                return Err(Error::precondition(format!(
                    "Nyquist momentum along {axis} ({nq:e} 1/m) is below twice the expected maximum |k| ({k:e} 1/m)"
                )));
            }
        }
        Ok(())
    }
}

fn fft_freqs(n: usize, dk: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk)
        .collect()
}

/// FFT-ordered index of the `m`-th entry of ascending frequency order.
pub fn unshift(m: usize, n: usize) -> usize {
    (m + n / 2) % n
}
