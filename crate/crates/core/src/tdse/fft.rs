use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par::{self, Exec};

/// Rows handed to one worker per FFT batch.
const ROWS_PER_TASK: usize = 8;

/// Unnormalized forward / normalized inverse 2D FFT on an x-major array.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    tmp: Vec<Complex64>,
    exec: Exec,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.nx, self.ny)
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize, exec: Exec) -> Self {
        let mut p = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: p.plan_fft_forward(nx),
            inv_x: p.plan_fft_inverse(nx),
            fwd_y: p.plan_fft_forward(ny),
            inv_y: p.plan_fft_inverse(ny),
            tmp: vec![Complex64::new(0.0, 0.0); nx * ny],
            exec,
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let (fy, fx) = (self.fwd_y.clone(), self.fwd_x.clone());
        self.run(data, &*fy, &*fx);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let (fy, fx) = (self.inv_y.clone(), self.inv_x.clone());
        self.run(data, &*fy, &*fx);
        let s = 1.0 / (self.nx * self.ny) as f64;
        par::for_each_indexed_mut(self.exec, data, |_, v| *v *= s);
    }

    fn run(&mut self, data: &mut [Complex64], fy: &dyn Fft<f64>, fx: &dyn Fft<f64>) {
        assert_eq!(data.len(), self.nx * self.ny);
        rows(self.exec, data, self.ny, fy);
        transpose(self.exec, data, &mut self.tmp, self.nx, self.ny);
        rows(self.exec, &mut self.tmp, self.nx, fx);
        transpose(self.exec, &self.tmp, data, self.ny, self.nx);
    }
}

fn rows(exec: Exec, data: &mut [Complex64], len: usize, fft: &dyn Fft<f64>) {
    par::for_each_chunk_mut(exec, data, len * ROWS_PER_TASK, |_, c| fft.process(c));
}

/// `dst[j * rows + i] = src[i * cols + j]` for a `rows × cols` source.
fn transpose(exec: Exec, src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    par::for_each_chunk_mut(exec, dst, rows, |j, out| {
        for (i, v) in out.iter_mut().enumerate() {
            *v = src[i * cols + j];
        }
    });
}
