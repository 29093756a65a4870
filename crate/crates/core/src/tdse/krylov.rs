//! Lanczos approximation of `exp(-i H τ/ħ) v`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::HBAR;
use crate::par::{self, Exec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub dim: usize,
    /// Estimated relative error of the propagated vector.
    pub error: f64,
}

/// Reusable Lanczos workspace.
#[derive(Debug, Default)]
pub struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
}

/// `exp(-i T τ) e1` for the symmetric tridiagonal `T` given by its diagonal
/// and off-diagonal.
fn small_expm(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let u = &eig.eigenvectors;
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| Complex64::from_polar(u[(r, k)] * u[(0, k)], -eig.eigenvalues[k] * tau))
                .sum()
        })
        .collect()
}

impl Lanczos {
    /// Replaces `v` by `exp(-i H τ/ħ) v`, with `apply(x, out)` writing `H x`
    /// in joules. Stops once the error estimate `β_m τ |e_mᵀ exp(-iT τ) e1|`
    /// drops below `tol`.
    pub fn expm<F>(&mut self, mut apply: F, v: &mut [Complex64], tau: f64, max_dim: usize, tol: f64, exec: Exec) -> Result<KrylovStats>
    where
        F: FnMut(&[Complex64], &mut [Complex64]),
    {
        let n = v.len();
        let nrm = par::norm_sqr(exec, v).sqrt();
        if nrm == 0.0 {
            return Ok(KrylovStats { dim: 0, error: 0.0 });
        }
        while self.basis.len() < max_dim {
            self.basis.push(vec![ZERO; n]);
        }
        self.w.resize(n, ZERO);
        {
            let q0 = &mut self.basis[0];
            par::for_each_indexed_mut(exec, q0, |i, q| *q = v[i] / nrm);
        }
        let mut alpha = Vec::with_capacity(max_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
        let mut coeffs = Vec::new();
        let mut error = f64::INFINITY;
        let mut used = 0;
        for j in 0..max_dim {
            apply(&self.basis[j], &mut self.w);
            let w = &mut self.w;
            par::for_each_indexed_mut(exec, w, |_, x| *x /= HBAR);
            let a = par::dot(exec, &self.basis[j], w).re;
            par::axpy(exec, Complex64::new(-a, 0.0), &self.basis[j], w);
            if j > 0 {
                par::axpy(exec, Complex64::new(-beta[j - 1], 0.0), &self.basis[j - 1], w);
            }
            // full reorthogonalization
            for q in &self.basis[..=j] {
                let c = par::dot(exec, q, w);
                par::axpy(exec, -c, q, w);
            }
            let b = par::norm_sqr(exec, w).sqrt();
            alpha.push(a);
            coeffs = small_expm(&alpha, &beta, tau);
            used = j + 1;
            error = b * tau.abs() * coeffs[j].norm();
            if error < tol {
                break;
            }
            if j + 1 < max_dim {
                beta.push(b);
                let (src, next) = (&self.w, &mut self.basis[j + 1]);
                par::for_each_indexed_mut(exec, next, |i, q| *q = src[i] / b);
            }
        }
        if error >= tol {
            return Err(Error::KrylovNonConvergence { residual: error, tol, dim: max_dim });
        }
        par::for_each_indexed_mut(exec, v, |_, x| *x = ZERO);
        for (c, q) in coeffs.iter().zip(&self.basis[..used]) {
            par::axpy(exec, c * nrm, q, v);
        }
        Ok(KrylovStats { dim: used, error })
    }
}
