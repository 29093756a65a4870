//! Integer-order Bessel functions of the first kind.
//!
//! All orders `0..=n_max` at one argument come from Miller's downward
//! recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}`, normalized with
//! `J_0 + 2 Σ J_{2k} = 1`. Downward recurrence is stable for the minimal
//! solution at every order, so the table is accurate both below and above the
//! turning point `n ≈ |x|`.

/// `J_n(x)` for all integer `n` in `-n_max..=n_max` at a fixed argument.
#[derive(Debug, Clone)]
pub struct BesselTable {
    x: f64,
    values: Vec<f64>,
}

impl BesselTable {
    pub fn new(x: f64, n_max: usize) -> Self {
        let ax = x.abs();
        let mut values = jn_nonneg(ax, n_max);
        if x < 0.0 {
            for (n, v) in values.iter_mut().enumerate() {
                if n % 2 == 1 {
                    *v = -*v;
                }
            }
        }
        Self { x, values }
    }

    pub fn arg(&self) -> f64 {
        self.x
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `J_n(x)`; zero for `|n| > n_max`.
    #[inline]
    pub fn get(&self, n: i64) -> f64 {
        let a = n.unsigned_abs() as usize;
        match self.values.get(a) {
            Some(&v) if n < 0 && a % 2 == 1 => -v,
            Some(&v) => v,
            None => 0.0,
        }
    }
}

/// Single value `J_n(x)`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    BesselTable::new(x, n.unsigned_abs() as usize).get(n)
}

fn jn_nonneg(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let reach = (n_max as f64).max(x);
    let mut start = (reach + 20.0 + (60.0 * reach).sqrt()).ceil() as usize;
    start += start % 2;

    const BIG: f64 = 1e250;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k
    let mut even_sum = 0.0; // Σ_{k even > 0} J_k
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        if k <= n_max {
            out[k] = j_cur;
        }
        if k % 2 == 0 {
            even_sum += j_cur;
        }
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > BIG {
            j_cur /= BIG;
            j_next /= BIG;
            even_sum /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
    }
    out[0] = j_cur;
    let norm = j_cur + 2.0 * even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Upper bound on `Σ_{|n| > n_trunc} |J_n(x)|`, from
/// `|J_n(x)| ≤ (|x|/2)^n / n!` and a geometric majorant of the tail.
/// Infinite when the majorant does not apply (`n_trunc + 2 ≤ |x|/2`).
pub fn tail_bound(x: f64, n_trunc: usize) -> f64 {
    let h = 0.5 * x.abs();
    if h == 0.0 {
        return 0.0;
    }
    let ratio = h / (n_trunc as f64 + 2.0);
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    let n = n_trunc + 1;
    let ln_first = n as f64 * h.ln() - ln_factorial(n);
    2.0 * ln_first.exp() / (1.0 - ratio)
}

/// Smallest truncation from the doubling schedule `max(8, ⌈|x|⌉ + 10), ×2, ...`
/// whose tail bound is below `tol`, or `None` past `cap`.
pub fn truncation_for(x: f64, tol: f64, cap: usize) -> Option<usize> {
    let mut n = 8usize.max(x.abs().ceil() as usize + 10);
    loop {
        if n > cap {
            return if tail_bound(x, cap) < tol { Some(cap) } else { None };
        }
        if tail_bound(x, n) < tol {
            return Some(n);
        }
        n *= 2;
    }
}
