use num_complex::Complex64;

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

#[inline]
fn add(acc: &mut (f64, f64), x: f64) {
    let (s, c) = *acc;
    let t = s + x;
    let comp = if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
    *acc = (t, c + comp);
}

impl CompensatedSum {
    #[inline]
    pub fn push(&mut self, z: Complex64) {
        add(&mut self.re, z.re);
        add(&mut self.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// Real compensated sum of an iterator.
pub fn sum_real(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = (0.0, 0.0);
    for x in it {
        add(&mut acc, x);
    }
    acc.0 + acc.1
}

/// `i^k` for integer `k`.
#[inline]
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}
