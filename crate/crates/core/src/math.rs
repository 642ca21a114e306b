//! Scalar helpers shared by the numerical modules.

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `ln C(k, n)` for `n <= k`.
pub fn ln_binomial(k: usize, n: usize) -> f64 {
    debug_assert!(n <= k);
    ln_factorial(k) - ln_factorial(n) - ln_factorial(k - n)
}

/// Probability that exactly `n` of `k` excitations are detected at efficiency `eta`.
pub fn binomial_weight(k: usize, n: usize, eta: f64) -> f64 {
    if n > k {
        return 0.0;
    }
    if eta >= 1.0 {
        return if n == k { 1.0 } else { 0.0 };
    }
    if eta <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let lw = ln_binomial(k, n) + n as f64 * libm::log(eta) + (k - n) as f64 * libm::log1p(-eta);
    libm::exp(lw)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of a slice.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
