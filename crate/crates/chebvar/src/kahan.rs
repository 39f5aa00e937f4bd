//! Compensated summation.
//!
//! Variance runs aggregate on the order of 1e9 terms; plain f64 accumulation
//! loses digits long before the 1e-9 relative tolerances used throughout.

use num_complex::Complex64;

/// Kahan compensated accumulator for f64.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }

    /// True for a freshly reset accumulator that has absorbed no nonzero
    /// term; used by bucket loops to track touched cells.
    #[inline]
    pub fn is_zero(&self) -> bool {
        self.sum == 0.0 && self.comp == 0.0
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Componentwise Kahan accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `|a - b| <= rel * max(|a|,|b|) + abs_floor`, the comparison rule used by
/// every floating-point check in this crate (rel 1e-9, floor 1e-12 unless a
/// caller overrides).
pub fn approx_eq(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale + abs_floor
}

pub const REL_TOL: f64 = 1e-9;
pub const ABS_FLOOR: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        // 1e8 additions of 0.1 drift visibly under naive summation
        let n = 100_000_000u64;
        let mut naive = 0.0f64;
        let mut kahan = KahanSum::new();
        for _ in 0..n {
            naive += 0.1;
            kahan.add(0.1);
        }
        let exact = n as f64 * 0.1;
        assert!((kahan.value() - exact).abs() < 1e-4);
        assert!((kahan.value() - exact).abs() <= (naive - exact).abs());
    }

    #[test]
    fn approx_eq_floor() {
        assert!(approx_eq(0.0, 5e-13, REL_TOL, ABS_FLOOR));
        assert!(!approx_eq(1.0, 1.0 + 1e-6, REL_TOL, ABS_FLOOR));
        assert!(approx_eq(1e12, 1e12 + 100.0, REL_TOL, ABS_FLOOR));
    }
}
