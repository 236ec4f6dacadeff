// SPDX-License-Identifier: Apache-2.0

//! Neumaier-compensated summation.

/// Running compensated sum; error stays O(ε) independent of term count.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, carry: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut s = CompensatedSum::new();
    s.extend(iter);
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        assert_eq!(sum([1.0, 1e100, 1.0, -1e100]), 2.0);
        let naive: f64 = [1.0, 1e100, 1.0, -1e100].iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn many_small_terms() {
        let s = sum(std::iter::repeat(0.1).take(1_000_000));
        assert!((s - 100_000.0).abs() < 1e-9);
    }
}
