//! Compensated floating-point summation for the alternating
//! inclusion-exclusion accumulations.

/// Kahan-Babuska-Neumaier compensated accumulator.
///
/// Unlike plain Kahan, the Neumaier variant stays accurate when an
/// addend is larger in magnitude than the running sum, which happens
/// routinely in the alternating-sign recursions here.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn sub(&mut self, x: f64) {
        self.add(-x);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sums a slice in index order with compensation.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
