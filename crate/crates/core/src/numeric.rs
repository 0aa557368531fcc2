//! Small numerical helpers shared across modules.

/// Neumaier-compensated running sum. Order of accumulation is the order of
/// `add` calls, so results are reproducible for a fixed input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice in index order.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated sum of `f(i)` over `0..len` in index order.
pub fn compensated_sum_by(len: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..len {
        acc.add(f(i));
    }
    acc.value()
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_lost_bits() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&xs), 2.0);
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn sum_by_matches_slice() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        assert_eq!(compensated_sum(&xs), compensated_sum_by(100, |i| xs[i]));
    }
}
