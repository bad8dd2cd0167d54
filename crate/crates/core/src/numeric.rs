//! Deterministic compensated summation shared by the quadrature, Euler
//! product and urn-model code.

use rayon::prelude::*;

/// Block length for parallel sums. The partition never depends on the
/// number of worker threads, so the reduction order is fixed.
pub(crate) const SUM_BLOCK: u64 = 1 << 16;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of `term(i)` for `i` in `lo..=hi`, evaluated in fixed
/// blocks on the rayon pool and reduced in block order.
pub fn sum_range<F>(lo: u64, hi: u64, term: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    sum_range_multi::<1, _>(lo, hi, |i| [term(i)])[0]
}

/// Like [`sum_range`] but accumulates `N` series in one pass.
pub fn sum_range_multi<const N: usize, F>(lo: u64, hi: u64, term: F) -> [f64; N]
where
    F: Fn(u64) -> [f64; N] + Sync,
{
    if hi < lo {
        return [0.0; N];
    }
    let blocks = (hi - lo) / SUM_BLOCK + 1;
    let partials: Vec<[NeumaierSum; N]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = lo + b * SUM_BLOCK;
            let end = (start + SUM_BLOCK - 1).min(hi);
            let mut acc = [NeumaierSum::new(); N];
            for i in start..=end {
                let t = term(i);
                for (a, v) in acc.iter_mut().zip(t) {
                    a.add(v);
                }
            }
            acc
        })
        .collect();
    let mut out = [0.0; N];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut total = NeumaierSum::new();
        for p in &partials {
            total.add(p[j].sum);
            total.add(p[j].compensation);
        }
        *slot = total.value();
    }
    out
}
