//! Standard normal distribution and deviation rows.

use serde::{Deserialize, Serialize};

use crate::cramer::MomentEstimates;
use crate::error::{Error, Result};

/// Φ(s). The upper tail comes from `erfc`, and Φ(−s) is computed as the
/// complement of Φ(s), so the symmetry holds by construction.
pub fn normal_cdf(s: f64) -> f64 {
    let upper = 0.5 * libm::erfc(s.abs() / std::f64::consts::SQRT_2);
    if s < 0.0 {
        upper
    } else {
        1.0 - upper
    }
}

/// Probability that a standard normal variable lies in `(−s, s)`.
pub fn two_sided(s: f64) -> f64 {
    2.0 * normal_cdf(s.abs()) - 1.0
}

/// Inverse of [`normal_cdf`] by bisection; accurate to about 1e-12.
pub fn normal_quantile(q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "quantile level must lie in (0, 1)");
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// One row of a deviation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub x: u64,
    pub actual: u64,
    pub predicted: f64,
    pub predicted_rounded: i64,
    /// `predicted − actual`
    pub difference: f64,
    pub sd: f64,
    pub z: f64,
    /// `2Φ(|z|) − 1`
    pub band_probability: f64,
}

pub fn deviation_row(x: u64, actual: u64, estimates: &MomentEstimates) -> Result<DeviationRow> {
    if !(estimates.sd > 0.0) {
        return Err(Error::Degenerate(format!(
            "standard deviation at x = {x} is {}, cannot form a z-score",
            estimates.sd
        )));
    }
    let difference = estimates.mean - actual as f64;
    let z = difference / estimates.sd;
    Ok(DeviationRow {
        x,
        actual,
        predicted: estimates.mean,
        predicted_rounded: estimates.mean.round() as i64,
        difference,
        sd: estimates.sd,
        z,
        band_probability: two_sided(z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ from the Maclaurin series of erf, summed in f64 for moderate |s|.
    fn series_cdf(s: f64) -> f64 {
        let x = s / std::f64::consts::SQRT_2;
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        assert!((two_sided(3.0) - 0.9973002).abs() < 1e-6);
        for s in [-3.0, -1.0, -0.3, 0.2, 1.5, 2.5, 3.5] {
            assert!((normal_cdf(s) - series_cdf(s)).abs() < 1e-7, "s = {s}");
        }
    }

    #[test]
    fn symmetry_and_tails() {
        for i in 0..=800 {
            let s = i as f64 * 0.01;
            assert!((normal_cdf(-s) + normal_cdf(s) - 1.0).abs() < 1e-12);
        }
        assert!(normal_cdf(8.0) > 1.0 - 1e-14);
        let mut prev = 0.0;
        for i in -1000..=1000 {
            let v = normal_cdf(i as f64 * 0.01);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for q in [0.001, 0.1, 0.5, 0.975, 0.999] {
            assert!((normal_cdf(normal_quantile(q)) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rows() {
        let row = deviation_row(100_000, 1224, &MomentEstimates::new(1249.0, 35.0 * 35.0)).unwrap();
        assert_eq!(row.difference, 25.0);
        assert!((row.z - 0.714).abs() < 1e-3);
        assert_eq!(row.predicted_rounded, 1249);

        let row = deviation_row(10_000_000, 58980, &MomentEstimates::new(58754.0, 242.0 * 242.0)).unwrap();
        assert_eq!(row.difference, -226.0);
        assert!((row.z + 0.934).abs() < 1e-3);

        let row = deviation_row(10, 5, &MomentEstimates::new(5.0, 4.0)).unwrap();
        assert_eq!(row.z, 0.0);
        assert_eq!(row.band_probability, 0.0);

        assert!(matches!(
            deviation_row(10, 5, &MomentEstimates::new(5.0, 0.0)),
            Err(Error::Degenerate(_))
        ));
    }
}
