//! Logarithmic-power integrals `I_r(x) = ∫_2^x dt / ln^r t` and the matching
//! sums `S_r(x) = Σ_{i=2}^x 1 / ln^r i`.
//!
//! The integral is evaluated in the variable `u = ln t`, where it becomes
//! `∫ e^u / u^r du` over `[ln 2, ln x]`. Equal-width panels in `u` are
//! geometrically growing panels in `t`. Each panel gets a 16-point
//! Gauss-Legendre rule and is bisected whenever the rule disagrees with the
//! sum of its two halves.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sum_range, NeumaierSum};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Panel width in `u = ln t`.
pub const DEFAULT_PANEL_WIDTH: f64 = 0.5;

/// Candidate constant in the sum-versus-integral bound `L · F(r + 1)`.
pub const GAP_BOUND_CONSTANT: f64 = 0.6203;

const MAX_BISECTION_DEPTH: u32 = 40;
const GAUSS_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogIntegralQuery {
    pub x: f64,
    pub r: u32,
    pub rel_tol: f64,
}

impl LogIntegralQuery {
    pub fn new(x: f64, r: u32) -> Result<Self> {
        Self::with_tolerance(x, r, DEFAULT_REL_TOL)
    }

    pub fn with_tolerance(x: f64, r: u32, rel_tol: f64) -> Result<Self> {
        let q = Self { x, r, rel_tol };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if !(self.x >= 2.0) || !self.x.is_finite() {
            return Err(Error::Domain(format!(
                "log integral needs x >= 2, got {}",
                self.x
            )));
        }
        if self.r == 0 {
            return Err(Error::Domain("log integral needs r >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(Error::Domain(format!(
                "relative tolerance must lie in (0, 1e-3), got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Nodes and weights of the Gauss-Legendre rule on [-1, 1], from Newton
/// iteration on the Legendre recurrence.
fn gauss_legendre() -> &'static [(f64, f64); GAUSS_ORDER] {
    static RULE: OnceLock<[(f64, f64); GAUSS_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_ORDER;
        let mut rule = [(0.0, 0.0); GAUSS_ORDER];
        for i in 0..n / 2 {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            rule[i] = (-z, w);
            rule[n - 1 - i] = (z, w);
        }
        rule
    })
}

fn integrand(u: f64, r: u32) -> f64 {
    u.exp() / u.powi(r as i32)
}

fn panel(a: f64, b: f64, r: u32) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = NeumaierSum::new();
    for &(node, weight) in gauss_legendre() {
        acc.add(weight * integrand(mid + half * node, r));
    }
    half * acc.value()
}

/// Adaptive bisection of one panel. Returns (value, error estimate).
fn adaptive_panel(a: f64, b: f64, r: u32, whole: f64, tol: f64, depth: u32) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let left = panel(a, m, r);
    let right = panel(m, b, r);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol * refined.abs() || depth >= MAX_BISECTION_DEPTH {
        return (refined, err);
    }
    let (l, el) = adaptive_panel(a, m, r, left, tol, depth + 1);
    let (rv, er) = adaptive_panel(m, b, r, right, tol, depth + 1);
    (l + rv, el + er)
}

/// `I_r(x)` to the query's relative tolerance.
pub fn log_integral(q: &LogIntegralQuery) -> Result<f64> {
    log_integral_with_panel_width(q, DEFAULT_PANEL_WIDTH)
}

/// Shorthand for `log_integral` at the default tolerance.
pub fn li_r(x: f64, r: u32) -> Result<f64> {
    log_integral(&LogIntegralQuery::new(x, r)?)
}

/// [`log_integral`] with an explicit panel width in `ln t`.
pub fn log_integral_with_panel_width(q: &LogIntegralQuery, width: f64) -> Result<f64> {
    q.validate()?;
    if q.x == 2.0 {
        return Ok(0.0);
    }
    let a = std::f64::consts::LN_2;
    let b = q.x.ln();
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = NeumaierSum::new();
    let mut err_total = 0.0;
    for j in 0..panels {
        let lo = a + j as f64 * h;
        let hi = if j + 1 == panels { b } else { lo + h };
        let whole = panel(lo, hi, q.r);
        let (v, e) = adaptive_panel(lo, hi, q.r, whole, q.rel_tol * 0.1, 0);
        total.add(v);
        err_total += e;
    }
    let value = total.value();
    let achieved = err_total / value.abs();
    if achieved > q.rel_tol {
        return Err(Error::Convergence {
            achieved,
            wanted: q.rel_tol,
        });
    }
    Ok(value)
}

/// `S_r(x) = Σ_{i=2}^x 1 / ln^r i`, compensated.
pub fn log_power_sum(x: u64, r: u32) -> Result<f64> {
    if x < 2 {
        return Err(Error::Domain(format!("log power sum needs x >= 2, got {x}")));
    }
    if r == 0 {
        return Err(Error::Domain("log power sum needs r >= 1".into()));
    }
    Ok(sum_range(2, x, |i| (i as f64).ln().powi(-(r as i32))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub x: u64,
    pub r: u32,
    pub sum: f64,
    pub integral: f64,
    /// `|S_r(x) − I_r(x)|`
    pub gap: f64,
    /// `L · F(r + 1)` with `F(t) = 1 / ln^r t`; reported, never enforced.
    pub bound_candidate: f64,
}

pub fn sum_integral_gap(x: u64, r: u32) -> Result<GapReport> {
    if x < 3 {
        return Err(Error::Domain(format!("gap needs x >= 3, got {x}")));
    }
    let sum = log_power_sum(x, r)?;
    let integral = li_r(x as f64, r)?;
    Ok(GapReport {
        x,
        r,
        sum,
        integral,
        gap: (sum - integral).abs(),
        bound_candidate: GAP_BOUND_CONSTANT * ((r + 1) as f64).ln().powi(-(r as i32)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre();
        let wsum: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
        // degree 30 is within reach of a 16-point rule
        let m: f64 = rule.iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert_relative_eq!(m, 2.0 / 31.0, epsilon = 1e-14);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(li_r(2.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(LogIntegralQuery::new(1.5, 1), Err(Error::Domain(_))));
        assert!(matches!(LogIntegralQuery::new(10.0, 0), Err(Error::Domain(_))));
        assert!(matches!(
            LogIntegralQuery::with_tolerance(10.0, 1, 1e-2),
            Err(Error::Domain(_))
        ));
        assert!(matches!(log_power_sum(1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn small_sums() {
        assert_relative_eq!(log_power_sum(2, 1).unwrap(), std::f64::consts::LOG2_E, epsilon = 1e-15);
        assert_relative_eq!(log_power_sum(3, 2).unwrap(), 2.909904, epsilon = 1e-6);
    }

    #[test]
    fn sum_exceeds_integral_by_less_than_one() {
        let s = log_power_sum(100_000, 1).unwrap();
        let i = li_r(1e5, 1).unwrap();
        assert!(s > i && s - i < 1.0, "S = {s}, I = {i}");
    }

    #[test]
    fn monotone_in_x_and_r() {
        let xs = [2.5, 3.0, 10.0, 1e3, 1e6];
        for r in 1..=6 {
            for w in xs.windows(2) {
                assert!(li_r(w[0], r).unwrap() < li_r(w[1], r).unwrap());
            }
        }
        // Below e the integrand grows with r, so small x is not monotone in r.
        for (x, rmax) in [(1e3, 4), (1e4, 5), (1e7, 6)] {
            for r in 1..rmax {
                assert!(li_r(x, r).unwrap() > li_r(x, r + 1).unwrap());
            }
        }
        assert!(li_r(10.0, 5).unwrap() > li_r(10.0, 4).unwrap());
    }

    #[test]
    fn reference_integrals() {
        // Values from an independent arbitrary-precision quadrature.
        for (x, r, want) in [
            (1e5, 1, 9628.76383727068),
            (1e7, 1, 664917.3598847887),
            (1e4, 4, 5.822494848416993),
            (10.0, 2, 3.6628809874152135),
            (1e7, 6, 4.0804222053183),
        ] {
            let got = li_r(x, r).unwrap();
            assert!(((got - want) / want).abs() < 1e-10, "x={x} r={r}: {got}");
        }
    }

    #[test]
    fn halving_panels_is_within_tolerance() {
        for (x, r) in [(1e5, 1), (1e6, 2), (1e8, 3), (1.4e7, 6)] {
            let q = LogIntegralQuery::new(x, r).unwrap();
            let a = log_integral_with_panel_width(&q, DEFAULT_PANEL_WIDTH).unwrap();
            let b = log_integral_with_panel_width(&q, DEFAULT_PANEL_WIDTH / 2.0).unwrap();
            assert!((a - b).abs() < q.rel_tol * a, "x={x} r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn gap_report() {
        let g = sum_integral_gap(1_000_000, 1).unwrap();
        assert!((g.gap - 0.838116645652917).abs() < 1e-6, "gap = {}", g.gap);
        let g5 = sum_integral_gap(100_000, 1).unwrap();
        assert!((g.gap - g5.gap).abs() < 0.05);
        let g2 = sum_integral_gap(100_000, 2).unwrap();
        assert!((g2.gap - 1.2668403009443).abs() < 1e-6, "gap = {}", g2.gap);
        let d = (sum_integral_gap(3, 1).unwrap().gap - sum_integral_gap(4, 1).unwrap().gap).abs();
        assert!(d < 1.0 / 4f64.ln());
        assert!(matches!(sum_integral_gap(2, 1), Err(Error::Domain(_))));
    }
}
