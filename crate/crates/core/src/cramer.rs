//! Generalized Cramér urn model.
//!
//! Urn `i` holds a white ball with probability `p_i`; one ball is drawn from
//! every urn independently. The number of white balls among urns `i₀..=x`
//! models the count of prime constellations with first element up to `x`.
//!
//! Randomness is counter-based: the draw for urn `i` in a trial with seed `s`
//! is `splitmix64(s + i·γ)`, so outcomes do not depend on evaluation order
//! or on how many workers run the trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::sum_range_multi;
use crate::stats::normal_cdf;

/// Weyl increment of SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t` in a batch started from `seed`:
/// `mix64(seed ^ mix64((t + 1)·γ))`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix64(seed ^ mix64(trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform draw in `[0, 1)` for urn `i` under `seed`.
#[inline]
pub fn urn_uniform(seed: u64, i: u64) -> f64 {
    let bits = mix64(seed.wrapping_add(i.wrapping_mul(GOLDEN_GAMMA)));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Mean, variance and standard deviation of a count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub mean: f64,
    pub variance: f64,
    pub sd: f64,
}

impl MomentEstimates {
    pub fn new(mean: f64, variance: f64) -> Self {
        // rounding can leave a tiny negative variance for degenerate inputs
        let variance = if variance < 0.0 && variance > -1e-9 * mean.abs().max(1.0) {
            0.0
        } else {
            variance
        };
        Self {
            mean,
            variance,
            sd: variance.sqrt(),
        }
    }
}

/// Success-probability law of the urns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UrnLaw {
    /// `p_i = 1 / ln i`
    Classic,
    /// `p_i = C / ln^k i`
    Tuple { constant: f64, k: u32 },
    /// `p_i = C / (h_1⋯h_r) / ln^r i`
    BatemanHorn {
        constant: f64,
        degree_product: f64,
        r: u32,
    },
    /// `p_i = p` for every urn.
    Constant { p: f64 },
}

impl UrnLaw {
    #[inline]
    pub fn probability(&self, i: u64) -> f64 {
        let l = (i as f64).ln();
        match *self {
            UrnLaw::Classic => 1.0 / l,
            UrnLaw::Tuple { constant, k } => constant / l.powi(k as i32),
            UrnLaw::BatemanHorn {
                constant,
                degree_product,
                r,
            } => constant / degree_product / l.powi(r as i32),
            UrnLaw::Constant { p } => p,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            UrnLaw::Classic => true,
            UrnLaw::Tuple { constant, k } => constant > 0.0 && constant.is_finite() && k >= 1,
            UrnLaw::BatemanHorn {
                constant,
                degree_product,
                r,
            } => constant > 0.0 && constant.is_finite() && degree_product >= 1.0 && r >= 1,
            UrnLaw::Constant { p } => (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid urn law {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnModel {
    pub law: UrnLaw,
    /// First urn taking part; every `p_i` with `i >= start` lies in `[0, 1]`.
    pub start: u64,
}

impl UrnModel {
    /// Model starting at the smallest urn index `>= 2` with `p_i <= 1`.
    pub fn new(law: UrnLaw) -> Result<Self> {
        law.validate()?;
        let start = minimal_start(&law);
        Ok(Self { law, start })
    }

    /// Model with an explicit first urn, which must not precede the minimal one.
    pub fn with_start(law: UrnLaw, start: u64) -> Result<Self> {
        let m = Self::new(law)?;
        if start < m.start {
            return Err(Error::Domain(format!(
                "urn {start} would need p_i = {} > 1; the first admissible urn is {}",
                law.probability(start.max(2)),
                m.start
            )));
        }
        Ok(Self { law, start })
    }

    pub fn classic() -> Self {
        Self::new(UrnLaw::Classic).expect("classic law is valid")
    }

    pub fn probability(&self, i: u64) -> f64 {
        self.law.probability(i)
    }

    fn check_range(&self, x: u64) -> Result<()> {
        if x < self.start {
            return Err(Error::Domain(format!(
                "x = {x} precedes the first urn {}",
                self.start
            )));
        }
        Ok(())
    }
}

/// `p_i` is nonincreasing in `i`, so the first `i` with `p_i <= 1` starts a
/// run that never leaves `[0, 1]`.
fn minimal_start(law: &UrnLaw) -> u64 {
    let guess = match *law {
        UrnLaw::Classic => 3.0,
        UrnLaw::Tuple { constant, k } => constant.powf(1.0 / k as f64).exp(),
        UrnLaw::BatemanHorn {
            constant,
            degree_product,
            r,
        } => (constant / degree_product).powf(1.0 / r as f64).exp(),
        UrnLaw::Constant { .. } => 2.0,
    };
    let mut i = (guess.floor() as u64).max(2);
    while i > 2 && law.probability(i - 1) <= 1.0 {
        i -= 1;
    }
    while law.probability(i) > 1.0 {
        i += 1;
    }
    i
}

/// Exact mean `Σ p_i` and variance `Σ p_i − Σ p_i²` over urns `start..=x`.
pub fn moments(m: &UrnModel, x: u64) -> Result<MomentEstimates> {
    m.check_range(x)?;
    let [s1, s2] = sum_range_multi(m.start, x, |i| {
        let p = m.probability(i);
        [p, p * p]
    });
    Ok(MomentEstimates::new(s1, s1 - s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCheck {
    pub n: u64,
    /// `D_n = Σ (p_i − p_i²)`
    pub variance: f64,
    /// `Σ E|x_i − p_i|³ / D_n^{3/2}`
    pub ratio: f64,
    /// `1 / √D_n`
    pub bound: f64,
}

/// Lyapunov ratio with the exact third absolute central moment of a
/// Bernoulli variable, `(1 − p)³ p + p³ (1 − p)`.
pub fn lyapunov_ratio(m: &UrnModel, n: u64) -> Result<LyapunovCheck> {
    m.check_range(n)?;
    let [var, third] = sum_range_multi(m.start, n, |i| {
        let p = m.probability(i);
        let q = 1.0 - p;
        let v = p * q;
        [v, v * (q * q + p * p)]
    });
    if var <= 0.0 {
        return Err(Error::Degenerate(
            "variance is zero; every urn is deterministic".into(),
        ));
    }
    Ok(LyapunovCheck {
        n,
        variance: var,
        ratio: third / var.powf(1.5),
        bound: 1.0 / var.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub count: u64,
    /// Urns that produced a white ball, increasing.
    pub positions: Option<Vec<u64>>,
}

/// One realization of the model over urns `start..=x`, positions included.
pub fn simulate(m: &UrnModel, x: u64, seed: u64) -> Result<SimOutcome> {
    m.check_range(x)?;
    let positions: Vec<u64> = (m.start..=x)
        .filter(|&i| urn_uniform(seed, i) < m.probability(i))
        .collect();
    Ok(SimOutcome {
        count: positions.len() as u64,
        positions: Some(positions),
    })
}

fn simulate_count(probs: &[f64], start: u64, seed: u64) -> u64 {
    probs
        .iter()
        .enumerate()
        .filter(|&(j, &p)| urn_uniform(seed, start + j as u64) < p)
        .count() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub x: u64,
    pub trials: u64,
    pub seed: u64,
    pub exact: MomentEstimates,
    pub empirical_mean: f64,
    /// Unbiased sample variance.
    pub empirical_var: f64,
    /// `(count − exact mean) / exact sd`; all zero when the model is deterministic.
    pub z_scores: Vec<f64>,
    /// Kolmogorov-Smirnov distance between the z-scores and N(0, 1).
    pub ks_statistic: f64,
}

/// `trials` independent realizations, trial `t` seeded by [`trial_seed`].
pub fn simulate_batch(m: &UrnModel, x: u64, trials: u64, seed: u64) -> Result<BatchSummary> {
    if trials < 2 {
        return Err(Error::Domain(format!("need at least 2 trials, got {trials}")));
    }
    m.check_range(x)?;
    let exact = moments(m, x)?;
    let probs: Vec<f64> = (m.start..=x).map(|i| m.probability(i)).collect();
    let counts: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| simulate_count(&probs, m.start, trial_seed(seed, t)))
        .collect();

    let n = trials as f64;
    let empirical_mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let empirical_var = counts
        .iter()
        .map(|&c| (c as f64 - empirical_mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let z_scores: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if exact.sd > 0.0 {
                (c as f64 - exact.mean) / exact.sd
            } else {
                0.0
            }
        })
        .collect();
    let ks_statistic = ks_against_normal(&z_scores);
    Ok(BatchSummary {
        x,
        trials,
        seed,
        exact,
        empirical_mean,
        empirical_var,
        z_scores,
        ks_statistic,
    })
}

/// `sup |F_n(z) − Φ(z)|` for the empirical distribution of `sample`.
pub fn ks_against_normal(sample: &[f64]) -> f64 {
    let mut z = sample.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal_cdf(v);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
