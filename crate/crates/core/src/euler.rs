//! Truncated Euler products `∏_{p ≤ P} (1 − w(p)/p) (1 − 1/p)^{−r}` with a
//! tail estimate for the primes beyond `P`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::primes::{sieve_primes, PrimeTable};

/// Default truncation point for singular-series constants.
pub const DEFAULT_PRIME_LIMIT: u64 = 1_000_000;

/// Truncation point used when reproducing published tables.
pub const TABLE_PRIME_LIMIT: u64 = 10_000_000;

/// Primes handled per parallel block of the product.
const PRIME_BLOCK: u64 = 1 << 12;

/// Where the local root count settles down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stabilization {
    /// Value of `w(p)` for large `p` (exact past `threshold`, or on average).
    pub w_inf: u64,
    /// If set, `w(p) == w_inf` for every prime `p > threshold`.
    pub threshold: Option<u64>,
}

/// A map `p ↦ w(p)`: the number of residues mod `p` where the defining
/// product vanishes.
pub trait LocalRootCounter: Sync {
    fn w(&self, p: u64) -> u64;

    fn stabilization(&self) -> Stabilization;
}

impl<C: LocalRootCounter + ?Sized> LocalRootCounter for &C {
    fn w(&self, p: u64) -> u64 {
        (**self).w(p)
    }

    fn stabilization(&self) -> Stabilization {
        (**self).stabilization()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularSeriesResult {
    pub value: f64,
    pub prime_limit: u64,
    /// Multiplicative uncertainty contributed by primes above `prime_limit`.
    pub tail_factor_bound: f64,
    /// `false` when the tail estimate is heuristic.
    pub tail_rigorous: bool,
    pub vanished: bool,
    /// First prime with `w(p) = p`, when the product vanished.
    pub vanishing_prime: Option<u64>,
}

impl SingularSeriesResult {
    pub(crate) fn vanished_at(p: u64, prime_limit: u64) -> Self {
        Self {
            value: 0.0,
            prime_limit,
            tail_factor_bound: 1.0,
            tail_rigorous: true,
            vanished: true,
            vanishing_prime: Some(p),
        }
    }
}

/// Upper estimate of `Σ_{p > P} p^{−2}`.
pub fn prime_square_tail(prime_limit: u64) -> f64 {
    let p = prime_limit as f64;
    1.0 / (p * p.ln())
}

/// `exp(r (r − 1) Σ_{p>P} p^{−2})`.
pub fn tail_factor(r: u32, prime_limit: u64) -> f64 {
    let r = r as f64;
    (r * (r - 1.0) * prime_square_tail(prime_limit)).exp()
}

/// Sieves the primes up to `prime_limit` and evaluates the product.
pub fn euler_product<C: LocalRootCounter>(
    counter: &C,
    r: u32,
    prime_limit: u64,
) -> Result<SingularSeriesResult> {
    let table = sieve_primes(prime_limit.max(2))?;
    euler_product_with_table(counter, r, prime_limit, &table)
}

/// Log of one local factor, or `None` if the factor is zero.
#[inline]
pub(crate) fn log_factor(p: u64, w: u64, r: u32) -> Option<f64> {
    if w == p {
        return None;
    }
    let pf = p as f64;
    Some((-(w as f64) / pf).ln_1p() - r as f64 * (-1.0 / pf).ln_1p())
}

/// Sum of log factors over primes in `[lo, hi]`, or the first vanishing prime.
pub(crate) fn log_product_range<C: LocalRootCounter>(
    counter: &C,
    r: u32,
    lo: u64,
    hi: u64,
    table: &PrimeTable,
) -> Result<std::result::Result<f64, u64>> {
    if hi < lo {
        return Ok(Ok(0.0));
    }
    let blocks = (hi - lo) / PRIME_BLOCK + 1;
    let partials: Vec<Result<std::result::Result<NeumaierSum, u64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = lo + b * PRIME_BLOCK;
            let end = (start + PRIME_BLOCK - 1).min(hi);
            let mut acc = NeumaierSum::new();
            for p in table.primes_in(start, end) {
                let w = counter.w(p);
                if w > p {
                    return Err(Error::Contract(format!("w({p}) = {w} exceeds p")));
                }
                match log_factor(p, w, r) {
                    Some(l) => acc.add(l),
                    None => return Ok(Err(p)),
                }
            }
            Ok(Ok(acc))
        })
        .collect();
    let mut total = NeumaierSum::new();
    for part in partials {
        match part? {
            Ok(acc) => total.add(acc.value()),
            Err(p) => return Ok(Err(p)),
        }
    }
    Ok(Ok(total.value()))
}

/// Evaluates the product over the primes of an existing table.
pub fn euler_product_with_table<C: LocalRootCounter>(
    counter: &C,
    r: u32,
    prime_limit: u64,
    table: &PrimeTable,
) -> Result<SingularSeriesResult> {
    if prime_limit < 2 {
        return Err(Error::Domain(format!(
            "prime limit must be at least 2, got {prime_limit}"
        )));
    }
    if r == 0 {
        return Err(Error::Domain("Euler product needs r >= 1".into()));
    }
    if table.limit() < prime_limit {
        return Err(Error::Range(format!(
            "prime table reaches {} but the product needs {prime_limit}",
            table.limit()
        )));
    }
    let log_value = match log_product_range(counter, r, 2, prime_limit, table)? {
        Ok(l) => l,
        Err(p) => return Ok(SingularSeriesResult::vanished_at(p, prime_limit)),
    };
    Ok(finish(counter, r, prime_limit, log_value))
}

/// Compensated sum of `term(p)` over primes `p` in `[lo, hi]`, in fixed
/// blocks reduced in order.
pub(crate) fn sum_over_primes<F>(table: &PrimeTable, lo: u64, hi: u64, term: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    if hi < lo {
        return 0.0;
    }
    let blocks = (hi - lo) / PRIME_BLOCK + 1;
    let partials: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = lo + b * PRIME_BLOCK;
            let end = (start + PRIME_BLOCK - 1).min(hi);
            table.primes_in(start, end).map(&term).collect::<NeumaierSum>().value()
        })
        .collect();
    partials.into_iter().collect::<NeumaierSum>().value()
}

pub(crate) fn finish<C: LocalRootCounter>(
    counter: &C,
    r: u32,
    prime_limit: u64,
    log_value: f64,
) -> SingularSeriesResult {
    let stab = counter.stabilization();
    let rigorous = stab.w_inf == r as u64 && stab.threshold.is_some_and(|t| t <= prime_limit);
    SingularSeriesResult {
        value: log_value.exp(),
        prime_limit,
        tail_factor_bound: tail_factor(r, prime_limit),
        tail_rigorous: rigorous,
        vanished: false,
        vanishing_prime: None,
    }
}

/// A counter given by a closure, with a declared stabilization.
pub struct FnCounter<F> {
    f: F,
    stab: Stabilization,
}

impl<F: Fn(u64) -> u64 + Sync> FnCounter<F> {
    pub fn new(f: F, stab: Stabilization) -> Self {
        Self { f, stab }
    }
}

impl<F: Fn(u64) -> u64 + Sync> LocalRootCounter for FnCounter<F> {
    fn w(&self, p: u64) -> u64 {
        (self.f)(p)
    }

    fn stabilization(&self) -> Stabilization {
        self.stab
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twin() -> FnCounter<impl Fn(u64) -> u64 + Sync> {
        FnCounter::new(
            |p| if p == 2 { 1 } else { 2 },
            Stabilization {
                w_inf: 2,
                threshold: Some(2),
            },
        )
    }

    #[test]
    fn prime_counting_counter_is_one() {
        let c = FnCounter::new(
            |_| 1,
            Stabilization {
                w_inf: 1,
                threshold: Some(2),
            },
        );
        for limit in [2, 10, 1000, 100_000] {
            let res = euler_product(&c, 1, limit).unwrap();
            assert_eq!(res.value, 1.0);
            assert_eq!(res.tail_factor_bound, 1.0);
            assert!(res.tail_rigorous);
        }
    }

    #[test]
    fn twin_constant() {
        let res = euler_product(&twin(), 2, 1_000_000).unwrap();
        assert!((res.value - 1.3203).abs() < 1e-3);
        assert!((res.value - 1.320_323_6).abs() < 1e-6, "{}", res.value);
        assert!(res.tail_rigorous);
        assert!(res.tail_factor_bound > 1.0 && res.tail_factor_bound < 1.0 + 1e-6);
    }

    #[test]
    fn vanishing_factor() {
        let c = FnCounter::new(
            |p| if p == 3 { 3 } else { 1 },
            Stabilization {
                w_inf: 1,
                threshold: Some(3),
            },
        );
        let res = euler_product(&c, 1, 1000).unwrap();
        assert!(res.vanished);
        assert_eq!(res.value, 0.0);
        assert_eq!(res.vanishing_prime, Some(3));
    }

    #[test]
    fn oversized_root_count_is_contract_error() {
        let c = FnCounter::new(
            |p| if p == 5 { 6 } else { 1 },
            Stabilization {
                w_inf: 1,
                threshold: None,
            },
        );
        assert!(matches!(euler_product(&c, 1, 100), Err(Error::Contract(_))));
    }

    #[test]
    fn truncation_difference_within_tail_bound() {
        let table = sieve_primes(2_000_000).unwrap();
        for r in [2u32] {
            for limit in [1_000u64, 10_000, 100_000, 1_000_000] {
                let a = euler_product_with_table(&twin(), r, limit, &table).unwrap();
                let b = euler_product_with_table(&twin(), r, 2 * limit, &table).unwrap();
                assert!(
                    (b.value - a.value).abs() <= a.value * (a.tail_factor_bound - 1.0),
                    "P = {limit}"
                );
            }
        }
    }

    #[test]
    fn reversed_order_agrees() {
        let table = sieve_primes(1_000_000).unwrap();
        let c = twin();
        let forward = euler_product_with_table(&c, 2, 1_000_000, &table).unwrap().value;
        let mut primes = table.to_vec();
        primes.reverse();
        let mut acc = NeumaierSum::new();
        for p in primes {
            acc.add(log_factor(p, c.w(p), 2).unwrap());
        }
        let backward = acc.value().exp();
        assert!(((forward - backward) / forward).abs() < 1e-12);
    }

    #[test]
    fn heuristic_tail_is_flagged() {
        let c = FnCounter::new(
            |p| if p % 4 == 1 { 2 } else if p == 2 { 1 } else { 0 },
            Stabilization {
                w_inf: 1,
                threshold: None,
            },
        );
        let res = euler_product(&c, 1, 10_000).unwrap();
        assert!(!res.tail_rigorous);
        assert!(res.tail_factor_bound >= 1.0);
    }
}
