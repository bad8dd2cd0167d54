//! Prime k-tuple patterns: admissibility, local root counts, the singular
//! series constant, exact counts and the predicted moments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cramer::MomentEstimates;
use crate::error::{Error, Result};
use crate::euler::{
    finish, log_product_range, LocalRootCounter, SingularSeriesResult, Stabilization,
};
use crate::logint::{log_integral, LogIntegralQuery, DEFAULT_REL_TOL};
use crate::primes::{sieve_primes, PrimeTable};

/// Offsets `0 < 2m_1 < … < 2m_{k−1}` of a constellation `n, n + 2m_1, …`.
/// The leading 0 is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct TuplePattern {
    offsets: Vec<u64>,
}

impl TuplePattern {
    /// Build from the full element list, which must start with 0.
    pub fn new(elements: &[u64]) -> Result<Self> {
        match elements.split_first() {
            Some((0, rest)) => Self::from_offsets(rest),
            Some(_) => Err(Error::Usage(
                "pattern must start with 0, e.g. 0,4,6".into(),
            )),
            None => Err(Error::Usage("pattern is empty; try 0,2".into())),
        }
    }

    /// Build from the nonzero offsets only.
    pub fn from_offsets(offsets: &[u64]) -> Result<Self> {
        let mut prev = 0;
        for &o in offsets {
            if o % 2 != 0 {
                return Err(Error::Usage(format!("offset {o} is odd; offsets must be even")));
            }
            if o <= prev {
                return Err(Error::Usage(
                    "offsets must be strictly increasing and positive".into(),
                ));
            }
            if o >= 1 << 32 {
                return Err(Error::Usage(format!("offset {o} is too large")));
            }
            prev = o;
        }
        Ok(Self {
            offsets: offsets.to_vec(),
        })
    }

    /// Number of elements, counting the leading 0.
    pub fn k(&self) -> usize {
        self.offsets.len() + 1
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn max_offset(&self) -> u64 {
        self.offsets.last().copied().unwrap_or(0)
    }

    /// All elements including the leading 0.
    pub fn elements(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(0).chain(self.offsets.iter().copied())
    }

    /// Smallest prime `p ≤ k` whose residue classes are all covered, if any.
    pub fn obstructing_prime(&self) -> Option<u64> {
        let k = self.k() as u64;
        (2..=k)
            .filter(|&p| is_small_prime(p))
            .find(|&p| tuple_w(self, p) == p)
    }

    pub fn is_admissible(&self) -> bool {
        self.obstructing_prime().is_none()
    }
}

impl fmt::Display for TuplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements().map(|e| e.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for TuplePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let elements = s
            .split(',')
            .map(|t| {
                t.trim().parse::<u64>().map_err(|_| {
                    Error::Usage(format!(
                        "cannot parse pattern element {t:?} in {s:?}; expected e.g. 0,4,6"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&elements)
    }
}

impl TryFrom<Vec<u64>> for TuplePattern {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<TuplePattern> for Vec<u64> {
    fn from(t: TuplePattern) -> Self {
        t.elements().collect()
    }
}

fn is_small_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn is_admissible(t: &TuplePattern) -> bool {
    t.is_admissible()
}

/// Number of distinct residues of the pattern's elements modulo `p`, which
/// is the number of roots of `x (x + 2m_1) … (x + 2m_{k−1})` mod `p`.
pub fn tuple_w(t: &TuplePattern, p: u64) -> u64 {
    if p > t.max_offset() {
        return t.k() as u64;
    }
    let mut residues: Vec<u64> = t.elements().map(|e| e % p).collect();
    residues.sort_unstable();
    residues.dedup();
    residues.len() as u64
}

/// [`LocalRootCounter`] view of a pattern.
#[derive(Debug, Clone)]
pub struct TupleCounter<'a>(pub &'a TuplePattern);

impl LocalRootCounter for TupleCounter<'_> {
    fn w(&self, p: u64) -> u64 {
        tuple_w(self.0, p)
    }

    fn stabilization(&self) -> Stabilization {
        Stabilization {
            w_inf: self.0.k() as u64,
            threshold: Some(self.0.max_offset().max(2)),
        }
    }
}

/// `C = 2^{k−1} ∏_{2 < p ≤ P} (1 − w(p)/p) / (1 − 1/p)^k`.
///
/// An inadmissible pattern yields a vanished result rather than an error.
pub fn tuple_constant(t: &TuplePattern, prime_limit: u64) -> Result<SingularSeriesResult> {
    let table = sieve_primes(prime_limit.max(2))?;
    tuple_constant_with_table(t, prime_limit, &table)
}

pub fn tuple_constant_with_table(
    t: &TuplePattern,
    prime_limit: u64,
    table: &PrimeTable,
) -> Result<SingularSeriesResult> {
    if prime_limit < 2 {
        return Err(Error::Domain(format!(
            "prime limit must be at least 2, got {prime_limit}"
        )));
    }
    if let Some(p) = t.obstructing_prime() {
        return Ok(SingularSeriesResult::vanished_at(p, prime_limit));
    }
    let k = t.k() as u32;
    let counter = TupleCounter(t);
    let odd = match log_product_range(&counter, k, 3, prime_limit, table)? {
        Ok(l) => l,
        Err(p) => return Ok(SingularSeriesResult::vanished_at(p, prime_limit)),
    };
    let log_value = (k - 1) as f64 * std::f64::consts::LN_2 + odd;
    Ok(finish(&counter, k, prime_limit, log_value))
}

/// Number of `n ≤ x` such that `n + e` is prime for every element `e`.
pub fn count_prime_tuples(t: &TuplePattern, x: u64, table: &PrimeTable) -> Result<u64> {
    let need = x.checked_add(t.max_offset()).ok_or_else(|| {
        Error::Range(format!("x = {x} plus the largest offset overflows"))
    })?;
    if table.limit() < need {
        return Err(Error::Range(format!(
            "counting pattern {t} up to {x} needs primes to {need}, table reaches {}",
            table.limit()
        )));
    }
    const BLOCK: u64 = 1 << 20;
    let blocks = x / BLOCK + 1;
    let count = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK - 1).min(x);
            table
                .primes_in(lo, hi)
                .filter(|&n| t.offsets().iter().all(|&o| table.is_prime(n + o)))
                .count() as u64
        })
        .sum();
    Ok(count)
}

/// Predicted mean `C · I_k(x)` and variance `C · I_k(x) − C² · I_{2k}(x)`.
pub fn predicted_tuples(t: &TuplePattern, x: f64, prime_limit: u64) -> Result<MomentEstimates> {
    let c = tuple_constant(t, prime_limit)?;
    predicted_from_constant(&c, t.k() as u32, 1.0, x, DEFAULT_REL_TOL)
}

/// Mean and variance for a density `scale / ln^r t` with
/// `scale = C / degree_product`.
pub(crate) fn predicted_from_constant(
    c: &SingularSeriesResult,
    r: u32,
    degree_product: f64,
    x: f64,
    rel_tol: f64,
) -> Result<MomentEstimates> {
    if c.vanished {
        return Err(match c.vanishing_prime {
            Some(p) => Error::Degenerate(format!(
                "singular series vanishes: every residue class mod {p} is blocked"
            )),
            None => Error::Degenerate("singular series vanishes".into()),
        });
    }
    let scale = c.value / degree_product;
    let first = log_integral(&LogIntegralQuery::with_tolerance(x, r, rel_tol)?)?;
    let second = log_integral(&LogIntegralQuery::with_tolerance(x, 2 * r, rel_tol)?)?;
    Ok(MomentEstimates::new(scale * first, scale * first - scale * scale * second))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> TuplePattern {
        s.parse().unwrap()
    }

    #[test]
    fn parsing_and_validation() {
        assert_eq!(pat("0,4,6").offsets(), &[4, 6]);
        assert_eq!(pat("0").k(), 1);
        assert_eq!(pat("0, 2").to_string(), "0,2");
        assert!("0,3".parse::<TuplePattern>().is_err());
        assert!("2,4".parse::<TuplePattern>().is_err());
        assert!("0,6,4".parse::<TuplePattern>().is_err());
        assert!("0,a".parse::<TuplePattern>().is_err());
        assert!("".parse::<TuplePattern>().is_err());
    }

    #[test]
    fn admissibility() {
        assert!(pat("0,2").is_admissible());
        assert!(!pat("0,2,4").is_admissible());
        assert_eq!(pat("0,2,4").obstructing_prime(), Some(3));
        assert!(pat("0,4,6").is_admissible());
        assert!(pat("0,2,6").is_admissible());
        assert!(pat("0,2,6,8").is_admissible());
        assert!(!pat("0,2,4,6").is_admissible());
    }

    #[test]
    fn local_roots() {
        assert_eq!(tuple_w(&pat("0,2"), 3), 2);
        assert_eq!(tuple_w(&pat("0,4,6"), 5), 3);
        assert_eq!(tuple_w(&pat("0,4,6"), 2), 1);
        assert_eq!(tuple_w(&pat("0,4,6"), 3), 2);
        // brute force over x for the defining polynomial
        for p in [2u64, 3, 5, 7, 11, 13] {
            let t = pat("0,4,6,10,12");
            let brute = (0..p)
                .filter(|&x| t.elements().any(|e| (x + e) % p == 0))
                .count() as u64;
            assert_eq!(tuple_w(&t, p), brute, "p = {p}");
        }
    }

    #[test]
    fn constants() {
        assert_eq!(tuple_constant(&pat("0"), 1000).unwrap().value, 1.0);
        let twin = tuple_constant(&pat("0,2"), 1_000_000).unwrap();
        assert!((twin.value - 1.320_323_6).abs() < 1e-6);
        let bad = tuple_constant(&pat("0,2,4"), 1000).unwrap();
        assert!(bad.vanished && bad.value == 0.0);
    }

    #[test]
    fn small_twin_count() {
        let table = sieve_primes(100).unwrap();
        assert_eq!(count_prime_tuples(&pat("0,2"), 20, &table).unwrap(), 4);
        assert!(matches!(
            count_prime_tuples(&pat("0,2"), 99, &table),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn prediction_at_two_is_zero() {
        let m = predicted_tuples(&pat("0,4,6"), 2.0, 1000).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, 0.0);
    }

    #[test]
    fn inadmissible_prediction_is_degenerate() {
        assert!(matches!(
            predicted_tuples(&pat("0,2,4"), 1e4, 1000),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn serde_uses_element_list() {
        let json = serde_json::to_string(&pat("0,4,6")).unwrap();
        assert_eq!(json, "[0,4,6]");
        let back: TuplePattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pat("0,4,6"));
        assert!(serde_json::from_str::<TuplePattern>("[0,3]").is_err());
    }
}
