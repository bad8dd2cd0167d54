//! Polynomial systems `f_1, …, f_r` and their Bateman-Horn constant,
//! exact prime-value counts and predicted moments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cramer::MomentEstimates;
use crate::error::{Error, Result};
use crate::euler::{
    euler_product_with_table, sum_over_primes, tail_factor, LocalRootCounter,
    SingularSeriesResult, Stabilization,
};
use crate::logint::DEFAULT_REL_TOL;
use crate::primes::{is_prime_64, sieve_primes, PrimeTable};
use crate::tuples::predicted_from_constant;

/// Largest prime limit used when `w(p)` has to be found by enumerating
/// residues.
pub const GENERIC_PRIME_CAP: u64 = 100_000;

/// Integer polynomial, coefficients constant term first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    pub fn new(coeffs: &[i64]) -> Result<Self> {
        let mut coeffs = coeffs.to_vec();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        match coeffs.last() {
            None => Err(Error::Usage("polynomial is zero".into())),
            Some(_) if coeffs.len() == 1 => Err(Error::Usage(
                "constant polynomials are not allowed; degree must be at least 1".into(),
            )),
            Some(&lead) if lead < 0 => Err(Error::Usage(format!(
                "leading coefficient must be positive, got {lead}"
            ))),
            Some(_) => Ok(Self { coeffs }),
        }
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Exact `f(n)`. Values outside `[i64::MIN, u64::MAX]` are an error.
    pub fn eval(&self, n: u64) -> Result<i128> {
        let overflow = || Error::Range(format!("evaluating {self} at n = {n} overflows 64 bits"));
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(n as i128)
                .and_then(|v| v.checked_add(c as i128))
                .ok_or_else(overflow)?;
        }
        if acc > u64::MAX as i128 || acc < i64::MIN as i128 {
            return Err(overflow());
        }
        Ok(acc)
    }

    /// `f(n) mod p` in `[0, p)`.
    pub fn eval_mod(&self, n: u64, p: u64) -> u64 {
        let p128 = p as u128;
        let n = (n % p) as u128;
        let mut acc: u128 = 0;
        for &c in self.coeffs.iter().rev() {
            let c = (c as i128).rem_euclid(p as i128) as u128;
            acc = (acc * n + c) % p128;
        }
        acc as u64
    }

    fn is_n_squared_plus_one(&self) -> bool {
        self.coeffs == [1, 0, 1]
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let body = match (i, c.abs()) {
                (0, a) => a.to_string(),
                (1, 1) => "n".to_string(),
                (1, a) => format!("{a}n"),
                (_, 1) => format!("n^{i}"),
                (_, a) => format!("{a}n^{i}"),
            };
            let sign = if c < 0 { "-" } else { "+" };
            if terms.is_empty() {
                terms.push(if c < 0 { format!("-{body}") } else { body });
            } else {
                terms.push(format!("{sign} {body}"));
            }
        }
        f.write_str(&terms.join(" "))
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim().parse::<i64>().map_err(|_| {
                    Error::Usage(format!(
                        "cannot parse coefficient {t:?} in {s:?}; expected constant-first \
                         coefficients such as 1,0,1 for n^2+1"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&coeffs)
    }
}

impl TryFrom<Vec<i64>> for IntPolynomial {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<IntPolynomial> for Vec<i64> {
    fn from(p: IntPolynomial) -> Self {
        p.coeffs
    }
}

pub fn poly_eval(f: &IntPolynomial, n: u64) -> Result<i128> {
    f.eval(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<IntPolynomial>", into = "Vec<IntPolynomial>")]
pub struct PolynomialSystem {
    polys: Vec<IntPolynomial>,
}

impl PolynomialSystem {
    pub fn new(polys: Vec<IntPolynomial>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::Usage("polynomial system is empty".into()));
        }
        Ok(Self { polys })
    }

    /// The system `{n, n + e_1, …}` for a tuple pattern's elements.
    pub fn from_shifts(elements: impl IntoIterator<Item = u64>) -> Result<Self> {
        let polys = elements
            .into_iter()
            .map(|e| {
                let e = i64::try_from(e).map_err(|_| Error::Usage(format!("shift {e} too large")))?;
                IntPolynomial::new(&[e, 1])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(polys)
    }

    pub fn polys(&self) -> &[IntPolynomial] {
        &self.polys
    }

    pub fn r(&self) -> u32 {
        self.polys.len() as u32
    }

    /// `h_1 · … · h_r`.
    pub fn degree_product(&self) -> f64 {
        self.polys.iter().map(|f| f.degree() as f64).product()
    }

    pub fn is_linear(&self) -> bool {
        self.polys.iter().all(|f| f.degree() == 1)
    }

    /// True when some polynomial appears more than once.
    pub fn has_repeats(&self) -> bool {
        self.polys
            .iter()
            .enumerate()
            .any(|(i, f)| self.polys[..i].contains(f))
    }

    fn is_n_squared_plus_one(&self) -> bool {
        self.polys.len() == 1 && self.polys[0].is_n_squared_plus_one()
    }
}

impl fmt::Display for PolynomialSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .polys
            .iter()
            .map(|p| {
                p.coeffs()
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for PolynomialSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let polys = s
            .split(';')
            .map(str::parse)
            .collect::<Result<Vec<IntPolynomial>>>()?;
        Self::new(polys)
    }
}

impl TryFrom<Vec<IntPolynomial>> for PolynomialSystem {
    type Error = Error;

    fn try_from(v: Vec<IntPolynomial>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PolynomialSystem> for Vec<IntPolynomial> {
    fn from(s: PolynomialSystem) -> Self {
        s.polys
    }
}

/// `#{n mod p : f_1(n) ⋯ f_r(n) ≡ 0}` by enumerating residues.
pub fn system_roots_mod_p(s: &PolynomialSystem, p: u64) -> u64 {
    if p >= 1 << 32 {
        return (0..p)
            .filter(|&n| s.polys.iter().any(|f| f.eval_mod(n, p) == 0))
            .count() as u64;
    }
    // reduce once; with p < 2^32 every Horner step fits in u64
    let reduced: Vec<Vec<u64>> = s
        .polys
        .iter()
        .map(|f| {
            f.coeffs
                .iter()
                .rev()
                .map(|&c| (c as i128).rem_euclid(p as i128) as u64)
                .collect()
        })
        .collect();
    (0..p)
        .filter(|&n| {
            reduced
                .iter()
                .any(|cs| cs.iter().fold(0u64, |acc, &c| (acc * n + c) % p) == 0)
        })
        .count() as u64
}

/// `w(p)` for `n² + 1`, i.e. `1 + (−1/p)` for odd `p`.
pub fn nsq_plus_one_w(p: u64) -> u64 {
    match p % 4 {
        _ if p == 2 => 1,
        1 => 2,
        _ => 0,
    }
}

/// Root counter that enumerates residues.
#[derive(Debug, Clone)]
pub struct BruteForceCounter<'a>(pub &'a PolynomialSystem);

impl LocalRootCounter for BruteForceCounter<'_> {
    fn w(&self, p: u64) -> u64 {
        system_roots_mod_p(self.0, p)
    }

    fn stabilization(&self) -> Stabilization {
        Stabilization {
            w_inf: self.0.r() as u64,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NsqPlusOneCounter;

impl LocalRootCounter for NsqPlusOneCounter {
    fn w(&self, p: u64) -> u64 {
        nsq_plus_one_w(p)
    }

    fn stabilization(&self) -> Stabilization {
        Stabilization {
            w_inf: 1,
            threshold: None,
        }
    }
}

/// Closed-form counter for systems of linear polynomials `a n + b`.
#[derive(Debug, Clone)]
pub struct LinearCounter {
    /// (a, b) pairs
    lines: Vec<(i64, i64)>,
    stab: Stabilization,
}

impl LinearCounter {
    pub fn new(s: &PolynomialSystem) -> Option<Self> {
        if !s.is_linear() {
            return None;
        }
        let lines: Vec<(i64, i64)> = s.polys.iter().map(|f| (f.coeffs[1], f.coeffs[0])).collect();
        // Past every |a_i| and every nonzero |a_i b_j − a_j b_i|, the roots are
        // defined and distinct except for proportional pairs.
        let mut threshold: u128 = 2;
        let mut classes = 0u64;
        for (i, &(a, b)) in lines.iter().enumerate() {
            threshold = threshold.max(a.unsigned_abs() as u128);
            let mut fresh = true;
            for &(c, d) in &lines[..i] {
                let res = (a as i128 * d as i128 - c as i128 * b as i128).unsigned_abs();
                if res == 0 {
                    fresh = false;
                }
                threshold = threshold.max(res);
            }
            if fresh {
                classes += 1;
            }
        }
        Some(Self {
            lines,
            stab: Stabilization {
                w_inf: classes,
                threshold: u64::try_from(threshold).ok(),
            },
        })
    }
}

impl LocalRootCounter for LinearCounter {
    fn w(&self, p: u64) -> u64 {
        let m = p as i128;
        let mut roots: Vec<(i128, i128)> = Vec::with_capacity(self.lines.len());
        for &(a, b) in &self.lines {
            let a = (a as i128).rem_euclid(m);
            let b = (b as i128).rem_euclid(m);
            if a == 0 {
                if b == 0 {
                    return p;
                }
                continue;
            }
            // a n + b and c n + d share a root iff a d ≡ c b
            if !roots.iter().any(|&(c, d)| (a * d - c * b).rem_euclid(m) == 0) {
                roots.push((a, b));
            }
        }
        roots.len() as u64
    }

    fn stabilization(&self) -> Stabilization {
        self.stab
    }
}

/// Which route produced a Bateman-Horn constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMethod {
    /// `n² + 1`: `4/π` times an absolutely convergent product.
    NsqPlusOne,
    Linear,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BhConstant {
    pub result: SingularSeriesResult,
    pub method: ConstantMethod,
}

/// `C(f_1, …, f_r) = ∏_p (1 − w(p)/p)(1 − 1/p)^{−r}`.
///
/// The generic path enumerates residues and clamps the prime limit to
/// [`GENERIC_PRIME_CAP`]; the reported `prime_limit` is the one actually used.
pub fn bh_constant(s: &PolynomialSystem, prime_limit: u64) -> Result<BhConstant> {
    if prime_limit < 2 {
        return Err(Error::Domain(format!(
            "prime limit must be at least 2, got {prime_limit}"
        )));
    }
    let (limit, method) = if s.is_n_squared_plus_one() {
        (prime_limit, ConstantMethod::NsqPlusOne)
    } else if s.is_linear() {
        (prime_limit, ConstantMethod::Linear)
    } else {
        (prime_limit.min(GENERIC_PRIME_CAP), ConstantMethod::BruteForce)
    };
    let table = sieve_primes(limit)?;
    let result = match method {
        ConstantMethod::NsqPlusOne => nsq_plus_one_constant(limit, &table),
        ConstantMethod::Linear => {
            let counter = LinearCounter::new(s).expect("system is linear");
            euler_product_with_table(&counter, s.r(), limit, &table)?
        }
        ConstantMethod::BruteForce => {
            euler_product_with_table(&BruteForceCounter(s), s.r(), limit, &table)?
        }
    };
    Ok(BhConstant { result, method })
}

/// Constant for `n² + 1`.
///
/// With `χ` the nontrivial character mod 4, each odd local factor is
/// `(1 − χ(p)/p) · g(p)` where
/// `g(p) = 1 − χ(p) / (p² (1 − 1/p)(1 − χ(p)/p))`.
/// The first part multiplies out to `1 / L(1, χ) = 4/π`, leaving a product
/// whose terms are `1 + O(p^{−2})`. The factor at `p = 2` is 1.
pub fn nsq_plus_one_constant(prime_limit: u64, table: &PrimeTable) -> SingularSeriesResult {
    let log_g = sum_over_primes(table, 3, prime_limit, |p| {
        let pf = p as f64;
        let chi = if p % 4 == 1 { 1.0 } else { -1.0 };
        (-chi / (pf * pf * (1.0 - 1.0 / pf) * (1.0 - chi / pf))).ln_1p()
    });
    let value = 4.0 / std::f64::consts::PI * log_g.exp();
    SingularSeriesResult {
        value,
        prime_limit,
        // |ln g(p)| < 2 / p² for p > 3
        tail_factor_bound: tail_factor(2, prime_limit),
        tail_rigorous: true,
        vanished: false,
        vanishing_prime: None,
    }
}

/// Number of `n` in `[n_start, x]` with every `f_j(n)` prime.
///
/// Values within the table's range are looked up; larger ones go through
/// [`is_prime_64`].
pub fn count_prime_values(
    s: &PolynomialSystem,
    x: u64,
    n_start: u64,
    table: &PrimeTable,
) -> Result<u64> {
    if x < n_start {
        return Ok(0);
    }
    const BLOCK: u64 = 1 << 14;
    let blocks = (x - n_start) / BLOCK + 1;
    let partials: Vec<Result<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = n_start + b * BLOCK;
            let hi = (lo + BLOCK - 1).min(x);
            let mut count = 0;
            'arg: for n in lo..=hi {
                for f in &s.polys {
                    let v = f.eval(n)?;
                    if v < 2 {
                        continue 'arg;
                    }
                    let v = v as u64;
                    let prime = if v <= table.limit() {
                        table.is_prime(v)
                    } else {
                        is_prime_64(v)
                    };
                    if !prime {
                        continue 'arg;
                    }
                }
                count += 1;
            }
            Ok(count)
        })
        .collect();
    partials.into_iter().sum()
}

/// Mean `C/(h_1⋯h_r) · I_r(x)` and variance
/// `C/(h_1⋯h_r) · I_r(x) − C²/(h_1⋯h_r)² · I_{2r}(x)`.
pub fn bh_prediction(s: &PolynomialSystem, x: f64, prime_limit: u64) -> Result<MomentEstimates> {
    let c = bh_constant(s, prime_limit)?;
    predicted_from_constant(&c.result, s.r(), s.degree_product(), x, DEFAULT_REL_TOL)
}

pub fn bh_prediction_from_constant(
    s: &PolynomialSystem,
    c: &SingularSeriesResult,
    x: f64,
    rel_tol: f64,
) -> Result<MomentEstimates> {
    predicted_from_constant(c, s.r(), s.degree_product(), x, rel_tol)
}
