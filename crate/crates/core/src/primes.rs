//! Prime generation and primality testing.
//!
//! [`PrimeTable`] stores one bit per odd integer (bit `i` stands for `2i + 1`)
//! and is filled by a segmented sieve of Eratosthenes. Segments are
//! word-aligned slices of the bitmap, so they can be crossed off on separate
//! workers without any shared state; the result does not depend on the
//! segment size or the scheduling.
//!
//! [`is_prime_64`] is a deterministic Miller-Rabin test with the bases
//! 2, 3, …, 37, which is known to be exact for every 64-bit input.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Hard ceiling for [`sieve_primes`].
pub const MAX_SIEVE_LIMIT: u64 = 1 << 40;

/// Sieve tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Odd integers per segment. Rounded up to a multiple of 64.
    pub segment_odds: usize,
    /// Largest bitmap the sieve may allocate, in bytes.
    pub max_bytes: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_odds: 1 << 20,
            max_bytes: 1 << 31,
        }
    }
}

/// Exact primality for every integer in `0..=limit`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    bits: Vec<u64>,
}

impl std::fmt::Debug for PrimeTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrimeTable")
            .field("limit", &self.limit)
            .field("words", &self.bits.len())
            .finish()
    }
}

/// Sieve with the default configuration.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    sieve_primes_with(limit, SieveConfig::default())
}

pub fn sieve_primes_with(limit: u64, config: SieveConfig) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::Domain(format!("sieve limit must be at least 2, got {limit}")));
    }
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::Domain(format!(
            "sieve limit {limit} exceeds the cap of 2^40"
        )));
    }
    // odd integers 1, 3, ..., up to limit
    let odd_count = limit.div_ceil(2);
    let words = odd_count.div_ceil(64);
    let bytes = words.saturating_mul(8);
    if bytes > config.max_bytes as u64 {
        return Err(Error::Resource(format!(
            "sieving to {limit} needs {bytes} bytes, cap is {}",
            config.max_bytes
        )));
    }
    let words = words as usize;
    let seg_words = config.segment_odds.div_ceil(64).max(1);

    let base = small_odd_primes(isqrt(limit));
    let mut bits = vec![u64::MAX; words];
    bits.par_chunks_mut(seg_words)
        .enumerate()
        .for_each(|(seg, chunk)| {
            let lo_idx = (seg * seg_words * 64) as u64;
            cross_off_segment(chunk, lo_idx, &base);
        });

    // 1 is not prime; trailing bits past the limit are cleared.
    bits[0] &= !1;
    let tail = odd_count % 64;
    if tail != 0 {
        bits[words - 1] &= (1u64 << tail) - 1;
    }
    Ok(PrimeTable { limit, bits })
}

/// Clear composites in one segment. `lo_idx` is the bit index of the first
/// entry (the odd integer `2 * lo_idx + 1`).
fn cross_off_segment(chunk: &mut [u64], lo_idx: u64, base: &[u64]) {
    let hi_idx = lo_idx + chunk.len() as u64 * 64;
    for &p in base {
        // index of p*p is (p*p - 1) / 2; multiples step by p in index space
        let first = (p * p - 1) / 2;
        if first >= hi_idx {
            break;
        }
        let start = if first >= lo_idx {
            first
        } else {
            // smallest idx >= lo_idx with idx ≡ (p - 1) / 2 (mod p)
            let r = (p - 1) / 2;
            lo_idx + (r + p - lo_idx % p) % p
        };
        let mut idx = start - lo_idx;
        let end = hi_idx - lo_idx;
        while idx < end {
            chunk[(idx >> 6) as usize] &= !(1u64 << (idx & 63));
            idx += p;
        }
    }
}

/// Odd primes up to `n` by a plain sieve; used as the sieving base.
fn small_odd_primes(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    let mut i = 3;
    while i <= n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    out
}

/// Floor of the square root, exact for every u64.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Membership test. Values above the limit report `false`; use
    /// [`PrimeTable::contains`] when that distinction matters.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        if n > self.limit {
            return false;
        }
        if n & 1 == 0 {
            return n == 2;
        }
        let i = n >> 1;
        self.bits[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    /// Like [`PrimeTable::is_prime`] but errors when `n` is past the limit.
    pub fn contains(&self, n: u64) -> Result<bool> {
        if n > self.limit {
            return Err(Error::Range(format!(
                "{n} is beyond the prime table limit {}",
                self.limit
            )));
        }
        Ok(self.is_prime(n))
    }

    /// Primes in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes_in(0, self.limit)
    }

    /// Primes `p` with `lo <= p <= hi`, in increasing order.
    pub fn primes_in(&self, lo: u64, hi: u64) -> impl Iterator<Item = u64> + '_ {
        let hi = hi.min(self.limit);
        let two = (lo <= 2 && hi >= 2).then_some(2u64);
        // bit indices covering odd n in [max(lo,3), hi]
        let first_idx = lo.max(3) / 2;
        let last_idx = if hi >= 3 { (hi - 1) / 2 } else { 0 };
        let empty = hi < 3 || first_idx > last_idx;
        let (w0, w1) = if empty {
            (1, 0)
        } else {
            ((first_idx >> 6) as usize, (last_idx >> 6) as usize)
        };
        let bits = &self.bits;
        two.into_iter().chain((w0..=w1).flat_map(move |w| {
            let mut word = bits[w];
            if w == w0 {
                word &= u64::MAX << (first_idx & 63);
            }
            if w == w1 {
                let keep = (last_idx & 63) + 1;
                if keep < 64 {
                    word &= (1u64 << keep) - 1;
                }
            }
            let base = (w as u64) << 6;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as u64;
                word &= word - 1;
                Some(2 * (base + tz) + 1)
            })
        }))
    }

    /// π(x) for `x <= limit`.
    pub fn prime_count(&self, x: u64) -> Result<u64> {
        if x > self.limit {
            return Err(Error::Range(format!(
                "cannot count primes up to {x}: table only reaches {}",
                self.limit
            )));
        }
        if x < 2 {
            return Ok(0);
        }
        if x == 2 {
            return Ok(1);
        }
        let last_idx = (x - 1) / 2;
        let full = (last_idx >> 6) as usize;
        let mut count: u64 = self.bits[..full]
            .par_iter()
            .map(|w| w.count_ones() as u64)
            .sum();
        let keep = (last_idx & 63) + 1;
        let mask = if keep == 64 { u64::MAX } else { (1u64 << keep) - 1 };
        count += (self.bits[full] & mask).count_ones() as u64;
        Ok(count + 1)
    }

    /// Primes up to `limit` collected into a vector.
    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }
}

/// Free-function form of [`PrimeTable::prime_count`].
pub fn prime_count(table: &PrimeTable, x: u64) -> Result<u64> {
    table.prime_count(x)
}

const SMALL_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Montgomery arithmetic modulo an odd 64-bit `n` with `R = 2^64`.
struct Montgomery {
    n: u64,
    /// n^{-1} mod 2^64
    inv: u64,
    one: u64,
}

impl Montgomery {
    fn new(n: u64) -> Self {
        debug_assert!(n & 1 == 1);
        let mut inv = n;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n.wrapping_mul(inv)));
        }
        let one = ((1u128 << 64) % n as u128) as u64;
        Self { n, inv, one }
    }

    #[inline]
    fn to_mont(&self, a: u64) -> u64 {
        (((a as u128) << 64) % self.n as u128) as u64
    }

    /// a · b · R^{-1} mod n
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        let t = a as u128 * b as u128;
        let lo = t as u64;
        let hi = (t >> 64) as u64;
        let m = lo.wrapping_mul(self.inv);
        let mn_hi = ((m as u128 * self.n as u128) >> 64) as u64;
        if hi < mn_hi {
            hi.wrapping_sub(mn_hi).wrapping_add(self.n)
        } else {
            hi - mn_hi
        }
    }

    fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = self.one;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }
}

/// Exact primality for any 64-bit integer.
pub fn is_prime_64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 59 * 59 {
        return true;
    }
    let mont = Montgomery::new(n);
    let minus_one = n - mont.one;
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = mont.pow(mont.to_mont(a), d);
        if x == mont.one || x == minus_one {
            continue;
        }
        for _ in 1..s {
            x = mont.mul(x, x);
            if x == minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        if n % 2 == 0 {
            return n == 2;
        }
        let mut d = 3;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 2;
        }
        true
    }

    #[test]
    fn small_limits() {
        assert_eq!(sieve_primes(10).unwrap().to_vec(), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap().to_vec(), vec![2]);
        assert_eq!(sieve_primes(3).unwrap().to_vec(), vec![2, 3]);
        assert!(matches!(sieve_primes(1), Err(Error::Domain(_))));
        assert!(matches!(sieve_primes(0), Err(Error::Domain(_))));
    }

    #[test]
    fn limit_above_cap_is_domain_error() {
        assert!(matches!(sieve_primes(MAX_SIEVE_LIMIT + 1), Err(Error::Domain(_))));
    }

    #[test]
    fn memory_cap_is_resource_error() {
        let cfg = SieveConfig {
            segment_odds: 1 << 10,
            max_bytes: 1024,
        };
        assert!(matches!(sieve_primes_with(1_000_000, cfg), Err(Error::Resource(_))));
        assert!(sieve_primes_with(10_000, cfg).is_ok());
    }

    #[test]
    fn counts() {
        let t = sieve_primes(100_000).unwrap();
        assert_eq!(t.prime_count(10).unwrap(), 4);
        assert_eq!(t.prime_count(2).unwrap(), 1);
        assert_eq!(t.prime_count(1).unwrap(), 0);
        assert_eq!(t.prime_count(100_000).unwrap(), 9592);
        assert!(matches!(t.prime_count(100_001), Err(Error::Range(_))));
    }

    #[test]
    fn count_matches_trial_division_to_one_million() {
        let t = sieve_primes(1_000_000).unwrap();
        let mut count = 0;
        for n in 0..=1_000_000u64 {
            let expect = trial_division(n);
            assert_eq!(t.is_prime(n), expect, "n = {n}");
            assert_eq!(is_prime_64(n), expect, "n = {n}");
            if expect {
                count += 1;
            }
            if n % 9973 == 0 || n == 1_000_000 {
                assert_eq!(t.prime_count(n).unwrap(), count, "x = {n}");
            }
        }
    }

    #[test]
    fn segment_size_does_not_change_the_table() {
        let whole = sieve_primes_with(
            1_000_000,
            SieveConfig {
                segment_odds: 1 << 20,
                ..SieveConfig::default()
            },
        )
        .unwrap();
        for seg in [64, 100, 4096, 65_536, 333_333] {
            let t = sieve_primes_with(
                1_000_000,
                SieveConfig {
                    segment_odds: seg,
                    ..SieveConfig::default()
                },
            )
            .unwrap();
            assert_eq!(t, whole, "segment size {seg}");
        }
    }

    #[test]
    fn primes_in_window() {
        let t = sieve_primes(200).unwrap();
        let got: Vec<u64> = t.primes_in(90, 131).collect();
        assert_eq!(got, vec![97, 101, 103, 107, 109, 113, 127, 131]);
        assert_eq!(t.primes_in(0, 2).collect::<Vec<_>>(), vec![2]);
        assert_eq!(t.primes_in(24, 28).count(), 0);
        assert_eq!(t.primes_in(190, 1000).collect::<Vec<_>>(), vec![191, 193, 197, 199]);
    }

    #[test]
    fn miller_rabin_known_values() {
        assert!(!is_prime_64(1));
        assert!(is_prime_64((1 << 31) - 1));
        assert!(is_prime_64((1 << 61) - 1));
        assert!(is_prime_64(18_446_744_073_709_551_557)); // largest 64-bit prime
        assert!(!is_prime_64(u64::MAX));
        // strong pseudoprime to bases 2..=31
        assert!(!is_prime_64(3_825_123_056_546_413_051));
        assert!(!is_prime_64(3_215_031_751));
        assert!(!is_prime_64(341_550_071_728_321));
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division_on_quadratic_values() {
        // n^2 + 1 near 1.4e7, every 1400th argument
        for j in 0..10_000u64 {
            let n = 14_000_000 - j * 1400;
            let v = n * n + 1;
            assert_eq!(is_prime_64(v), trial_division(v), "n = {n}");
        }
    }

    #[test]
    fn isqrt_exact() {
        for n in [0u64, 1, 2, 3, 4, 15, 16, 17, u64::MAX, (1 << 62) - 1, 4_294_967_295 * 4_294_967_295] {
            let r = isqrt(n);
            assert!(r as u128 * r as u128 <= n as u128);
            assert!((r as u128 + 1) * (r as u128 + 1) > n as u128);
        }
    }
}
