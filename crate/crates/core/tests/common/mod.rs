//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

/// Trial division by 2 and odd numbers.
pub fn is_prime_td(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Number of `n` in `[1, x]` with every `n + e` prime.
pub fn brute_tuple_count(elements: &[u64], x: u64) -> u64 {
    (1..=x)
        .filter(|&n| elements.iter().all(|&e| is_prime_td(n + e)))
        .count() as u64
}

/// Number of `n` in `[1, x]` with `n² + 1` prime.
pub fn brute_nsq_plus_one(x: u64) -> u64 {
    (1..=x).filter(|&n| is_prime_td(n * n + 1)).count() as u64
}

/// Roots of `n² + 1` modulo `p` by enumeration.
pub fn brute_nsq_roots(p: u64) -> u64 {
    (0..p).filter(|&n| (n * n + 1) % p == 0).count() as u64
}

fn romberg<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, levels: usize) -> f64 {
    let mut prev = vec![0.5 * (b - a) * (f(a) + f(b))];
    let mut n = 1usize;
    for _ in 1..levels {
        let h = (b - a) / (2 * n) as f64;
        let mid: f64 = (0..n).map(|j| f(a + (2 * j + 1) as f64 * h)).sum();
        let mut row = vec![0.5 * prev[0] + h * mid];
        let mut pow4 = 1.0;
        for m in 1..=prev.len() {
            pow4 *= 4.0;
            let v = row[m - 1] + (row[m - 1] - prev[m - 1]) / (pow4 - 1.0);
            row.push(v);
        }
        prev = row;
        n *= 2;
    }
    *prev.last().unwrap()
}

/// `∫_2^x dt / ln^r t` by Romberg integration in `t` over dyadic pieces.
pub fn romberg_log_integral(x: f64, r: u32) -> f64 {
    let f = |t: f64| t.ln().powi(-(r as i32));
    let mut total = 0.0;
    let mut a = 2.0f64;
    while a < x {
        let b = (2.0 * a).min(x);
        total += romberg(&f, a, b, 14);
        a = b;
    }
    total
}
