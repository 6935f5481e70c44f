use rand::Rng;

use crate::error::{Error, Result};

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve primes as bases decide
/// every 64-bit integer.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Least prime at or above `x`.
pub fn next_prime(mut x: u64) -> u64 {
    while !is_prime(x) {
        x += 1;
    }
    x
}

/// `ceil(log2 n)`, at least 1.
pub fn prime_count(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// The integer interval `[N^(k-1), floor(3kc N^(k-1) log2 N)]` the primes
/// are drawn from.
pub fn prime_interval(n: usize, k: usize, c: u64) -> Result<(u64, u64)> {
    if k < 3 || c < 1 || n < 2 {
        return Err(Error::Parameter(format!(
            "prime interval needs N >= 2, k >= 3, c >= 1 (got N = {n}, k = {k}, c = {c})"
        )));
    }
    let too_big = || Error::Parameter(format!("prime interval for N = {n}, k = {k} exceeds 64 bits"));
    let lo = (n as u128).checked_pow(k as u32 - 1).ok_or_else(too_big)?;
    let hi = (3.0 * k as f64 * c as f64 * lo as f64 * (n as f64).log2()).floor();
    if hi >= 2f64.powi(63) {
        return Err(too_big());
    }
    Ok((lo as u64, hi as u64))
}

/// `ceil(log2 N)` distinct primes drawn uniformly from the interval by
/// rejection sampling.
pub fn sample_primes<R: Rng + ?Sized>(n: usize, k: usize, c: u64, rng: &mut R) -> Result<Vec<u64>> {
    let (lo, hi) = prime_interval(n, k, c)?;
    let want = prime_count(n);
    // Small intervals are checked up front so the rejection loop terminates.
    if hi - lo < 1 << 16 {
        let available = (lo..=hi).filter(|&x| is_prime(x)).count();
        if available < want {
            return Err(Error::Parameter(format!(
                "interval [{lo}, {hi}] holds {available} primes, {want} needed"
            )));
        }
    }
    let mut primes = Vec::with_capacity(want);
    while primes.len() < want {
        let x = rng.gen_range(lo..=hi);
        if is_prime(x) && !primes.contains(&x) {
            primes.push(x);
        }
    }
    Ok(primes)
}
