//! Prime generation and elementary multiplicative arithmetic.

use crate::error::{Error, Result};

/// Default memory budget for prime tables (bytes).
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

/// All primes up to `limit`, with natural logarithms precomputed.
#[derive(Debug, Clone)]
pub struct PrimeList {
    pub limit: u64,
    pub primes: Vec<u64>,
    pub logs: Vec<f64>,
}

impl PrimeList {
    /// Index of the first prime greater than `x`.
    pub fn partition_point(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| p <= x)
    }
}

/// Segmented sieve of Eratosthenes. Memory stays O(sqrt(limit) + segment)
/// beyond the output vectors themselves.
pub fn sieve_primes(limit: u64) -> Result<PrimeList> {
    sieve_primes_budgeted(limit, DEFAULT_MEMORY_BUDGET)
}

pub fn sieve_primes_budgeted(limit: u64, budget_bytes: u64) -> Result<PrimeList> {
    let estimate = estimated_prime_table_bytes(limit);
    if estimate > budget_bytes {
        return Err(Error::Resource(format!(
            "prime table to {limit} needs ~{estimate} bytes but the budget is \
             {budget_bytes}; raise memory_budget_mb or lower x"
        )));
    }
    let mut primes: Vec<u64> = Vec::new();
    if limit >= 2 {
        primes.push(2);
    }
    if limit >= 3 {
        let root = (limit as f64).sqrt() as u64 + 2;
        // odd base sieve up to sqrt(limit)
        let base_len = (root / 2 + 1) as usize;
        let mut base = vec![true; base_len]; // base[i] ~ 2i+1
        base[0] = false; // 1
        let mut i = 1usize;
        while (2 * i + 1) * (2 * i + 1) <= root as usize {
            if base[i] {
                let p = 2 * i + 1;
                let mut j = (p * p) / 2;
                while j < base_len {
                    base[j] = false;
                    j += p;
                }
            }
            i += 1;
        }
        let base_primes: Vec<u64> = (1..base_len)
            .filter(|&i| base[i])
            .map(|i| (2 * i + 1) as u64)
            .collect();

        let segment = 1usize << 18;
        let mut block = vec![true; segment];
        let mut low = 3u64; // always odd; block[i] ~ low + 2i
        while low <= limit {
            let n_odds = (((limit - low) / 2 + 1) as usize).min(segment);
            let high = low + 2 * (n_odds as u64 - 1); // last odd covered
            block[..n_odds].fill(true);
            for &p in &base_primes {
                if p * p > high {
                    break;
                }
                let mut start = p * p;
                if start < low {
                    let k = (low - start).div_ceil(2 * p);
                    start += k * 2 * p;
                }
                let mut idx = ((start - low) / 2) as usize;
                while idx < n_odds {
                    block[idx] = false;
                    idx += p as usize;
                }
            }
            for (idx, &alive) in block[..n_odds].iter().enumerate() {
                if alive {
                    primes.push(low + 2 * idx as u64);
                }
            }
            low = high + 2; // next odd
        }
    }
    let logs = primes.iter().map(|&p| (p as f64).ln()).collect();
    Ok(PrimeList {
        limit,
        primes,
        logs,
    })
}

fn estimated_prime_table_bytes(limit: u64) -> u64 {
    if limit < 100 {
        return 4096;
    }
    let count = (limit as f64 / (limit as f64).ln() * 1.2) as u64;
    count * 16 + (limit as f64).sqrt() as u64 + (1 << 19)
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
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

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Prime factorization by trial division, ascending primes. `n = 1` yields
/// the empty factorization.
pub fn factor_integer(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factor_integer requires n >= 1");
    let mut n = n;
    let mut out = Vec::new();
    let mut push = |p: u64, e: u32| {
        if e > 0 {
            out.push((p, e));
        }
    };
    for p in [2u64, 3, 5] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        push(p, e);
    }
    // wheel over 6k+-1
    let mut d = 7u64;
    while d as u128 * d as u128 <= n as u128 {
        for cand in [d, d + 4] {
            let mut e = 0;
            while n % cand == 0 {
                n /= cand;
                e += 1;
            }
            push(cand, e);
        }
        d += 6;
    }
    if n > 1 {
        push(n, 1);
    }
    out
}

/// Euler's totient via factorization. phi(1) = 1.
pub fn euler_phi(n: u64) -> u64 {
    let mut r = n;
    for (p, _) in factor_integer(n) {
        r = r / p * (p - 1);
    }
    r
}

/// Smallest-prime-factor table for fast repeated factorization of all
/// q <= limit in variance loops.
pub struct SpfTable {
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn new(limit: u64) -> Self {
        let n = limit as usize;
        let mut spf: Vec<u32> = vec![0; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { spf }
    }

    /// Distinct prime divisors of q, ascending.
    pub fn prime_divisors(&self, mut q: u64) -> Vec<u64> {
        let mut out = Vec::new();
        while q > 1 {
            let p = self.spf[q as usize] as u64;
            out.push(p);
            while q % p == 0 {
                q /= p;
            }
        }
        out
    }

    pub fn phi(&self, q: u64) -> u64 {
        let mut r = q;
        for p in self.prime_divisors(q) {
            r = r / p * (p - 1);
        }
        r
    }
}
