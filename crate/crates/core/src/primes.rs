//! Primality testing and prime search on arbitrary-precision integers.
//!
//! Miller-Rabin over a fixed base set: deterministic for all 64-bit inputs,
//! and with error probability far below 2^-80 for larger ones. That is enough
//! for a simulation artifact; nothing here aims at adversarial inputs.

use alloc::vec::Vec;
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;

/// First primes, used both for trial division and as Miller-Rabin bases.
/// The prefix {2,...,37} is a proven-deterministic base set below 3.3e24.
const SMALL_PRIMES: &[u32] = &[
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Miller-Rabin with the fixed base set above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in SMALL_PRIMES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    // n - 1 = d * 2^r with d odd
    let n_minus_1 = n - 1u32;
    let r = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> r;

    'base: for &a in SMALL_PRIMES {
        let a = BigUint::from(a);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..r {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `bound`.
pub fn next_prime_above(bound: &BigUint) -> BigUint {
    let two = BigUint::from(2u32);
    if bound < &two {
        return two;
    }
    let mut candidate = bound + 1u32;
    if (&candidate % 2u32).is_zero() {
        if candidate == two {
            return candidate;
        }
        candidate += 1u32;
    }
    while !is_probable_prime(&candidate) {
        candidate += 2u32;
    }
    candidate
}

/// Searches for a safe prime `q = 2q' + 1` with exactly `bits` bits.
/// Returns `(q, q')`. Deterministic given the randomness source.
pub fn generate_safe_prime(bits: u64, rng: &mut (impl RngCore + ?Sized)) -> (BigUint, BigUint) {
    assert!(bits >= 4, "safe prime needs at least 4 bits");
    let sieve: Vec<BigUint> = SMALL_PRIMES[1..].iter().map(|&p| BigUint::from(p)).collect();
    loop {
        // q' with the top two bits set so q = 2q'+1 has exactly `bits` bits.
        let mut q_prime = rng.gen_biguint(bits - 1);
        q_prime.set_bit(bits - 2, true);
        q_prime.set_bit(bits - 3, true);
        q_prime.set_bit(0, true);
        let q: BigUint = (&q_prime << 1) | BigUint::one();

        if sieve
            .iter()
            .any(|p| p < &q_prime && ((&q_prime % p).is_zero() || (&q % p).is_zero()))
        {
            continue;
        }
        if is_probable_prime(&q_prime) && is_probable_prime(&q) {
            return (q, q_prime);
        }
    }
}
