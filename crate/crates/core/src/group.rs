//! Commutative encryption by exponentiation in a prime-order group.
//!
//! The scheme works in the quadratic-residue subgroup of `Z_q^*` for a safe
//! prime `q = 2q' + 1`: encryption under key `k` is `m -> m^k mod q` with
//! `gcd(k, q') = 1`. Exponentiation maps commute, each key has an inverse
//! exponent, and the map is a bijection on the subgroup, which is exactly
//! what the set-intersection protocols need.
//!
//! Subgroup membership is enforced when a [`GroupElement`] is constructed
//! (including deserialization from hex), so `encrypt`/`decrypt` never see a
//! non-member.

use alloc::string::String;
use alloc::sync::Arc;
use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{biguint_from_hex, hex_of};
use crate::primes;
use crate::token::Token;

#[derive(Debug, PartialEq, Eq)]
struct GroupParamsInner {
    q: BigUint,
    q_prime: BigUint,
}

/// A safe prime `q = 2q' + 1` together with the subgroup order `q'`.
///
/// Real deployments should use 2048 bits or more ([`GroupParams::rfc3526_2048`]);
/// the small named groups exist for tests and fast simulation runs.
#[derive(Debug, Clone)]
pub struct GroupParams {
    inner: Arc<GroupParamsInner>,
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl Eq for GroupParams {}

impl GroupParams {
    /// Builds parameters from a safe prime, deriving `q' = (q - 1) / 2`.
    pub fn new(q: BigUint) -> Result<Self> {
        if !primes::is_probable_prime(&q) {
            return Err(Error::NotPrime);
        }
        let q_prime: BigUint = (&q - 1u32) >> 1;
        if !primes::is_probable_prime(&q_prime) {
            return Err(Error::InvalidParameter("q is prime but not a safe prime"));
        }
        Ok(Self {
            inner: Arc::new(GroupParamsInner { q, q_prime }),
        })
    }

    /// Searches for a fresh safe prime of the given bit length.
    pub fn generate(bits: u64, rng: &mut (impl RngCore + ?Sized)) -> Self {
        let (q, q_prime) = primes::generate_safe_prime(bits, rng);
        Self {
            inner: Arc::new(GroupParamsInner { q, q_prime }),
        }
    }

    /// `q = 23`, `q' = 11`. Hand-checkable toy group.
    pub fn test_q23() -> Self {
        Self::from_verified_hex("17")
    }

    /// A fixed 64-bit safe prime; default group for simulation runs.
    pub fn test_64() -> Self {
        Self::from_verified_hex("a4e4e25a2bf9133f")
    }

    /// A fixed 256-bit safe prime test group.
    pub fn test_256() -> Self {
        Self::from_verified_hex("c1bb77736557d74e0f7402388c98bc06d12bc24e0901bb1d653019ad548f482b")
    }

    /// The 2048-bit MODP group 14 modulus (RFC 3526), a safe prime.
    pub fn rfc3526_2048() -> Self {
        Self::from_verified_hex(concat!(
            "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74",
            "020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f1437",
            "4fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7ed",
            "ee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05",
            "98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb",
            "9ed529077096966d670c354e4abc9804f1746c08ca18217c32905e462e36ce3b",
            "e39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718",
            "3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff",
        ))
    }

    fn from_verified_hex(q_hex: &str) -> Self {
        let q = biguint_from_hex(q_hex).expect("builtin modulus hex");
        Self::new(q).expect("builtin modulus is a safe prime")
    }

    pub fn modulus(&self) -> &BigUint {
        &self.inner.q
    }

    pub fn subgroup_order(&self) -> &BigUint {
        &self.inner.q_prime
    }

    pub fn bits(&self) -> u64 {
        self.inner.q.bits()
    }
}

/// An element of the order-`q'` subgroup, i.e. `value^{q'} mod q = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    value: BigUint,
    params: GroupParams,
}

impl GroupElement {
    /// Checks range and subgroup membership. This is the only public way in,
    /// so the cipher can rely on the invariant afterwards.
    pub fn new(value: BigUint, params: &GroupParams) -> Result<Self> {
        if value < BigUint::one() || &value >= params.modulus() {
            return Err(Error::ValueOutOfRange);
        }
        if !value.modpow(params.subgroup_order(), params.modulus()).is_one() {
            return Err(Error::NotInSubgroup);
        }
        Ok(Self::new_unchecked(value, params))
    }

    fn new_unchecked(value: BigUint, params: &GroupParams) -> Self {
        Self {
            value,
            params: params.clone(),
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    /// Lowercase big-endian hex, as used in wire messages.
    pub fn to_hex(&self) -> String {
        hex_of(&self.value)
    }

    pub fn from_hex(s: &str, params: &GroupParams) -> Result<Self> {
        Self::new(biguint_from_hex(s)?, params)
    }
}

/// An encryption exponent and its inverse mod `q'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutativeKey {
    k: BigUint,
    k_inv: BigUint,
    params: GroupParams,
}

impl CommutativeKey {
    /// Draws `k` uniformly from `[1, q')` and computes `k^{-1} mod q'`.
    ///
    /// Keys are meant to live for a single protocol session; draw a fresh one
    /// per session and drop it afterwards.
    pub fn generate(params: &GroupParams, rng: &mut (impl RngCore + ?Sized)) -> Self {
        let one = BigUint::one();
        let upper = params.subgroup_order() - &one;
        let k = rng.gen_biguint_below(&upper) + &one;
        Self::from_exponent(k, params).expect("exponent drawn in range")
    }

    /// Builds a key from a fixed exponent in `[1, q')`.
    pub fn from_exponent(k: BigUint, params: &GroupParams) -> Result<Self> {
        if k < BigUint::one() || &k >= params.subgroup_order() {
            return Err(Error::ValueOutOfRange);
        }
        let k_inv = k
            .modinv(params.subgroup_order())
            .ok_or(Error::InvalidParameter("exponent has no inverse mod q'"))?;
        Ok(Self {
            k,
            k_inv,
            params: params.clone(),
        })
    }

    pub fn exponent(&self) -> &BigUint {
        &self.k
    }

    pub fn inverse_exponent(&self) -> &BigUint {
        &self.k_inv
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    /// `m^k mod q`; a bijection on the subgroup.
    pub fn encrypt(&self, m: &GroupElement) -> Result<GroupElement> {
        if self.params != m.params {
            return Err(Error::ParamsMismatch);
        }
        let value = m.value.modpow(&self.k, self.params.modulus());
        Ok(GroupElement::new_unchecked(value, &self.params))
    }

    /// `c^{k^{-1}} mod q`; inverse of [`CommutativeKey::encrypt`].
    pub fn decrypt(&self, c: &GroupElement) -> Result<GroupElement> {
        if self.params != c.params {
            return Err(Error::ParamsMismatch);
        }
        let value = c.value.modpow(&self.k_inv, self.params.modulus());
        Ok(GroupElement::new_unchecked(value, &self.params))
    }
}

const HASH_DOMAIN: &[u8] = b"epimpc/hash-to-group/v1";

/// Deterministically embeds a token into the subgroup: `(H(token) mod q)^2 mod q`.
///
/// Squaring lands in the quadratic-residue subgroup; the vanishing output
/// (probability ~ 2^-|q| per counter) falls back to a re-hash with a
/// domain-separation counter.
pub fn hash_to_group(token: &Token, params: &GroupParams) -> GroupElement {
    let q = params.modulus();
    for counter in 0u32.. {
        let mut hasher = Sha256::new();
        hasher.update(HASH_DOMAIN);
        hasher.update(counter.to_le_bytes());
        hasher.update(token.as_bytes());
        let digest = hasher.finalize();
        let h = BigUint::from_bytes_be(&digest) % q;
        let value = h.modpow(&BigUint::from(2u32), q);
        if !num_traits::Zero::is_zero(&value) {
            return GroupElement::new_unchecked(value, params);
        }
    }
    unreachable!("counter space exhausted")
}
