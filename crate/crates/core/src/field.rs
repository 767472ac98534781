//! Prime-field arithmetic for additive masking.
//!
//! Only addition and subtraction are needed by the aggregation protocol:
//! citizens add uniform masks to presence vectors, the combining server
//! subtracts the mask sum again. Elements carry a handle to their parameters
//! so that values from different field instances cannot be mixed silently.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::primes;

#[derive(Debug, PartialEq, Eq)]
struct FieldParamsInner {
    p: BigUint,
}

/// A prime modulus `p`. Cheap to clone; equality compares the modulus value.
///
/// For a protocol instance over a population `I`, pick `p > |I|` (see
/// [`FieldParams::smallest_prime_above`]); the aggregation server enforces
/// this bound again at finalize time.
#[derive(Debug, Clone)]
pub struct FieldParams {
    inner: Arc<FieldParamsInner>,
}

impl PartialEq for FieldParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.p == other.inner.p
    }
}

impl Eq for FieldParams {}

impl FieldParams {
    /// Validates that `p` is (probably) prime and builds the parameter set.
    pub fn new(p: BigUint) -> Result<Self> {
        if !primes::is_probable_prime(&p) {
            return Err(Error::NotPrime);
        }
        Ok(Self {
            inner: Arc::new(FieldParamsInner { p }),
        })
    }

    /// Parameters with the smallest prime modulus strictly above `bound`.
    pub fn smallest_prime_above(bound: u64) -> Self {
        let p = primes::next_prime_above(&BigUint::from(bound));
        Self {
            inner: Arc::new(FieldParamsInner { p }),
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.inner.p
    }
}

/// An element of `F_p`, always reduced to `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: BigUint,
    params: FieldParams,
}

impl FieldElement {
    /// Wraps an already-reduced value; rejects `value >= p`.
    pub fn new(value: BigUint, params: &FieldParams) -> Result<Self> {
        if &value >= params.modulus() {
            return Err(Error::ValueOutOfRange);
        }
        Ok(Self {
            value,
            params: params.clone(),
        })
    }

    /// Embeds an integer, reducing mod `p`.
    pub fn from_u64(v: u64, params: &FieldParams) -> Self {
        Self {
            value: BigUint::from(v) % params.modulus(),
            params: params.clone(),
        }
    }

    pub fn zero(params: &FieldParams) -> Self {
        Self {
            value: BigUint::zero(),
            params: params.clone(),
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    fn check_params(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamsMismatch);
        }
        Ok(())
    }

    /// `(self + other) mod p`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let sum = (&self.value + &other.value) % self.params.modulus();
        Ok(Self {
            value: sum,
            params: self.params.clone(),
        })
    }

    /// `(self - other) mod p`, result in `[0, p)`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let p = self.params.modulus();
        let value = if self.value >= other.value {
            &self.value - &other.value
        } else {
            p - &other.value + &self.value
        };
        Ok(Self {
            value,
            params: self.params.clone(),
        })
    }

    /// Lowercase big-endian hex, as used in wire messages.
    pub fn to_hex(&self) -> String {
        hex_of(&self.value)
    }

    pub fn from_hex(s: &str, params: &FieldParams) -> Result<Self> {
        Self::new(biguint_from_hex(s)?, params)
    }
}

/// `len` independent uniform draws from `[0, p)`; deterministic given the rng.
pub fn random_field_vector(
    len: usize,
    params: &FieldParams,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Vec<FieldElement>> {
    if len == 0 {
        return Err(Error::EmptyVector);
    }
    Ok((0..len)
        .map(|_| FieldElement {
            value: rng.gen_biguint_below(params.modulus()),
            params: params.clone(),
        })
        .collect())
}

pub(crate) fn hex_of(value: &BigUint) -> String {
    hex::encode(value.to_bytes_be())
}

pub(crate) fn biguint_from_hex(s: &str) -> Result<BigUint> {
    let s = if s.len() % 2 == 1 {
        let mut padded = String::with_capacity(s.len() + 1);
        padded.push('0');
        padded.push_str(s);
        padded
    } else {
        String::from(s)
    };
    let bytes = hex::decode(s.as_bytes()).map_err(|_| Error::InvalidHex)?;
    Ok(BigUint::from_bytes_be(&bytes))
}
