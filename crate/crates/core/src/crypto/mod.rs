//! Arithmetic and symmetric primitives used by the handshake.
//!
//! Nothing here is constant-time or production grade. The goal is an
//! executable model with the right algebraic and integrity properties.

mod cipher;
mod interval;
mod keys;
mod params;
mod random;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

pub use cipher::{open, seal, SealContext, TAG_LEN};
pub use interval::extract_interval;
pub use keys::{
    CommitKey, CommitmentEnvelope, SessionKey, SharedSecret, SymmetricKey, SESSION_KEY_LEN,
};
pub use params::{
    ProtocolParams, DEFAULT_EXPONENT_BITS, DEFAULT_INTERVAL_BITS, DEFAULT_KCS_BITS,
    DEFAULT_MODULUS_BITS, MIN_MODULUS_BITS,
};
pub use random::{
    draw_commit_key, draw_exponent, draw_ri, draw_secret, draw_session_key, seeded_rng, SimRng,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("exponent must be at least 1")]
    ZeroExponent,
    #[error("base is not reduced modulo the modulus")]
    BaseOutOfRange,
    #[error("modulus must be at least 2")]
    BadModulus,
    #[error("authentication tag mismatch")]
    Decrypt,
    #[error("key is {actual} bytes, expected {expected}")]
    KeyLength { expected: usize, actual: usize },
    #[error("interval [{start}, {start}+{length}) exceeds width {width}")]
    Interval {
        start: usize,
        length: usize,
        width: usize,
    },
    #[error("value does not fit in {width} bits")]
    ValueTooWide { width: usize },
    #[error("shared secret must lie in [2, modulus)")]
    DegenerateSecret,
}

/// `base^exponent mod modulus` with the operation's domain checks.
pub fn modexp(
    base: &BigUint,
    exponent: &BigUint,
    modulus: &BigUint,
) -> Result<BigUint, CryptoError> {
    if modulus < &BigUint::from(2u32) {
        return Err(CryptoError::BadModulus);
    }
    if exponent.is_zero() {
        return Err(CryptoError::ZeroExponent);
    }
    if base >= modulus {
        return Err(CryptoError::BaseOutOfRange);
    }
    Ok(base.modpow(exponent, modulus))
}

/// Modular multiplications spent by left-to-right square-and-multiply on
/// `exponent`: one squaring per bit after the leading one, one multiply per
/// further set bit.
pub fn modmul_count(exponent: &BigUint) -> u64 {
    if exponent.is_zero() {
        return 0;
    }
    let bits = exponent.bits();
    let ones: u64 = exponent
        .iter_u64_digits()
        .map(|d| d.count_ones() as u64)
        .sum();
    (bits - 1) + (ones - 1)
}

/// Big-endian encoding left-padded to exactly `nbytes`.
///
/// Panics if the value does not fit; callers only pass reduced elements.
pub fn fixed_width_bytes(value: &BigUint, nbytes: usize) -> Vec<u8> {
    let raw = if value.is_zero() {
        Vec::new()
    } else {
        value.to_bytes_be()
    };
    assert!(raw.len() <= nbytes, "value wider than {nbytes} bytes");
    let mut out = vec![0u8; nbytes - raw.len()];
    out.extend_from_slice(&raw);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn brute_pow(base: u64, exp: u64, m: u64) -> u64 {
        let mut acc = 1 % m;
        for _ in 0..exp {
            acc = acc * base % m;
        }
        acc
    }

    #[test]
    fn modexp_small_examples() {
        assert_eq!(brute_pow(3, 4, 23), 12);
        assert_eq!(modexp(&big(3), &big(4), &big(23)).unwrap(), big(12));

        let expected = brute_pow(3, 20, 23);
        assert_eq!(expected, 18);
        let a = modexp(
            &modexp(&big(3), &big(4), &big(23)).unwrap(),
            &big(5),
            &big(23),
        )
        .unwrap();
        let b = modexp(
            &modexp(&big(3), &big(5), &big(23)).unwrap(),
            &big(4),
            &big(23),
        )
        .unwrap();
        assert_eq!(a, big(expected));
        assert_eq!(b, big(expected));
    }

    #[test]
    fn modexp_identity_exponent() {
        let params = ProtocolParams::default();
        let v = params.modulus() - 12345u32;
        assert_eq!(params.pow(&v, &big(1)).unwrap(), v);
    }

    #[test]
    fn modexp_domain_errors() {
        assert_eq!(
            modexp(&big(3), &big(0), &big(23)),
            Err(CryptoError::ZeroExponent)
        );
        assert_eq!(
            modexp(&big(23), &big(2), &big(23)),
            Err(CryptoError::BaseOutOfRange)
        );
        assert_eq!(
            modexp(&big(0), &big(2), &big(1)),
            Err(CryptoError::BadModulus)
        );
    }

    #[test]
    fn modmul_count_square_and_multiply() {
        assert_eq!(modmul_count(&big(0)), 0);
        assert_eq!(modmul_count(&big(1)), 0);
        assert_eq!(modmul_count(&big(2)), 1);
        assert_eq!(modmul_count(&big(3)), 2);
        // 0b1011: three squarings, two extra multiplies
        assert_eq!(modmul_count(&big(11)), 5);
    }

    #[test]
    fn fixed_width_pads() {
        assert_eq!(fixed_width_bytes(&big(0), 3), vec![0, 0, 0]);
        assert_eq!(fixed_width_bytes(&big(0x0102), 4), vec![0, 0, 1, 2]);
    }
}
