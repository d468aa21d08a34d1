use num_bigint::BigUint;
use num_traits::One;
use sha2::{Digest, Sha256};

use super::{modexp, CryptoError};

pub const DEFAULT_MODULUS_BITS: usize = 2048;
pub const MIN_MODULUS_BITS: usize = 1096;
pub const DEFAULT_EXPONENT_BITS: usize = 160;
pub const DEFAULT_INTERVAL_BITS: usize = 200;
pub const DEFAULT_KCS_BITS: usize = 200;

/// RFC 3526 group 14 prime (2048-bit safe prime).
const MODP_2048: &str = concat!(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74",
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437",
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED",
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05",
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB",
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B",
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718",
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
);

/// Public group parameters shared by every node and the sink.
///
/// Exponentiation happens modulo a fixed, public, odd, full-width modulus.
/// Every big integer on the wire is encoded big-endian at exactly
/// `modulus_bits / 8` bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolParams {
    modulus: BigUint,
    modulus_bits: usize,
    exponent_bits: usize,
    interval_bits: usize,
    kcs_bits: usize,
}

impl ProtocolParams {
    pub fn new(
        modulus: BigUint,
        exponent_bits: usize,
        interval_bits: usize,
        kcs_bits: usize,
    ) -> Result<Self, CryptoError> {
        let modulus_bits = modulus.bits() as usize;
        if modulus_bits < MIN_MODULUS_BITS {
            return Err(CryptoError::Params(format!(
                "modulus is {modulus_bits} bits, need at least {MIN_MODULUS_BITS}"
            )));
        }
        if !modulus_bits.is_multiple_of(8) {
            return Err(CryptoError::Params(format!(
                "modulus width {modulus_bits} is not a whole number of bytes"
            )));
        }
        if !modulus.bit(0) {
            return Err(CryptoError::Params("modulus must be odd".into()));
        }
        if exponent_bits < 2 {
            return Err(CryptoError::Params(
                "exponent_bits must be at least 2".into(),
            ));
        }
        if interval_bits == 0 || interval_bits > modulus_bits {
            return Err(CryptoError::Params(format!(
                "interval_bits {interval_bits} must be in 1..={modulus_bits}"
            )));
        }
        if interval_bits > u16::MAX as usize || modulus_bits - interval_bits > u16::MAX as usize {
            return Err(CryptoError::Params(
                "interval offset does not fit in 16 bits".into(),
            ));
        }
        if kcs_bits == 0 || !kcs_bits.is_multiple_of(8) {
            return Err(CryptoError::Params(format!(
                "kcs_bits {kcs_bits} must be a positive multiple of 8"
            )));
        }
        Ok(Self {
            modulus,
            modulus_bits,
            exponent_bits,
            interval_bits,
            kcs_bits,
        })
    }

    /// Standard parameters at the given modulus width.
    ///
    /// 2048 bits uses the RFC 3526 group 14 prime. Other widths use an odd,
    /// full-width modulus expanded deterministically from SHA-256.
    pub fn with_modulus_bits(bits: usize) -> Result<Self, CryptoError> {
        let modulus = if bits == DEFAULT_MODULUS_BITS {
            BigUint::parse_bytes(MODP_2048.as_bytes(), 16).expect("valid hex constant")
        } else {
            derived_modulus(bits)?
        };
        Self::new(
            modulus,
            DEFAULT_EXPONENT_BITS,
            DEFAULT_INTERVAL_BITS,
            DEFAULT_KCS_BITS,
        )
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// Bit width W of the modulus.
    pub fn modulus_bits(&self) -> usize {
        self.modulus_bits
    }

    /// Byte width of every fixed-width big-integer encoding.
    pub fn width_bytes(&self) -> usize {
        self.modulus_bits / 8
    }

    pub fn exponent_bits(&self) -> usize {
        self.exponent_bits
    }

    pub fn exponent_bytes(&self) -> usize {
        self.exponent_bits.div_ceil(8)
    }

    pub fn interval_bits(&self) -> usize {
        self.interval_bits
    }

    pub fn interval_bytes(&self) -> usize {
        self.interval_bits.div_ceil(8)
    }

    pub fn kcs_bits(&self) -> usize {
        self.kcs_bits
    }

    pub fn kcs_bytes(&self) -> usize {
        self.kcs_bits / 8
    }

    /// Largest admissible interval offset.
    pub fn max_ri(&self) -> usize {
        self.modulus_bits - self.interval_bits
    }

    /// `base^exponent mod modulus`.
    pub fn pow(&self, base: &BigUint, exponent: &BigUint) -> Result<BigUint, CryptoError> {
        modexp(base, exponent, &self.modulus)
    }

    /// Fixed-width big-endian encoding of a group element.
    pub fn encode_element(&self, value: &BigUint) -> Vec<u8> {
        super::fixed_width_bytes(value, self.width_bytes())
    }

    /// True iff `value` is an element in `[2, modulus)`.
    pub fn is_nondegenerate(&self, value: &BigUint) -> bool {
        value > &BigUint::one() && value < &self.modulus
    }
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self::with_modulus_bits(DEFAULT_MODULUS_BITS).expect("default parameters are valid")
    }
}

fn derived_modulus(bits: usize) -> Result<BigUint, CryptoError> {
    if bits < MIN_MODULUS_BITS || !bits.is_multiple_of(8) {
        return Err(CryptoError::Params(format!(
            "modulus width {bits} must be a multiple of 8 and at least {MIN_MODULUS_BITS}"
        )));
    }
    let nbytes = bits / 8;
    let mut bytes = Vec::with_capacity(nbytes + 32);
    let mut counter = 0u32;
    while bytes.len() < nbytes {
        let mut h = Sha256::new();
        h.update(b"banzkp modulus");
        h.update((bits as u32).to_be_bytes());
        h.update(counter.to_be_bytes());
        bytes.extend_from_slice(&h.finalize());
        counter += 1;
    }
    bytes.truncate(nbytes);
    bytes[0] |= 0x80;
    bytes[nbytes - 1] |= 0x01;
    Ok(BigUint::from_bytes_be(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_full_width_odd() {
        let p = ProtocolParams::default();
        assert_eq!(p.modulus_bits(), 2048);
        assert!(p.modulus().bit(0));
        assert!(p.modulus().bit(2047));
        assert_eq!(p.width_bytes(), 256);
        assert_eq!(p.max_ri(), 1848);
    }

    #[test]
    fn derived_widths_are_valid() {
        for bits in [1096, 1536, 3072] {
            let p = ProtocolParams::with_modulus_bits(bits).unwrap();
            assert_eq!(p.modulus_bits(), bits);
            assert!(p.modulus().bit(0));
        }
    }

    #[test]
    fn rejects_narrow_or_even_moduli() {
        assert!(ProtocolParams::with_modulus_bits(1088).is_err());
        assert!(ProtocolParams::with_modulus_bits(1100).is_err());
        let even = ProtocolParams::default().modulus() - 1u32;
        assert!(ProtocolParams::new(even, 160, 200, 200).is_err());
    }

    #[test]
    fn rejects_bad_field_widths() {
        let m = ProtocolParams::default().modulus().clone();
        assert!(ProtocolParams::new(m.clone(), 1, 200, 200).is_err());
        assert!(ProtocolParams::new(m.clone(), 160, 4096, 200).is_err());
        assert!(ProtocolParams::new(m.clone(), 160, 200, 201).is_err());
        assert!(ProtocolParams::new(m, 2, 2048, 8).is_ok());
    }
}
