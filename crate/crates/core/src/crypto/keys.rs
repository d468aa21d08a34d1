use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::{CryptoError, ProtocolParams, TAG_LEN};

/// Byte length of a pre-distributed node/sink session key.
pub const SESSION_KEY_LEN: usize = 16;

pub trait SymmetricKey {
    fn key_bytes(&self) -> &[u8];
}

/// Symmetric key shared by the sink and exactly one node.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionKey {
    #[serde(with = "hex::serde")]
    key: Vec<u8>,
    key_id: u32,
}

impl SessionKey {
    pub fn new(key: Vec<u8>, key_id: u32) -> Result<Self, CryptoError> {
        if key.len() != SESSION_KEY_LEN {
            return Err(CryptoError::KeyLength {
                expected: SESSION_KEY_LEN,
                actual: key.len(),
            });
        }
        Ok(Self { key, key_id })
    }

    pub fn key_id(&self) -> u32 {
        self.key_id
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.key
    }
}

impl SymmetricKey for SessionKey {
    fn key_bytes(&self) -> &[u8] {
        &self.key
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey(id={}, ..)", self.key_id)
    }
}

/// Fresh per-session key protecting the sink's commitment. It travels in
/// plaintext once the node has proven itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CommitKey(#[serde(with = "hex::serde")] Vec<u8>);

impl CommitKey {
    pub fn new(key: Vec<u8>, params: &ProtocolParams) -> Result<Self, CryptoError> {
        if key.len() != params.kcs_bytes() {
            return Err(CryptoError::KeyLength {
                expected: params.kcs_bytes(),
                actual: key.len(),
            });
        }
        Ok(Self(key))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl SymmetricKey for CommitKey {
    fn key_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for CommitKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CommitKey({})", hex::encode(&self.0))
    }
}

/// The secret `V` a node shares with the sink, the base of every challenge.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret(BigUint);

impl SharedSecret {
    /// Rejects 0 and 1, whose powers are constant.
    pub fn new(v: BigUint, params: &ProtocolParams) -> Result<Self, CryptoError> {
        if !params.is_nondegenerate(&v) {
            return Err(CryptoError::DegenerateSecret);
        }
        Ok(Self(v))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

/// `E(K_CS, (V^p)^q)` as carried in the second handshake message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitmentEnvelope {
    ciphertext: Vec<u8>,
    width: usize,
}

impl CommitmentEnvelope {
    pub fn encoded_len(params: &ProtocolParams) -> usize {
        params.width_bytes() + TAG_LEN
    }

    pub fn new(ciphertext: Vec<u8>, params: &ProtocolParams) -> Result<Self, CryptoError> {
        let expected = Self::encoded_len(params);
        if ciphertext.len() != expected {
            return Err(CryptoError::KeyLength {
                expected,
                actual: ciphertext.len(),
            });
        }
        Ok(Self {
            ciphertext,
            width: params.modulus_bits(),
        })
    }

    pub fn ciphertext(&self) -> &[u8] {
        &self.ciphertext
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_lengths_enforced() {
        let params = ProtocolParams::default();
        assert!(SessionKey::new(vec![0; 15], 1).is_err());
        assert!(SessionKey::new(vec![0; 16], 1).is_ok());
        assert!(CommitKey::new(vec![0; 24], &params).is_err());
        assert_eq!(
            CommitKey::new(vec![0; 25], &params)
                .unwrap()
                .as_bytes()
                .len(),
            25
        );
    }

    #[test]
    fn degenerate_secrets_rejected() {
        let params = ProtocolParams::default();
        assert!(SharedSecret::new(BigUint::from(0u32), &params).is_err());
        assert!(SharedSecret::new(BigUint::from(1u32), &params).is_err());
        assert!(SharedSecret::new(params.modulus().clone(), &params).is_err());
        assert!(SharedSecret::new(BigUint::from(2u32), &params).is_ok());
    }

    #[test]
    fn envelope_width_is_fixed() {
        let params = ProtocolParams::default();
        assert!(CommitmentEnvelope::new(vec![0; 263], &params).is_err());
        let env = CommitmentEnvelope::new(vec![0; 264], &params).unwrap();
        assert_eq!(env.width(), 2048);
    }

    #[test]
    fn debug_does_not_print_secrets() {
        let k = SessionKey::new(vec![0xAB; 16], 4).unwrap();
        assert!(!format!("{k:?}").contains("ab"));
    }
}
