use sha2::{Digest, Sha256};

use super::{CryptoError, SymmetricKey};

/// Length of the integrity tag appended to every sealed message.
pub const TAG_LEN: usize = 8;

/// Bytes bound into both the keystream and the tag. Two seals under the
/// same key only share a keystream if their contexts are equal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SealContext(Vec<u8>);

impl SealContext {
    pub fn new(label: &[u8]) -> Self {
        let mut ctx = Self(Vec::with_capacity(64));
        ctx.push(label);
        ctx
    }

    /// Appends a length-prefixed field.
    pub fn push(&mut self, field: &[u8]) -> &mut Self {
        self.0
            .extend_from_slice(&(field.len() as u32).to_be_bytes());
        self.0.extend_from_slice(field);
        self
    }

    pub fn with(mut self, field: &[u8]) -> Self {
        self.push(field);
        self
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

fn keyed_hash(domain: &[u8], key: &[u8], ctx: &SealContext) -> Sha256 {
    let mut h = Sha256::new();
    h.update(domain);
    h.update((key.len() as u32).to_be_bytes());
    h.update(key);
    h.update((ctx.0.len() as u32).to_be_bytes());
    h.update(&ctx.0);
    h
}

fn apply_keystream(key: &[u8], ctx: &SealContext, data: &mut [u8]) {
    let base = keyed_hash(b"banzkp/stream", key, ctx);
    for (block, chunk) in data.chunks_mut(32).enumerate() {
        let mut h = base.clone();
        h.update((block as u64).to_be_bytes());
        let pad = h.finalize();
        for (b, p) in chunk.iter_mut().zip(pad.iter()) {
            *b ^= p;
        }
    }
}

fn tag(key: &[u8], ctx: &SealContext, body: &[u8]) -> [u8; TAG_LEN] {
    let mut h = keyed_hash(b"banzkp/tag", key, ctx);
    h.update(body);
    let digest = h.finalize();
    let mut out = [0u8; TAG_LEN];
    out.copy_from_slice(&digest[..TAG_LEN]);
    out
}

/// Encrypts and authenticates `plaintext`. Output is `body || tag`, exactly
/// `plaintext.len() + TAG_LEN` bytes.
pub fn seal<K: SymmetricKey + ?Sized>(key: &K, plaintext: &[u8], ctx: &SealContext) -> Vec<u8> {
    let key = key.key_bytes();
    let mut out = plaintext.to_vec();
    apply_keystream(key, ctx, &mut out);
    let t = tag(key, ctx, &out);
    out.extend_from_slice(&t);
    out
}

/// Inverse of [`seal`]. Fails on a wrong key, wrong context, or any change
/// to the ciphertext; never returns unauthenticated plaintext.
pub fn open<K: SymmetricKey + ?Sized>(
    key: &K,
    ciphertext: &[u8],
    ctx: &SealContext,
) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.len() < TAG_LEN {
        return Err(CryptoError::Decrypt);
    }
    let key = key.key_bytes();
    let (body, received) = ciphertext.split_at(ciphertext.len() - TAG_LEN);
    let expected = tag(key, ctx, body);
    // Accumulate so the comparison does not exit at the first differing byte.
    let diff = expected
        .iter()
        .zip(received)
        .fold(0u8, |acc, (a, b)| acc | (a ^ b));
    if diff != 0 {
        return Err(CryptoError::Decrypt);
    }
    let mut out = body.to_vec();
    apply_keystream(key, ctx, &mut out);
    Ok(out)
}
