use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{CommitKey, ProtocolParams, SessionKey, SharedSecret, SESSION_KEY_LEN};

/// The single deterministic stream every run draws from.
pub type SimRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: usize) -> BigUint {
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    let extra = bytes.len() * 8 - bits;
    if extra > 0 {
        bytes[0] &= 0xFF >> extra;
    }
    BigUint::from_bytes_be(&bytes)
}

/// Uniform in `[2, 2^exponent_bits)`.
pub fn draw_exponent<R: RngCore + ?Sized>(rng: &mut R, params: &ProtocolParams) -> BigUint {
    let two = BigUint::from(2u32);
    loop {
        let e = random_bits(rng, params.exponent_bits());
        if e >= two {
            return e;
        }
    }
}

/// Uniform interval offset in `[0, W - interval_bits]`.
pub fn draw_ri<R: RngCore + ?Sized>(rng: &mut R, params: &ProtocolParams) -> u16 {
    rng.gen_range(0..=params.max_ri() as u16)
}

pub fn draw_commit_key<R: RngCore + ?Sized>(rng: &mut R, params: &ProtocolParams) -> CommitKey {
    let mut key = vec![0u8; params.kcs_bytes()];
    rng.fill_bytes(&mut key);
    CommitKey::new(key, params).expect("length matches params")
}

/// Registration-time secret, uniform in `[2, modulus - 1)`.
pub fn draw_secret<R: RngCore + ?Sized>(rng: &mut R, params: &ProtocolParams) -> SharedSecret {
    let upper = params.modulus() - 1u32;
    loop {
        let v = random_bits(rng, params.modulus_bits());
        if v < upper {
            if let Ok(s) = SharedSecret::new(v, params) {
                return s;
            }
        }
    }
}

pub fn draw_session_key<R: RngCore + ?Sized>(rng: &mut R, key_id: u32) -> SessionKey {
    let mut key = vec![0u8; SESSION_KEY_LEN];
    rng.fill_bytes(&mut key);
    SessionKey::new(key, key_id).expect("fixed length")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let params = ProtocolParams::default();
        let mut a = seeded_rng(9);
        let mut b = seeded_rng(9);
        for _ in 0..50 {
            assert_eq!(
                draw_exponent(&mut a, &params),
                draw_exponent(&mut b, &params)
            );
            assert_eq!(draw_ri(&mut a, &params), draw_ri(&mut b, &params));
            assert_eq!(
                draw_commit_key(&mut a, &params),
                draw_commit_key(&mut b, &params)
            );
        }
        let mut c = seeded_rng(10);
        assert_ne!(
            draw_exponent(&mut seeded_rng(9), &params),
            draw_exponent(&mut c, &params)
        );
    }

    #[test]
    fn ranges_hold() {
        let params = ProtocolParams::default();
        let mut rng = seeded_rng(1);
        let bound = BigUint::from(1u32) << params.exponent_bits();
        for _ in 0..2000 {
            let e = draw_exponent(&mut rng, &params);
            assert!(e >= BigUint::from(2u32) && e < bound);
            let ri = draw_ri(&mut rng, &params) as usize;
            assert!(ri + params.interval_bits() <= params.modulus_bits());
        }
        for _ in 0..20 {
            let v = draw_secret(&mut rng, &params);
            assert!(params.is_nondegenerate(v.value()));
        }
    }

    #[test]
    fn small_exponent_width_still_at_least_two() {
        let base = ProtocolParams::default();
        let params = ProtocolParams::new(base.modulus().clone(), 2, 200, 200).unwrap();
        let mut rng = seeded_rng(3);
        let draws: Vec<BigUint> = (0..100).map(|_| draw_exponent(&mut rng, &params)).collect();
        assert!(draws
            .iter()
            .all(|e| *e == BigUint::from(2u32) || *e == BigUint::from(3u32)));
        assert!(draws.contains(&BigUint::from(2u32)) && draws.contains(&BigUint::from(3u32)));
    }

    #[test]
    fn ri_histogram_fills_every_byte_bucket() {
        // 1849 offsets spread over 256 equal-width buckets, about 39 draws each.
        let params = ProtocolParams::default();
        let mut rng = seeded_rng(2024);
        let span = params.max_ri() + 1;
        let mut hist = vec![0u32; 256];
        for _ in 0..10_000 {
            hist[draw_ri(&mut rng, &params) as usize * 256 / span] += 1;
        }
        assert!(hist.iter().all(|&n| n > 0), "empty bucket in {hist:?}");
    }
}
