use num_bigint::BigUint;

use super::CryptoError;

/// Reads `length` bits of the `width`-bit, MSB-first encoding of `value`,
/// starting at bit `start` (bit 0 is the most significant), and packs them
/// MSB-first into `ceil(length / 8)` bytes with zero padding at the end.
pub fn extract_interval(
    value: &BigUint,
    width: usize,
    start: usize,
    length: usize,
) -> Result<Vec<u8>, CryptoError> {
    if start.checked_add(length).is_none_or(|end| end > width) {
        return Err(CryptoError::Interval {
            start,
            length,
            width,
        });
    }
    if value.bits() as usize > width {
        return Err(CryptoError::ValueTooWide { width });
    }
    let mut out = vec![0u8; length.div_ceil(8)];
    for i in 0..length {
        let pos = start + i;
        if value.bit((width - 1 - pos) as u64) {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::fixed_width_bytes;

    #[test]
    fn full_width_identity() {
        let v = BigUint::from(0b1011_0011u32);
        assert_eq!(extract_interval(&v, 8, 0, 8).unwrap(), vec![0xB3]);
    }

    #[test]
    fn hand_expanded_window() {
        // 1 0 [1 1 0] 0 1 1
        let v = BigUint::from(0b1011_0011u32);
        assert_eq!(extract_interval(&v, 8, 2, 3).unwrap(), vec![0xC0]);
    }

    #[test]
    fn spans_byte_boundaries() {
        // 0xABCD = 1010 1011 1100 1101, bits 4..12 = 1011 1100
        let v = BigUint::from(0xABCDu32);
        assert_eq!(extract_interval(&v, 16, 4, 8).unwrap(), vec![0xBC]);
        assert_eq!(extract_interval(&v, 16, 7, 5).unwrap(), vec![0b1110_0000]);
    }

    #[test]
    fn leading_zeros_count_toward_width() {
        let v = BigUint::from(1u32);
        assert_eq!(extract_interval(&v, 16, 0, 16).unwrap(), vec![0, 1]);
        assert_eq!(extract_interval(&v, 16, 15, 1).unwrap(), vec![0x80]);
    }

    #[test]
    fn out_of_range_window_is_an_error() {
        let v = BigUint::from(5u32);
        assert!(matches!(
            extract_interval(&v, 8, 6, 3),
            Err(CryptoError::Interval { .. })
        ));
        assert!(extract_interval(&v, 8, usize::MAX, 2).is_err());
        assert_eq!(
            extract_interval(&BigUint::from(256u32), 8, 0, 1),
            Err(CryptoError::ValueTooWide { width: 8 })
        );
    }

    #[test]
    fn whole_window_equals_fixed_width_encoding() {
        let params = crate::crypto::ProtocolParams::default();
        let v = params.modulus() - 77u32;
        assert_eq!(
            extract_interval(&v, 2048, 0, 2048).unwrap(),
            fixed_width_bytes(&v, 256)
        );
    }

    #[test]
    fn zero_length_window() {
        assert!(extract_interval(&BigUint::from(3u32), 8, 8, 0)
            .unwrap()
            .is_empty());
    }
}
