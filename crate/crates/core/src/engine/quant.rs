use crate::scalar::Scalar;

const Q15_ONE: f64 = 32768.0;

/// Rounds to the nearest Q1.15 value, saturating at [-1, 1 - 2^-15].
pub fn quantize_q15<T: Scalar>(x: T) -> T {
    let q = (x.to_f64_lossy() * Q15_ONE)
        .round()
        .clamp(-Q15_ONE, Q15_ONE - 1.0);
    T::of(q / Q15_ONE)
}

/// Rounds through IEEE single precision.
pub fn round_f32<T: Scalar>(x: T) -> T {
    T::of(x.to_f64_lossy() as f32 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q15_grid_and_saturation() {
        assert_eq!(quantize_q15(0.5f64), 0.5);
        assert_eq!(quantize_q15(1.0f64), 32767.0 / 32768.0);
        assert_eq!(quantize_q15(-3.0f32), -1.0);
        let step = 1.0 / 32768.0;
        assert_eq!(quantize_q15(0.4 * step), 0.0);
        assert_eq!(quantize_q15(0.6 * step), step);
    }

    #[test]
    fn q15_is_idempotent() {
        for i in -100..100 {
            let x = i as f64 * 0.0123;
            let q = quantize_q15(x);
            assert_eq!(quantize_q15(q), q);
        }
    }

    #[test]
    fn f32_rounding() {
        let x = 0.1f64;
        assert_eq!(round_f32(x), 0.1f32 as f64);
    }
}
