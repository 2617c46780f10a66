//! Exact reduction of phases `alpha * n (mod 1)`.
//!
//! Every finite `f64` is a dyadic rational `m / 2^s`, so the fractional part
//! of `alpha * n` for an integer `n` is `((m * n) mod 2^s) / 2^s`, which we
//! compute in integer arithmetic. The only rounding left is the final
//! conversion of a number in `[0, 1)` to `f64`, so phase error does not grow
//! with `|n|`.

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use std::f64::consts::TAU;

/// The fractional part of a real number, held exactly as `±mant / 2^shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dyadic {
    mant: u64,
    shift: u32,
    neg: bool,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic {
        mant: 0,
        shift: 0,
        neg: false,
    };

    /// Drops the integer part of `alpha`. Panics on non-finite input.
    pub fn from_f64(alpha: f64) -> Self {
        assert!(alpha.is_finite(), "phase must be finite, got {alpha}");
        // Truncation toward zero is exact; `x - floor(x)` is not for small
        // negative `x`, so the sign is kept separately.
        let frac = alpha.fract();
        if frac == 0.0 {
            return Self::ZERO;
        }
        let bits = frac.abs().to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i32;
        let frac_bits = bits & ((1u64 << 52) - 1);
        let (mut mant, exp) = if exp_bits == 0 {
            (frac_bits, -1074)
        } else {
            (frac_bits | (1u64 << 52), exp_bits - 1075)
        };
        debug_assert!(exp < 0);
        let mut shift = (-exp) as u32;
        let tz = mant.trailing_zeros().min(shift);
        mant >>= tz;
        shift -= tz;
        Dyadic {
            mant,
            shift,
            neg: frac < 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0
    }

    /// The represented phase in `[0, 1)` (rounded for negative inputs).
    pub fn to_f64(&self) -> f64 {
        self.frac_mul_i128(1)
    }

    /// Fractional part of `self * n`, in `[0, 1]` (1 only through rounding).
    pub fn frac_mul_i128(&self, n: i128) -> f64 {
        if self.mant == 0 || n == 0 {
            return 0.0;
        }
        let n = if self.neg {
            match n.checked_neg() {
                Some(v) => v,
                None => return self.frac_mul_big(&BigInt::from(n)),
            }
        } else {
            n
        };
        let m = self.mant as u128;
        if self.shift <= 64 {
            let mask = low_mask(self.shift);
            // Two's complement wrap gives the residue modulo 2^shift.
            let r = (n as u128) & mask;
            let prod = (m * r) & mask;
            return scale_pow2(prod as f64, self.shift);
        }
        let a = n.unsigned_abs();
        if a >> 64 != 0 {
            return self.frac_mul_big(&BigInt::from(n));
        }
        let mut prod = m * a;
        if self.shift < 128 {
            prod &= low_mask(self.shift);
        }
        let x = u128_scaled(prod, self.shift);
        if n < 0 && x != 0.0 {
            1.0 - x
        } else {
            x
        }
    }

    /// Fractional part of `self * n` for an arbitrary precision integer.
    pub fn frac_mul_big(&self, n: &BigInt) -> f64 {
        if self.mant == 0 || n.is_zero() {
            return 0.0;
        }
        if let Some(small) = n.to_i128() {
            if small != i128::MIN && (self.shift <= 64 || small.unsigned_abs() >> 64 == 0) {
                return self.frac_mul_i128(small);
            }
        }
        let modulus = BigInt::from(1u8) << self.shift;
        let signed = if self.neg { -BigInt::from(self.mant) } else { BigInt::from(self.mant) };
        let r = (signed * n).mod_floor(&modulus);
        big_scaled(&r, self.shift)
    }

    /// `e(self * n)` as a unit complex number.
    pub fn cis_mul_i128(&self, n: i128) -> Complex64 {
        cis(self.frac_mul_i128(n))
    }
}

/// `e(t) = exp(2 pi i t)`.
#[inline]
pub fn cis(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Adds two phases modulo 1.
#[inline]
pub fn add_mod1(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s >= 1.0 {
        s - 1.0
    } else {
        s
    }
}

fn low_mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

/// `x * 2^-shift` without intermediate underflow.
fn scale_pow2(mut x: f64, mut shift: u32) -> f64 {
    while shift > 1000 {
        x *= 2f64.powi(-1000);
        shift -= 1000;
    }
    x * 2f64.powi(-(shift as i32))
}

fn u128_scaled(x: u128, shift: u32) -> f64 {
    scale_pow2(x as f64, shift)
}

fn big_scaled(r: &BigInt, shift: u32) -> f64 {
    debug_assert!(r.sign() != Sign::Minus);
    if shift <= 64 {
        return scale_pow2(r.to_f64().unwrap_or(0.0), shift);
    }
    // Keep the top 64 bits below the binary point.
    let top: BigInt = r >> (shift - 64);
    scale_pow2(top.to_f64().unwrap_or(0.0), 64)
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn exact_frac(alpha: f64, n: &BigInt) -> f64 {
        let a = BigRational::from_float(alpha).unwrap();
        let p = a * BigRational::from_integer(n.clone());
        let f = &p - p.floor();
        f.to_f64().unwrap()
    }

    #[test]
    fn reduces_simple_fractions() {
        let half = Dyadic::from_f64(0.5);
        assert_eq!(half.frac_mul_i128(3), 0.5);
        assert_eq!(half.frac_mul_i128(4), 0.0);
        assert_eq!(half.frac_mul_i128(-3), 0.5);
        let eighth = Dyadic::from_f64(-0.875);
        assert_eq!(eighth.to_f64(), 0.125);
        assert_eq!(eighth.frac_mul_i128(27), 0.375);
    }

    #[test]
    fn big_multiplier_is_exact() {
        let alpha = 0.1;
        let n: BigInt = BigInt::from(10).pow(40) + 7;
        let d = Dyadic::from_f64(alpha);
        let got = d.frac_mul_big(&n);
        assert!((got - exact_frac(alpha, &n)).abs() < 1e-15);
    }

    #[test]
    fn tiny_alpha_uses_wide_path() {
        let alpha = 3.7e-9;
        let d = Dyadic::from_f64(alpha);
        for n in [1i128, 12345, -98765, 1 << 62, -(1 << 70)] {
            let got = d.frac_mul_i128(n);
            let want = exact_frac(alpha, &BigInt::from(n));
            assert!((got - want).abs() < 1e-15, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut xs = vec![1e16, 1.0, -1e16];
        xs.extend(std::iter::repeat_n(0.1, 10));
        assert!((compensated_sum(xs) - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_rational_reference(alpha in -4.0f64..4.0, n in any::<i64>()) {
            let d = Dyadic::from_f64(alpha);
            let got = d.frac_mul_i128(n as i128);
            let want = exact_frac(alpha, &BigInt::from(n));
            let diff = (got - want).abs();
            prop_assert!(diff < 1e-15 || (1.0 - diff) < 1e-15);
        }
    }
}
