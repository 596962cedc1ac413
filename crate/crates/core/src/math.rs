//! Small numeric helpers for the physics hot loop.
//!
//! `sin_cos` and `sat_tanh` are polynomial replacements for the libm calls
//! that dominate the per-substep budget (32 joint rotations and a handful of
//! friction regularizers per substep). Both are pure arithmetic, so they are
//! deterministic, and both are validated against libm to well below the
//! tightest tolerance any consumer asserts.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Polynomial `sin` on |x| <= pi/4 (odd powers).
#[inline(always)]
fn sin_poly(x: f64) -> f64 {
    // Taylor coefficients through x^15 are accurate to ~1e-16 on this range.
    const S3: f64 = -1.666_666_666_666_666_6e-1;
    const S5: f64 = 8.333_333_333_333_333e-3;
    const S7: f64 = -1.984_126_984_126_984e-4;
    const S9: f64 = 2.755_731_922_398_589e-6;
    const S11: f64 = -2.505_210_838_544_172e-8;
    const S13: f64 = 1.605_904_383_682_161e-10;
    const S15: f64 = -7.647_163_731_819_816e-13;
    let x2 = x * x;
    let p = S15;
    let p = p * x2 + S13;
    let p = p * x2 + S11;
    let p = p * x2 + S9;
    let p = p * x2 + S7;
    let p = p * x2 + S5;
    let p = p * x2 + S3;
    x + x * x2 * p
}

/// Polynomial `cos` on |x| <= pi/4 (even powers).
#[inline(always)]
fn cos_poly(x: f64) -> f64 {
    const C2: f64 = -5e-1;
    const C4: f64 = 4.166_666_666_666_666e-2;
    const C6: f64 = -1.388_888_888_888_889e-3;
    const C8: f64 = 2.480_158_730_158_73e-5;
    const C10: f64 = -2.755_731_922_398_589e-7;
    const C12: f64 = 2.087_675_698_786_81e-9;
    const C14: f64 = -1.147_074_559_772_972e-11;
    const C16: f64 = 4.779_477_332_387_385e-14;
    let x2 = x * x;
    let p = C16;
    let p = p * x2 + C14;
    let p = p * x2 + C12;
    let p = p * x2 + C10;
    let p = p * x2 + C8;
    let p = p * x2 + C6;
    let p = p * x2 + C4;
    let p = p * x2 + C2;
    1.0 + x2 * p
}

/// Simultaneous sine and cosine, exact to ~1e-14 for |x| <= pi and falling
/// back to libm outside that range (joint angles never leave it; the lid
/// angle can).
#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    let ax = x.abs();
    if ax <= PI {
        let (s, c) = if ax <= FRAC_PI_4 {
            (sin_poly(ax), cos_poly(ax))
        } else if ax <= 3.0 * FRAC_PI_4 {
            // sin(a) = cos(pi/2 - a), cos(a) = sin(pi/2 - a), |pi/2 - a| <= pi/4
            let r = FRAC_PI_2 - ax;
            (cos_poly(r), sin_poly(r))
        } else {
            // sin(a) = sin(pi - a), cos(a) = -cos(pi - a), pi - a in [0, pi/4]
            let r = PI - ax;
            (sin_poly(r), -cos_poly(r))
        };
        (if x < 0.0 { -s } else { s }, c)
    } else {
        x.sin_cos()
    }
}

/// Saturating tanh for non-negative arguments.
///
/// Used by the friction regularizer where the argument is slip speed over a
/// millimetre-per-second scale, so it saturates almost immediately; the exact
/// shape near zero matters, the far tail does not (beyond ~19, tanh is 1.0 to
/// f64 precision).
#[inline]
pub fn sat_tanh(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x >= 19.0 {
        1.0
    } else {
        x.tanh()
    }
}

/// SplitMix64 step, used to derive independent RNG seeds from a master seed.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_cos_matches_libm() {
        let mut worst = 0.0f64;
        let mut x = -3.2;
        while x < 3.2 {
            let (s, c) = sin_cos(x);
            worst = worst.max((s - x.sin()).abs()).max((c - x.cos()).abs());
            x += 1e-4;
        }
        assert!(worst < 1e-13, "worst sin_cos error {worst}");
    }

    #[test]
    fn sin_cos_large_arguments_fall_back() {
        for &x in &[4.0, -7.3, 123.456, -1e4] {
            let (s, c) = sin_cos(x);
            assert_eq!(s, x.sin());
            assert_eq!(c, x.cos());
        }
    }

    #[test]
    fn sat_tanh_matches_libm() {
        let mut x = 0.0;
        while x < 25.0 {
            assert!((sat_tanh(x) - x.tanh()).abs() < 1e-15);
            x += 0.01;
        }
    }

    #[test]
    fn splitmix_streams_differ() {
        let mut a = 1u64;
        let mut b = 2u64;
        assert_ne!(splitmix64(&mut a), splitmix64(&mut b));
    }
}
