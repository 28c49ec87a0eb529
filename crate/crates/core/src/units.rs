//! Unit conversion at the I/O boundary and phase reduction helpers.
//!
//! Everything inside the crate is angular (rad/s). Files and the CLI speak
//! ordinary frequency in Hz.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Low part of 2π: `TAU + TAU_LO` is 2π to roughly 32 significant digits.
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

pub fn hz_to_angular(hz: f64) -> f64 {
    TAU * hz
}

/// Angular frequency to Hz, rounded to 15 significant digits so that a
/// value read from a file survives the trip through rad/s unchanged.
pub fn angular_to_hz(omega: f64) -> f64 {
    canonical(omega / TAU)
}

/// Round to 15 significant digits.
pub fn canonical(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.14e}", x).parse().unwrap_or(x)
}

/// `(a * b) mod 2π` in `[0, 2π)`.
///
/// The product error is recovered exactly with an FMA and 2π is carried as
/// a two-term constant, so the result keeps full absolute precision even
/// when `a * b` is thousands of radians.
pub fn phase_mod_tau(a: f64, b: f64) -> f64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    let k = (p / TAU).round();
    let mut r = (-k).mul_add(TAU, p);
    r = (-k).mul_add(TAU_LO, r) + err;
    if r < 0.0 {
        r += TAU;
    }
    if r >= TAU {
        r -= TAU;
    }
    r
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let mut r = x % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// `e^{iθ}`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex64) {
        let (re, cre) = neumaier(self.sum.re, x.re);
        let (im, cim) = neumaier(self.sum.im, x.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(cre, cim);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    (t, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_absorbs_conversion_noise() {
        for hz in [6.1e6, 4.4e6, 2.29e9, 1.25e6, 6.85e6, 2.3e9] {
            assert_eq!(angular_to_hz(hz_to_angular(hz)), hz);
        }
    }

    #[test]
    fn phase_reduction_matches_integer_multiples() {
        // 2.3 GHz * 190 ns = 437 cycles exactly.
        let w = hz_to_angular(2.3e9);
        let ph = phase_mod_tau(w, 190e-9);
        let d = ph.min(TAU - ph);
        assert!(d < 1e-9, "{ph}");
        let ph = phase_mod_tau(hz_to_angular(2.29e9), 160e-9);
        // 366.4 cycles
        assert!((ph - 0.4 * TAU).abs() < 1e-9, "{ph}");
    }

    #[test]
    fn wrap_pi_range() {
        for x in [-10.0, -PI, 0.0, PI, 3.5, 100.0] {
            let w = wrap_pi(x);
            assert!(w > -PI - 1e-15 && w <= PI + 1e-15);
            assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-12);
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(Complex64::new(1.0, 0.0));
        for _ in 0..10 {
            s.add(Complex64::new(1e-16, 0.0));
        }
        s.add(Complex64::new(-1.0, 0.0));
        assert!((s.value().re - 1e-15).abs() < 1e-30);
    }
}
