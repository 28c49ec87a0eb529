//! Sine and cosine integrals.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;

/// `(Si(x), Ci(x))` for `x > 0`.
///
/// Power series below `x = 2`, otherwise the continued fraction of
/// `E₁(ix)` evaluated with the modified Lentz method.
pub fn sici(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "sici needs x > 0");
    if x > 2.0 {
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, x);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = b.inv();
        let mut h = d;
        for i in 2..100_000 {
            let a = -((i - 1) * (i - 1)) as f64;
            b += 2.0;
            d = (d * a + b).inv();
            c = b + c.inv() * a;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < EPS {
                break;
            }
        }
        h *= Complex64::new(x.cos(), -x.sin());
        (FRAC_PI_2 + h.im, -h.re)
    } else {
        let mut si = 0.0;
        let mut ci = 0.0;
        // term = (-1)^k x^m / m!, alternating between sine (odd m) and
        // cosine (even m) contributions
        let mut term = 1.0;
        let mut m = 1;
        loop {
            term *= x / m as f64;
            let contrib = term / m as f64;
            if m % 2 == 1 {
                si += contrib;
            } else {
                ci += contrib;
            }
            if contrib.abs() < EPS * (si.abs() + ci.abs()) {
                break;
            }
            if m % 2 == 1 {
                term = -term;
            }
            m += 1;
            if m > 200 {
                break;
            }
        }
        (si, EULER_GAMMA + x.ln() + ci)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_si(x: f64) -> f64 {
        // composite Simpson on sin(t)/t
        let n = 20_000;
        let h = x / n as f64;
        let f = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn si_matches_quadrature() {
        for x in [0.1, 0.5, 1.0, 1.9, 2.1, 3.0, 7.5, 20.0] {
            let (si, _) = sici(x);
            assert!((si - quad_si(x)).abs() < 1e-12, "x={x}: {si} vs {}", quad_si(x));
        }
    }

    #[test]
    fn known_values() {
        // Abramowitz & Stegun table 5.1
        let (si, ci) = sici(1.0);
        assert!((si - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((ci - 0.337_403_922_900_968).abs() < 1e-14);
        let (si, ci) = sici(5.0);
        assert!((si - 1.549_931_244_944_674).abs() < 1e-13);
        assert!((ci - (-0.190_029_749_656_644)).abs() < 1e-13);
    }

    #[test]
    fn ci_derivative_is_cos_over_x() {
        for x in [0.7, 1.99, 2.01, 4.0, 30.0] {
            let h = 1e-5;
            let d = (sici(x + h).1 - sici(x - h).1) / (2.0 * h);
            assert!((d - x.cos() / x).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn large_argument_limits() {
        let (si, ci) = sici(1e4);
        assert!((si - FRAC_PI_2).abs() < 2e-4);
        assert!(ci.abs() < 2e-4);
    }
}
