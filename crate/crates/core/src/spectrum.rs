//! Emission spectrum and the bridge between time and frequency domains.
//!
//! Transform convention: `A(ω) = ∫ a_e(t) e^{+iωt} dt` and
//! `a_e(t) = (1/2π) ∫ A(ω) e^{−iωt} dω`. For the relaxing atom
//! `A(ω) = i χ(ω)` with the susceptibility
//! `χ(ω) = 1 / (ω − ω₀₁ + iγ(1 + e^{iωT}) + iγ_res)`.
//!
//! Grids are held as detunings `Δ = ω − ω₀₁` from a reference frequency.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::dynamics::{parse_f64, AmplitudeTrace, Frame};
use crate::error::{Error, Result};
use crate::model::GiantAtomParams;
use crate::special::sici;
use crate::units::{angular_to_hz, cis, hz_to_angular, phase_mod_tau};

/// Uniform detuning grid, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl DetuningGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidInput("empty frequency grid".into()));
        }
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() {
            return Err(Error::InvalidInput(format!("bad grid step {step}")));
        }
        Ok(Self { start, step, len })
    }

    /// `points` samples symmetric about zero spanning `span`.
    pub fn centered(span: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidInput("grid needs at least two points".into()));
        }
        Self::new(-0.5 * span, span / (points - 1) as f64, points)
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }
}

/// Susceptibility and power spectrum on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    /// Reference frequency the detunings are measured from (ω₀₁), rad/s.
    pub omega_ref: f64,
    /// Detuning of the first sample, rad/s.
    pub omega0: f64,
    pub domega: f64,
    pub chi: Vec<Complex64>,
    pub s0: Vec<f64>,
}

impl SpectrumTrace {
    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn detuning(&self, k: usize) -> f64 {
        self.omega0 + k as f64 * self.domega
    }

    /// Absolute angular frequency of sample `k`.
    pub fn omega(&self, k: usize) -> f64 {
        self.omega_ref + self.detuning(k)
    }

    pub fn grid(&self) -> DetuningGrid {
        DetuningGrid {
            start: self.omega0,
            step: self.domega,
            len: self.len(),
        }
    }

    /// Power spectrum scaled to unit maximum.
    pub fn normalized_s0(&self) -> Vec<f64> {
        let m = self.s0.iter().cloned().fold(0.0, f64::max);
        if m > 0.0 {
            self.s0.iter().map(|v| v / m).collect()
        } else {
            self.s0.clone()
        }
    }

    /// CSV with header `omega_hz,chi_re,chi_im,s0`.
    pub fn to_csv(&self, normalize: bool) -> String {
        let s0 = if normalize {
            self.normalized_s0()
        } else {
            self.s0.clone()
        };
        let mut s = String::new();
        let _ = writeln!(s, "# omega01_hz={:e}", angular_to_hz(self.omega_ref));
        let _ = writeln!(s, "# s0_normalized={normalize}");
        s.push_str("omega_hz,chi_re,chi_im,s0\n");
        for (k, c) in self.chi.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e}",
                angular_to_hz(self.omega(k)),
                c.re,
                c.im,
                s0[k]
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut omega_ref = None;
        let mut omega = Vec::new();
        let mut chi = Vec::new();
        let mut s0 = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("omega_hz") {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(v) = meta.trim().strip_prefix("omega01_hz=") {
                    omega_ref = Some(hz_to_angular(parse_f64(v)?));
                }
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::InvalidInput(format!("bad spectrum row {line:?}")));
            }
            omega.push(hz_to_angular(parse_f64(cols[0])?));
            chi.push(Complex64::new(parse_f64(cols[1])?, parse_f64(cols[2])?));
            s0.push(parse_f64(cols[3])?);
        }
        if omega.len() < 2 {
            return Err(Error::InvalidInput("spectrum needs at least two rows".into()));
        }
        let omega_ref = omega_ref
            .ok_or_else(|| Error::InvalidInput("spectrum lacks '# omega01_hz=' line".into()))?;
        let n = omega.len();
        let domega = (omega[n - 1] - omega[0]) / (n - 1) as f64;
        if !(domega > 0.0) {
            return Err(Error::InvalidInput("spectrum grid must be ascending".into()));
        }
        Ok(Self {
            omega_ref,
            omega0: omega[0] - omega_ref,
            domega,
            chi,
            s0,
        })
    }
}

/// `χ(ω)` at absolute angular frequency `omega`.
pub fn susceptibility(params: &GiantAtomParams, omega: f64) -> Result<Complex64> {
    let feedback = cis(phase_mod_tau(omega, params.delay_t));
    chi_from_parts(params, omega - params.omega01, feedback)
}

/// `χ` at detuning `delta` from ω₀₁; `phase0` is `ω₀₁T mod 2π`.
pub(crate) fn susceptibility_detuned(
    params: &GiantAtomParams,
    phase0: f64,
    delta: f64,
) -> Result<Complex64> {
    chi_from_parts(params, delta, cis(phase0 + delta * params.delay_t))
}

fn chi_from_parts(params: &GiantAtomParams, delta: f64, feedback: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let denom =
        Complex64::new(delta, 0.0) + i * params.gamma * (1.0 + feedback) + i * params.gamma_res;
    let scale = delta.abs() + 2.0 * params.gamma + params.gamma_res;
    if denom.norm() <= 1e-12 * scale {
        return Err(Error::Singularity(format!(
            "susceptibility pole at detuning {delta:e} rad/s"
        )));
    }
    Ok(denom.inv())
}

/// Closed-form spectrum `S₀ = ω₀₁ |χ|²` on `grid` (detunings from ω₀₁).
pub fn spectrum_closed(params: &GiantAtomParams, grid: &DetuningGrid) -> Result<SpectrumTrace> {
    params.validate()?;
    let phase0 = params.phase();
    let chi = (0..grid.len)
        .into_par_iter()
        .map(|k| susceptibility_detuned(params, phase0, grid.at(k)))
        .collect::<Result<Vec<_>>>()?;
    let s0 = chi.iter().map(|c| params.omega01 * c.norm_sqr()).collect();
    Ok(SpectrumTrace {
        omega_ref: params.omega01,
        omega0: grid.start,
        domega: grid.step,
        chi,
        s0,
    })
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    }
}

/// One-sided Fourier transform of an amplitude trace.
///
/// The trace (converted to the rotating frame) is zero-padded to the next
/// power of two holding at least eight times its length and summed with
/// weight `dt`. A trace starting at `t = 0` takes half weight on its first
/// sample, the value the transform sees at the jump of a causal signal.
pub fn fft_spectrum(trace: &AmplitudeTrace) -> Result<SpectrumTrace> {
    if trace.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "trace has {} samples; at least 8 are needed",
            trace.len()
        )));
    }
    let rot = trace.to_frame(Frame::Rotating);
    let n = (8 * rot.len()).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..rot.len()].copy_from_slice(&rot.values);
    if rot.t0 == 0.0 {
        buf[0] *= 0.5;
    }
    plan(n, false).process(&mut buf);

    let domega = 2.0 * std::f64::consts::PI / (n as f64 * rot.dt);
    let half = n / 2;
    let mut chi = Vec::with_capacity(n);
    for j in 0..n {
        // ascending detunings: −n/2 … n/2 − 1
        let k = (j + half) % n;
        let delta = (j as f64 - half as f64) * domega;
        let a = buf[k] * rot.dt * cis(delta * rot.t0);
        chi.push(-Complex64::i() * a);
    }
    let s0 = chi.iter().map(|c| rot.omega01 * c.norm_sqr()).collect();
    Ok(SpectrumTrace {
        omega_ref: rot.omega01,
        omega0: -(half as f64) * domega,
        domega,
        chi,
        s0,
    })
}

/// Decay-rate scale `max Re D(ω)` read off a sampled susceptibility, where
/// `c/χ = Δ + iD` and `c` is the `1/Δ` tail coefficient.
fn tail_coefficient(spec: &SpectrumTrace) -> Complex64 {
    let n = spec.len();
    0.5 * (spec.chi[0] * spec.detuning(0) + spec.chi[n - 1] * spec.detuning(n - 1))
}

/// Largest total decay rate `γ(1 + cos ωT) + γ_res` implied by the spectrum.
pub fn linewidth_scale(spec: &SpectrumTrace) -> f64 {
    let c = tail_coefficient(spec);
    (0..spec.len())
        .filter(|&k| spec.chi[k].norm() > 0.0)
        .map(|k| ((c / spec.chi[k] - spec.detuning(k)) * -Complex64::i()).re)
        .fold(0.0, f64::max)
}

/// Inverse transform of a complex spectrum back to the rotating-frame
/// amplitude, `a_e(t) = (i/2π) ∫ χ(Δ) e^{−iΔt} dΔ`.
///
/// The `1/Δ` tail outside the sampled window is added analytically through
/// sine and cosine integrals, which removes the jump-induced ringing at
/// `t = 0`; the `t = 0` sample is doubled to report the causal limit
/// `a_e(0⁺)`. The spectrum must span at least 40 linewidths, centred on ω₀₁.
pub fn ift_spectrum(spec: &SpectrumTrace) -> Result<AmplitudeTrace> {
    let n = spec.len();
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "spectrum has {n} samples; at least 8 are needed"
        )));
    }
    let kappa = linewidth_scale(spec);
    let span = (n - 1) as f64 * spec.domega;
    let required = 40.0 * kappa;
    let lo = -spec.detuning(0);
    let hi = spec.detuning(n - 1);
    if span < required || lo < 0.375 * required || hi < 0.375 * required {
        return Err(Error::WindowTooNarrow {
            span_hz: span / (2.0 * std::f64::consts::PI),
            required_hz: required / (2.0 * std::f64::consts::PI),
        });
    }

    let c = tail_coefficient(spec);
    let d_mean = mean_decay(spec, c);
    let big_n = (4 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); big_n];
    buf[..n].copy_from_slice(&spec.chi);
    plan(big_n, true).process(&mut buf);

    let dt = 2.0 * std::f64::consts::PI / (big_n as f64 * spec.domega);
    let upper = hi + 0.5 * spec.domega;
    let lower = lo + 0.5 * spec.domega;
    let scale = spec.domega / (2.0 * std::f64::consts::PI);
    let i = Complex64::i();
    let values: Vec<Complex64> = (0..big_n / 2)
        .map(|m| {
            let t = m as f64 * dt;
            let sum = buf[m] * scale * cis(-spec.omega0 * t);
            let tail = c * tail_integral(lower, upper, t)
                - i * c * d_mean * tail_integral_sq(lower, upper, t);
            let a = i * (sum + tail);
            if m == 0 {
                2.0 * a
            } else {
                a
            }
        })
        .collect();
    AmplitudeTrace::new(0.0, dt, values, Frame::Rotating, spec.omega_ref)
}

/// `(1/2π) [∫_{upper}^{∞} + ∫_{−∞}^{−lower}] e^{−iΔt}/Δ dΔ`.
fn tail_integral(lower: f64, upper: f64, t: f64) -> Complex64 {
    let inv = 1.0 / (2.0 * std::f64::consts::PI);
    if t == 0.0 {
        // the sine integrals vanish at t = 0; the jump is restored by doubling
        return Complex64::new((lower / upper).ln() * inv, 0.0);
    }
    let (si_a, ci_a) = sici(upper * t);
    let (si_b, ci_b) = sici(lower * t);
    Complex64::new(ci_b - ci_a, si_a + si_b - std::f64::consts::PI) * inv
}

/// Grid average of `D` in `c/χ = Δ + iD`; the feedback term averages out
/// over many comb periods, leaving `γ + γ_res`.
fn mean_decay(spec: &SpectrumTrace, c: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut n = 0.0;
    for (k, chi) in spec.chi.iter().enumerate() {
        if chi.norm() > 0.0 {
            acc += (c / chi - spec.detuning(k)) * -Complex64::i();
            n += 1.0;
        }
    }
    if n > 0.0 {
        acc / n
    } else {
        acc
    }
}

/// `(1/2π) [∫_{upper}^{∞} + ∫_{−∞}^{−lower}] e^{−iΔt}/Δ² dΔ`.
fn tail_integral_sq(lower: f64, upper: f64, t: f64) -> Complex64 {
    let inv = 1.0 / (2.0 * std::f64::consts::PI);
    (e2_imag(upper * t) / upper + e2_imag(lower * t).conj() / lower) * inv
}

/// Exponential integral `E₂(ix)` for real `x ≥ 0`.
fn e2_imag(x: f64) -> Complex64 {
    if x == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (si, ci) = sici(x);
    let e1 = Complex64::new(-ci, si - std::f64::consts::FRAC_PI_2);
    cis(-x) - Complex64::i() * x * e1
}

/// Strict local maxima of `s0`, refined by a parabola; returns
/// `(detuning, height)` pairs in ascending detuning.
pub fn spectral_peaks(spec: &SpectrumTrace) -> Vec<(f64, f64)> {
    refined_maxima(&spec.s0, spec.omega0, spec.domega)
}

/// Strict interior local maxima of samples `y` at `x0 + k·dx`, each refined
/// by the parabola through its neighbours.
pub fn refined_maxima(y: &[f64], x0: f64, dx: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..y.len().saturating_sub(1) {
        let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
        if y1 > y0 && y1 > y2 {
            let denom = y0 - 2.0 * y1 + y2;
            let off = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
            out.push((x0 + (k as f64 + off) * dx, y1 - 0.25 * (y0 - y2) * off));
        }
    }
    out
}

/// Least-squares slope of peak position against peak index.
pub fn comb_period(positions: &[f64]) -> Option<f64> {
    let n = positions.len();
    if n < 2 {
        return None;
    }
    let mean_i = (n - 1) as f64 / 2.0;
    let mean_x = positions.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, x) in positions.iter().enumerate() {
        let di = i as f64 - mean_i;
        num += di * (x - mean_x);
        den += di * di;
    }
    Some(num / den)
}
