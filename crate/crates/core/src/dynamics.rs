//! Relaxation of an initially excited giant atom.
//!
//! Two independent routes are provided: the closed delayed series and a
//! method-of-steps integration of the delay equation. Both work in the
//! frame rotating at ω₀₁, `b(t) = a_e(t) e^{iω₀₁t}`, which obeys
//!
//! ```text
//! db/dt = −(γ + γ_res) b(t) − γ e^{iω₀₁T} b(t − T),   b(t < 0) = 0, b(0) = 1.
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GiantAtomParams;
use crate::units::{angular_to_hz, cis, hz_to_angular, phase_mod_tau, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Rotating,
}

impl FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab" => Ok(Frame::Lab),
            "rotating" => Ok(Frame::Rotating),
            other => Err(Error::InvalidInput(format!("unknown frame {other:?}"))),
        }
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
        })
    }
}

/// Uniformly sampled excited-state amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrace {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
    pub frame: Frame,
    /// Reference frequency of the rotating frame, rad/s.
    pub omega01: f64,
}

impl AmplitudeTrace {
    pub fn new(
        t0: f64,
        dt: f64,
        values: Vec<Complex64>,
        frame: Frame,
        omega01: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("trace dt must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput("trace has no samples".into()));
        }
        Ok(Self {
            t0,
            dt,
            values,
            frame,
            omega01,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// The same trace expressed in `frame`.
    pub fn to_frame(&self, frame: Frame) -> AmplitudeTrace {
        if frame == self.frame {
            return self.clone();
        }
        let sign = match frame {
            Frame::Rotating => 1.0,
            Frame::Lab => -1.0,
        };
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * cis(sign * phase_mod_tau(self.omega01, self.time(k))))
            .collect();
        AmplitudeTrace {
            values,
            frame,
            ..self.clone()
        }
    }

    /// CSV with header `t,re,im,abs` and `#` metadata lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# frame={}", self.frame);
        let _ = writeln!(s, "# omega01_hz={:e}", angular_to_hz(self.omega01));
        s.push_str("t,re,im,abs\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{:e},{:e},{:e},{:e}", self.time(k), v.re, v.im, v.norm());
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut frame = Frame::Rotating;
        let mut omega01 = None;
        let mut t = Vec::new();
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(f) = meta.strip_prefix("frame=") {
                    frame = f.parse()?;
                } else if let Some(f) = meta.strip_prefix("omega01_hz=") {
                    omega01 = Some(hz_to_angular(parse_f64(f)?));
                }
                continue;
            }
            if line.starts_with('t') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 3 {
                return Err(Error::InvalidInput(format!("bad trace row {line:?}")));
            }
            t.push(parse_f64(cols[0])?);
            values.push(Complex64::new(parse_f64(cols[1])?, parse_f64(cols[2])?));
        }
        if t.len() < 2 {
            return Err(Error::InvalidInput("trace needs at least two rows".into()));
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        let omega01 = omega01
            .ok_or_else(|| Error::InvalidInput("trace lacks '# omega01_hz=' line".into()))?;
        AmplitudeTrace::new(t[0], dt, values, frame, omega01)
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("not a number: {s:?}")))
}

/// Closed delayed series for the lab-frame amplitude,
///
/// `a_e(t) = Σ_{n ≤ t/T} [(−γ(t−nT))ⁿ/n!] exp(−i(ω₀₁ − iγ − iγ_res)(t−nT))`.
pub fn series_amplitude(params: &GiantAtomParams, t: f64) -> Result<Complex64> {
    let b = series_rotating(params, t)?;
    Ok(b * cis(-phase_mod_tau(params.omega01, t)))
}

/// Rotating-frame value `b(t) = a_e(t) e^{iω₀₁t}` of the delayed series.
pub fn series_rotating(params: &GiantAtomParams, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("series needs t >= 0, got {t}")));
    }
    let gamma = params.gamma;
    let local = params.local_rate();
    let delay = params.delay_t;
    if delay == 0.0 {
        return Ok(Complex64::new((-(gamma + local) * t).exp(), 0.0));
    }

    let n_max = (t / delay).floor() as usize;
    let step = cis(params.phase());
    let mut rot = Complex64::new(1.0, 0.0);
    let mut acc = CompensatedSum::default();
    // ln n! accumulated incrementally
    let mut ln_fact = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            ln_fact += (n as f64).ln();
            rot *= step;
        }
        let tau = (t - n as f64 * delay).max(0.0);
        let mag = if n == 0 {
            (-local * tau).exp()
        } else if gamma * tau == 0.0 {
            0.0
        } else {
            (n as f64 * (gamma * tau).ln() - ln_fact - local * tau).exp()
        };
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(rot * (sign * mag));
    }
    Ok(acc.value())
}

/// Samples the series on `t_k = k·dt`, `k = 0..=ceil(t_max/dt)`.
pub fn series_trace(
    params: &GiantAtomParams,
    t_max: f64,
    dt: f64,
    frame: Frame,
) -> Result<AmplitudeTrace> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidStep(format!("need dt > 0 and t_max > 0, got {dt}, {t_max}")));
    }
    let n = (t_max / dt - 1e-9).ceil() as usize;
    let values = (0..=n)
        .map(|k| series_rotating(params, k as f64 * dt))
        .collect::<Result<Vec<_>>>()?;
    let tr = AmplitudeTrace::new(0.0, dt, values, Frame::Rotating, params.omega01)?;
    Ok(tr.to_frame(frame))
}

/// Default integration step: `T/256`, tightened to `1/(50(γ+γ_res))` when
/// the local decay is faster.
pub fn default_step(params: &GiantAtomParams) -> f64 {
    let rate = params.local_rate();
    let mut dt = f64::INFINITY;
    if params.delay_t > 0.0 {
        dt = params.delay_t / 256.0;
    }
    if rate > 0.0 {
        dt = dt.min(1.0 / (50.0 * rate));
    }
    if !dt.is_finite() {
        dt = 1e-9;
    }
    dt
}

/// Method-of-steps integration of the delay equation with classical RK4.
///
/// The step is shrunk to `T/⌈T/dt⌉` so that every delay knot `nT` is a grid
/// node; delayed values at half steps come from cubic Hermite interpolation
/// of the stored history (values and one-sided derivatives). Returns the
/// rotating-frame trace.
pub fn evolve_dde(params: &GiantAtomParams, t_max: f64, dt: f64) -> Result<AmplitudeTrace> {
    params.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidStep(format!("t_max must be > 0, got {t_max}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(format!("dt must be > 0, got {dt}")));
    }
    let local = params.local_rate();
    if local > 0.0 && dt > (1.0 + 1e-12) / (50.0 * local) {
        return Err(Error::InvalidStep(format!(
            "dt = {dt:e} s exceeds 1/(50(γ+γ_res)) = {:e} s",
            1.0 / (50.0 * local)
        )));
    }
    let delay = params.delay_t;
    let gamma = params.gamma;

    if delay == 0.0 {
        let n = (t_max / dt - 1e-9).ceil() as usize;
        let rate = gamma + local;
        let values = (0..=n)
            .map(|k| Complex64::new((-rate * k as f64 * dt).exp(), 0.0))
            .collect();
        return AmplitudeTrace::new(0.0, dt, values, Frame::Rotating, params.omega01);
    }
    if dt > delay / 64.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidStep(format!(
            "dt = {dt:e} s exceeds T/64 = {:e} s",
            delay / 64.0
        )));
    }

    let lag = (delay / dt - 1e-9).ceil() as usize;
    let h = delay / lag as f64;
    let n_steps = (t_max / h - 1e-9).ceil() as usize;
    let feedback = cis(params.phase()) * gamma;
    let rhs = |b: Complex64, delayed: Complex64| -local * b - feedback * delayed;

    let mut b = Vec::with_capacity(n_steps + 1);
    // one-sided derivatives: at the start and at the end of each step
    let mut d_start: Vec<Complex64> = Vec::with_capacity(n_steps);
    let mut d_end: Vec<Complex64> = Vec::with_capacity(n_steps);
    b.push(Complex64::new(1.0, 0.0));
    let zero = Complex64::new(0.0, 0.0);

    for k in 0..n_steps {
        let (d0, dmid, d1) = if k < lag {
            (zero, zero, zero)
        } else {
            let j = k - lag;
            let mid = 0.5 * (b[j] + b[j + 1]) + (h / 8.0) * (d_start[j] - d_end[j]);
            (b[j], mid, b[j + 1])
        };
        let bk = b[k];
        let k1 = rhs(bk, d0);
        let k2 = rhs(bk + 0.5 * h * k1, dmid);
        let k3 = rhs(bk + 0.5 * h * k2, dmid);
        let k4 = rhs(bk + h * k3, d1);
        let next = bk + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        d_start.push(k1);
        d_end.push(rhs(next, d1));
        b.push(next);
    }
    AmplitudeTrace::new(0.0, h, b, Frame::Rotating, params.omega01)
}

/// Strict local maxima of `|a_e(t)|` for `t > t0 + dt`, refined by a
/// parabola through the three neighbouring samples. Returns
/// `(time, magnitude)` pairs in time order.
pub fn revival_peaks(trace: &AmplitudeTrace) -> Vec<(f64, f64)> {
    let mag = trace.magnitudes();
    let mut out = Vec::new();
    if mag.len() < 3 {
        return out;
    }
    for k in 2..mag.len() - 1 {
        let (y0, y1, y2) = (mag[k - 1], mag[k], mag[k + 1]);
        if y1 > y0 && y1 > y2 {
            let denom = y0 - 2.0 * y1 + y2;
            let off = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
            let peak = y1 - 0.25 * (y0 - y2) * off;
            out.push((trace.time(k) + off * trace.dt, peak));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::units::hz_to_angular as w;
    use proptest::prelude::*;

    fn b1_bare() -> GiantAtomParams {
        GiantAtomParams::new(w(2.29e9), w(4.8e6), 160e-9).unwrap()
    }

    /// Independent method-of-steps integration for `b(2T)` without
    /// interpolation: the first delay interval is stepped at `h/2` and the
    /// second at `h`, so every delayed argument lands on a stored node.
    fn oracle_b_at_2t(p: &GiantAtomParams, n: usize) -> Complex64 {
        let t = p.delay_t;
        let local = p.gamma + p.gamma_res;
        let fb = cis(p.phase()) * p.gamma;
        let fine = t / (2 * n) as f64;
        let mut hist = vec![Complex64::new(1.0, 0.0)];
        let mut y = hist[0];
        for _ in 0..2 * n {
            let f = |y: Complex64| -local * y;
            let k1 = f(y);
            let k2 = f(y + 0.5 * fine * k1);
            let k3 = f(y + 0.5 * fine * k2);
            let k4 = f(y + fine * k3);
            y += fine / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            hist.push(y);
        }
        let h = t / n as f64;
        for i in 0..n {
            let d0 = hist[2 * i];
            let dm = hist[2 * i + 1];
            let d1 = hist[2 * i + 2];
            let f = |y: Complex64, d: Complex64| -local * y - fb * d;
            let k1 = f(y, d0);
            let k2 = f(y + 0.5 * h * k1, dm);
            let k3 = f(y + 0.5 * h * k2, dm);
            let k4 = f(y + h * k3, d1);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    // Frozen from `oracle_b_at_2t(&b1_bare(), 100_000)`.
    const B1_B_AT_2T: (f64, f64) = (3.138_399_514_716_834e-2, -2.275_504_476_353_201e-2);

    #[test]
    fn oracle_value_is_frozen() {
        let v = oracle_b_at_2t(&b1_bare(), 100_000);
        println!("oracle b(2T) = {:.15e} {:.15e}", v.re, v.im);
        let frozen = Complex64::new(B1_B_AT_2T.0, B1_B_AT_2T.1);
        assert!((v - frozen).norm() <= 1e-12 * frozen.norm());
    }

    #[test]
    fn series_matches_oracle_at_two_delays() {
        let p = b1_bare();
        let s = series_rotating(&p, 2.0 * p.delay_t).unwrap();
        let frozen = Complex64::new(B1_B_AT_2T.0, B1_B_AT_2T.1);
        assert!((s - frozen).norm() <= 1e-8 * frozen.norm(), "{s} vs {frozen}");
    }

    #[test]
    fn series_first_interval_is_pure_exponential() {
        let p = b1_bare().with_gamma_res(w(1e6));
        for frac in [0.0, 0.1, 0.5, 0.99, 1.0] {
            let t = frac * p.delay_t;
            let v = series_amplitude(&p, t).unwrap();
            let expect = (-(p.gamma + p.gamma_res) * t).exp();
            assert!((v.norm() - expect).abs() <= 1e-14, "{frac}");
        }
    }

    #[test]
    fn series_rejects_negative_time() {
        assert!(matches!(series_amplitude(&b1_bare(), -1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn series_is_continuous_at_knots() {
        let p = presets::params("A3").unwrap();
        for n in 1..=5 {
            let t = n as f64 * p.delay_t;
            let eps = 1e-9 * p.delay_t;
            let l = series_rotating(&p, t - eps).unwrap();
            let r = series_rotating(&p, t + eps).unwrap();
            // |b'| is at most a few γ, so the jump allowed here is the
            // smooth change over 2ε plus rounding
            assert!((l - r).norm() < 1e-10 + 10.0 * p.gamma * 2.0 * eps, "n={n}");
        }
    }

    #[test]
    fn derivative_jump_at_first_knot_has_magnitude_gamma() {
        let p = b1_bare();
        let t = p.delay_t;
        let h = 1e-6 * t;
        let left = (series_rotating(&p, t).unwrap() - series_rotating(&p, t - h).unwrap()) / h;
        let right = (series_rotating(&p, t + h).unwrap() - series_rotating(&p, t).unwrap()) / h;
        let jump = right - left;
        assert!((jump.norm() - p.gamma).abs() < 1e-3 * p.gamma, "{jump}");
        let expect = -p.gamma * cis(p.phase());
        assert!((jump - expect).norm() < 1e-3 * p.gamma);
    }

    #[test]
    fn small_atom_limit() {
        let p = GiantAtomParams::new(w(2.3e9), w(5e6), 0.0).unwrap().with_gamma_res(w(1e6));
        let rate = 2.0 * p.gamma + p.gamma_res;
        for k in 0..50 {
            let t = k as f64 * 0.1 / rate;
            let v = series_amplitude(&p, t).unwrap();
            assert!((v.norm() - (-rate * t).exp()).abs() <= 1e-15);
        }
        let tr = evolve_dde(&p, 5.0 / rate, 1.0 / (60.0 * (p.gamma + p.gamma_res))).unwrap();
        for (k, v) in tr.values.iter().enumerate() {
            let e = (-rate * tr.time(k)).exp();
            assert!((v.norm() - e).abs() <= 1e-9 * e);
        }
    }

    #[test]
    fn dde_without_coupling_decays_at_residual_rate() {
        let p = GiantAtomParams::new(w(2.3e9), 0.0, 100e-9).unwrap().with_gamma_res(w(3e6));
        let tr = evolve_dde(&p, 500e-9, p.delay_t / 128.0).unwrap();
        for (k, v) in tr.values.iter().enumerate() {
            let e = (-p.gamma_res * tr.time(k)).exp();
            assert!((v.norm() - e).abs() <= 1e-7 * e);
        }
    }

    #[test]
    fn dde_matches_series_for_a3() {
        let p = presets::params("A3").unwrap();
        let tr = evolve_dde(&p, 5.0 * p.delay_t, default_step(&p)).unwrap();
        let mut worst: f64 = 0.0;
        for (k, v) in tr.values.iter().enumerate() {
            let s = series_rotating(&p, tr.time(k)).unwrap();
            worst = worst.max((v - s).norm() / s.norm().max(1e-12));
        }
        assert!(worst <= 1e-6, "worst relative deviation {worst:e}");
    }

    #[test]
    fn dde_step_preconditions() {
        let p = b1_bare();
        assert!(matches!(evolve_dde(&p, 1e-6, p.delay_t / 32.0), Err(Error::InvalidStep(_))));
        assert!(matches!(evolve_dde(&p, 1e-6, 0.0), Err(Error::InvalidStep(_))));
        assert!(matches!(evolve_dde(&p, 0.0, 1e-10), Err(Error::InvalidStep(_))));
        let fast = b1_bare().with_gamma_res(w(200e6));
        assert!(matches!(evolve_dde(&fast, 1e-6, fast.delay_t / 64.0), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn dde_step_aligned_to_delay() {
        let p = b1_bare();
        let req = p.delay_t / 300.5;
        let tr = evolve_dde(&p, 2.0 * p.delay_t, req).unwrap();
        let lag = p.delay_t / tr.dt;
        assert!((lag - lag.round()).abs() < 1e-9);
        assert!(tr.dt <= req);
    }

    #[test]
    fn frame_round_trip() {
        let p = b1_bare();
        let tr = evolve_dde(&p, p.delay_t, default_step(&p)).unwrap();
        let lab = tr.to_frame(Frame::Lab);
        let back = lab.to_frame(Frame::Rotating);
        for (a, b) in tr.values.iter().zip(&back.values) {
            assert!((a - b).norm() < 1e-12);
        }
        let direct = series_amplitude(&p, lab.time(10)).unwrap();
        assert!((direct - lab.values[10]).norm() < 1e-6);
    }

    #[test]
    fn small_atom_has_no_revivals() {
        let p = GiantAtomParams::new(w(2.3e9), w(5e6), 0.0).unwrap();
        let tr = evolve_dde(&p, 1e-6, 1e-10).unwrap();
        assert!(revival_peaks(&tr).is_empty());
    }

    #[test]
    fn b1_revivals_follow_the_delay_knots() {
        let p = presets::params("B1").unwrap();
        let tr = evolve_dde(&p, 4.0 * p.delay_t, default_step(&p)).unwrap();
        let peaks = revival_peaks(&tr);
        assert!(peaks.len() >= 2, "{peaks:?}");
        for (n, (t, _)) in peaks.iter().take(2).enumerate() {
            let onset = (n + 1) as f64 * p.delay_t;
            assert!((t - onset).abs() <= 0.2 * p.delay_t, "peak {n} at {t:e}");
        }
        // agree with the series evaluated on a fine grid
        let fine = series_trace(&p, 4.0 * p.delay_t, p.delay_t / 4096.0, Frame::Rotating).unwrap();
        let oracle = revival_peaks(&fine);
        for ((a, _), (b, _)) in peaks.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-3 * p.delay_t);
        }
    }

    #[test]
    fn revival_heights_decay_subexponentially() {
        let t = 190e-9;
        let p = GiantAtomParams::new(w(2.3e9), 7.0 / t, t).unwrap();
        let tr = evolve_dde(&p, 5.0 * t, default_step(&p)).unwrap();
        let peaks = revival_peaks(&tr);
        assert!(peaks.len() >= 4, "{peaks:?}");
        let ratios: Vec<f64> = peaks.windows(2).take(3).map(|w| w[1].1 / w[0].1).collect();
        for r in ratios.windows(2) {
            assert!(r[1] > r[0], "{ratios:?}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = b1_bare();
        let tr = evolve_dde(&p, p.delay_t, default_step(&p)).unwrap();
        let text = tr.to_csv();
        assert!(text.starts_with("# frame=rotating\n"));
        assert!(text.contains("\nt,re,im,abs\n"));
        let back = AmplitudeTrace::from_csv(&text).unwrap();
        assert_eq!(back.values, tr.values);
        assert_eq!(back.frame, Frame::Rotating);
        assert!((back.dt - tr.dt).abs() < 1e-12 * tr.dt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn magnitude_never_exceeds_one(gt in 0.1f64..8.0, phase in 0.0f64..std::f64::consts::TAU, res in 0.0f64..5e6) {
            let t = 100e-9;
            let omega01 = (2.0 * std::f64::consts::PI * 230.0 + phase) / t;
            let p = GiantAtomParams::new(omega01, gt / t, t).unwrap().with_gamma_res(w(res));
            for k in 0..200 {
                let v = series_rotating(&p, k as f64 * 0.03 * t).unwrap();
                prop_assert!(v.norm() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn envelope_depends_on_phase_only(gt in 0.5f64..6.0, k in 1u32..50) {
            let t = 160e-9;
            let p = GiantAtomParams::new(w(2.29e9), gt / t, t).unwrap();
            let q = p.clone().with_omega01(p.omega01 + k as f64 * 2.0 * std::f64::consts::PI / t);
            for s in 0..60 {
                let tt = s as f64 * 0.07 * t;
                let a = series_rotating(&p, tt).unwrap().norm();
                let b = series_rotating(&q, tt).unwrap().norm();
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
