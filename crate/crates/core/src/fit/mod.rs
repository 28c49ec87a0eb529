//! Least-squares recovery of device parameters from spectra and from the
//! resonance ridge of scattering maps.
//!
//! Fits use a multistart downhill simplex. The interference factor
//! `e^{iωT}` makes the objective oscillate in `T` on the scale `1/ω₀₁`, so
//! whenever `T` is free the optimizer works with a slowly varying envelope
//! delay plus an explicit phase, and the physical `T` is recovered at the
//! end as the delay closest to the envelope value that reproduces the phase.

pub mod simplex;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{resonance_shift, Geometry, GiantAtomParams};
use crate::scattering::gate_reflection;
use crate::units::{angular_to_hz, phase_mod_tau, wrap_pi};
use simplex::{minimize, SimplexOptions, SimplexResult};

/// Which spectrum parameters a fit may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamMask {
    pub omega01: bool,
    pub gamma: bool,
    pub delay_t: bool,
    pub gamma_res: bool,
}

impl ParamMask {
    pub fn all() -> Self {
        Self {
            omega01: true,
            gamma: true,
            delay_t: true,
            gamma_res: true,
        }
    }

    pub fn none() -> Self {
        Self {
            omega01: false,
            gamma: false,
            delay_t: false,
            gamma_res: false,
        }
    }

    pub fn count(&self) -> usize {
        [self.omega01, self.gamma, self.delay_t, self.gamma_res]
            .iter()
            .filter(|b| **b)
            .count()
    }

    /// Names of the free parameters in canonical order.
    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.omega01 {
            v.push("omega01");
        }
        if self.gamma {
            v.push("gamma");
        }
        if self.delay_t {
            v.push("delayT");
        }
        if self.gamma_res {
            v.push("gamma_res");
        }
        v
    }
}

impl Default for ParamMask {
    fn default() -> Self {
        Self::all()
    }
}

impl fmt::Display for ParamMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

impl FromStr for ParamMask {
    type Err = Error;

    /// `all`, `none`, or a comma list of `omega01`, `gamma`, `T`, `gamma_res`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all" => return Ok(Self::all()),
            "none" | "" => return Ok(Self::none()),
            _ => {}
        }
        let mut m = Self::none();
        for part in s.split(',') {
            match part.trim() {
                "omega01" => m.omega01 = true,
                "gamma" => m.gamma = true,
                "T" | "delayT" | "delay_t" => m.delay_t = true,
                "gamma_res" => m.gamma_res = true,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown fit parameter {other:?}"
                    )))
                }
            }
        }
        Ok(m)
    }
}

/// Multistart schedule and per-restart budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_evaluations: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_evaluations: 20_000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    pub residual_norm: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: GiantAtomParams,
    /// Root mean square of the final residuals.
    pub residual_norm: f64,
    /// Objective evaluations spent by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    /// Variances of the free parameters in SI units (rad/s, s, m/s),
    /// ordered as [`FitResult::free`].
    pub covariance_diag: Option<Vec<f64>>,
    pub free: Vec<String>,
    pub restarts: Vec<RestartSummary>,
    /// Sound velocity, set by [`fit_velocity`].
    pub velocity: Option<f64>,
}

impl FitResult {
    /// Report document with rates in Hz and variances in matching units.
    pub fn to_report_json(&self) -> String {
        let cov = self.covariance_diag.as_ref().map(|c| {
            let mut m = serde_json::Map::new();
            for (name, v) in self.free.iter().zip(c) {
                let scale = match name.as_str() {
                    "delayT" | "v_saw" => 1.0,
                    _ => 1.0 / (TAU * TAU),
                };
                m.insert(name.clone(), json!(v * scale));
            }
            serde_json::Value::Object(m)
        });
        let mut doc = json!({
            "params": self.params.to_value(),
            "free": self.free,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "covariance_diag": cov,
            "restarts": self.restarts,
        });
        if let Some(v) = self.velocity {
            doc["v_saw"] = json!(v);
        }
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Data model selected in [`residuals`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `(ω, s0)` pairs, model normalized to unit maximum over the data.
    Spectrum,
    /// `(ω_d, ω₀₁ at the reflection dip)` pairs.
    Ridge,
    /// `(ω_d, |r_g|)` pairs at the atom frequency in `params`.
    Gate,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectrum" => Ok(ModelKind::Spectrum),
            "ridge" | "velocity" => Ok(ModelKind::Ridge),
            "gate" | "gate_reflection" => Ok(ModelKind::Gate),
            other => Err(Error::InvalidInput(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Model minus data at every data point.
pub fn residuals(kind: ModelKind, params: &GiantAtomParams, data: &[(f64, f64)]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no data points".into()));
    }
    match kind {
        ModelKind::Spectrum => {
            let m = spectrum_model(params, data)?;
            let top = m.iter().cloned().fold(0.0, f64::max);
            Ok(m.iter().zip(data).map(|(v, d)| v / top - d.1).collect())
        }
        ModelKind::Ridge => Ok(data
            .iter()
            .map(|&(wd, w01)| resonance_shift(params, wd) - w01)
            .collect()),
        ModelKind::Gate => data
            .iter()
            .map(|&(wd, r)| Ok(gate_reflection(params, wd)?.norm() - r))
            .collect(),
    }
}

/// `|χ(ω_k)|²` with the physical delay phase.
fn spectrum_model(params: &GiantAtomParams, data: &[(f64, f64)]) -> Result<Vec<f64>> {
    data.iter()
        .map(|&(w, _)| Ok(crate::spectrum::susceptibility(params, w)?.norm_sqr()))
        .collect()
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
}

/// Deterministic restart offsets in `[−1, 1)`: an additive recurrence with
/// irrational steps, one per coordinate. Restart 0 is the origin.
fn restart_offset(restart: usize, coord: usize) -> f64 {
    if restart == 0 {
        return 0.0;
    }
    const STEPS: [f64; 4] = [
        std::f64::consts::SQRT_2,
        1.732_050_807_568_877_2,
        2.236_067_977_499_79,
        2.645_751_311_064_590_7,
    ];
    let u = (restart as f64 * STEPS[coord % STEPS.len()]).fract();
    2.0 * u - 1.0
}

/// Internal coordinates of a spectrum fit.
struct SpectrumProblem<'a> {
    data: &'a [(f64, f64)],
    init: &'a GiantAtomParams,
    mask: ParamMask,
    scale: f64,
    linewidth: f64,
    gamma_res_ref: f64,
}

/// Physical values decoded from an internal point.
#[derive(Debug, Clone, Copy)]
struct SpectrumPoint {
    omega01: f64,
    gamma: f64,
    delay_env: f64,
    gamma_res: f64,
    /// `ω₀₁T mod 2π` when `T` is free.
    phase: Option<f64>,
}

const T_SCALE: f64 = 5.0;

impl SpectrumProblem<'_> {
    fn decode(&self, x: &[f64]) -> Option<SpectrumPoint> {
        let p = self.init;
        let mut it = x.iter();
        let mut pt = SpectrumPoint {
            omega01: p.omega01,
            gamma: p.gamma,
            delay_env: p.delay_t,
            gamma_res: p.gamma_res,
            phase: None,
        };
        if self.mask.omega01 {
            pt.omega01 = p.omega01 + it.next()? * self.linewidth;
        }
        if self.mask.gamma {
            pt.gamma = p.gamma * it.next()?.exp();
        }
        if self.mask.delay_t {
            let u = *it.next()? / T_SCALE;
            if u.abs() > 0.5 {
                return None;
            }
            pt.delay_env = p.delay_t * (1.0 + u);
        }
        if self.mask.gamma_res {
            pt.gamma_res = self.gamma_res_ref * it.next()?.exp();
        }
        if self.mask.delay_t {
            pt.phase = Some(*it.next()?);
        }
        Some(pt)
    }

    /// Restart start point without the phase coordinate.
    fn start(&self, restart: usize) -> Vec<f64> {
        let p = self.init;
        let mut x = Vec::new();
        let mut coord = 0;
        let mut off = || {
            coord += 1;
            restart_offset(restart, coord - 1)
        };
        if self.mask.omega01 {
            x.push(0.2 * off());
        }
        if self.mask.gamma {
            x.push((1.0 + 0.2 * off()).ln());
        }
        if self.mask.delay_t {
            x.push(T_SCALE * 0.2 * off());
        }
        if self.mask.gamma_res {
            let base = if p.gamma_res > 0.0 {
                (p.gamma_res / self.gamma_res_ref).ln()
            } else {
                0.0
            };
            x.push(base + (1.0 + 0.2 * off()).ln());
        }
        x
    }

    fn model(&self, pt: &SpectrumPoint) -> Option<Vec<f64>> {
        let i = Complex64::i();
        let mut out = Vec::with_capacity(self.data.len());
        for &(w, _) in self.data {
            let delta = w - pt.omega01;
            let theta = match pt.phase {
                Some(ph) => ph + delta * pt.delay_env,
                None => phase_mod_tau(w, pt.delay_env),
            };
            let den = Complex64::new(delta, 0.0)
                + i * pt.gamma * (1.0 + Complex64::from_polar(1.0, theta))
                + i * pt.gamma_res;
            let n = den.norm_sqr();
            if !(n > 0.0) {
                return None;
            }
            out.push(1.0 / n);
        }
        let top = out.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return None;
        }
        Some(out.iter().map(|v| v / top * self.scale).collect())
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let Some(pt) = self.decode(x) else {
            return f64::INFINITY;
        };
        match self.model(&pt) {
            Some(m) => m
                .iter()
                .zip(self.data)
                .map(|(m, d)| (m - d.1) * (m - d.1))
                .sum(),
            None => f64::INFINITY,
        }
    }

    fn run(&self, restart: usize, opts: &FitOptions) -> SimplexResult {
        let mut x = self.start(restart);
        if self.mask.delay_t {
            // the phase is periodic; pick the best of a coarse scan
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..16 {
                let ph = TAU * k as f64 / 16.0;
                let mut y = x.clone();
                y.push(ph);
                let v = self.objective(&y);
                if v < best.0 {
                    best = (v, ph);
                }
            }
            x.push(best.1);
        }
        minimize(
            |y| self.objective(y),
            &x,
            SimplexOptions {
                step: 0.1,
                tolerance: opts.tolerance,
                max_evaluations: opts.max_evaluations,
            },
        )
    }

    fn params(&self, pt: &SpectrumPoint) -> GiantAtomParams {
        let mut p = self.init.clone();
        p.omega01 = pt.omega01;
        p.gamma = pt.gamma;
        p.gamma_res = pt.gamma_res;
        p.delay_t = match pt.phase {
            Some(ph) => snap_delay(pt.delay_env, pt.omega01, ph),
            None => pt.delay_env,
        };
        if let Some(g) = &mut p.geometry {
            g.v_saw = g.length / p.delay_t;
        }
        p
    }
}

/// Delay nearest to `t_env` with `ω·T ≡ phase (mod 2π)`.
fn snap_delay(t_env: f64, omega: f64, phase: f64) -> f64 {
    t_env + wrap_pi(phase - phase_mod_tau(omega, t_env)) / omega
}

/// Index of the restart with the smallest objective; ties keep the earliest.
fn best_restart(runs: &[SimplexResult]) -> usize {
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.fx < runs[best].fx {
            best = k;
        }
    }
    best
}

/// Curvature-based variances `2σ²/∂²S`, `σ² = S/(N − p)`, with `S` the sum
/// of squared residuals as a function of each parameter alone.
fn variances(
    s: impl Fn(usize, f64) -> Option<f64>,
    values: &[f64],
    steps: &[f64],
    n_data: usize,
) -> Option<Vec<f64>> {
    let p = values.len();
    if n_data <= p {
        return None;
    }
    let s0 = s(0, values[0])?;
    let sigma2 = s0 / (n_data - p) as f64;
    let mut out = Vec::with_capacity(p);
    for i in 0..p {
        let h = steps[i];
        let plus = s(i, values[i] + h)?;
        let minus = s(i, values[i] - h)?;
        let curv = (plus - 2.0 * s0 + minus) / (h * h);
        if !(curv > 0.0 && curv.is_finite()) {
            return None;
        }
        out.push(2.0 * sigma2 / curv);
    }
    Some(out)
}

/// Fits the normalized spectrum `S₀/max S₀` to `(ω, s0)` pairs (absolute
/// angular frequencies). Only the parameters flagged in `free` move; the
/// model is scaled to the largest data value, so data normalized to unit
/// maximum is compared against the unit-maximum model.
pub fn fit_spectrum(
    data: &[(f64, f64)],
    init: &GiantAtomParams,
    free: ParamMask,
) -> Result<FitResult> {
    fit_spectrum_with(data, init, free, &FitOptions::default())
}

pub fn fit_spectrum_with(
    data: &[(f64, f64)],
    init: &GiantAtomParams,
    free: ParamMask,
    opts: &FitOptions,
) -> Result<FitResult> {
    init.validate()?;
    let n_free = free.count();
    if data.is_empty() || data.len() < 5 * n_free {
        return Err(Error::InvalidInput(format!(
            "{} data points for {n_free} free parameters; need at least {}",
            data.len(),
            (5 * n_free).max(1)
        )));
    }
    if data.iter().any(|(w, s)| !w.is_finite() || !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite data".into()));
    }
    if free.gamma && !(init.gamma > 0.0) {
        return Err(Error::InvalidInput("free gamma needs a positive start".into()));
    }
    if free.delay_t && !(init.delay_t > 0.0) {
        return Err(Error::InvalidInput("free T needs a positive start".into()));
    }
    let scale = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    if !(scale > 0.0) {
        return Err(Error::InvalidInput("spectrum data has no positive value".into()));
    }

    let problem = SpectrumProblem {
        data,
        init,
        mask: free,
        scale,
        linewidth: 2.0 * init.gamma + init.gamma_res,
        gamma_res_ref: init.gamma_res.max(0.05 * init.gamma).max(f64::MIN_POSITIVE),
    };

    if n_free == 0 {
        let r = rms(&residuals_scaled(init, data, scale)?);
        return Ok(FitResult {
            params: init.clone(),
            residual_norm: r,
            iterations: 0,
            converged: true,
            covariance_diag: None,
            free: Vec::new(),
            restarts: Vec::new(),
            velocity: None,
        });
    }

    let runs: Vec<SimplexResult> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|k| problem.run(k, opts))
        .collect();
    let best = best_restart(&runs);
    let pt = problem
        .decode(&runs[best].x)
        .ok_or_else(|| Error::IllConditioned("fit left the parameter box".into()))?;
    let params = problem.params(&pt);
    let r = residuals_scaled(&params, data, scale)?;

    let names = free.names();
    let mut values = Vec::new();
    let mut steps = Vec::new();
    let w_max = data.iter().map(|d| d.0.abs()).fold(0.0, f64::max);
    for name in &names {
        match *name {
            "omega01" => {
                values.push(params.omega01);
                steps.push(1e-4 * problem.linewidth);
            }
            "gamma" => {
                values.push(params.gamma);
                steps.push(1e-4 * params.gamma);
            }
            "delayT" => {
                values.push(params.delay_t);
                steps.push(1e-3 / w_max);
            }
            _ => {
                values.push(params.gamma_res);
                steps.push(1e-4 * problem.linewidth);
            }
        }
    }
    let ssr = |i: usize, v: f64| {
        let mut q = params.clone();
        match names[i] {
            "omega01" => q.omega01 = v,
            "gamma" => q.gamma = v,
            "delayT" => q.delay_t = v,
            _ => q.gamma_res = v,
        }
        if q.gamma < 0.0 || q.gamma_res < 0.0 {
            return None;
        }
        let r = residuals_scaled(&q, data, scale).ok()?;
        Some(r.iter().map(|v| v * v).sum())
    };
    let covariance_diag = variances(ssr, &values, &steps, data.len());

    Ok(FitResult {
        params,
        residual_norm: rms(&r),
        iterations: runs[best].evaluations,
        converged: runs[best].converged,
        covariance_diag,
        free: names.iter().map(|s| s.to_string()).collect(),
        restarts: summaries(&runs),
        velocity: None,
    })
}

fn residuals_scaled(params: &GiantAtomParams, data: &[(f64, f64)], scale: f64) -> Result<Vec<f64>> {
    let m = spectrum_model(params, data)?;
    let top = m.iter().cloned().fold(0.0, f64::max);
    Ok(m.iter().zip(data).map(|(v, d)| v / top * scale - d.1).collect())
}

fn summaries(runs: &[SimplexResult]) -> Vec<RestartSummary> {
    runs.iter()
        .enumerate()
        .map(|(k, r)| RestartSummary {
            index: k,
            residual_norm: r.fx.sqrt(),
            evaluations: r.evaluations,
            converged: r.converged,
        })
        .collect()
}

/// Fits the reflection ridge `ω₀₁ = ω_d − γ sin(ω_d L/v)` over `(γ, v)`.
///
/// `ridge` holds `(ω_d, ω₀₁ at the dip)` pairs. The data must contain at
/// least 8 points spanning 1.5 modulation periods `2π v/L` at `init_v`.
pub fn fit_velocity(ridge: &[(f64, f64)], length: f64, init_v: f64) -> Result<FitResult> {
    fit_velocity_with(ridge, length, init_v, &FitOptions::default())
}

pub fn fit_velocity_with(
    ridge: &[(f64, f64)],
    length: f64,
    init_v: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    if !(length > 0.0 && init_v > 0.0) {
        return Err(Error::InvalidParameter(
            "length and initial velocity must be > 0".into(),
        ));
    }
    if ridge.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidInput("non-finite ridge data".into()));
    }
    if ridge.len() < 8 {
        return Err(Error::IllConditioned(format!(
            "{} ridge points; need at least 8",
            ridge.len()
        )));
    }
    let t0 = length / init_v;
    let lo = ridge.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let hi = ridge.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    let period = TAU / t0;
    if hi - lo < 1.5 * period {
        return Err(Error::IllConditioned(format!(
            "ridge spans {:.4e} Hz, less than 1.5 modulation periods ({:.4e} Hz)",
            angular_to_hz(hi - lo),
            angular_to_hz(1.5 * period)
        )));
    }
    let n = ridge.len() as f64;
    let center = ridge.iter().map(|d| d.0).sum::<f64>() / n;
    let y: Vec<f64> = ridge.iter().map(|&(wd, w01)| wd - w01).collect();
    let mean = y.iter().sum::<f64>() / n;
    let spread = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if spread <= 1e-12 * hi.abs() {
        return Err(Error::IllConditioned(
            "ridge shows no modulation; velocity is unidentifiable".into(),
        ));
    }
    let gamma_ref = spread * std::f64::consts::SQRT_2;
    let offsets: Vec<f64> = ridge.iter().map(|d| d.0 - center).collect();

    let decode = |x: &[f64]| -> Option<(f64, f64, f64)> {
        let u = x[0] / T_SCALE;
        if u.abs() > 0.5 {
            return None;
        }
        Some((t0 * (1.0 + u), gamma_ref * x[1].exp(), x[2]))
    };
    let objective = |x: &[f64]| -> f64 {
        let Some((t, g, ph)) = decode(x) else {
            return f64::INFINITY;
        };
        offsets
            .iter()
            .zip(&y)
            .map(|(o, yk)| {
                let r = yk - g * (ph + o * t).sin();
                r * r
            })
            .sum()
    };
    let run = |k: usize| -> SimplexResult {
        let xt = T_SCALE * 0.2 * restart_offset(k, 0);
        let t = t0 * (1.0 + xt / T_SCALE);
        // amplitude and phase by linear least squares at this delay
        let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (o, yk) in offsets.iter().zip(&y) {
            let (s, c) = (o * t).sin_cos();
            ss += s * s;
            cc += c * c;
            sc += s * c;
            ys += yk * s;
            yc += yk * c;
        }
        let det = ss * cc - sc * sc;
        let (a, b) = if det.abs() > 0.0 {
            ((ys * cc - yc * sc) / det, (yc * ss - ys * sc) / det)
        } else {
            (gamma_ref, 0.0)
        };
        let g = a.hypot(b).max(1e-3 * gamma_ref);
        let x0 = [xt, (g / gamma_ref).ln(), b.atan2(a)];
        minimize(
            objective,
            &x0,
            SimplexOptions {
                step: 0.1,
                tolerance: opts.tolerance,
                max_evaluations: opts.max_evaluations,
            },
        )
    };
    let runs: Vec<SimplexResult> = (0..opts.restarts.max(1)).into_par_iter().map(run).collect();
    let best = best_restart(&runs);
    let (t_env, gamma, phase) =
        decode(&runs[best].x).ok_or_else(|| Error::IllConditioned("fit left the box".into()))?;
    let delay = snap_delay(t_env, center, phase);
    let v = length / delay;

    let omega01 = ridge.iter().map(|d| d.1).sum::<f64>() / n;
    let mut params = GiantAtomParams::new(omega01, gamma, delay)?;
    params.geometry = Some(Geometry { length, v_saw: v });
    let r = residuals(ModelKind::Ridge, &params, ridge)?;

    let ssr = |i: usize, val: f64| {
        let mut q = params.clone();
        if i == 0 {
            q.gamma = val;
        } else {
            q.delay_t = length / val;
        }
        let r = residuals(ModelKind::Ridge, &q, ridge).ok()?;
        Some(r.iter().map(|v| v * v).sum())
    };
    let w_max = hi.abs().max(lo.abs());
    let steps = [1e-4 * gamma, 1e-3 * v / (w_max * delay)];
    let covariance_diag = variances(ssr, &[gamma, v], &steps, ridge.len());

    Ok(FitResult {
        params,
        residual_norm: rms(&r),
        iterations: runs[best].evaluations,
        converged: runs[best].converged,
        covariance_diag,
        free: vec!["gamma".into(), "v_saw".into()],
        restarts: summaries(&runs),
        velocity: Some(v),
    })
}

/// `values[k]·(1 + rel·n_k)` with `n_k` standard normal draws from a
/// ChaCha8 stream seeded with `seed`.
pub fn multiplicative_noise(values: &[f64], rel: f64, seed: u64) -> Vec<f64> {
    let eps = gaussian(values.len(), rel, seed);
    values.iter().zip(eps).map(|(v, e)| v * (1.0 + e)).collect()
}

/// `values[k] + sigma·n_k`, same generator as [`multiplicative_noise`].
pub fn additive_noise(values: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let eps = gaussian(values.len(), sigma, seed);
    values.iter().zip(eps).map(|(v, e)| v + e).collect()
}

fn gaussian(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n).map(|_| sigma * normal.sample(&mut rng)).collect()
}

/// Synthetic ridge `(ω_d, resonance_shift(ω_d))` on `points` drive
/// frequencies spanning `[lo, hi]`.
pub fn synthetic_ridge(params: &GiantAtomParams, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|k| {
            let wd = lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64;
            (wd, resonance_shift(params, wd))
        })
        .collect()
}

/// Unit-maximum spectrum `(ω, S₀/max S₀)` on `points` frequencies
/// spanning `[lo, hi]`.
pub fn synthetic_spectrum(
    params: &GiantAtomParams,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    let grid: Vec<(f64, f64)> = (0..points)
        .map(|k| (lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64, 0.0))
        .collect();
    let m = spectrum_model(params, &grid)?;
    let top = m.iter().cloned().fold(0.0, f64::max);
    Ok(grid.iter().zip(m).map(|(g, v)| (g.0, v / top)).collect())
}
