//! Steady-state scattering of a weak drive off the giant atom: SAW
//! transmission and reflection, and microwave reflection at the gate.
//!
//! With `Δ = ω_d − ω₀₁ − γ sin(ω_d T)`, `Γ = γ(1 + cos ω_d T)` and
//! `γ_nr = γ_res + γ_gate + γ_q`:
//!
//! ```text
//! t   = (Δ + iγ_nr) / (Δ + i(Γ + γ_nr)),   r = t − 1
//! r_g = 1 − 2γ_gate / (−iΔ + Γ + γ_gate + γ_q)
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GiantAtomParams;
use crate::spectrum::refined_maxima;
use crate::units::{angular_to_hz, phase_mod_tau};

/// Which scattering amplitude a map holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterKind {
    SawTransmission,
    SawReflection,
    GateReflection,
}

impl ScatterKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScatterKind::SawTransmission => "saw_transmission",
            ScatterKind::SawReflection => "saw_reflection",
            ScatterKind::GateReflection => "gate_reflection",
        }
    }
}

impl fmt::Display for ScatterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScatterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "saw_transmission" | "transmission" | "t" => Ok(ScatterKind::SawTransmission),
            "saw_reflection" | "reflection" | "r" => Ok(ScatterKind::SawReflection),
            "gate_reflection" | "gate" => Ok(ScatterKind::GateReflection),
            other => Err(Error::InvalidInput(format!("unknown scatter kind {other:?}"))),
        }
    }
}

/// Uniform axis of absolute angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyAxis {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidInput("frequency axis is empty".into()));
        }
        if !start.is_finite() || !step.is_finite() || (len > 1 && step <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad frequency axis start {start} step {step}"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// `points` samples spanning `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points == 1 {
            return Self::new(lo, 0.0, 1);
        }
        if points == 0 {
            return Err(Error::InvalidInput("frequency axis is empty".into()));
        }
        Self::new(lo, (hi - lo) / (points - 1) as f64, points)
    }

    pub fn single(omega: f64) -> Self {
        Self {
            start: omega,
            step: 0.0,
            len: 1,
        }
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }

    /// Centre of the axis.
    pub fn center(&self) -> f64 {
        self.start + 0.5 * (self.len - 1) as f64 * self.step
    }
}

/// Drive detuning from the Lamb-shifted resonance, `ω_d − ω₀₁ − γ sin(ω_d T)`.
/// The difference of the two large frequencies is taken first.
fn detuning(params: &GiantAtomParams, omega_d: f64) -> (f64, f64) {
    let ph = phase_mod_tau(omega_d, params.delay_t);
    let delta = (omega_d - params.omega01) - params.gamma * ph.sin();
    let rate = params.gamma * (1.0 + ph.cos());
    (delta, rate)
}

fn nonacoustic(params: &GiantAtomParams) -> f64 {
    params.gamma_res + params.gamma_gate + params.gamma_q
}

/// SAW transmission and reflection amplitudes `(t, r)` for a drive at
/// `omega_d`. The propagation phase on `r` is dropped.
pub fn saw_coefficients(params: &GiantAtomParams, omega_d: f64) -> (Complex64, Complex64) {
    let (delta, rate) = detuning(params, omega_d);
    let g_nr = nonacoustic(params);
    let den = Complex64::new(delta, rate + g_nr);
    if den.norm() == 0.0 {
        // dark frequency exactly on resonance: the atom does not couple
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let t = Complex64::new(delta, g_nr) / den;
    (t, t - 1.0)
}

/// Microwave reflection amplitude at the gate for a drive at `omega_d`.
pub fn gate_reflection(params: &GiantAtomParams, omega_d: f64) -> Result<Complex64> {
    if !(params.gamma_gate > 0.0) {
        return Err(Error::InvalidParameter(
            "gate reflection needs gamma_gate > 0".into(),
        ));
    }
    let (delta, rate) = detuning(params, omega_d);
    let den = Complex64::new(rate + params.gamma_gate + params.gamma_q, -delta);
    Ok(1.0 - 2.0 * params.gamma_gate / den)
}

/// Complex scattering amplitudes on a (ω₀₁, ω_d) grid. Row `i` holds atom
/// frequency `atom_axis.at(i)`, column `j` drive frequency `drive_axis.at(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMap {
    pub drive_axis: FrequencyAxis,
    pub atom_axis: FrequencyAxis,
    /// Row-major, `atom_axis.len` rows of `drive_axis.len` values.
    pub values: Vec<Complex64>,
    pub kind: ScatterKind,
}

impl ScatterMap {
    pub fn rows(&self) -> usize {
        self.atom_axis.len
    }

    pub fn cols(&self) -> usize {
        self.drive_axis.len
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        let n = self.cols();
        &self.values[row * n..(row + 1) * n]
    }

    /// `|value|²` for every cell, row-major.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn row_power(&self, row: usize) -> Vec<f64> {
        self.row(row).iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn column_power(&self, col: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.get(i, col).norm_sqr()).collect()
    }

    /// Row whose atom frequency lies farthest from the drive-axis centre.
    pub fn far_detuned_row(&self) -> usize {
        let c = self.drive_axis.center();
        let first = (self.atom_axis.at(0) - c).abs();
        let last = (self.atom_axis.at(self.rows() - 1) - c).abs();
        if last > first {
            self.rows() - 1
        } else {
            0
        }
    }

    /// Power map divided column-wise by the far-detuned row, the linear
    /// counterpart of subtracting a background in dB.
    pub fn background_normalized_power(&self) -> Vec<f64> {
        let bg = self.row_power(self.far_detuned_row());
        let mut p = self.power();
        for (k, v) in p.iter_mut().enumerate() {
            let b = bg[k % self.cols()];
            if b > 0.0 {
                *v /= b;
            }
        }
        p
    }

    /// Power lost from the probed channel, integrated over the atom axis
    /// for each drive column: `Σᵢ (1 − |vᵢⱼ|²) δω₀₁`.
    pub fn column_extinction(&self) -> Vec<f64> {
        let w = if self.rows() > 1 { self.atom_axis.step } else { 1.0 };
        (0..self.cols())
            .map(|j| {
                (0..self.rows())
                    .map(|i| 1.0 - self.get(i, j).norm_sqr())
                    .sum::<f64>()
                    * w
            })
            .collect()
    }

    /// Drive frequencies of the maxima of [`Self::column_extinction`] that
    /// reach at least half the largest value. Lower maxima come from lines
    /// narrower than the atom-axis step near the dark frequencies.
    pub fn extinction_maxima(&self) -> Vec<f64> {
        let ext = self.column_extinction();
        let top = ext.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        refined_maxima(&ext, self.drive_axis.start, self.drive_axis.step)
            .into_iter()
            .filter(|&(_, h)| h >= 0.5 * top)
            .map(|(w, _)| w)
            .collect()
    }

    /// Power map as CSV: the first row holds the drive axis in Hz after an
    /// empty corner cell, the first column the atom axis in Hz. With
    /// `complex` each cell becomes a `re,im` pair and every drive frequency
    /// is written twice in the header.
    pub fn to_csv(&self, complex: bool, power: Option<&[f64]>) -> String {
        let mut s = String::new();
        for j in 0..self.cols() {
            let f = angular_to_hz(self.drive_axis.at(j));
            if complex {
                let _ = write!(s, ",{f:e},{f:e}");
            } else {
                let _ = write!(s, ",{f:e}");
            }
        }
        s.push('\n');
        let own;
        let p = match power {
            Some(p) => p,
            None => {
                own = self.power();
                &own
            }
        };
        for i in 0..self.rows() {
            let _ = write!(s, "{:e}", angular_to_hz(self.atom_axis.at(i)));
            for j in 0..self.cols() {
                if complex {
                    let v = self.get(i, j);
                    let _ = write!(s, ",{:e},{:e}", v.re, v.im);
                } else {
                    let _ = write!(s, ",{:e}", p[i * self.cols() + j]);
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Evaluates `kind` at every grid point with ω₀₁ taken from the atom axis.
///
/// With `envelope`, transmission amplitudes are multiplied by the squared
/// transducer response `[(sin X/X)²]²` at the drive frequency, modelling a
/// band-limited launcher and pickup; this needs `params.idt`.
pub fn scatter_map(
    template: &GiantAtomParams,
    drive_axis: &FrequencyAxis,
    atom_axis: &FrequencyAxis,
    kind: ScatterKind,
    envelope: bool,
) -> Result<ScatterMap> {
    if drive_axis.len == 0 || atom_axis.len == 0 {
        return Err(Error::InvalidInput("scatter axes must be non-empty".into()));
    }
    let idt = if envelope {
        if kind != ScatterKind::SawTransmission {
            return Err(Error::InvalidInput(
                "the transducer envelope applies to saw_transmission only".into(),
            ));
        }
        Some(template.idt.ok_or_else(|| {
            Error::InvalidParameter("envelope requested but params carry no idt".into())
        })?)
    } else {
        None
    };
    let weights: Vec<f64> = drive_axis
        .points()
        .iter()
        .map(|&w| idt.map_or(1.0, |g| g.response(w).powi(2)))
        .collect();

    let rows: Vec<Vec<Complex64>> = (0..atom_axis.len)
        .into_par_iter()
        .map(|i| {
            let p = template.clone().with_omega01(atom_axis.at(i));
            p.validate().map_err(|e| Error::AtGridPoint {
                row: i,
                col: 0,
                source: Box::new(e),
            })?;
            let at = |col: usize, e: Error| Error::AtGridPoint {
                row: i,
                col,
                source: Box::new(e),
            };
            let mut out = Vec::with_capacity(drive_axis.len);
            for (j, weight) in weights.iter().enumerate() {
                let w = drive_axis.at(j);
                let v = match kind {
                    ScatterKind::SawTransmission => saw_coefficients(&p, w).0 * weight,
                    ScatterKind::SawReflection => saw_coefficients(&p, w).1,
                    ScatterKind::GateReflection => gate_reflection(&p, w).map_err(|e| at(j, e))?,
                };
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(at(j, Error::Domain(format!("non-finite amplitude {v}"))));
                }
                out.push(v);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScatterMap {
        drive_axis: *drive_axis,
        atom_axis: *atom_axis,
        values: rows.into_iter().flatten().collect(),
        kind,
    })
}

/// Interior local minima of `y` (strictly below the left neighbour, not
/// above the right one, so flat bottoms resolve to their smallest index).
pub fn local_minima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1))
        .filter(|&k| y[k] < y[k - 1] && y[k] <= y[k + 1])
        .collect()
}

/// Index of the smallest value; ties go to the smallest index.
pub fn argmin(y: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in y.iter().enumerate() {
        match best {
            Some(b) if y[b] <= *v => {}
            _ => best = Some(k),
        }
    }
    best
}
