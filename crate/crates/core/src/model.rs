//! Device parameters and the closed-form frequency-domain relations of a
//! two-point giant atom: transducer coupling, delay, effective coupling and
//! the maximum-reflection (Lamb-shifted resonance) condition.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{angular_to_hz, canonical, hz_to_angular, phase_mod_tau};

/// Interdigital transducer geometry of one coupling point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdtGeometry {
    /// Finger pairs per coupling point.
    pub n_pairs: u32,
    /// Piezoelectric coupling coefficient K².
    pub k_squared: f64,
    /// Transducer centre frequency, rad/s.
    pub omega_idt: f64,
}

impl IdtGeometry {
    pub fn new(n_pairs: u32, k_squared: f64, omega_idt: f64) -> Result<Self> {
        let g = Self {
            n_pairs,
            k_squared,
            omega_idt,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pairs < 1 {
            return Err(Error::InvalidParameter("n_pairs must be >= 1".into()));
        }
        if !(self.k_squared > 0.0 && self.k_squared < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "k_squared must lie in (0, 1), got {}",
                self.k_squared
            )));
        }
        if !(self.omega_idt > 0.0 && self.omega_idt.is_finite()) {
            return Err(Error::InvalidParameter("omega_idt must be > 0".into()));
        }
        Ok(())
    }

    /// Normalised transducer response `(sin X / X)²` at `omega`.
    pub fn response(&self, omega: f64) -> f64 {
        let x = self.n_pairs as f64 * PI * (self.omega_idt - omega) / self.omega_idt;
        let s = sinc(x);
        s * s
    }
}

/// Coupling-point separation and sound velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Separation of the coupling points, m.
    pub length: f64,
    /// Surface acoustic wave velocity, m/s.
    pub v_saw: f64,
}

/// All physical constants of one device. Rates and frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantAtomParams {
    pub omega01: f64,
    /// Acoustic coupling per coupling point.
    pub gamma: f64,
    /// Propagation delay between the coupling points, s.
    pub delay_t: f64,
    pub gamma_res: f64,
    pub gamma_gate: f64,
    pub gamma_q: f64,
    pub idt: Option<IdtGeometry>,
    pub geometry: Option<Geometry>,
}

impl GiantAtomParams {
    pub fn new(omega01: f64, gamma: f64, delay_t: f64) -> Result<Self> {
        let p = Self {
            omega01,
            gamma,
            delay_t,
            gamma_res: 0.0,
            gamma_gate: 0.0,
            gamma_q: 0.0,
            idt: None,
            geometry: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Coupling taken from the transducer geometry at the atom frequency.
    pub fn from_idt(omega01: f64, idt: IdtGeometry, delay_t: f64) -> Result<Self> {
        idt.validate()?;
        let mut p = Self::new(omega01, idt_coupling(&idt, omega01, omega01), delay_t)?;
        p.idt = Some(idt);
        Ok(p)
    }

    /// Delay derived from the geometry.
    pub fn from_geometry(omega01: f64, gamma: f64, geometry: Geometry) -> Result<Self> {
        let t = delay_from_geometry(geometry.length, geometry.v_saw)?;
        let mut p = Self::new(omega01, gamma, t)?;
        p.geometry = Some(geometry);
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma_res(mut self, v: f64) -> Self {
        self.gamma_res = v;
        self
    }

    pub fn with_gamma_gate(mut self, v: f64) -> Self {
        self.gamma_gate = v;
        self
    }

    pub fn with_gamma_q(mut self, v: f64) -> Self {
        self.gamma_q = v;
        self
    }

    pub fn with_omega01(mut self, v: f64) -> Self {
        self.omega01 = v;
        self
    }

    pub fn with_delay(mut self, v: f64) -> Self {
        self.delay_t = v;
        self
    }

    pub fn with_gamma(mut self, v: f64) -> Self {
        self.gamma = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gamma", self.gamma),
            ("gamma_res", self.gamma_res),
            ("gamma_gate", self.gamma_gate),
            ("gamma_q", self.gamma_q),
            ("delayT", self.delay_t),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.omega01 > 0.0 && self.omega01.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega01 must be > 0, got {}",
                self.omega01
            )));
        }
        if let Some(idt) = &self.idt {
            idt.validate()?;
        }
        if let Some(g) = &self.geometry {
            let t = delay_from_geometry(g.length, g.v_saw)?;
            if (self.delay_t - t).abs() > 1e-3 * self.delay_t {
                return Err(Error::InvalidParameter(format!(
                    "delayT = {} s inconsistent with L/v_saw = {} s",
                    self.delay_t, t
                )));
            }
        }
        Ok(())
    }

    /// Sum of non-acoustic decay rates, γ_res + γ_gate.
    pub fn gamma_ext(&self) -> f64 {
        self.gamma_res + self.gamma_gate
    }

    /// Dimensionless giant-atom parameter γT.
    pub fn gamma_t(&self) -> f64 {
        self.gamma * self.delay_t
    }

    /// Interference phase `ω₀₁T mod 2π`.
    pub fn phase(&self) -> f64 {
        phase_mod_tau(self.omega01, self.delay_t)
    }

    /// Total amplitude decay rate on the local term, γ + γ_res.
    pub fn local_rate(&self) -> f64 {
        self.gamma + self.gamma_res
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&ParamsFile::from(self))?;
        s.push('\n');
        Ok(s)
    }

    /// The parameter document as a JSON value (Hz, seconds, metres).
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(ParamsFile::from(self)).expect("parameter document serializes")
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let f: ParamsFile = serde_json::from_value(v)?;
        let p = GiantAtomParams::from(f);
        p.validate()?;
        Ok(p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ParamsFile = serde_json::from_str(s)?;
        let p = GiantAtomParams::from(f);
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&s)
    }
}

/// On-disk parameter document: Hz, seconds, metres.
#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    omega01: f64,
    gamma: f64,
    #[serde(rename = "delayT")]
    delay_t: f64,
    #[serde(default)]
    gamma_res: f64,
    #[serde(default)]
    gamma_gate: f64,
    #[serde(default)]
    gamma_q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    idt: Option<IdtFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<GeometryFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IdtFile {
    n_pairs: u32,
    k_squared: f64,
    omega_idt: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GeometryFile {
    #[serde(rename = "L")]
    length: f64,
    v_saw: f64,
}

impl From<&GiantAtomParams> for ParamsFile {
    fn from(p: &GiantAtomParams) -> Self {
        Self {
            omega01: angular_to_hz(p.omega01),
            gamma: angular_to_hz(p.gamma),
            delay_t: canonical(p.delay_t),
            gamma_res: angular_to_hz(p.gamma_res),
            gamma_gate: angular_to_hz(p.gamma_gate),
            gamma_q: angular_to_hz(p.gamma_q),
            idt: p.idt.map(|g| IdtFile {
                n_pairs: g.n_pairs,
                k_squared: canonical(g.k_squared),
                omega_idt: angular_to_hz(g.omega_idt),
            }),
            geometry: p.geometry.map(|g| GeometryFile {
                length: canonical(g.length),
                v_saw: canonical(g.v_saw),
            }),
        }
    }
}

impl From<ParamsFile> for GiantAtomParams {
    fn from(f: ParamsFile) -> Self {
        Self {
            omega01: hz_to_angular(f.omega01),
            gamma: hz_to_angular(f.gamma),
            delay_t: f.delay_t,
            gamma_res: hz_to_angular(f.gamma_res),
            gamma_gate: hz_to_angular(f.gamma_gate),
            gamma_q: hz_to_angular(f.gamma_q),
            idt: f.idt.map(|g| IdtGeometry {
                n_pairs: g.n_pairs,
                k_squared: g.k_squared,
                omega_idt: hz_to_angular(g.omega_idt),
            }),
            geometry: f.geometry.map(|g| Geometry {
                length: g.length,
                v_saw: g.v_saw,
            }),
        }
    }
}

/// `sin(x)/x` with the removable singularity at zero handled by a Taylor
/// expansion for `|x| < 1e-4`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Frequency-dependent acoustic coupling of a transducer-coupled atom,
/// `γ(ω) = (N_p K² ω₀₁ / 4) (sin X / X)²` with
/// `X = N_p π (ω_IDT − ω) / ω_IDT`.
///
/// `omega` must be positive.
pub fn idt_coupling(geom: &IdtGeometry, omega01: f64, omega: f64) -> f64 {
    debug_assert!(omega > 0.0);
    geom.n_pairs as f64 * geom.k_squared * omega01 / 4.0 * geom.response(omega)
}

/// Propagation time `L / v_saw` between the coupling points.
pub fn delay_from_geometry(length: f64, v_saw: f64) -> Result<f64> {
    if !(v_saw > 0.0 && v_saw.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "v_saw must be > 0, got {v_saw}"
        )));
    }
    if !(length >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "length must be >= 0, got {length}"
        )));
    }
    Ok(length / v_saw)
}

/// Drive-frequency-dependent emission rate into the acoustic channel,
/// `γ (1 + cos ω_d T)`.
pub fn gamma_eff(params: &GiantAtomParams, omega_d: f64) -> f64 {
    let ph = phase_mod_tau(omega_d, params.delay_t);
    params.gamma * (1.0 + ph.cos())
}

/// Atom frequency at which a drive at `omega_d` is maximally reflected:
/// `ω_d − γ sin(ω_d T)`.
pub fn resonance_shift(params: &GiantAtomParams, omega_d: f64) -> f64 {
    omega_d - lamb_shift(params, omega_d)
}

/// `γ sin(ω_d T)`.
pub fn lamb_shift(params: &GiantAtomParams, omega_d: f64) -> f64 {
    let ph = phase_mod_tau(omega_d, params.delay_t);
    params.gamma * ph.sin()
}

/// Closed frequency interval `[lo, hi]` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn around(center: f64, half_width: f64) -> Self {
        Self::new(center - half_width, center + half_width)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// All drive frequencies in `window` that are maximally reflected by an
/// atom at `omega01`, i.e. the roots of `ω_d − γ sin(ω_d T) − ω₀₁`, sorted
/// ascending.
///
/// Brackets are taken on a grid of step `min(π/(8T), width/1000)` merged
/// with the stationary points of the residual (`cos ω_d T = 1/(γT)`), so
/// every bracket holds at most one root. Each root is bisected down to
/// floating-point resolution.
pub fn drive_for_max_reflection(
    params: &GiantAtomParams,
    omega01: f64,
    window: Window,
) -> Result<Vec<f64>> {
    if !(window.hi > window.lo) || !window.lo.is_finite() || !window.hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "empty frequency window [{}, {}]",
            window.lo, window.hi
        )));
    }
    let t = params.delay_t;
    let f = |w: f64| (w - omega01) - lamb_shift(params, w);

    let mut step = window.width() / 1000.0;
    if t > 0.0 {
        step = step.min(PI / (8.0 * t));
    }
    let n = (window.width() / step).ceil() as usize;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|k| (window.lo + k as f64 * step).min(window.hi))
        .collect();

    let gt = params.gamma_t();
    if t > 0.0 && gt >= 1.0 {
        let theta = (1.0 / gt).acos();
        let k_lo = (window.lo * t / (2.0 * PI)).floor() as i64 - 1;
        let k_hi = (window.hi * t / (2.0 * PI)).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            for s in [-theta, theta] {
                let w = (s + 2.0 * PI * k as f64) / t;
                if w > window.lo && w < window.hi {
                    nodes.push(w);
                }
            }
        }
        nodes.sort_by(|a, b| a.total_cmp(b));
        nodes.dedup();
    }

    let values: Vec<f64> = nodes.iter().map(|&w| f(w)).collect();
    let mut roots = Vec::new();
    for i in 0..nodes.len() {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
            continue;
        }
        if i + 1 < nodes.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum()
        {
            roots.push(bisect(&f, nodes[i], nodes[i + 1], values[i]));
        }
    }
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}
