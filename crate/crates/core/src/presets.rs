//! Measured device parameters for the five giant-atom samples.

use crate::error::{Error, Result};
use crate::model::{GiantAtomParams, IdtGeometry};
use crate::units::hz_to_angular as w;

/// Piezoelectric coupling coefficient of GaAs.
pub const K_SQUARED_GAAS: f64 = 7e-4;
/// Transducer centre frequency shared by all samples, Hz.
pub const IDT_CENTER_HZ: f64 = 2.3e9;

/// One tabulated sample: the simulation parameters plus the columns that
/// are reported but not used as model inputs.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub params: GiantAtomParams,
    /// Coupling-point separation, m.
    pub length: f64,
    /// Tabulated γT.
    pub gamma_t_printed: f64,
    /// Tabulated 2γ/γ_ext, when reported.
    pub ext_ratio_printed: Option<f64>,
}

struct Row {
    name: &'static str,
    n_pairs: u32,
    gamma_hz: f64,
    delay: f64,
    gamma_t: f64,
    length: f64,
    gamma_gate_hz: f64,
    ext_ratio: Option<f64>,
    gamma_q_hz: f64,
    gamma_res_hz: f64,
    omega01_hz: f64,
}

const ROWS: [Row; 5] = [
    Row {
        name: "A1",
        n_pairs: 14,
        gamma_hz: 6.1e6,
        delay: 19e-9,
        gamma_t: 0.8,
        length: 55e-6,
        gamma_gate_hz: 1.25e6,
        ext_ratio: Some(4.4),
        gamma_q_hz: 1.5e6,
        gamma_res_hz: 0.0,
        omega01_hz: 2.3e9,
    },
    Row {
        name: "A2",
        n_pairs: 14,
        gamma_hz: 4.4e6,
        delay: 46e-9,
        gamma_t: 1.4,
        length: 125e-6,
        gamma_gate_hz: 1.5e6,
        ext_ratio: Some(1.8),
        gamma_q_hz: 3.5e6,
        gamma_res_hz: 0.0,
        omega01_hz: 2.3e9,
    },
    Row {
        name: "A3",
        n_pairs: 18,
        gamma_hz: 5.8e6,
        delay: 190e-9,
        gamma_t: 7.0,
        length: 550e-6,
        gamma_gate_hz: 2.2e6,
        ext_ratio: Some(1.9),
        gamma_q_hz: 4.0e6,
        gamma_res_hz: 0.0,
        omega01_hz: 2.3e9,
    },
    Row {
        name: "A4",
        n_pairs: 18,
        gamma_hz: 5.3e6,
        delay: 190e-9,
        gamma_t: 6.3,
        length: 550e-6,
        gamma_gate_hz: 0.0,
        ext_ratio: None,
        gamma_q_hz: 0.0,
        gamma_res_hz: 0.0,
        omega01_hz: 2.3e9,
    },
    Row {
        name: "B1",
        n_pairs: 14,
        gamma_hz: 4.8e6,
        delay: 160e-9,
        gamma_t: 4.8,
        length: 450e-6,
        gamma_gate_hz: 0.0,
        ext_ratio: Some(1.4),
        gamma_q_hz: 0.0,
        gamma_res_hz: 6.85e6,
        omega01_hz: 2.29e9,
    },
];

/// Names in table order.
pub const NAMES: [&str; 5] = ["A1", "A2", "A3", "A4", "B1"];

pub fn all() -> Vec<Preset> {
    ROWS.iter().map(build).collect()
}

pub fn get(name: &str) -> Result<Preset> {
    ROWS.iter()
        .find(|r| r.name.eq_ignore_ascii_case(name))
        .map(build)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown preset {name:?}; expected one of {}",
                NAMES.join(", ")
            ))
        })
}

/// Shorthand for `get(name).params`.
pub fn params(name: &str) -> Result<GiantAtomParams> {
    get(name).map(|p| p.params)
}

fn build(r: &Row) -> Preset {
    let params = GiantAtomParams {
        omega01: w(r.omega01_hz),
        gamma: w(r.gamma_hz),
        delay_t: r.delay,
        gamma_res: w(r.gamma_res_hz),
        gamma_gate: w(r.gamma_gate_hz),
        gamma_q: w(r.gamma_q_hz),
        idt: Some(IdtGeometry {
            n_pairs: r.n_pairs,
            k_squared: K_SQUARED_GAAS,
            omega_idt: w(IDT_CENTER_HZ),
        }),
        geometry: None,
    };
    Preset {
        name: r.name,
        params,
        length: r.length,
        gamma_t_printed: r.gamma_t,
        ext_ratio_printed: r.ext_ratio,
    }
}
