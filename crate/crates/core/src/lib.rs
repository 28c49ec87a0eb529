//! Simulation and parameter estimation for a single giant atom: a two-level
//! emitter coupled to a one-dimensional acoustic field at two points
//! separated by a propagation delay `T`.
//!
//! All frequencies and rates are angular (rad/s) inside the crate; the CLI
//! and file formats use Hz.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod cli;
pub mod error;
pub mod fit;
pub mod model;
pub mod nonmarkov;
pub mod presets;
pub mod scattering;
pub mod special;
pub mod spectrum;
pub mod units;

pub use dynamics::{evolve_dde, revival_peaks, series_amplitude, AmplitudeTrace, Frame};
pub use error::{Error, Result};
pub use model::{GiantAtomParams, IdtGeometry, Window};
