//! Command-line front end. Every command writes its data files atomically
//! and prints a JSON run manifest on standard output; `--replay` re-runs
//! the configuration stored in such a manifest.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{default_step, evolve_dde, revival_peaks, series_trace, AmplitudeTrace, Frame};
use crate::error::{Error, Result};
use crate::fit::{
    additive_noise, fit_spectrum_with, fit_velocity_with, multiplicative_noise, synthetic_ridge,
    synthetic_spectrum, FitOptions, ParamMask,
};
use crate::model::GiantAtomParams;
use crate::nonmarkov::{blp_report, trace_distance};
use crate::presets;
use crate::scattering::{scatter_map, FrequencyAxis, ScatterKind};
use crate::spectrum::{fft_spectrum, ift_spectrum, spectrum_closed, DetuningGrid, SpectrumTrace};
use crate::units::{angular_to_hz, hz_to_angular};

/// Exit status for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit status for file-system failures.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "giantatom",
    version,
    about = "Giant-atom relaxation, spectra, scattering maps and fits"
)]
pub struct Cli {
    /// Re-run the configuration recorded in a run manifest.
    #[arg(long, value_name = "MANIFEST")]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

/// A complete, replayable command configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Time evolution of the excited-state amplitude.
    Simulate(SimulateArgs),
    /// Emission spectrum, optionally with its inverse transform.
    Spectrum(SpectrumArgs),
    /// SAW transmission or reflection map over (drive, atom) frequencies.
    Scatter(ScatterArgs),
    /// Gate reflection map over (drive, atom) frequencies.
    GateMap(GateMapArgs),
    /// Trace-distance non-Markovianity of the relaxation.
    Nonmarkov(NonmarkovArgs),
    /// Fit a spectrum or a reflection ridge.
    Fit(FitArgs),
    /// List the tabulated samples.
    Presets(PresetsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Spectrum(_) => "spectrum",
            Command::Scatter(_) => "scatter",
            Command::GateMap(_) => "gate-map",
            Command::Nonmarkov(_) => "nonmarkov",
            Command::Fit(_) => "fit",
            Command::Presets(_) => "presets",
        }
    }
}

/// Where device parameters come from.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct Source {
    /// Tabulated sample: A1, A2, A3, A4 or B1.
    #[arg(long, conflicts_with = "params")]
    pub preset: Option<String>,
    /// Parameter document (JSON, Hz and seconds).
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
}

impl Source {
    fn is_set(&self) -> bool {
        self.preset.is_some() || self.params.is_some()
    }

    fn load(&self) -> Result<GiantAtomParams> {
        match (&self.preset, &self.params) {
            (Some(name), None) => presets::params(name),
            (None, Some(path)) => GiantAtomParams::load(path),
            (Some(_), Some(_)) => Err(Error::InvalidInput(
                "give either --preset or --params, not both".into(),
            )),
            (None, None) => Err(Error::InvalidInput(
                "a parameter source is required: --preset NAME or --params FILE".into(),
            )),
        }
    }
}

/// A time given in seconds or as a multiple of the delay, e.g. `4T`,
/// `T/256`, `3T/2`, `1.5e-6`, `250ns`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeSpec {
    Seconds(f64),
    Delay { factor: f64 },
}

impl TimeSpec {
    pub fn resolve(&self, delay: f64) -> Result<f64> {
        match *self {
            TimeSpec::Seconds(s) => Ok(s),
            TimeSpec::Delay { factor } => {
                if delay > 0.0 {
                    Ok(factor * delay)
                } else {
                    Err(Error::InvalidInput(format!(
                        "time {self} refers to T, but T = {delay}"
                    )))
                }
            }
        }
    }
}

impl FromStr for TimeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidInput(format!("cannot read time {s:?}"));
        if let Some((lhs, rhs)) = t.split_once('T') {
            let lhs = lhs.trim().trim_end_matches('*');
            let num = if lhs.is_empty() {
                1.0
            } else {
                lhs.parse::<f64>().map_err(|_| bad())?
            };
            let rhs = rhs.trim();
            let den = if rhs.is_empty() {
                1.0
            } else {
                rhs.strip_prefix('/')
                    .ok_or_else(bad)?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad())?
            };
            let factor = num / den;
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(bad());
            }
            return Ok(TimeSpec::Delay { factor });
        }
        // scale by editing the exponent so "250ns" reads exactly as 250e-9
        let units = [("ns", -9), ("us", -6), ("µs", -6), ("ms", -3), ("s", 0)];
        let (mantissa, exp) = units
            .iter()
            .find_map(|(suffix, e)| t.strip_suffix(suffix).map(|m| (m.trim(), *e)))
            .unwrap_or((t, 0));
        let m: f64 = mantissa.parse().map_err(|_| bad())?;
        let v = if exp == 0 {
            m
        } else if mantissa.contains(['e', 'E']) {
            m * 10f64.powi(exp)
        } else {
            format!("{mantissa}e{exp}").parse().map_err(|_| bad())?
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(TimeSpec::Seconds(v))
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Seconds(s) => write!(f, "{s:e}"),
            TimeSpec::Delay { factor } if *factor >= 1.0 => write!(f, "{factor}T"),
            TimeSpec::Delay { factor } => write!(f, "T/{}", 1.0 / factor),
        }
    }
}

impl Serialize for TimeSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeSpec::Seconds(v) => s.serialize_str(&format!("{v}")),
            TimeSpec::Delay { factor } => s.serialize_str(&format!("{factor}T")),
        }
    }
}

impl<'de> Deserialize<'de> for TimeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Method-of-steps integration of the delay equation.
    Dde,
    /// Closed delayed series.
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameArg {
    Rotating,
    Lab,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Rotating => Frame::Rotating,
            FrameArg::Lab => Frame::Lab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    /// End time.
    #[arg(long, default_value = "4T")]
    pub tmax: TimeSpec,
    /// Largest allowed step; tightened to the integrator's limits.
    #[arg(long)]
    pub dt: Option<TimeSpec>,
    #[arg(long, value_enum, default_value = "rotating")]
    pub frame: FrameArg,
    #[arg(long, value_enum, default_value = "dde")]
    pub method: Method,
    /// Output CSV (`t,re,im,abs`).
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    /// Closed-form susceptibility.
    Closed,
    /// Fourier transform of a simulated trace.
    Fft,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: Source,
    /// Full frequency span around the atom frequency, Hz.
    #[arg(long, default_value_t = 80e6)]
    pub span: f64,
    #[arg(long, default_value_t = 4001)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: SpectrumMethod,
    /// Trace length for `--method fft`.
    #[arg(long, default_value = "12T")]
    pub tmax: TimeSpec,
    /// Write s0 without normalizing to unit maximum.
    #[arg(long)]
    pub raw: bool,
    /// Output CSV (`omega_hz,chi_re,chi_im,s0`).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the inverse transform of the spectrum as a trace CSV.
    #[arg(long, value_name = "FILE")]
    pub ift: Option<PathBuf>,
}

/// Axes of a (drive, atom) map. Centres default to the atom frequency.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MapAxes {
    /// Drive-frequency span, Hz.
    #[arg(long, default_value_t = 14e6)]
    pub drive_span: f64,
    #[arg(long, default_value_t = 281)]
    pub drive_points: usize,
    /// Drive-axis centre, Hz.
    #[arg(long)]
    pub drive_center: Option<f64>,
    /// Atom-frequency span, Hz.
    #[arg(long, default_value_t = 20e6)]
    pub atom_span: f64,
    #[arg(long, default_value_t = 201)]
    pub atom_points: usize,
    /// Atom-axis centre, Hz.
    #[arg(long)]
    pub atom_center: Option<f64>,
}

impl MapAxes {
    fn build(&self, omega01: f64) -> Result<(FrequencyAxis, FrequencyAxis)> {
        if self.drive_points < 2 || self.atom_points < 2 {
            return Err(Error::InvalidInput("map axes need at least 2 points".into()));
        }
        if !(self.drive_span > 0.0 && self.atom_span > 0.0) {
            return Err(Error::InvalidInput("map spans must be > 0".into()));
        }
        let axis = |center: Option<f64>, span: f64, n: usize| {
            let c = center.map(hz_to_angular).unwrap_or(omega01);
            let h = 0.5 * hz_to_angular(span);
            FrequencyAxis::linspace(c - h, c + h, n)
        };
        Ok((
            axis(self.drive_center, self.drive_span, self.drive_points)?,
            axis(self.atom_center, self.atom_span, self.atom_points)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SawKind {
    Transmission,
    Reflection,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value = "transmission")]
    pub kind: SawKind,
    #[command(flatten)]
    pub axes: MapAxes,
    /// Multiply transmission by the launcher and pickup transducer response.
    #[arg(long)]
    pub envelope: bool,
    /// Divide each column by the far-detuned row.
    #[arg(long)]
    pub background_subtract: bool,
    /// Write `re,im` pairs instead of power.
    #[arg(long)]
    pub complex: bool,
    /// Output CSV; a JSON sidecar is written next to it.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GateMapArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub axes: MapAxes,
    #[arg(long)]
    pub background_subtract: bool,
    #[arg(long)]
    pub complex: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NonmarkovArgs {
    #[command(flatten)]
    pub source: Source,
    /// Amplitude trace CSV instead of a parameter source.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["preset", "params", "spectrum"])]
    pub trace: Option<PathBuf>,
    /// Spectrum CSV; its inverse transform is analysed.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["preset", "params"])]
    pub spectrum: Option<PathBuf>,
    /// End time of the analysed window.
    #[arg(long)]
    pub tmax: Option<TimeSpec>,
    /// Sampling step when simulating from parameters.
    #[arg(long)]
    pub dt: Option<TimeSpec>,
    /// Distance trace CSV (`t,distance`).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Measure as JSON `{"blp": .., "dt": ..}`.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    /// Normalized emission spectrum; data rows `omega_hz,s0`.
    Spectrum,
    /// Reflection ridge; data rows `omega_d_hz,omega01_hz`.
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value = "spectrum")]
    pub kind: FitKind,
    /// Initial parameters (and generator for `--synthetic`).
    #[command(flatten)]
    pub source: Source,
    /// Data CSV with header `omega_hz,value`.
    #[arg(long, value_name = "FILE", conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Generate the data from the parameter source.
    #[arg(long)]
    pub synthetic: bool,
    /// Noise added to synthetic data: relative for spectra, in units of γ
    /// for ridges.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Synthetic data span, Hz.
    #[arg(long, default_value_t = 80e6)]
    pub span: f64,
    #[arg(long, default_value_t = 801)]
    pub points: usize,
    /// Free spectrum parameters: `all`, `none` or a list of
    /// omega01, gamma, T, gamma_res.
    #[arg(long, default_value = "all")]
    pub free: String,
    /// Coupling-point separation for velocity fits, m.
    #[arg(long)]
    pub length: Option<f64>,
    /// Starting velocity, m/s.
    #[arg(long, default_value_t = 3000.0)]
    pub init_v: f64,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Fit report JSON.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PresetsArgs {
    /// Also write the table as JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// What one run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    pub outputs: Vec<OutputFile>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
    pub threads: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: usize,
}

/// Writes `contents` through a temporary file in the target directory and
/// renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    if let Err(e) = f.write_all(contents).and_then(|_| f.sync_all()) {
        let _ = fs::remove_file(&tmp);
        return Err(io(e));
    }
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

struct Outputs(Vec<OutputFile>);

impl Outputs {
    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        write_atomic(path, contents.as_bytes())?;
        self.0.push(OutputFile {
            path: path.display().to_string(),
            bytes: contents.len(),
        });
        Ok(())
    }
}

/// Step for trace generation: the requested value as an upper bound,
/// tightened to `T/64` and `1/(50(γ + γ_res))`; the default step otherwise.
fn effective_step(params: &GiantAtomParams, dt: Option<TimeSpec>) -> Result<f64> {
    let Some(spec) = dt else {
        return Ok(default_step(params));
    };
    let mut dt = spec.resolve(params.delay_t)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    if params.delay_t > 0.0 {
        dt = dt.min(params.delay_t / 64.0);
    }
    if params.local_rate() > 0.0 {
        dt = dt.min(1.0 / (50.0 * params.local_rate()));
    }
    Ok(dt)
}

fn simulate_trace(params: &GiantAtomParams, t_max: f64, dt: f64, method: Method) -> Result<AmplitudeTrace> {
    match method {
        Method::Dde => evolve_dde(params, t_max, dt),
        Method::Series => series_trace(params, t_max, dt, Frame::Rotating),
    }
}

fn peaks_json(trace: &AmplitudeTrace) -> Value {
    Value::Array(
        revival_peaks(trace)
            .into_iter()
            .map(|(t, m)| json!({"t": t, "abs": m}))
            .collect(),
    )
}

/// Reads `omega_hz,value` rows; `#` lines and a header are skipped.
pub fn read_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let (a, b) = match (cols.next(), cols.next()) {
            (Some(a), Some(b)) => (a.trim(), b.trim()),
            _ => return Err(Error::InvalidInput(format!("bad data row {line:?}"))),
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => out.push((x, y)),
            _ if out.is_empty() => continue, // header
            _ => return Err(Error::InvalidInput(format!("bad data row {line:?}"))),
        }
    }
    Ok(out)
}

fn sidecar_path(output: &Path) -> PathBuf {
    if output.extension().is_some_and(|e| e == "json") {
        let mut s = output.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    } else {
        output.with_extension("json")
    }
}

#[allow(clippy::too_many_arguments)]
fn map_command(
    params: &GiantAtomParams,
    axes: &MapAxes,
    kind: ScatterKind,
    envelope: bool,
    background: bool,
    complex: bool,
    output: &Path,
    out: &mut Outputs,
) -> Result<Value> {
    let (drive, atom) = axes.build(params.omega01)?;
    let map = scatter_map(params, &drive, &atom, kind, envelope)?;
    let power = if background {
        Some(map.background_normalized_power())
    } else {
        None
    };
    out.write(output, &map.to_csv(complex, power.as_deref()))?;
    let sidecar = json!({
        "params": params.to_value(),
        "kind": kind.as_str(),
        "cells": if complex { "complex" } else { "power" },
        "envelope": envelope,
        "background_subtract": background,
        "background_row_hz": if background {
            json!(angular_to_hz(atom.at(map.far_detuned_row())))
        } else {
            Value::Null
        },
        "drive_points": drive.len,
        "atom_points": atom.len,
    });
    let mut s = serde_json::to_string_pretty(&sidecar)?;
    s.push('\n');
    out.write(&sidecar_path(output), &s)?;
    let p = map.power();
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    Ok(json!({"min_power": lo, "max_power": hi}))
}

/// Executes one configuration.
pub fn run(config: &RunConfig) -> Result<Manifest> {
    let start = Instant::now();
    let mut out = Outputs(Vec::new());
    let mut used_params = None;
    let result = match &config.command {
        Command::Simulate(a) => {
            let p = a.source.load()?;
            let t_max = a.tmax.resolve(p.delay_t)?;
            let dt = effective_step(&p, a.dt)?;
            let trace = simulate_trace(&p, t_max, dt, a.method)?.to_frame(a.frame.into());
            out.write(&a.output, &trace.to_csv())?;
            used_params = Some(p);
            json!({"dt": dt, "samples": trace.len(), "revival_peaks": peaks_json(&trace)})
        }
        Command::Spectrum(a) => {
            let p = a.source.load()?;
            if a.points < 2 || !(a.span > 0.0) {
                return Err(Error::InvalidInput("spectrum needs span > 0 and points >= 2".into()));
            }
            let span = hz_to_angular(a.span);
            let spec = match a.method {
                SpectrumMethod::Closed => {
                    spectrum_closed(&p, &DetuningGrid::centered(span, a.points)?)?
                }
                SpectrumMethod::Fft => {
                    let t_max = a.tmax.resolve(p.delay_t)?;
                    let full = fft_spectrum(&evolve_dde(&p, t_max, default_step(&p))?)?;
                    crop(&full, 0.5 * span)
                }
            };
            // transform first so a too-narrow window leaves no files behind
            let ift = a.ift.as_ref().map(|_| ift_spectrum(&spec)).transpose()?;
            out.write(&a.output, &spec.to_csv(!a.raw))?;
            let mut res = json!({"samples": spec.len()});
            if let (Some(path), Some(trace)) = (&a.ift, &ift) {
                out.write(path, &trace.to_csv())?;
                res["ift_samples"] = json!(trace.len());
            }
            used_params = Some(p);
            res
        }
        Command::Scatter(a) => {
            let p = a.source.load()?;
            let kind = match a.kind {
                SawKind::Transmission => ScatterKind::SawTransmission,
                SawKind::Reflection => ScatterKind::SawReflection,
            };
            let r = map_command(
                &p,
                &a.axes,
                kind,
                a.envelope,
                a.background_subtract,
                a.complex,
                &a.output,
                &mut out,
            )?;
            used_params = Some(p);
            r
        }
        Command::GateMap(a) => {
            let p = a.source.load()?;
            let r = map_command(
                &p,
                &a.axes,
                ScatterKind::GateReflection,
                false,
                a.background_subtract,
                a.complex,
                &a.output,
                &mut out,
            )?;
            used_params = Some(p);
            r
        }
        Command::Nonmarkov(a) => {
            let inputs = [a.source.is_set(), a.trace.is_some(), a.spectrum.is_some()];
            if inputs.iter().filter(|b| **b).count() != 1 {
                return Err(Error::InvalidInput(
                    "give exactly one of --preset/--params, --trace or --spectrum".into(),
                ));
            }
            let (trace, delay) = if let Some(path) = &a.trace {
                (AmplitudeTrace::from_csv(&read_text(path)?)?, 0.0)
            } else if let Some(path) = &a.spectrum {
                (ift_spectrum(&SpectrumTrace::from_csv(&read_text(path)?)?)?, 0.0)
            } else {
                let p = a.source.load()?;
                let t_max = match a.tmax {
                    Some(spec) => spec.resolve(p.delay_t)?,
                    None if p.delay_t > 0.0 => 6.0 * p.delay_t,
                    None => 5.0 / (2.0 * p.gamma + p.gamma_res),
                };
                let dt = effective_step(&p, a.dt)?;
                let d = p.delay_t;
                let tr = series_trace(&p, t_max, dt, Frame::Rotating)?;
                used_params = Some(p);
                (tr, d)
            };
            let trace = match a.tmax {
                Some(spec) if used_params.is_none() => {
                    let t_end = spec.resolve(delay)?;
                    truncate(&trace, t_end)
                }
                _ => trace,
            };
            let dist = trace_distance(&trace);
            let report = blp_report(&dist);
            if let Some(path) = &a.output {
                out.write(path, &dist.to_csv())?;
            }
            let mut s = serde_json::to_string(&report)?;
            s.push('\n');
            if let Some(path) = &a.report {
                out.write(path, &s)?;
            }
            serde_json::to_value(report)?
        }
        Command::Fit(a) => {
            // a velocity fit to a data file needs no starting parameters
            let p = if a.kind == FitKind::Velocity && !a.synthetic && !a.source.is_set() {
                None
            } else {
                Some(a.source.load()?)
            };
                        let opts = FitOptions {
                restarts: a.restarts,
                ..Default::default()
            };
            let fit = match a.kind {
                FitKind::Spectrum => {
                    let p = p.as_ref().expect("spectrum fits load parameters");
                    let data: Vec<(f64, f64)> = if a.synthetic {
                        let h = 0.5 * hz_to_angular(a.span);
                        let clean = synthetic_spectrum(p, p.omega01 - h, p.omega01 + h, a.points)?;
                        let vals: Vec<f64> = clean.iter().map(|d| d.1).collect();
                        let noisy = multiplicative_noise(&vals, a.noise, a.seed);
                        clean.iter().zip(noisy).map(|(d, v)| (d.0, v)).collect()
                    } else {
                        let path = a.data.as_ref().ok_or_else(|| {
                            Error::InvalidInput("fit needs --data FILE or --synthetic".into())
                        })?;
                        read_pairs(&read_text(path)?)?
                            .into_iter()
                            .map(|(f, v)| (hz_to_angular(f), v))
                            .collect()
                    };
                    let free: ParamMask = a.free.parse()?;
                    fit_spectrum_with(&data, p, free, &opts)?
                }
                FitKind::Velocity => {
                    let length = a
                        .length
                        .or_else(|| p.as_ref().and_then(|p| p.geometry).map(|g| g.length))
                        .or_else(|| {
                            a.source
                                .preset
                                .as_ref()
                                .and_then(|n| presets::get(n).ok())
                                .map(|pr| pr.length)
                        })
                        .ok_or_else(|| {
                            Error::InvalidInput("velocity fit needs --length".into())
                        })?;
                    let ridge: Vec<(f64, f64)> = if let (true, Some(p)) = (a.synthetic, &p) {
                        let h = 0.5 * hz_to_angular(a.span);
                        let clean = synthetic_ridge(p, p.omega01 - h, p.omega01 + h, a.points);
                        let vals: Vec<f64> = clean.iter().map(|d| d.1).collect();
                        let noisy = additive_noise(&vals, a.noise * p.gamma, a.seed);
                        clean.iter().zip(noisy).map(|(d, v)| (d.0, v)).collect()
                    } else {
                        let path = a.data.as_ref().ok_or_else(|| {
                            Error::InvalidInput("fit needs --data FILE or --synthetic".into())
                        })?;
                        read_pairs(&read_text(path)?)?
                            .into_iter()
                            .map(|(f, v)| (hz_to_angular(f), hz_to_angular(v)))
                            .collect()
                    };
                    fit_velocity_with(&ridge, length, a.init_v, &opts)?
                }
            };
            out.write(&a.output, &fit.to_report_json())?;
            used_params = p;
            json!({
                "residual_norm": fit.residual_norm,
                "converged": fit.converged,
                "params": fit.params.to_value(),
                "v_saw": fit.velocity,
            })
        }
        Command::Presets(a) => {
            let table: Vec<Value> = presets::all()
                .iter()
                .map(|pr| {
                    json!({
                        "name": pr.name,
                        "gamma_hz": angular_to_hz(pr.params.gamma),
                        "delayT_s": pr.params.delay_t,
                        "gammaT": pr.gamma_t_printed,
                        "gammaT_computed": pr.params.gamma_t(),
                        "L_m": pr.length,
                        "n_pairs": pr.params.idt.map(|g| g.n_pairs),
                        "gamma_gate_hz": angular_to_hz(pr.params.gamma_gate),
                        "two_gamma_over_gamma_ext": pr.ext_ratio_printed,
                        "gamma_q_hz": angular_to_hz(pr.params.gamma_q),
                        "gamma_res_hz": angular_to_hz(pr.params.gamma_res),
                        "omega01_hz": angular_to_hz(pr.params.omega01),
                    })
                })
                .collect();
            if let Some(path) = &a.output {
                let mut s = serde_json::to_string_pretty(&table)?;
                s.push('\n');
                out.write(path, &s)?;
            }
            Value::Array(table)
        }
    };
    Ok(Manifest {
        tool: "giantatom",
        version: env!("CARGO_PKG_VERSION"),
        command: config.command.name(),
        config: config.clone(),
        params: used_params.map(|p| p.to_value()),
        outputs: out.0,
        result,
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Samples with `|Δ| ≤ half_span`.
fn crop(spec: &SpectrumTrace, half_span: f64) -> SpectrumTrace {
    let keep: Vec<usize> = (0..spec.len())
        .filter(|&k| spec.detuning(k).abs() <= half_span)
        .collect();
    let first = keep.first().copied().unwrap_or(0);
    SpectrumTrace {
        omega_ref: spec.omega_ref,
        omega0: spec.detuning(first),
        domega: spec.domega,
        chi: keep.iter().map(|&k| spec.chi[k]).collect(),
        s0: keep.iter().map(|&k| spec.s0[k]).collect(),
    }
}

fn truncate(trace: &AmplitudeTrace, t_end: f64) -> AmplitudeTrace {
    let n = trace
        .values
        .iter()
        .enumerate()
        .take_while(|(k, _)| trace.time(*k) <= t_end * (1.0 + 1e-12))
        .count()
        .max(1);
    let mut t = trace.clone();
    t.values.truncate(n);
    t
}

/// Loads the configuration stored in a manifest.
pub fn load_replay(path: &Path) -> Result<RunConfig> {
    let v: Value = serde_json::from_str(&read_text(path)?)?;
    let cfg = v
        .get("config")
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no config", path.display())))?;
    Ok(serde_json::from_value(cfg)?)
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        EXIT_IO
    } else if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Caps the worker pool from `GIANTATOM_THREADS`.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GIANTATOM_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("GIANTATOM_THREADS must be a positive integer, got {v:?}"))
        })?;
        if n == 0 {
            return Err(Error::InvalidInput("GIANTATOM_THREADS must be >= 1".into()));
        }
        // a pool built earlier in the process wins; nothing to do then
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses arguments, runs, prints the manifest; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = init_threads().and_then(|_| {
        let config = match (&cli.replay, cli.command) {
            (Some(path), None) => load_replay(path)?,
            (None, Some(command)) => RunConfig { command },
            _ => {
                return Err(Error::InvalidInput(
                    "give a command or --replay MANIFEST".into(),
                ))
            }
        };
        run(&config)
    });
    match outcome {
        Ok(manifest) => {
            let text = match serde_json::to_string_pretty(&manifest) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_IO;
                }
            };
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
                Ok(()) => 0,
                // a closed reader (`| head`) is not a failure of the run
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
                Err(e) => {
                    eprintln!("error: writing manifest: {e}");
                    EXIT_IO
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
