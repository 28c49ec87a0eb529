//! Python bindings. Frequencies and rates cross the boundary in Hz, times
//! in seconds.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use giantatom::dynamics::{self, default_step, Frame};
use giantatom::fit::{self, FitOptions, ParamMask};
use giantatom::model::{self, Window};
use giantatom::nonmarkov::{blp_measure, trace_distance};
use giantatom::scattering;
use giantatom::spectrum::{self, DetuningGrid};
use giantatom::units::{angular_to_hz, hz_to_angular};
use giantatom::{presets, Error};

fn to_py(e: Error) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Device parameters.
#[pyclass(name = "GiantAtomParams", module = "pygiantatom", from_py_object)]
#[derive(Clone)]
pub struct PyParams {
    inner: model::GiantAtomParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (omega01_hz, gamma_hz, delay_t, gamma_res_hz = 0.0, gamma_gate_hz = 0.0, gamma_q_hz = 0.0))]
    fn new(
        omega01_hz: f64,
        gamma_hz: f64,
        delay_t: f64,
        gamma_res_hz: f64,
        gamma_gate_hz: f64,
        gamma_q_hz: f64,
    ) -> PyResult<Self> {
        let p = model::GiantAtomParams::new(hz_to_angular(omega01_hz), hz_to_angular(gamma_hz), delay_t)
            .map_err(to_py)?
            .with_gamma_res(hz_to_angular(gamma_res_hz))
            .with_gamma_gate(hz_to_angular(gamma_gate_hz))
            .with_gamma_q(hz_to_angular(gamma_q_hz));
        p.validate().map_err(to_py)?;
        Ok(Self { inner: p })
    }

    /// One of the tabulated samples A1, A2, A3, A4, B1.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: presets::params(name).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model::GiantAtomParams::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn omega01_hz(&self) -> f64 {
        angular_to_hz(self.inner.omega01)
    }

    #[getter]
    fn gamma_hz(&self) -> f64 {
        angular_to_hz(self.inner.gamma)
    }

    #[getter]
    fn delay_t(&self) -> f64 {
        self.inner.delay_t
    }

    #[getter]
    fn gamma_res_hz(&self) -> f64 {
        angular_to_hz(self.inner.gamma_res)
    }

    #[getter]
    fn gamma_gate_hz(&self) -> f64 {
        angular_to_hz(self.inner.gamma_gate)
    }

    #[getter]
    fn gamma_q_hz(&self) -> f64 {
        angular_to_hz(self.inner.gamma_q)
    }

    /// Dimensionless γT.
    fn gamma_t(&self) -> f64 {
        self.inner.gamma_t()
    }

    fn __repr__(&self) -> String {
        format!(
            "GiantAtomParams(omega01_hz={:e}, gamma_hz={:e}, delay_t={:e}, gamma_res_hz={:e})",
            self.omega01_hz(),
            self.gamma_hz(),
            self.inner.delay_t,
            self.gamma_res_hz()
        )
    }
}

/// Sampled excited-state amplitude.
#[pyclass(name = "AmplitudeTrace", module = "pygiantatom", skip_from_py_object)]
pub struct PyTrace {
    inner: dynamics::AmplitudeTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    fn magnitudes(&self) -> Vec<f64> {
        self.inner.magnitudes()
    }

    /// `(time, magnitude)` of each local maximum of `|a_e|`.
    fn revival_peaks(&self) -> Vec<(f64, f64)> {
        dynamics::revival_peaks(&self.inner)
    }

    /// Trace-distance non-Markovianity of this trace.
    fn blp(&self) -> f64 {
        blp_measure(&trace_distance(&self.inner))
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

fn frame(name: &str) -> PyResult<Frame> {
    name.parse().map_err(to_py)
}

/// Closed-form amplitude at time `t` in the given frame.
#[pyfunction]
#[pyo3(signature = (params, t, frame = "lab"))]
fn series_amplitude(params: &PyParams, t: f64, frame: &str) -> PyResult<Complex64> {
    match self::frame(frame)? {
        Frame::Lab => dynamics::series_amplitude(&params.inner, t),
        Frame::Rotating => dynamics::series_rotating(&params.inner, t),
    }
    .map_err(to_py)
}

/// Series solution sampled on `[0, t_max]`.
#[pyfunction]
#[pyo3(signature = (params, t_max, dt = None, frame = "rotating"))]
fn series_trace(params: &PyParams, t_max: f64, dt: Option<f64>, frame: &str) -> PyResult<PyTrace> {
    let dt = dt.unwrap_or_else(|| default_step(&params.inner));
    let inner = dynamics::series_trace(&params.inner, t_max, dt, self::frame(frame)?).map_err(to_py)?;
    Ok(PyTrace { inner })
}

/// Delay-equation integration on `[0, t_max]`.
#[pyfunction]
#[pyo3(signature = (params, t_max, dt = None))]
fn evolve_dde(params: &PyParams, t_max: f64, dt: Option<f64>) -> PyResult<PyTrace> {
    let dt = dt.unwrap_or_else(|| default_step(&params.inner));
    let inner = dynamics::evolve_dde(&params.inner, t_max, dt).map_err(to_py)?;
    Ok(PyTrace { inner })
}

/// Emission spectrum on a grid centred on the atom frequency. Returns
/// `(frequencies_hz, s0, chi)`.
#[pyfunction]
fn spectrum_closed(params: &PyParams, span_hz: f64, points: usize) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Complex64>)> {
    let grid = DetuningGrid::centered(hz_to_angular(span_hz), points).map_err(to_py)?;
    let s = spectrum::spectrum_closed(&params.inner, &grid).map_err(to_py)?;
    let f = (0..s.len()).map(|k| angular_to_hz(s.omega(k))).collect();
    Ok((f, s.s0, s.chi))
}

/// Susceptibility χ(ω) at one frequency.
#[pyfunction]
fn susceptibility(params: &PyParams, omega_hz: f64) -> PyResult<Complex64> {
    spectrum::susceptibility(&params.inner, hz_to_angular(omega_hz)).map_err(to_py)
}

/// Inverse transform of the closed-form spectrum back to an amplitude trace.
#[pyfunction]
fn ift_spectrum(params: &PyParams, span_hz: f64, points: usize) -> PyResult<PyTrace> {
    let grid = DetuningGrid::centered(hz_to_angular(span_hz), points).map_err(to_py)?;
    let s = spectrum::spectrum_closed(&params.inner, &grid).map_err(to_py)?;
    Ok(PyTrace {
        inner: spectrum::ift_spectrum(&s).map_err(to_py)?,
    })
}

/// SAW transmission and reflection amplitudes `(t, r)`.
#[pyfunction]
fn saw_coefficients(params: &PyParams, omega_d_hz: f64) -> (Complex64, Complex64) {
    scattering::saw_coefficients(&params.inner, hz_to_angular(omega_d_hz))
}

#[pyfunction]
fn gate_reflection(params: &PyParams, omega_d_hz: f64) -> PyResult<Complex64> {
    scattering::gate_reflection(&params.inner, hz_to_angular(omega_d_hz)).map_err(to_py)
}

/// Drive frequencies (Hz) in `[lo_hz, hi_hz]` maximally reflected by an
/// atom at `omega01_hz`.
#[pyfunction]
fn drive_for_max_reflection(params: &PyParams, omega01_hz: f64, lo_hz: f64, hi_hz: f64) -> PyResult<Vec<f64>> {
    let roots = model::drive_for_max_reflection(
        &params.inner,
        hz_to_angular(omega01_hz),
        Window::new(hz_to_angular(lo_hz), hz_to_angular(hi_hz)),
    )
    .map_err(to_py)?;
    Ok(roots.into_iter().map(angular_to_hz).collect())
}

/// Fits a normalized spectrum; returns the fit report as a JSON string.
#[pyfunction]
#[pyo3(signature = (frequencies_hz, values, init, free = "all", restarts = 8))]
fn fit_spectrum(
    py: Python<'_>,
    frequencies_hz: Vec<f64>,
    values: Vec<f64>,
    init: &PyParams,
    free: &str,
    restarts: usize,
) -> PyResult<(PyParams, String)> {
    if frequencies_hz.len() != values.len() {
        return Err(PyValueError::new_err("frequencies and values differ in length"));
    }
    let mask: ParamMask = free.parse().map_err(to_py)?;
    let data: Vec<(f64, f64)> = frequencies_hz.iter().map(|f| hz_to_angular(*f)).zip(values).collect();
    let opts = FitOptions {
        restarts,
        ..Default::default()
    };
    let init = init.inner.clone();
    let r = py
        .detach(|| fit::fit_spectrum_with(&data, &init, mask, &opts))
        .map_err(to_py)?;
    let report = r.to_report_json();
    Ok((PyParams { inner: r.params }, report))
}

/// Sound velocity (m/s) from a reflection ridge of `(drive, atom)` pairs.
#[pyfunction]
#[pyo3(signature = (drive_hz, atom_hz, length, init_v = 3000.0))]
fn fit_velocity(py: Python<'_>, drive_hz: Vec<f64>, atom_hz: Vec<f64>, length: f64, init_v: f64) -> PyResult<f64> {
    if drive_hz.len() != atom_hz.len() {
        return Err(PyValueError::new_err("drive and atom axes differ in length"));
    }
    let ridge: Vec<(f64, f64)> = drive_hz
        .iter()
        .zip(&atom_hz)
        .map(|(d, a)| (hz_to_angular(*d), hz_to_angular(*a)))
        .collect();
    let r = py.detach(|| fit::fit_velocity(&ridge, length, init_v)).map_err(to_py)?;
    Ok(r.velocity.unwrap_or(f64::NAN))
}

/// Synthetic ridge `(drive_hz, atom_hz)` across `[lo_hz, hi_hz]`.
#[pyfunction]
fn synthetic_ridge(params: &PyParams, lo_hz: f64, hi_hz: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    fit::synthetic_ridge(&params.inner, hz_to_angular(lo_hz), hz_to_angular(hi_hz), points)
        .into_iter()
        .map(|(d, a)| (angular_to_hz(d), angular_to_hz(a)))
        .unzip()
}

/// Names of the tabulated samples.
#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::NAMES.to_vec()
}

#[pymodule]
fn pygiantatom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(series_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(series_trace, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_dde, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_closed, m)?)?;
    m.add_function(wrap_pyfunction!(susceptibility, m)?)?;
    m.add_function(wrap_pyfunction!(ift_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(saw_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(gate_reflection, m)?)?;
    m.add_function(wrap_pyfunction!(drive_for_max_reflection, m)?)?;
    m.add_function(wrap_pyfunction!(fit_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(fit_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_ridge, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
