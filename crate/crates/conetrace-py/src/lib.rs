//! Python bindings: surfaces, enumeration, diffraction coefficients,
//! singularity prediction, spectral comparison, and band reports.
//! Structured results cross the boundary as plain dicts/lists (via JSON),
//! so the Python side needs no wrapper classes.

use conetrace_core as core;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let json = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let loads = py.import_bound("json")?.getattr("loads")?;
    Ok(loads.call1((json,))?.unbind())
}

fn parse_surface(spec_json: &str) -> PyResult<core::ConeGraph> {
    let spec: core::SurfaceSpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    spec.to_graph().map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Build a surface from its JSON description and return the cone graph as a
/// dict (cone points with circumferences, segments with link coordinates).
#[pyfunction]
fn build_surface(py: Python<'_>, spec_json: &str) -> PyResult<PyObject> {
    let graph = parse_surface(spec_json)?;
    to_py(py, &graph)
}

/// Closed-form diffraction coefficient; returns a complex number.
#[pyfunction]
fn diffraction_coefficient(alpha: f64, theta_in: f64, theta_out: f64) -> PyResult<Complex64> {
    core::diffraction_coefficient_closed(alpha, theta_in, theta_out)
        .map(|d| d.value)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Abel-damped mode-sum evaluation of the same coefficient.
#[pyfunction]
fn diffraction_coefficient_mode_sum(
    alpha: f64,
    theta_in: f64,
    theta_out: f64,
) -> PyResult<Complex64> {
    core::abel_mode_sum_circle(
        alpha,
        theta_in,
        theta_out,
        &core::DEFAULT_DAMPING_SCHEDULE,
        1e-6,
    )
    .map(|d| d.value)
    .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// True unless the cone angle is 2 pi / N (vanishing coefficient).
#[pyfunction]
fn is_diffractive_cone(alpha: f64) -> bool {
    core::is_diffractive_cone(alpha)
}

/// Enumerate closed chains up to the length/diffraction bounds; list of dicts.
#[pyfunction]
#[pyo3(signature = (spec_json, max_length, max_diffractions = 8))]
fn enumerate_chains(
    py: Python<'_>,
    spec_json: &str,
    max_length: f64,
    max_diffractions: usize,
) -> PyResult<PyObject> {
    let graph = parse_surface(spec_json)?;
    let chains = core::enumerate_closed_chains(
        &graph,
        max_length,
        max_diffractions,
        core::DEFAULT_NODE_BUDGET,
    )
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &chains)
}

/// Sorted diffractive length spectrum entries; list of dicts.
#[pyfunction]
#[pyo3(signature = (spec_json, max_length, max_diffractions = 8))]
fn length_spectrum(
    py: Python<'_>,
    spec_json: &str,
    max_length: f64,
    max_diffractions: usize,
) -> PyResult<PyObject> {
    let graph = parse_surface(spec_json)?;
    let (entries, _) = core::dlspec(
        &graph,
        max_length,
        max_diffractions,
        core::DEFAULT_NODE_BUDGET,
    )
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &entries)
}

/// Predicted wave-trace singularities; dict with predictions and skips.
#[pyfunction]
#[pyo3(signature = (spec_json, max_length, max_diffractions = 8, dimension = 2))]
fn predict_singularities(
    py: Python<'_>,
    spec_json: &str,
    max_length: f64,
    max_diffractions: usize,
    dimension: u32,
) -> PyResult<PyObject> {
    let graph = parse_surface(spec_json)?;
    let chains = core::enumerate_closed_chains(
        &graph,
        max_length,
        max_diffractions,
        core::DEFAULT_NODE_BUDGET,
    )
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let (predictions, skipped) =
        core::predict_singularities(&graph, &chains, dimension, core::CutoffSpec::default());
    to_py(py, &serde_json::json!({"predictions": predictions, "skipped": skipped}))
}

/// Gaussian-smoothed trace of a frequency list on a time grid;
/// returns a list of (re, im) pairs.
#[pyfunction]
fn smoothed_trace(
    py: Python<'_>,
    frequencies: Vec<f64>,
    sigma: f64,
    t_grid: Vec<f64>,
) -> PyResult<PyObject> {
    let freqs = core::FrequencyList::new(frequencies, "python");
    let trace = core::smoothed_trace(&freqs, sigma, &t_grid)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &trace)
}

/// Detect peaks of a smoothed trace and match them against predictions.
#[pyfunction]
fn compare_spectrum(
    py: Python<'_>,
    frequencies: Vec<f64>,
    sigma: f64,
    t_grid: Vec<f64>,
    predictions: Vec<f64>,
    prominence: f64,
) -> PyResult<PyObject> {
    let freqs = core::FrequencyList::new(frequencies, "python");
    let trace = core::smoothed_trace(&freqs, sigma, &t_grid)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let peaks = core::detect_peaks(&trace, prominence)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = core::compare_with_prediction(&peaks, &predictions, sigma);
    to_py(py, &report)
}

/// Exact frequencies of the doubled unit square up to lambda_max.
#[pyfunction]
fn doubled_unit_square_frequencies(lambda_max: f64) -> Vec<f64> {
    core::doubled_unit_square_frequencies(lambda_max).frequencies
}

/// Resonance band report for a positioned configuration; dict.
#[pyfunction]
#[pyo3(signature = (spec_json, epsilon, dimension = 2))]
fn optimal_band(
    py: Python<'_>,
    spec_json: &str,
    epsilon: f64,
    dimension: u32,
) -> PyResult<PyObject> {
    let graph = parse_surface(spec_json)?;
    let report = core::optimal_band(&graph, dimension, epsilon)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &report)
}

/// Membership test for the logarithmic resonance region.
#[pyfunction]
fn bawu_region_contains(rho: f64, re: f64, im: f64) -> PyResult<bool> {
    core::bawu_region_contains(rho, Complex64::new(re, im))
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn conetrace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(build_surface, m)?)?;
    m.add_function(wrap_pyfunction!(diffraction_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(diffraction_coefficient_mode_sum, m)?)?;
    m.add_function(wrap_pyfunction!(is_diffractive_cone, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_chains, m)?)?;
    m.add_function(wrap_pyfunction!(length_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(predict_singularities, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_trace, m)?)?;
    m.add_function(wrap_pyfunction!(compare_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(doubled_unit_square_frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_band, m)?)?;
    m.add_function(wrap_pyfunction!(bawu_region_contains, m)?)?;
    Ok(())
}
