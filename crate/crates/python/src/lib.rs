//! Python module `gapstab`. Results come back as plain dicts.

use gapstab_cli::suites::{run_suite, Suite, SuiteConfig};
use gapstab_cli::{code_summary as summarize, kappa_command};
use gapstab_core::codes::LinearCode;
use gapstab_core::games::{game_from_code, honest_strategy, value_with, ValueMode};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Spectral-gap constant of a measure, e.g. `kappa("cyclic:5", "1/2,1/4,0,0,1/4")`.
/// Without weights the measure is uniform.
#[pyfunction]
#[pyo3(signature = (group, weights=None))]
fn kappa(py: Python<'_>, group: &str, weights: Option<&str>) -> PyResult<Py<PyAny>> {
    let r = kappa_command(Some(group), weights, None, None).map_err(value_err)?;
    to_py(py, &r)
}

/// Parameters, distance and both gap values of the code with the given
/// generator rows over `F_q`.
#[pyfunction]
#[pyo3(signature = (rows, q=2))]
fn code_summary(py: Python<'_>, rows: Vec<Vec<u32>>, q: u64) -> PyResult<Py<PyAny>> {
    let mut c = LinearCode::over(q, rows).map_err(value_err)?;
    to_py(py, &summarize(&mut c).map_err(value_err)?)
}

/// Value of the honest strategy on the game built from a binary code and
/// itself, by both evaluation routes.
#[pyfunction]
fn honest_code_game_value(rows: Vec<Vec<u32>>) -> PyResult<(f64, f64)> {
    let mut c = LinearCode::over(2, rows).map_err(value_err)?;
    let mut c2 = c.clone();
    let g = game_from_code(&mut c, &mut c2).map_err(value_err)?;
    let s = honest_strategy(&g).map_err(value_err)?;
    let v = |m| value_with(&g, &s, m).map_err(value_err);
    Ok((v(ValueMode::Shortcut)?, v(ValueMode::Direct)?))
}

/// Runs a verification suite and returns its summary and CSV rows.
#[pyfunction]
#[pyo3(signature = (suite, trials=20, seed=0))]
fn verify(py: Python<'_>, suite: &str, trials: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let s = Suite::all()
        .into_iter()
        .find(|s| s.name() == suite)
        .ok_or_else(|| PyValueError::new_err(format!("unknown suite {suite:?}")))?;
    let cfg = SuiteConfig {
        seed,
        trials,
        ..SuiteConfig::default()
    };
    let r = py
        .detach(|| run_suite(s, &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let csv = r
        .to_csv()
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary = serde_json::json!({
        "suite": s.name(),
        "passed": r.passed(),
        "failures": r.failures,
        "rows": r.rows.len(),
        "worst_ratio": r.worst_ratio,
        "constant": r.constant,
        "notes": r.notes,
        "csv": csv,
    });
    to_py(py, &summary)
}

#[pymodule]
fn gapstab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(code_summary, m)?)?;
    m.add_function(wrap_pyfunction!(honest_code_game_value, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("SUITES", Suite::all().map(|s| s.name()).to_vec())?;
    Ok(())
}
