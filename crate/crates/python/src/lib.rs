//! Python bindings: PME laws, transforms, the busy-period maps and the simulator.

use mginf_pme::busy_period::{self, QueueParams};
use mginf_pme::dist_core::{self, PmeParams};
use mginf_pme::laplace;
use mginf_pme::simulator::{self, SimConfig, StopRule};
use mginf_pme::{Error, InversionConfig};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    if e.is_domain() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

fn pme(r: f64) -> PyResult<PmeParams> {
    PmeParams::new(r).map_err(to_py)
}

fn inversion(series: usize, euler: usize, digits: u32) -> PyResult<InversionConfig> {
    InversionConfig::new(series, euler, digits).map_err(to_py)
}

/// Service-time law, built from strings such as "exp:1", "det:1", "pareto:2" or "pme:2".
#[pyclass(frozen, module = "pmebusy")]
struct ServiceModel {
    inner: dist_core::ServiceModel,
}

#[pymethods]
impl ServiceModel {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(ServiceModel {
            inner: spec.parse().map_err(to_py)?,
        })
    }

    fn tail(&self, t: f64) -> f64 {
        self.inner.tail(t)
    }

    fn density(&self, t: f64) -> Option<f64> {
        self.inner.density(t)
    }

    fn integrated_tail(&self, t: f64) -> f64 {
        self.inner.integrated_tail(t)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.inner.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("ServiceModel('{}')", self.inner.label())
    }
}

fn queue(lambda: f64, service: &ServiceModel) -> PyResult<QueueParams> {
    QueueParams::new(lambda, service.inner.clone()).map_err(to_py)
}

#[pyfunction]
pub fn pme_pdf(r: f64, t: f64) -> PyResult<f64> {
    dist_core::pme_pdf(&pme(r)?, t).map_err(to_py)
}

#[pyfunction]
pub fn pme_tail(r: f64, t: f64) -> PyResult<f64> {
    dist_core::pme_tail(&pme(r)?, t).map_err(to_py)
}

/// n-th moment; `inf` when it diverges.
#[pyfunction]
pub fn pme_moment(r: f64, n: u32) -> PyResult<f64> {
    Ok(dist_core::pme_moment(&pme(r)?, n).map_err(to_py)?.to_f64())
}

#[pyfunction]
#[pyo3(signature = (r, n, seed=0))]
pub fn pme_sample(r: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let p = pme(r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist_core::pme_sample(&p, &mut rng)).collect())
}

#[pyfunction]
pub fn pme_lt(r: f64, s: f64) -> PyResult<f64> {
    Ok(laplace::pme_lt(r, s).map_err(to_py)?.value.to_f64())
}

#[pyfunction]
pub fn pme_tail_lt(r: f64, s: f64) -> PyResult<f64> {
    Ok(laplace::pme_tail_lt(r, s).map_err(to_py)?.value.to_f64())
}

#[pyfunction]
pub fn pme_tail_lt_deriv(r: f64, s: f64, n: u32) -> PyResult<f64> {
    Ok(laplace::pme_tail_lt_deriv(r, s, n).map_err(to_py)?.value.to_f64())
}

/// Limit of the n-th derivative at zero; a signed infinity when it diverges.
#[pyfunction]
pub fn pme_tail_lt_deriv_at_zero(r: f64, n: u32) -> PyResult<f64> {
    Ok(laplace::pme_tail_lt_deriv_at_zero(r, n).map_err(to_py)?.value.to_f64())
}

/// Busy-period tail transform u(s).
#[pyfunction]
fn busy_tail_lt(lambda: f64, service: &ServiceModel, s: f64) -> PyResult<f64> {
    busy_period::busy_tail_lt(&queue(lambda, service)?, s).map_err(to_py)
}

#[pyfunction]
fn mean_busy_period(lambda: f64, service: &ServiceModel) -> PyResult<f64> {
    Ok(queue(lambda, service)?.mean_busy_period())
}

/// P(B > t) on `grid` by transform inversion.
#[pyfunction]
#[pyo3(signature = (lambda, service, grid, series=40, euler=14, digits=10))]
fn busy_tail(
    lambda: f64,
    service: &ServiceModel,
    grid: Vec<f64>,
    series: usize,
    euler: usize,
    digits: u32,
) -> PyResult<Vec<f64>> {
    let q = queue(lambda, service)?;
    let cfg = inversion(series, euler, digits)?;
    let tail = busy_period::busy_tail(&q, &grid, &cfg).map_err(to_py)?;
    Ok(tail.curve.values().to_vec())
}

/// Service law behind a PME(r) busy period. Returns a dict with the grid
/// (0 prepended), tail, density, cdf, implied and integrated means.
#[pyfunction]
#[pyo3(signature = (r, lambda, grid, series=40, euler=14, digits=10))]
fn recover_service<'py>(
    py: Python<'py>,
    r: f64,
    lambda: f64,
    grid: Vec<f64>,
    series: usize,
    euler: usize,
    digits: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = inversion(series, euler, digits)?;
    let rec = busy_period::recover_service_from_pme_busy(r, lambda, &grid, &cfg).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("grid", rec.tail.grid().to_vec())?;
    d.set_item("tail", rec.tail.values().to_vec())?;
    d.set_item("density", rec.density)?;
    d.set_item("cdf", rec.cdf)?;
    d.set_item("implied_mean", rec.implied_mean)?;
    d.set_item("integrated_mean", rec.integrated_mean)?;
    d.set_item("excursion", rec.excursion)?;
    Ok(d)
}

/// Simulates `n` busy periods and returns their lengths with summary statistics.
#[pyfunction]
#[pyo3(signature = (lambda, service, n, seed=1))]
fn simulate<'py>(
    py: Python<'py>,
    lambda: f64,
    service: &ServiceModel,
    n: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SimConfig::new(queue(lambda, service)?, StopRule::BusyPeriods(n), seed).map_err(to_py)?;
    let res = simulator::simulate(&cfg);
    let d = PyDict::new(py);
    d.set_item("mean_busy", res.mean_busy())?;
    d.set_item("std_error", res.busy_std_error())?;
    d.set_item("empty_fraction", res.empty_fraction())?;
    d.set_item("rng_draws", res.rng_draws)?;
    d.set_item("busy_lengths", res.busy_lengths)?;
    d.set_item("idle_lengths", res.idle_lengths)?;
    Ok(d)
}

/// Hill-type tail-index estimate from the top k samples.
#[pyfunction]
pub fn tail_index_estimate(samples: Vec<f64>, k: usize) -> PyResult<f64> {
    Ok(simulator::tail_index_estimate(&samples, k).map_err(to_py)?.index)
}

#[pymodule]
fn pmebusy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ServiceModel>()?;
    m.add_function(wrap_pyfunction!(pme_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(pme_tail, m)?)?;
    m.add_function(wrap_pyfunction!(pme_moment, m)?)?;
    m.add_function(wrap_pyfunction!(pme_sample, m)?)?;
    m.add_function(wrap_pyfunction!(pme_lt, m)?)?;
    m.add_function(wrap_pyfunction!(pme_tail_lt, m)?)?;
    m.add_function(wrap_pyfunction!(pme_tail_lt_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(pme_tail_lt_deriv_at_zero, m)?)?;
    m.add_function(wrap_pyfunction!(busy_tail_lt, m)?)?;
    m.add_function(wrap_pyfunction!(mean_busy_period, m)?)?;
    m.add_function(wrap_pyfunction!(busy_tail, m)?)?;
    m.add_function(wrap_pyfunction!(recover_service, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(tail_index_estimate, m)?)?;
    Ok(())
}
