//! Python bindings: configuration, channel realizations, the radar-only
//! design, the three rate schemes and Monte-Carlo sweeps.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use noma_radcom::beampattern::{solve_ideal_pattern, steering_vector as core_steering, IdealPatternSolution};
use noma_radcom::benchmarks::Scheme;
use noma_radcom::harness::{self, ExperimentConfig, SchemeReport};
use noma_radcom::scenario::Scenario as CoreScenario;
use noma_radcom::{ComplexVector, HermitianMatrix};

create_exception!(noma_radcom_py, NomaRadcomError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    NomaRadcomError::new_err(e.to_string())
}

fn to_list(v: &ComplexVector) -> Vec<Complex64> {
    v.as_slice().to_vec()
}

fn to_rows(m: &HermitianMatrix) -> Vec<Vec<Complex64>> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Experiment configuration. Keyword arguments override the defaults, using
/// the same keys as the TOML file.
#[pyclass(name = "Config", module = "noma_radcom_py", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(ExperimentConfig::default()).map_err(err)?;
        if let Some(kw) = kwargs {
            let dumps = py.import("json")?.getattr("dumps")?;
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                let text: String = dumps.call1((v,))?.extract()?;
                value[key.as_str()] = serde_json::from_str(&text).map_err(err)?;
            }
        }
        let inner: ExperimentConfig = serde_json::from_value(value).map_err(err)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = ExperimentConfig::from_toml_str(text).map_err(err)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_loads(py, &serde_json::to_string(&self.inner).map_err(err)?)
    }

    /// Channel realization `trial` (seeded with `seed ^ trial`).
    #[pyo3(signature = (trial = 0))]
    fn scenario(&self, trial: usize) -> PyResult<PyScenario> {
        Ok(PyScenario {
            inner: self.inner.scenario(trial).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Config({:?})", self.inner)
    }
}

#[pyclass(name = "Scenario", module = "noma_radcom_py", frozen)]
struct PyScenario {
    inner: CoreScenario,
}

#[pymethods]
impl PyScenario {
    #[getter]
    fn h_r(&self) -> Vec<Complex64> {
        to_list(&self.inner.channels.h_r)
    }

    #[getter]
    fn h_c(&self) -> Vec<Complex64> {
        to_list(&self.inner.channels.h_c)
    }

    #[getter]
    fn n_antennas(&self) -> usize {
        self.inner.params.n_antennas
    }

    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.params.p_max
    }

    /// Grid angles in degrees.
    #[getter]
    fn theta_deg(&self) -> Vec<f64> {
        self.inner.grid.angles().iter().map(|t| t.to_degrees()).collect()
    }

    #[getter]
    fn desired(&self) -> Vec<f64> {
        self.inner.desired.gains.clone()
    }

    fn ideal_pattern(&self) -> PyResult<PyIdealPattern> {
        let s = &self.inner;
        let inner = solve_ideal_pattern(&s.params, &s.grid, &s.desired).map_err(err)?;
        Ok(PyIdealPattern { inner })
    }
}

#[pyclass(name = "IdealPattern", module = "noma_radcom_py", frozen)]
struct PyIdealPattern {
    inner: IdealPatternSolution,
}

#[pymethods]
impl PyIdealPattern {
    #[getter]
    fn delta_star(&self) -> f64 {
        self.inner.delta_star
    }

    #[getter]
    fn delta0(&self) -> f64 {
        self.inner.delta0
    }

    #[getter]
    fn r0(&self) -> Vec<Vec<Complex64>> {
        to_rows(&self.inner.r0)
    }

    /// Beampattern of the radar-only covariance over the scenario grid.
    fn gains(&self, scenario: &PyScenario) -> Vec<f64> {
        scenario.inner.grid.gains(&self.inner.r0)
    }
}

#[pyclass(name = "Report", module = "noma_radcom_py", frozen)]
struct PyReport {
    scheme: Scheme,
    inner: SchemeReport,
    gains: Option<Vec<f64>>,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn scheme(&self) -> &'static str {
        self.scheme.name()
    }

    #[getter]
    fn status(&self) -> PyResult<String> {
        let v = serde_json::to_value(self.inner.status()).map_err(err)?;
        Ok(v.as_str().unwrap_or_default().to_string())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.status() == noma_radcom::noma::RunStatus::Converged
    }

    #[getter]
    fn unicast(&self) -> Option<f64> {
        self.inner.unicast()
    }

    #[getter]
    fn multicast(&self) -> Option<f64> {
        self.inner.multicast()
    }

    #[getter]
    fn mismatch_ratio(&self) -> Option<f64> {
        self.inner.mismatch_ratio()
    }

    /// `(w_m, w_u)` when converged.
    #[getter]
    fn beamformers(&self) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        let bf = match &self.inner {
            SchemeReport::Noma(r) => r.beamformers.as_ref(),
            SchemeReport::Benchmark(r) => r.beamformers.as_ref(),
        }?;
        Some((to_list(&bf.w_m), to_list(&bf.w_u)))
    }

    /// Radar beampattern over the scenario grid when converged.
    #[getter]
    fn gains(&self) -> Option<Vec<f64>> {
        self.gains.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(scheme={}, status={:?}, unicast={:?}, multicast={:?})",
            self.scheme,
            self.inner.status(),
            self.inner.unicast(),
            self.inner.multicast()
        )
    }
}

/// Runs `scheme` (`noma`, `tdma` or `cbf_no_sic`) on one realization.
#[pyfunction]
#[pyo3(signature = (scenario, ideal, scheme = "noma", config = None))]
fn solve(
    py: Python<'_>,
    scenario: &PyScenario,
    ideal: &PyIdealPattern,
    scheme: &str,
    config: Option<PyConfig>,
) -> PyResult<PyReport> {
    let scheme = Scheme::parse(scheme).ok_or_else(|| err(format!("unknown scheme {scheme:?}")))?;
    let penalty = config.map(|c| c.inner).unwrap_or_default().penalty_config();
    let inner = py
        .detach(|| harness::run_scheme(scheme, &scenario.inner, &ideal.inner, &penalty))
        .map_err(err)?;
    let gains = inner.covariance().map(|r| scenario.inner.grid.gains(&r));
    Ok(PyReport { scheme, inner, gains })
}

/// Runs a full sweep, writes its files and returns the manifest as a dict.
#[pyfunction]
fn run_sweep<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let result = py.detach(|| harness::run_sweep(&cfg)).map_err(err)?;
    json_loads(py, &serde_json::to_string(&result).map_err(err)?)
}

/// Array response of an `n`-element uniform linear array toward `theta` (radians).
#[pyfunction]
#[pyo3(signature = (theta, n, d_over_lambda = 0.5))]
fn steering_vector(theta: f64, n: usize, d_over_lambda: f64) -> Vec<Complex64> {
    to_list(&core_steering(theta, n, d_over_lambda))
}

#[pyfunction]
fn format_float(x: f64) -> String {
    harness::format_float(x)
}

#[pymodule]
fn noma_radcom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NomaRadcomError", m.py().get_type::<NomaRadcomError>())?;
    m.add("__version__", harness::version())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyIdealPattern>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(steering_vector, m)?)?;
    m.add_function(wrap_pyfunction!(format_float, m)?)?;
    Ok(())
}
