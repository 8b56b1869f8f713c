//! Python module `pyjjdyn`: trajectories, classification, sweeps and border
//! dimensions backed by the `jjdyn` crate.

use std::path::PathBuf;

use jjdyn::classifier::{classify, Center, Thresholds};
use jjdyn::dynamics::{self, CircuitParams, PhaseState, DEFAULT_DTAU};
use jjdyn::fractal::{estimate_dimension, extract_border, LabelSet};
use jjdyn::sweep::{self, Axis, GridSpec, Integration, DEFAULT_KAPPA, DEFAULT_TAU_MEASURE, DEFAULT_TAU_TRANSIENT};
use jjdyn::{gridfile, render, AttractorLabel, DynParams};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: jjdyn::Error) -> PyErr {
    match e {
        jjdyn::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn integration(tau_transient: f64, tau_measure: f64, dtau: f64) -> Integration {
    Integration { dtau, tau_transient, tau_measure, retry: true }
}

/// Attractor label of one orbit.
#[pyclass(name = "Label", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyLabel {
    inner: AttractorLabel,
}

#[pymethods]
impl PyLabel {
    /// One of `unstable`, `zero-stable`, `pi-stable`, `cycle`, `unclassified`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner {
            AttractorLabel::Unstable => "unstable",
            AttractorLabel::ZeroStable => "zero-stable",
            AttractorLabel::PiStable => "pi-stable",
            AttractorLabel::NCycle(_) => "cycle",
            AttractorLabel::Unclassified => "unclassified",
        }
    }

    #[getter]
    fn code(&self) -> u8 {
        self.inner.code()
    }

    #[getter]
    fn n(&self) -> Option<u32> {
        self.inner.cycle().map(|c| c.n)
    }

    #[getter]
    fn turning(&self) -> Option<u32> {
        self.inner.cycle().map(|c| c.turning)
    }

    #[getter]
    fn winding(&self) -> Option<u32> {
        self.inner.cycle().map(|c| c.winding)
    }

    #[getter]
    fn period(&self) -> Option<f64> {
        self.inner.cycle().map(|c| c.period)
    }

    /// Phase of the cycle center, 0 or pi.
    #[getter]
    fn center(&self) -> Option<f64> {
        self.inner.cycle().map(|c| c.center.phase())
    }

    fn __repr__(&self) -> String {
        format!("Label({})", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Integrated orbit sampled every `dtau`.
#[pyclass(name = "Trajectory", frozen)]
pub struct PyTrajectory {
    inner: dynamics::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn tau(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|i| self.inner.tau_at(i)).collect()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.phases().collect()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.velocities().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Classify this trajectory as the measurement window.
    fn classify(&self) -> PyResult<PyLabel> {
        classify(&self.inner, &Thresholds::default()).map(|inner| PyLabel { inner }).map_err(err)
    }

    /// Phase-portrait image as binary PPM bytes.
    fn portrait_ppm(&self, size: usize) -> Vec<u8> {
        render::render_portrait(&self.inner, size)
    }
}

/// Dimensionless drive and damping `(eps_bar, kappa)` of a circuit.
#[pyfunction]
#[pyo3(signature = (e_j, c_j1, c_j2, v_g, r=None))]
fn circuit_to_dimensionless(e_j: f64, c_j1: f64, c_j2: f64, v_g: f64, r: Option<f64>) -> PyResult<(f64, f64)> {
    let d = dynamics::to_dimensionless(&CircuitParams { e_j, c_j1, c_j2, v_g, r }).map_err(err)?;
    Ok((d.eps_bar, d.kappa))
}

/// Integrate from `(phi0, v0)` up to `tau_end`, keeping samples from `tau_record`.
#[pyfunction]
#[pyo3(signature = (eps, phi0, v0=0.0, kappa=DEFAULT_KAPPA, tau_end=100.0, dtau=DEFAULT_DTAU, stride=1, tau_record=0.0))]
#[allow(clippy::too_many_arguments)]
fn integrate(
    eps: f64,
    phi0: f64,
    v0: f64,
    kappa: f64,
    tau_end: f64,
    dtau: f64,
    stride: usize,
    tau_record: f64,
) -> PyResult<PyTrajectory> {
    let d = DynParams::new(eps, kappa);
    dynamics::integrate_window(PhaseState::new(phi0, v0), &d, tau_record, tau_end, dtau, stride)
        .map(|inner| PyTrajectory { inner })
        .map_err(err)
}

/// Label of the orbit from `(phi0, v0)`; `phi0` in radians.
#[pyfunction]
#[pyo3(signature = (eps, phi0, v0=0.0, kappa=DEFAULT_KAPPA, tau_transient=DEFAULT_TAU_TRANSIENT, tau_measure=DEFAULT_TAU_MEASURE, dtau=DEFAULT_DTAU))]
fn classify_point(eps: f64, phi0: f64, v0: f64, kappa: f64, tau_transient: f64, tau_measure: f64, dtau: f64) -> PyLabel {
    let integ = integration(tau_transient, tau_measure, dtau);
    PyLabel { inner: sweep::evaluate_point(eps, phi0, v0, kappa, &Thresholds::default(), &integ).label }
}

/// Labelled lattice from a sweep or a grid file.
#[pyclass(name = "Grid", frozen)]
pub struct PyGrid {
    inner: sweep::StabilityGrid,
}

#[pymethods]
impl PyGrid {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.spec.mode.as_str()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.spec.x.values().collect()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.spec.y.values().collect()
    }

    #[getter]
    fn bisection_level(&self) -> u32 {
        self.inner.bisection_level
    }

    /// Label codes, row-major with `x` fastest.
    fn codes(&self) -> Vec<u8> {
        self.inner.codes()
    }

    fn label(&self, ix: usize, iy: usize) -> PyResult<PyLabel> {
        if ix >= self.width() || iy >= self.height() {
            return Err(PyValueError::new_err("cell index out of range"));
        }
        Ok(PyLabel { inner: *self.inner.get(ix, iy) })
    }

    /// Absolute counts per label kind and `{n: (count, percent of cycles)}`.
    fn frequency(&self) -> (Vec<(&'static str, usize)>, Vec<(u32, usize, f64)>) {
        let t = sweep::frequency_table(&self.inner);
        let totals = vec![
            ("unstable", t.unstable),
            ("zero-stable", t.zero_stable),
            ("pi-stable", t.pi_stable),
            ("unclassified", t.unclassified),
            ("cycles", t.cycle_total),
        ];
        (totals, t.cycles.iter().map(|c| (c.n, c.count, c.relative)).collect())
    }

    /// Box-counting dimension of the border of `labels`: `(slope, intercept, r_squared)`.
    fn border_dimension(&self, labels: &str) -> PyResult<(f64, f64, f64)> {
        let set: LabelSet = labels.parse().map_err(err)?;
        let mask = extract_border(&self.inner, &set);
        let (_, est) = estimate_dimension(&mask).map_err(err)?;
        Ok((est.slope, est.intercept, est.r_squared))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        gridfile::write_grid(&path, &self.inner).map_err(err)
    }

    fn image_ppm(&self) -> Vec<u8> {
        render::render_grid(&self.inner)
    }

    /// One bisection refinement.
    #[pyo3(signature = (workers=1))]
    fn refine(&self, workers: usize) -> PyResult<PyGrid> {
        sweep::refine(&self.inner, workers).map(|inner| PyGrid { inner }).map_err(err)
    }
}

fn run_grid(mut spec: GridSpec, kappa: f64, integ: Integration, workers: usize) -> PyResult<PyGrid> {
    spec.kappa = kappa;
    spec.integration = integ;
    sweep::run_sweep(&spec, workers).map(|inner| PyGrid { inner }).map_err(err)
}

/// Stability diagram over `phi0` (radians) and `eps`, each `(min, max, count)`.
#[pyfunction]
#[pyo3(signature = (phi0, eps, v0=0.0, kappa=DEFAULT_KAPPA, tau_transient=DEFAULT_TAU_TRANSIENT, tau_measure=DEFAULT_TAU_MEASURE, dtau=DEFAULT_DTAU, workers=1))]
#[allow(clippy::too_many_arguments)]
fn sweep_eps_phi(
    phi0: (f64, f64, usize),
    eps: (f64, f64, usize),
    v0: f64,
    kappa: f64,
    tau_transient: f64,
    tau_measure: f64,
    dtau: f64,
    workers: usize,
) -> PyResult<PyGrid> {
    let mut spec = GridSpec::eps_phi(Axis::new(phi0.0, phi0.1, phi0.2), Axis::new(eps.0, eps.1, eps.2));
    spec.v0 = v0;
    run_grid(spec, kappa, integration(tau_transient, tau_measure, dtau), workers)
}

/// Basin of attraction over `phi0` (radians) and `v0` at fixed `eps`.
#[pyfunction]
#[pyo3(signature = (eps, phi0, v0, kappa=DEFAULT_KAPPA, tau_transient=DEFAULT_TAU_TRANSIENT, tau_measure=DEFAULT_TAU_MEASURE, dtau=DEFAULT_DTAU, workers=1))]
#[allow(clippy::too_many_arguments)]
fn sweep_basin(
    eps: f64,
    phi0: (f64, f64, usize),
    v0: (f64, f64, usize),
    kappa: f64,
    tau_transient: f64,
    tau_measure: f64,
    dtau: f64,
    workers: usize,
) -> PyResult<PyGrid> {
    let spec = GridSpec::basin(eps, Axis::new(phi0.0, phi0.1, phi0.2), Axis::new(v0.0, v0.1, v0.2));
    run_grid(spec, kappa, integration(tau_transient, tau_measure, dtau), workers)
}

#[pyfunction]
fn load_grid(path: PathBuf) -> PyResult<PyGrid> {
    gridfile::read_grid(&path).map(|inner| PyGrid { inner }).map_err(err)
}

#[pymodule]
fn pyjjdyn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", jjdyn::VERSION)?;
    m.add("DEFAULT_DTAU", DEFAULT_DTAU)?;
    m.add("DEFAULT_KAPPA", DEFAULT_KAPPA)?;
    m.add("CENTER_ZERO", Center::Zero.phase())?;
    m.add("CENTER_PI", Center::Pi.phase())?;
    m.add_class::<PyLabel>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(circuit_to_dimensionless, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(classify_point, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_eps_phi, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_basin, m)?)?;
    m.add_function(wrap_pyfunction!(load_grid, m)?)?;
    Ok(())
}
