//! Python bindings: frameworks, rigidity reports, expansive cones, vertex
//! stars and continued motions.
//!
//! Vectors cross the boundary as lists of floats and matrices as lists of
//! rows. Structured results are returned as plain dictionaries.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use perigid::cones::{
    analyze_star as core_analyze_star, refute_expansive_at_vertex, vertex_star, VectorStar,
};
use perigid::constructions::{
    simplex_framework, stressed_framework, with_edge_orbit, SimplexVariant,
};
use perigid::expansive::{
    classify_flex, expansive_cone, stable_radius, FlexClass, DEFAULT_EXPANSIVE_TOL, DEFAULT_RADIUS,
};
use perigid::io::{framework_from_json, framework_to_json, load_framework, save_framework};
use perigid::motion::{
    audit_expansiveness, continue_motion, export_frames, facet_separation, FrameFormat,
    MotionConfig,
};
use perigid::rigidity::DEFAULT_RANK_TOL;
use perigid::{analyze as core_analyze, Error};
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

fn to_py_err(e: Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else if matches!(e, Error::IndexOutOfRange { .. }) {
        PyIndexError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for perigid::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn vec_out(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn rows_out(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn json_to_py(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A d-periodic bar-and-joint framework.
#[pyclass(name = "Framework", module = "perigid_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFramework {
    inner: perigid::PeriodicFramework,
}

#[pymethods]
impl PyFramework {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyFramework {
            inner: framework_from_json(text).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyFramework {
            inner: load_framework(path).py()?,
        })
    }

    #[staticmethod]
    fn stressed() -> Self {
        PyFramework {
            inner: stressed_framework(),
        }
    }

    /// `variant` is `base`, `enhanced` or `removed:K`.
    #[staticmethod]
    #[pyo3(signature = (dim, variant, regular = false))]
    fn simplex(dim: usize, variant: &str, regular: bool) -> PyResult<Self> {
        let v: SimplexVariant = variant.parse().py()?;
        Ok(PyFramework {
            inner: simplex_framework(dim, v, regular).py()?,
        })
    }

    fn with_edge(&self, tail: &str, head: &str, shift: Vec<i64>) -> PyResult<Self> {
        Ok(PyFramework {
            inner: with_edge_orbit(&self.inner, tail, head, &shift).py()?,
        })
    }

    fn to_json(&self) -> String {
        framework_to_json(&self.inner)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_framework(&self.inner, path).py()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn num_orbits(&self) -> usize {
        self.inner.num_orbits()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_unknowns(&self) -> usize {
        self.inner.num_unknowns()
    }

    #[getter]
    fn orbit_ids(&self) -> Vec<String> {
        self.inner.graph().vertex_orbits.clone()
    }

    /// `(tail, head, shift)` triples by orbit id.
    #[getter]
    fn edges(&self) -> Vec<(String, String, Vec<i64>)> {
        self.inner
            .graph()
            .edge_orbits
            .iter()
            .map(|e| {
                (
                    self.inner.orbit_id(e.tail).to_string(),
                    self.inner.orbit_id(e.head).to_string(),
                    e.shift.clone(),
                )
            })
            .collect()
    }

    #[getter]
    fn positions(&self) -> Vec<Vec<f64>> {
        self.inner
            .placement()
            .positions
            .iter()
            .map(vec_out)
            .collect()
    }

    /// Lattice generators as columns, returned row by row.
    #[getter]
    fn lattice(&self) -> Vec<Vec<f64>> {
        rows_out(&self.inner.placement().lattice)
    }

    #[getter]
    fn edge_lengths(&self) -> Vec<f64> {
        self.inner.edge_lengths().to_vec()
    }

    fn edge_vector(&self, k: usize) -> PyResult<Vec<f64>> {
        Ok(vec_out(&self.inner.edge_vector(k).py()?))
    }

    fn realized_vertex(&self, orbit: &str, shift: Vec<i64>) -> PyResult<Vec<f64>> {
        Ok(vec_out(&self.inner.realized_vertex(orbit, &shift).py()?))
    }

    #[pyo3(signature = (tol = DEFAULT_RANK_TOL))]
    fn analyze(&self, tol: f64) -> PyResult<RigidityReport> {
        Ok(RigidityReport {
            inner: core_analyze(&self.inner, tol).py()?,
        })
    }

    #[pyo3(signature = (radius = DEFAULT_RADIUS, tol = DEFAULT_RANK_TOL))]
    fn cone(&self, radius: usize, tol: f64) -> PyResult<ExpansiveCone> {
        let report = core_analyze(&self.inner, tol).py()?;
        let cone = expansive_cone(&self.inner, &report, radius, tol).py()?;
        let stable = if cone.is_trivial {
            None
        } else {
            stable_radius(&self.inner, &report, radius, tol).py()?
        };
        Ok(ExpansiveCone {
            inner: cone,
            stable_radius: stable,
        })
    }

    /// Cone analysis of the edge vectors at one vertex orbit.
    #[pyo3(signature = (orbit, tol = DEFAULT_RANK_TOL))]
    fn star(&self, py: Python<'_>, orbit: &str, tol: f64) -> PyResult<Py<PyAny>> {
        let star = vertex_star(&self.inner, orbit).py()?;
        let a = core_analyze_star(&star, self.inner.dimension(), tol).py()?;
        json_to_py(py, &a.to_json_value())
    }

    /// `"not_expansive"`, `"weakly_expansive"` or `"effectively_expansive"`.
    #[pyo3(signature = (motion, radius = DEFAULT_RADIUS, tol = DEFAULT_EXPANSIVE_TOL))]
    fn classify_flex(&self, motion: Vec<f64>, radius: usize, tol: f64) -> PyResult<&'static str> {
        let class = classify_flex(&self.inner, &DVector::from_vec(motion), radius, tol).py()?;
        Ok(match class {
            FlexClass::NotExpansive => "not_expansive",
            FlexClass::WeaklyExpansive => "weakly_expansive",
            FlexClass::EffectivelyExpansive => "effectively_expansive",
        })
    }

    /// Continues an infinitesimal flex into a finite motion.
    #[pyo3(signature = (direction, n_steps = 50, step_size = 0.01, newton_tol = 1e-10, rank_tol = DEFAULT_RANK_TOL))]
    fn simulate(
        &self,
        direction: Vec<f64>,
        n_steps: usize,
        step_size: f64,
        newton_tol: f64,
        rank_tol: f64,
    ) -> PyResult<MotionPath> {
        let config = MotionConfig {
            n_steps,
            step_size,
            newton_tol,
            rank_tol,
            ..MotionConfig::default()
        };
        Ok(MotionPath {
            inner: continue_motion(&self.inner, &DVector::from_vec(direction), &config).py()?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Framework(dimension={}, orbits={}, edges={})",
            self.inner.dimension(),
            self.inner.num_orbits(),
            self.inner.num_edges()
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

#[pyclass(module = "perigid_py", frozen)]
pub struct RigidityReport {
    inner: perigid::RigidityReport,
}

#[pymethods]
impl RigidityReport {
    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn dof(&self) -> usize {
        self.inner.dof
    }

    #[getter]
    fn stress_dim(&self) -> usize {
        self.inner.stress_dim()
    }

    #[getter]
    fn flex_basis(&self) -> Vec<Vec<f64>> {
        self.inner.flex_basis.iter().map(vec_out).collect()
    }

    #[getter]
    fn stress_basis(&self) -> Vec<Vec<f64>> {
        self.inner.stress_basis.iter().map(vec_out).collect()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &self.inner.to_json_value())
    }

    fn __repr__(&self) -> String {
        format!(
            "RigidityReport(rank={}, dof={}, stress_dim={})",
            self.inner.rank,
            self.inner.dof,
            self.inner.stress_dim()
        )
    }
}

#[pyclass(module = "perigid_py", frozen)]
pub struct ExpansiveCone {
    inner: perigid::expansive::ExpansiveCone,
    stable_radius: Option<usize>,
}

#[pymethods]
impl ExpansiveCone {
    /// Unit rays in flex coordinates.
    #[getter]
    fn rays(&self) -> Vec<Vec<f64>> {
        self.inner.rays.iter().map(vec_out).collect()
    }

    /// Rays lifted to full motion vectors.
    fn ray_motions(&self) -> Vec<Vec<f64>> {
        self.inner.ray_motions().iter().map(vec_out).collect()
    }

    #[getter]
    fn is_trivial(&self) -> bool {
        self.inner.is_trivial
    }

    #[getter]
    fn radius(&self) -> usize {
        self.inner.radius
    }

    #[getter]
    fn stable_radius(&self) -> Option<usize> {
        self.stable_radius
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &self.inner.to_json_value(self.stable_radius))
    }

    fn __len__(&self) -> usize {
        self.inner.rays.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ExpansiveCone(rays={}, radius={}, stable_radius={:?})",
            self.inner.rays.len(),
            self.inner.radius,
            self.stable_radius
        )
    }
}

#[pyclass(module = "perigid_py", frozen)]
pub struct MotionPath {
    inner: perigid::motion::MotionPath,
}

#[pymethods]
impl MotionPath {
    fn framework(&self, step: usize) -> PyResult<PyFramework> {
        Ok(PyFramework {
            inner: self.inner.framework_at(step).py()?,
        })
    }

    fn positions(&self, step: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.framework(step)?.positions())
    }

    fn lattice(&self, step: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.framework(step)?.lattice())
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn parameter_step(&self) -> f64 {
        self.inner.parameter_step
    }

    fn max_length_drift(&self) -> f64 {
        self.inner.max_length_drift()
    }

    fn reversed(&self) -> MotionPath {
        MotionPath {
            inner: self.inner.reversed(),
        }
    }

    #[pyo3(signature = (radius = DEFAULT_RADIUS, tol = 1e-8))]
    fn audit(&self, py: Python<'_>, radius: usize, tol: f64) -> PyResult<Py<PyAny>> {
        let audit = audit_expansiveness(&self.inner, radius, tol).py()?;
        json_to_py(py, &audit.to_json_value())
    }

    /// Inverse norm of the facet normal sum of the lattice simplex, per step.
    fn facet_separation(&self) -> PyResult<Vec<f64>> {
        facet_separation(&self.inner).py()
    }

    /// Writes OBJ or CSV frames into `directory`; returns the files written.
    #[pyo3(signature = (directory, radius = 1, format = "obj"))]
    fn export_frames(
        &self,
        directory: PathBuf,
        radius: usize,
        format: &str,
    ) -> PyResult<Vec<PathBuf>> {
        let format: FrameFormat = format.parse().py()?;
        export_frames(&self.inner, radius, format, &directory).py()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &self.inner.to_json_value())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("MotionPath(steps={})", self.inner.len())
    }
}

fn star_from(vectors: Vec<Vec<f64>>) -> PyResult<VectorStar> {
    VectorStar::new("star", vectors.into_iter().map(DVector::from_vec).collect()).py()
}

/// Cone analysis of an arbitrary list of vectors.
#[pyfunction]
#[pyo3(signature = (vectors, tol = DEFAULT_RANK_TOL))]
fn analyze_star(py: Python<'_>, vectors: Vec<Vec<f64>>, tol: f64) -> PyResult<Py<PyAny>> {
    let star = star_from(vectors)?;
    let d = star.dimension();
    json_to_py(py, &core_analyze_star(&star, d, tol).py()?.to_json_value())
}

/// True when the vectors admit a strictly positive linear dependence.
#[pyfunction]
#[pyo3(signature = (vectors, tol = DEFAULT_RANK_TOL))]
fn refutes_expansion(vectors: Vec<Vec<f64>>, tol: f64) -> PyResult<bool> {
    refute_expansive_at_vertex(&star_from(vectors)?, tol).py()
}

/// Adds every class, function and constant to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFramework>()?;
    m.add_class::<RigidityReport>()?;
    m.add_class::<ExpansiveCone>()?;
    m.add_class::<MotionPath>()?;
    m.add_function(wrap_pyfunction!(analyze_star, m)?)?;
    m.add_function(wrap_pyfunction!(refutes_expansion, m)?)?;
    m.add("DEFAULT_RANK_TOL", DEFAULT_RANK_TOL)?;
    m.add("DEFAULT_RADIUS", DEFAULT_RADIUS)?;
    Ok(())
}

#[pymodule]
fn perigid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
