//! Python bindings for `pno-core`.
//!
//! Structured results come back as plain dicts built from the serde form of
//! the core types.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use pno_core::analysis::{self, BallTiling, ReportInputs, StoppingSpec};
use pno_core::geometry::{self, MomentInputs};
use pno_core::planner::{self, spanner, ConnectionMode};
use pno_core::{oracles, PnoReport};

create_exception!(pno, PnoError, PyException, "Raised for any failure reported by the planner core.");

fn err(e: pno_core::PnoError) -> PyErr {
    PnoError::new_err(format!("{}: {e}", e.category()))
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for pno_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyDict>> {
    let text = serde_json::to_string(v).map_err(|e| PnoError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))?.cast_into::<PyDict>().map_err(Into::into)
}

#[pyclass(name = "Scene", module = "pno", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScene {
    inner: pno_core::Scene,
}

#[pymethods]
impl PyScene {
    /// Parses the JSON scene schema.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyScene { inner: pno_core::Scene::from_json_str(text).py()? })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(PyScene { inner: pno_core::Scene::from_json_file(path).py()? })
    }

    #[staticmethod]
    fn unit_cube(d: usize) -> PyResult<Self> {
        Ok(PyScene { inner: pno_core::Scene::unit_cube(d).py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn free_volume(&self) -> f64 {
        self.inner.free_volume()
    }

    fn is_free(&self, q: Vec<f64>) -> PyResult<bool> {
        self.inner.is_free(&q).py()
    }

    #[pyo3(signature = (a, b, step = 0.01))]
    fn segment_free(&self, a: Vec<f64>, b: Vec<f64>, step: f64) -> PyResult<bool> {
        self.inner.segment_free(&a, &b, step).py()
    }

    fn __repr__(&self) -> String {
        format!("Scene(dim={}, obstacles={})", self.inner.dim(), self.inner.obstacles().len())
    }
}

#[pyclass(name = "PlannerParams", module = "pno", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: planner::PlannerParams,
}

#[pymethods]
impl PyParams {
    /// Defaults the connection constant to the smallest admissible value
    /// for `scene`. Pass `gamma` or `k_constant` to override.
    #[new]
    #[pyo3(signature = (scene, mode = "r-disc", collision_step = 0.01, seed = 0, gamma = None, k_constant = None))]
    fn new(
        scene: &PyScene,
        mode: &str,
        collision_step: f64,
        seed: u64,
        gamma: Option<f64>,
        k_constant: Option<f64>,
    ) -> PyResult<Self> {
        let mode: ConnectionMode = mode.parse().py()?;
        let mut p = planner::PlannerParams::for_scene(&scene.inner, mode, collision_step, seed).py()?;
        if let Some(g) = gamma {
            p.gamma = g;
        }
        if let Some(k) = k_constant {
            p.k_constant = k;
        }
        p.validate(&scene.inner).py()?;
        Ok(PyParams { inner: p })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn k_constant(&self) -> f64 {
        self.inner.k_constant
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode {
            ConnectionMode::RDisc => "r-disc",
            ConnectionMode::KNearest => "k-nearest",
        }
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn collision_step(&self) -> f64 {
        self.inner.collision_step
    }

    fn connection_radius(&self, n: usize, d: usize) -> PyResult<f64> {
        planner::connection_radius(&self.inner, n, d).py()
    }

    fn k_neighbors(&self, n: usize, d: usize) -> PyResult<usize> {
        Ok(planner::k_neighbors(&self.inner, n, d).py()?.k)
    }
}

/// A roadmap bound to the scene and parameters that grew it.
#[pyclass(name = "Roadmap", module = "pno")]
struct PyRoadmap {
    inner: planner::Roadmap,
    scene: pno_core::Scene,
    params: planner::PlannerParams,
}

#[pymethods]
impl PyRoadmap {
    #[new]
    fn new(scene: &PyScene, params: &PyParams) -> Self {
        PyRoadmap {
            inner: planner::Roadmap::for_params(scene.inner.dim(), &params.inner),
            scene: scene.inner.clone(),
            params: params.inner,
        }
    }

    /// Adds samples until the roadmap holds `n` vertices.
    fn grow(&mut self, py: Python<'_>, n: usize) -> PyResult<()> {
        let Self { inner, scene, params } = self;
        py.detach(|| inner.grow(scene, params, n)).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn rejections(&self) -> u64 {
        self.inner.rejections()
    }

    fn vertex(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.len() {
            return Err(pyo3::exceptions::PyIndexError::new_err(i));
        }
        Ok(self.inner.vertex(i).to_vec())
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.vertex(i).to_vec()).collect()
    }

    /// `(u, v, weight)` triples with `u < v`.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges()
    }

    /// Returns a dict with `path`, `vertices`, `length` and `solved`.
    fn query<'py>(&self, py: Python<'py>, start: Vec<f64>, goal: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let res = self.inner.query(&self.scene, &self.params, &start, &goal).py()?;
        to_dict(py, &res)
    }

    /// Greedy t-spanner over the same vertices.
    fn spanner(&self, t: f64) -> PyResult<PyRoadmap> {
        Ok(PyRoadmap { inner: spanner::spanner_filter(&self.inner, t).py()?, scene: self.scene.clone(), params: self.params })
    }

    /// All-pairs stretch of `sub` against this roadmap.
    fn audit_stretch<'py>(&self, py: Python<'py>, sub: &PyRoadmap) -> PyResult<Bound<'py, PyDict>> {
        let a = spanner::audit_stretch(&self.inner, &sub.inner).py()?;
        to_dict(py, &a)
    }
}

#[pyfunction]
#[pyo3(signature = (scene, n, mode = "r-disc", collision_step = 0.01, seed = 0))]
fn build_roadmap(py: Python<'_>, scene: &PyScene, n: usize, mode: &str, collision_step: f64, seed: u64) -> PyResult<PyRoadmap> {
    let params = PyParams::new(scene, mode, collision_step, seed, None, None)?;
    let mut rm = PyRoadmap::new(scene, &params);
    rm.grow(py, n)?;
    Ok(rm)
}

/// Returns `(bound, gamma)`: the admissible lower bound and the default value.
#[pyfunction]
fn gamma_pno(d: usize, free_volume: f64) -> PyResult<(f64, f64)> {
    let g = planner::gamma_pno(d, free_volume).py()?;
    Ok((g.bound, g.gamma))
}

#[pyfunction]
fn connection_radius(gamma: f64, n: f64, d: usize) -> f64 {
    planner::connection_radius_at(gamma, n, d)
}

#[pyfunction]
fn unit_ball_volume(d: usize) -> f64 {
    geometry::unit_ball_volume(d)
}

#[pyfunction]
fn ball_volume(d: usize, r: f64) -> PyResult<f64> {
    geometry::ball_volume(d, r).py()
}

#[pyfunction]
fn sine_power_integral(d: usize) -> f64 {
    geometry::sine_power_integral(d)
}

#[pyfunction]
fn bias_coefficient(d: usize) -> f64 {
    analysis::bias_coefficient(d)
}

/// Closed-form mean and both variance forms of a chained path.
#[pyfunction]
fn path_moments<'py>(py: Python<'py>, d: usize, eps: f64, lam: f64, m: usize) -> PyResult<Bound<'py, PyDict>> {
    let mi = MomentInputs::from_lambda(d, eps, lam, m).py()?;
    let out = PyDict::new(py);
    out.set_item("mean", geometry::path_mean(&mi))?;
    out.set_item("variance", geometry::path_variance_simple(&mi))?;
    out.set_item("variance_full", geometry::path_variance_full(&mi))?;
    out.set_item("segment_mean", geometry::segment_mean(&mi))?;
    out.set_item("segment_second_moment", geometry::segment_second_moment(&mi))?;
    out.set_item("segment_cross_moment", geometry::segment_cross_moment(&mi))?;
    Ok(out)
}

#[pyfunction]
fn coverage_probability(n: u64, m: usize, ball_volume: f64, free_volume: f64) -> PyResult<f64> {
    analysis::coverage_probability(n, m, ball_volume, free_volume).py()
}

/// Ball tiling for a roadmap of `n` samples, as a dict.
#[pyfunction]
#[pyo3(signature = (n, d, free_volume, gamma, i_star, lam = 0.5))]
fn tiling<'py>(py: Python<'py>, n: usize, d: usize, free_volume: f64, gamma: f64, i_star: f64, lam: f64) -> PyResult<Bound<'py, PyDict>> {
    to_dict(py, &analysis::tiling_from_planner(n, d, free_volume, gamma, i_star, lam).py()?)
}

fn tiling_of(eps: f64, lam: f64, i_star: f64) -> PyResult<BallTiling> {
    BallTiling::new(eps, lam, i_star).py()
}

/// Finite-time failure bound for a tiling of spacing `eps`.
#[pyfunction]
#[pyo3(signature = (n, d, free_volume, eps, i_star, delta, lam = 0.5))]
fn pno_bound<'py>(
    py: Python<'py>,
    n: u64,
    d: usize,
    free_volume: f64,
    eps: f64,
    i_star: f64,
    delta: f64,
    lam: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = tiling_of(eps, lam, i_star)?;
    to_dict(py, &analysis::pno_bound(n, &t, delta, d, free_volume).py()?)
}

/// Smallest relative excess achievable at confidence `p_success`.
#[pyfunction]
#[pyo3(signature = (n, d, free_volume, eps, i_star, p_success, lam = 0.5))]
fn delta_bound(n: u64, d: usize, free_volume: f64, eps: f64, i_star: f64, p_success: f64, lam: f64) -> PyResult<f64> {
    let t = tiling_of(eps, lam, i_star)?;
    analysis::delta_bound(n, &t, d, p_success, free_volume).py()
}

#[pyfunction]
fn stopping_iteration<'py>(
    py: Python<'py>,
    eps0: f64,
    delta_des: f64,
    p_des: f64,
    i_star0: f64,
    d: usize,
    free_volume: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = StoppingSpec::new(eps0, delta_des, p_des, i_star0, d).py()?;
    to_dict(py, &analysis::stopping_iteration(&spec, d, free_volume).py()?)
}

#[pyfunction]
fn clearance_iteration(eps0: f64, gamma: f64, d: usize) -> PyResult<u64> {
    analysis::clearance_iteration(eps0, gamma, d).py()
}

/// Full bound report for one planning run.
#[pyfunction]
#[pyo3(signature = (n, d, free_volume, gamma, delta, p_success, i_star, i_n = None, lam = 0.5))]
fn pno_report<'py>(
    py: Python<'py>,
    n: u64,
    d: usize,
    free_volume: f64,
    gamma: f64,
    delta: f64,
    p_success: f64,
    i_star: f64,
    i_n: Option<f64>,
    lam: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = PnoReport::evaluate(&ReportInputs {
        n,
        d,
        free_volume,
        gamma,
        lambda: lam,
        delta,
        p_success,
        i_star,
        i_star_source: analysis::IStarSource::Explicit,
        i_n,
    })
    .py()?;
    to_dict(py, &r)
}

/// Monte Carlo mean and variance of a chained path.
#[pyfunction]
#[pyo3(signature = (d, eps, lam, m = 1, trials = 120_000, seed = 0))]
fn mc_path_stats<'py>(py: Python<'py>, d: usize, eps: f64, lam: f64, m: usize, trials: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let beta = lam * eps;
    let s = py.detach(|| oracles::mc_path_stats(d, eps, beta, m, trials, seed)).py()?;
    to_dict(py, &s)
}

#[pyfunction]
#[pyo3(signature = (scene, centers, beta, n, trials = 10_000, seed = 0))]
fn mc_coverage<'py>(
    py: Python<'py>,
    scene: &PyScene,
    centers: Vec<Vec<f64>>,
    beta: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let est = py.detach(|| oracles::mc_coverage(&scene.inner, &centers, beta, n, trials, seed)).py()?;
    to_dict(py, &est)
}

#[pyfunction]
fn grid_path<'py>(py: Python<'py>, scene: &PyScene, start: Vec<f64>, goal: Vec<f64>, resolution: f64) -> PyResult<Bound<'py, PyDict>> {
    let g = py.detach(|| oracles::grid_path_oracle(&scene.inner, &start, &goal, resolution)).py()?;
    to_dict(py, &g)
}

#[pymodule]
fn pno(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PnoError", m.py().get_type::<PnoError>())?;
    m.add_class::<PyScene>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyRoadmap>()?;
    m.add_function(wrap_pyfunction!(build_roadmap, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_pno, m)?)?;
    m.add_function(wrap_pyfunction!(connection_radius, m)?)?;
    m.add_function(wrap_pyfunction!(unit_ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(sine_power_integral, m)?)?;
    m.add_function(wrap_pyfunction!(bias_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(path_moments, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(tiling, m)?)?;
    m.add_function(wrap_pyfunction!(pno_bound, m)?)?;
    m.add_function(wrap_pyfunction!(delta_bound, m)?)?;
    m.add_function(wrap_pyfunction!(stopping_iteration, m)?)?;
    m.add_function(wrap_pyfunction!(clearance_iteration, m)?)?;
    m.add_function(wrap_pyfunction!(pno_report, m)?)?;
    m.add_function(wrap_pyfunction!(mc_path_stats, m)?)?;
    m.add_function(wrap_pyfunction!(mc_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(grid_path, m)?)?;
    Ok(())
}
