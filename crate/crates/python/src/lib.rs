//! Python bindings: graphon constructors and analyses, drum eigenproblems
//! and the Kuramoto experiments.

use graphonlab::cli::exit_code;
use graphonlab::dynamics::{self, ExperimentConfig, IntegrateOptions, KuramotoState, KuramotoSystem};
use graphonlab::fem::{heat_content, BoundaryCondition, ModalDomain, ModeCount};
use graphonlab::geometry::{inscribed_circle, load_drum, DrumId};
use graphonlab::graphon::{self as gr, DiscretizedGraphon, GraphSpec, HeatGraphonSpec, SphereKind};
use graphonlab::Error;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

const SOLVE_TOL: f64 = 1e-9;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match exit_code(&e) {
        1 => PyOSError::new_err(msg),
        2 => PyValueError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn to_py<T>(r: graphonlab::Result<T>) -> PyResult<T> {
    r.map_err(py_err)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    to_py(s.parse())
}

/// Converts a serializable value through JSON into Python objects.
fn json_value<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn mode_count(n_modes: usize, t0: f64) -> ModeCount {
    if n_modes > 0 {
        ModeCount::Fixed(n_modes)
    } else {
        ModeCount::ForTime { t: t0, ratio: dynamics::TRUNCATION_RATIO }
    }
}

/// A discretized graphon: quadrature nodes, probability weights and a
/// symmetric kernel matrix with entries in [0, 1].
#[pyclass(name = "Graphon", module = "graphonlab", frozen)]
struct PyGraphon {
    inner: DiscretizedGraphon,
}

#[pymethods]
impl PyGraphon {
    #[staticmethod]
    #[pyo3(signature = (kind, n, seed = 0))]
    fn sphere(kind: &str, n: usize, seed: u64) -> PyResult<Self> {
        let kind = match kind.to_ascii_lowercase().as_str() {
            "s1" => SphereKind::S1,
            "s3" => SphereKind::S3,
            other => return Err(PyValueError::new_err(format!("unknown sphere `{other}`"))),
        };
        Ok(PyGraphon { inner: to_py(gr::sphere_graphon(kind, n, seed))? })
    }

    #[staticmethod]
    fn constant(n: usize, p: f64) -> PyResult<Self> {
        Ok(PyGraphon { inner: to_py(gr::constant_graphon(n, p))? })
    }

    #[staticmethod]
    fn step(weights: Vec<f64>, blocks: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyGraphon { inner: to_py(gr::step_graphon(weights, blocks))? })
    }

    /// Heat-kernel graphon `H(·, ·, t0) / K` of a drum. `K` defaults to the
    /// maximum heat diagonal over both drums at the same depth.
    #[staticmethod]
    #[pyo3(signature = (drum, bc = "dirichlet", t0 = 0.05, depth = 3, n_modes = 0, k = None, collapse_boundary = false))]
    fn heat(
        py: Python<'_>,
        drum: &str,
        bc: &str,
        t0: f64,
        depth: u32,
        n_modes: usize,
        k: Option<f64>,
        collapse_boundary: bool,
    ) -> PyResult<Self> {
        let drum: DrumId = parse(drum)?;
        let bc: BoundaryCondition = parse(bc)?;
        let g = py.detach(|| -> graphonlab::Result<DiscretizedGraphon> {
            let solve = |d: DrumId| ModalDomain::solve(&load_drum(d, 1.0)?, depth, bc, mode_count(n_modes, t0), SOLVE_TOL);
            let domain = solve(drum)?;
            let k = match k {
                Some(k) => k,
                None => {
                    let other = solve(DrumId::BOTH.into_iter().find(|&d| d != drum).expect("two drums"))?;
                    gr::normalization_k(&[&domain.basis, &other.basis], t0)?
                }
            };
            let spec = HeatGraphonSpec {
                drum,
                bc,
                t0,
                k,
                n_modes: 0,
                collapse_boundary,
            };
            let g = gr::heat_graphon(&spec, &domain)?;
            gr::check_clip_budget(&g)?;
            Ok(g)
        });
        Ok(PyGraphon { inner: to_py(g)? })
    }

    /// Reads `.json` or the binary `.grph` format.
    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        let g = if path.extension().is_some_and(|e| e == "json") {
            DiscretizedGraphon::read_json(&path)
        } else {
            DiscretizedGraphon::read_binary(&path)
        };
        Ok(PyGraphon { inner: to_py(g)? })
    }

    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        if path.extension().is_some_and(|e| e == "json") {
            to_py(self.inner.write_json(&path))
        } else {
            to_py(self.inner.write_binary(&path))
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn nodes(&self) -> Vec<Vec<f64>> {
        self.inner.nodes.clone()
    }

    /// Kernel as a list of rows.
    #[getter]
    fn kernel(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    #[getter]
    fn provenance(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_value(py, &self.inner.provenance)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graphon({} nodes, {})", self.inner.n(), self.inner.provenance.label())
    }

    /// Top-`k` eigenvalues by magnitude.
    #[pyo3(signature = (k = 10))]
    fn spectrum(&self, py: Python<'_>, k: usize) -> PyResult<Vec<f64>> {
        Ok(to_py(py.detach(|| gr::spectrum(&self.inner, k)))?.eigenvalues)
    }

    fn degrees(&self) -> Vec<f64> {
        gr::degrees(&self.inner)
    }

    fn rw_distance(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.n() || j >= self.inner.n() {
            return Err(PyValueError::new_err("node index out of range"));
        }
        Ok(gr::rw_distance(&self.inner, i, j))
    }

    /// Node pairs with `r_W < rel · mean(r_W)`.
    #[pyo3(signature = (rel = 1e-4, seed = 0))]
    fn twin_scan(&self, py: Python<'_>, rel: f64, seed: u64) -> PyResult<Vec<(usize, usize)>> {
        Ok(to_py(py.detach(|| gr::twin_scan_relative(&self.inner, rel, seed)))?.pairs)
    }

    /// `Σ λ^k`.
    fn cycle_trace(&self, k: u32) -> f64 {
        gr::cycle_trace(&self.inner, k)
    }

    /// Monte Carlo `t(F, W)` as `(estimate, standard error)`. `c2` is the
    /// closed walk of length 2.
    #[pyo3(signature = (graph, samples = 1_000_000, seed = 0))]
    fn hom_density(&self, py: Python<'_>, graph: &str, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let est = py.detach(|| {
            if graph.eq_ignore_ascii_case("c2") {
                gr::closed_walk_density(2, &self.inner, samples, seed)
            } else {
                gr::hom_density(&GraphSpec::from_name(graph)?, &self.inner, samples, seed)
            }
        });
        let est = to_py(est)?;
        Ok((est.estimate, est.std_error))
    }

    fn hom_density_exact(&self, graph: &str) -> PyResult<f64> {
        to_py(GraphSpec::from_name(graph).and_then(|f| gr::hom_density_exact(&f, &self.inner)))
    }

    /// `(lower, upper)` bounds on the cut norm.
    #[pyo3(signature = (seed = 0))]
    fn cut_norm(&self, py: Python<'_>, seed: u64) -> (f64, f64) {
        let b = py.detach(|| gr::cut_norm_bounds(&self.inner, seed));
        (b.lower, b.upper)
    }

    /// Heuristic cut-distance upper bound to another graphon with the same
    /// weights.
    #[pyo3(signature = (other, seed = 0))]
    fn cut_distance(&self, py: Python<'_>, other: &PyGraphon, seed: u64) -> PyResult<f64> {
        Ok(to_py(py.detach(|| gr::cut_distance_upper(&self.inner, &other.inner, seed)))?.value)
    }

    /// Eigenvalues of the linearized Kuramoto operator about a phase profile
    /// (constant when omitted), descending.
    #[pyo3(signature = (profile = None))]
    fn stability(&self, py: Python<'_>, profile: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let r = py.detach(|| dynamics::linearized_operator(&self.inner, profile.as_deref(), 40));
        Ok(to_py(r)?.eigenvalues)
    }

    /// RK4 Kuramoto trajectory as `(times, order_parameter, final_phases)`.
    #[pyo3(signature = (thetas, omegas, dt = 1e-2, t_end = 10.0, stride = 10))]
    fn simulate(
        &self,
        py: Python<'_>,
        thetas: Vec<f64>,
        omegas: Vec<f64>,
        dt: f64,
        t_end: f64,
        stride: usize,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let system = to_py(KuramotoSystem::new(self.inner.clone(), omegas))?;
        let opts = IntegrateOptions {
            dt,
            t_end,
            stride,
            ..IntegrateOptions::default()
        };
        let traj = to_py(py.detach(|| dynamics::integrate(&system, &KuramotoState { t: 0.0, thetas }, opts)))?;
        let last = traj.last().thetas;
        Ok((traj.times, traj.order, last))
    }
}

/// Laplace eigenpairs of one drum.
#[pyclass(name = "DrumModes", module = "graphonlab", frozen)]
struct PyDrumModes {
    inner: ModalDomain,
}

#[pymethods]
impl PyDrumModes {
    #[new]
    #[pyo3(signature = (drum, bc = "dirichlet", depth = 3, n_modes = 20))]
    fn new(py: Python<'_>, drum: &str, bc: &str, depth: u32, n_modes: usize) -> PyResult<Self> {
        let drum: DrumId = parse(drum)?;
        let bc: BoundaryCondition = parse(bc)?;
        let modes = if n_modes == 0 { ModeCount::All } else { ModeCount::Fixed(n_modes) };
        let inner = py.detach(|| ModalDomain::solve(&load_drum(drum, 1.0)?, depth, bc, modes, SOLVE_TOL));
        Ok(PyDrumModes { inner: to_py(inner)? })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.basis.lambdas.clone()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.basis.measure
    }

    /// Heat content `w(x, t)` at every mesh vertex.
    fn heat_content(&self, t: f64) -> PyResult<Vec<f64>> {
        Ok(to_py(heat_content(&self.inner.basis, t))?.values)
    }

    /// Mode values at a point.
    fn eigenfunctions_at(&self, x: f64, y: f64) -> PyResult<Vec<f64>> {
        to_py(self.inner.modes_at([x, y]))
    }

    /// `−4t log H(x, y, t)`, which tends to `|x − y|²` as `t → 0` for visible
    /// pairs.
    fn varadhan(&self, x: (f64, f64), y: (f64, f64), t: f64) -> PyResult<f64> {
        Ok(to_py(gr::varadhan_estimate(&self.inner, [x.0, x.1], [y.0, y.1], t))?.value)
    }
}

/// Radius of the largest inscribed circle of a drum with unit legs.
fn inscribed_radius(drum: &str) -> PyResult<f64> {
    let drum: DrumId = parse(drum)?;
    Ok(to_py(load_drum(drum, 1.0).and_then(|p| inscribed_circle(&p)))?.radius)
}

#[pyfunction(name = "inscribed_radius")]
fn py_inscribed_radius(drum: &str) -> PyResult<f64> {
    inscribed_radius(drum)
}

/// Max-degree gap between the two drums over a `t0` sweep. Returns the
/// report as plain dictionaries.
#[pyfunction]
#[pyo3(signature = (bc = "dirichlet", t0 = None, depth = 4, n_modes = 0))]
fn degree_gap(py: Python<'_>, bc: &str, t0: Option<Vec<f64>>, depth: u32, n_modes: usize) -> PyResult<Py<PyAny>> {
    let mut cfg = ExperimentConfig {
        bc: parse(bc)?,
        depth,
        n_modes,
        ..ExperimentConfig::default()
    };
    if let Some(t0) = t0 {
        cfg.t0_sweep = t0;
    }
    let report = to_py(py.detach(|| dynamics::run_degree_gap(&cfg)))?;
    json_value(py, &report)
}

#[pymodule]
#[pyo3(name = "graphonlab")]
fn graphonlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraphon>()?;
    m.add_class::<PyDrumModes>()?;
    m.add_function(wrap_pyfunction!(py_inscribed_radius, m)?)?;
    m.add_function(wrap_pyfunction!(degree_gap, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
