//! Python bindings. Structured results cross the boundary as JSON and come
//! back as plain dicts and lists.

use htest_core::experiments::{self, TrialConfig};
use htest_core::graph::{self, load_graph};
use htest_core::oracle::{GraphOracle, Seed};
use htest_core::pipeline::{self, PipelineOptions, PipelineOrder};
use htest_core::sparsity;
use htest_core::tester;
use htest_core::Error;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// Simple undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "htest", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: graph::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, edges=Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        graph::Graph::from_edges(n, edges)
            .map(|inner| PyGraph { inner })
            .map_err(py_err)
    }

    /// Parses the `n m` header plus edge-lines text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        load_graph(text)
            .map(|inner| PyGraph { inner })
            .map_err(py_err)
    }

    /// One of `triangle`, `p5`, `c4`, `k4`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        experiments::builtin_pattern(name)
            .map(|inner| PyGraph { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown pattern {name:?}")))
    }

    #[staticmethod]
    fn path(k: usize) -> Self {
        PyGraph {
            inner: graph::Graph::path(k),
        }
    }

    #[staticmethod]
    fn cycle(k: usize) -> Self {
        PyGraph {
            inner: graph::Graph::cycle(k),
        }
    }

    #[staticmethod]
    fn complete(k: usize) -> Self {
        PyGraph {
            inner: graph::Graph::complete(k),
        }
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        if v >= self.inner.n() {
            return Err(py_err(Error::VertexOutOfRange {
                vertex: v,
                n: self.inner.n(),
            }));
        }
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.inner.n() && v < self.inner.n() && self.inner.has_edge(u, v)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.edge_count())
    }
}

#[pyfunction]
fn contains_copy(host: &PyGraph, pattern: &PyGraph) -> bool {
    graph::contains_copy(&host.inner, &pattern.inner)
}

/// First copy of `pattern` in `host` as a list of host vertices, or None.
#[pyfunction]
fn find_copy(host: &PyGraph, pattern: &PyGraph) -> Option<Vec<usize>> {
    graph::find_copy(&host.inner, &pattern.inner, &graph::EdgeSet::new())
        .map(|c| c.image().to_vec())
}

/// `(degeneracy, elimination order)`.
#[pyfunction]
fn degeneracy(g: &PyGraph) -> (usize, Vec<usize>) {
    graph::degeneracy(&g.inner)
}

/// `(treedepth, parents)` with `None` marking roots.
#[pyfunction]
fn treedepth(g: &PyGraph) -> PyResult<(usize, Vec<Option<usize>>)> {
    let (td, order) = sparsity::treedepth_exact(&g.inner).map_err(py_err)?;
    Ok((td, order.parents().to_vec()))
}

/// One tester run; returns the verdict as a dict.
#[pyfunction]
#[pyo3(signature = (host, pattern, eps, reps, seed=0, transcript=false))]
fn test_h_freeness<'py>(
    py: Python<'py>,
    host: &PyGraph,
    pattern: &PyGraph,
    eps: f64,
    reps: u64,
    seed: u64,
    transcript: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut oracle = GraphOracle::new(&host.inner, Seed(seed));
    if transcript {
        oracle = oracle.with_transcript();
    }
    let v = tester::test_h_freeness(&mut oracle, &pattern.inner, eps, reps).map_err(py_err)?;
    to_py(py, &serde_json::to_value(v).expect("verdict serializes"))
}

/// Rejection rate over independent trials, as a dict.
#[pyfunction]
#[pyo3(signature = (host, pattern, eps, reps, trials, seed=0, jobs=0))]
#[allow(clippy::too_many_arguments)]
fn estimate_rejection<'py>(
    py: Python<'py>,
    host: &PyGraph,
    pattern: &PyGraph,
    eps: f64,
    reps: u64,
    trials: u64,
    seed: u64,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = TrialConfig {
        eps,
        reps,
        trials,
        seed: Seed(seed),
        jobs,
    };
    let r = py
        .detach(|| experiments::estimate_rejection(&host.inner, &pattern.inner, &cfg))
        .map_err(py_err)?;
    to_py(py, &serde_json::to_value(r).expect("report serializes"))
}

/// `(graph, copies)` for the P5 family with `k` planted paths.
#[pyfunction]
fn gen_p5_family(k: usize) -> PyResult<(PyGraph, Vec<Vec<usize>>)> {
    let inst = experiments::gen_p5_family(k).map_err(py_err)?;
    Ok(split_instance(inst))
}

/// `(graph, copies)` for `m` disjoint copies plus a padding path.
#[pyfunction]
#[pyo3(signature = (pattern, m, pad_path=0))]
fn gen_planted_union(
    pattern: &PyGraph,
    m: usize,
    pad_path: usize,
) -> PyResult<(PyGraph, Vec<Vec<usize>>)> {
    let inst = experiments::gen_planted_union(&pattern.inner, m, pad_path).map_err(py_err)?;
    Ok(split_instance(inst))
}

fn split_instance(inst: experiments::Instance) -> (PyGraph, Vec<Vec<usize>>) {
    let copies = inst
        .certificate
        .map(|c| c.iter().map(|p| p.image().to_vec()).collect())
        .unwrap_or_default();
    (PyGraph { inner: inst.graph }, copies)
}

/// Greedy maximal set of edge-disjoint copies.
#[pyfunction]
fn extract_edge_disjoint_copies(host: &PyGraph, pattern: &PyGraph) -> PyResult<Vec<Vec<usize>>> {
    let set =
        pipeline::extract_edge_disjoint_copies(&host.inner, &pattern.inner).map_err(py_err)?;
    Ok(set.iter().map(|c| c.image().to_vec()).collect())
}

/// Runs the refinement pipeline and returns its stage report as a dict.
#[pyfunction]
#[pyo3(signature = (host, pattern, eps, seed=0, color_restrict=false))]
fn reduce_to_layered<'py>(
    py: Python<'py>,
    host: &PyGraph,
    pattern: &PyGraph,
    eps: f64,
    seed: u64,
    color_restrict: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = PipelineOptions {
        order: if color_restrict {
            PipelineOrder::ColorRestrict
        } else {
            PipelineOrder::Layered
        },
        seed: Seed(seed),
        ..PipelineOptions::default()
    };
    let o = pipeline::reduce_to_layered(&host.inner, &pattern.inner, eps, &opts).map_err(py_err)?;
    let report = json!({
        "stages": o.stages,
        "copies": o.copies.iter().map(|c| c.image().to_vec()).collect::<Vec<_>>(),
        "layers": o.layered.as_ref().map(|l| l.color_of_level()),
    });
    to_py(py, &report)
}

#[pymodule]
fn htest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(contains_copy, m)?)?;
    m.add_function(wrap_pyfunction!(find_copy, m)?)?;
    m.add_function(wrap_pyfunction!(degeneracy, m)?)?;
    m.add_function(wrap_pyfunction!(treedepth, m)?)?;
    m.add_function(wrap_pyfunction!(test_h_freeness, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rejection, m)?)?;
    m.add_function(wrap_pyfunction!(gen_p5_family, m)?)?;
    m.add_function(wrap_pyfunction!(gen_planted_union, m)?)?;
    m.add_function(wrap_pyfunction!(extract_edge_disjoint_copies, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_to_layered, m)?)?;
    Ok(())
}
