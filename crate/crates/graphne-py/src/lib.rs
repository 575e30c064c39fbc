//! Python bindings: graphs, affinities, the two optimizers, and the
//! evaluation metrics, importable as `_graphne`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: graphne::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn labels_from_vec(labels: Vec<usize>) -> PyResult<graphne::LabelSet> {
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    graphne::LabelSet::new(labels, classes).map_err(err)
}

/// Undirected simple graph in CSR form.
#[pyclass(frozen, name = "Graph")]
struct PyGraph {
    inner: graphne::Graph,
}

#[pymethods]
impl PyGraph {
    /// Parse an edge-list document ("u v" per line, '#' comments).
    #[staticmethod]
    fn parse_edge_list(text: &str) -> PyResult<PyGraph> {
        Ok(PyGraph {
            inner: graphne::parse_edge_list(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<PyGraph> {
        Ok(PyGraph {
            inner: graphne::Graph::from_edges(n, &edges, None).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees().to_vec()
    }

    #[getter]
    fn original_ids(&self) -> Vec<u64> {
        self.inner.original_ids().to_vec()
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<usize>> {
        if node >= self.inner.n() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.inner.neighbors(node).to_vec())
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    /// Induced subgraph on the largest connected component plus the
    /// old-to-new index map (None for dropped nodes).
    fn largest_connected_component(&self) -> PyResult<(PyGraph, Vec<Option<usize>>)> {
        let (g, _, map) = graphne::largest_connected_component(&self.inner, None).map_err(err)?;
        Ok((PyGraph { inner: g }, map))
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.num_edges())
    }
}

/// Symmetric sparse affinity matrix with unit total mass.
#[pyclass(frozen, name = "Affinity")]
struct PyAffinity {
    inner: graphne::SparseAffinity,
}

#[pymethods]
impl PyAffinity {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    /// Stored upper-triangular entries (i, j, p_ij).
    fn entries(&self) -> Vec<(usize, usize, f64)> {
        self.inner.entries().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Affinity(n={}, entries={})", self.inner.n(), self.inner.entries().len())
    }
}

/// Dense n x d coordinates tagged with their similarity metric.
#[pyclass(frozen, name = "Embedding")]
struct PyEmbedding {
    inner: graphne::Embedding,
}

impl PyEmbedding {
    fn metric_of(s: &str) -> PyResult<graphne::Metric> {
        s.parse().map_err(err)
    }
}

#[pymethods]
impl PyEmbedding {
    #[new]
    #[pyo3(signature = (coords, metric = "euclidean"))]
    fn new(coords: Vec<Vec<f64>>, metric: &str) -> PyResult<PyEmbedding> {
        let n = coords.len();
        let d = coords.first().map_or(0, |r| r.len());
        if coords.iter().any(|r| r.len() != d) {
            return Err(PyValueError::new_err("ragged coordinate rows"));
        }
        let flat: Vec<f64> = coords.concat();
        Ok(PyEmbedding {
            inner: graphne::Embedding::new(n, d, flat, PyEmbedding::metric_of(metric)?)
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyEmbedding> {
        Ok(PyEmbedding {
            inner: graphne::Embedding::parse(text).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn metric(&self) -> String {
        self.inner.metric().to_string()
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.n() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.row(i).to_vec())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    fn to_file_string(&self) -> String {
        self.inner.to_file_string()
    }

    fn write_file(&self, path: &str) -> PyResult<()> {
        self.inner.write_file(path).map_err(err)
    }

    #[staticmethod]
    fn read_file(path: &str) -> PyResult<PyEmbedding> {
        Ok(PyEmbedding {
            inner: graphne::Embedding::read_file(path).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Embedding(n={}, d={}, metric={})",
            self.inner.n(),
            self.inner.d(),
            self.inner.metric()
        )
    }
}

/// Sample a stochastic block model graph; labels are block indices.
#[pyfunction]
#[pyo3(signature = (block_sizes, p_in, p_out, seed = 0))]
fn sbm_generate(
    block_sizes: Vec<usize>,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> PyResult<(PyGraph, Vec<usize>)> {
    let (g, labels) = graphne::sbm_generate(&block_sizes, p_in, p_out, seed).map_err(err)?;
    Ok((PyGraph { inner: g }, labels.labels().to_vec()))
}

/// Exact Euclidean kNN graph, union-symmetrized.
#[pyfunction]
fn knn_graph(vectors: Vec<Vec<f64>>, k: usize) -> PyResult<PyGraph> {
    let vs = graphne::VectorSet::from_rows(&vectors).map_err(err)?;
    Ok(PyGraph {
        inner: graphne::knn_graph(&vs, k).map_err(err)?,
    })
}

/// Label-file parsing against a graph's original ids; returns dense labels.
#[pyfunction]
fn parse_label_file(text: &str, graph: &PyGraph) -> PyResult<Vec<usize>> {
    let labels = graphne::parse_label_file(text, &graph.inner).map_err(err)?;
    Ok(labels.labels().to_vec())
}

#[pyfunction]
fn degree_normalized_affinity(graph: &PyGraph) -> PyResult<PyAffinity> {
    Ok(PyAffinity {
        inner: graphne::degree_normalized_affinity(&graph.inner).map_err(err)?,
    })
}

#[pyfunction]
fn global_normalized_affinity(graph: &PyGraph) -> PyResult<PyAffinity> {
    Ok(PyAffinity {
        inner: graphne::global_normalized_affinity(&graph.inner).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (graph, d, seed = 0))]
fn laplacian_eigenmaps(graph: &PyGraph, d: usize, seed: u64) -> PyResult<PyEmbedding> {
    Ok(PyEmbedding {
        inner: graphne::laplacian_eigenmaps(&graph.inner, d, seed).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (n, d, seed = 0))]
fn random_init(n: usize, d: usize, seed: u64) -> PyResult<PyEmbedding> {
    Ok(PyEmbedding {
        inner: graphne::random_init(n, d, seed).map_err(err)?,
    })
}

#[pyfunction]
fn rescale_init(embedding: &PyEmbedding, target_std: f64) -> PyResult<PyEmbedding> {
    Ok(PyEmbedding {
        inner: graphne::rescale_init(&embedding.inner, target_std).map_err(err)?,
    })
}

/// Exact KL divergence between the affinities and the layout's Cauchy kernel.
#[pyfunction]
fn kl_loss(affinity: &PyAffinity, embedding: &PyEmbedding) -> PyResult<f64> {
    graphne::kl_loss(&affinity.inner, &embedding.inner).map_err(err)
}

/// Non-normalized pair similarity ("cosine" or "cauchy" kernel).
#[pyfunction]
#[pyo3(signature = (a, b, kernel = "cosine", tau = 0.05))]
fn pair_similarity(a: Vec<f64>, b: Vec<f64>, kernel: &str, tau: f64) -> PyResult<f64> {
    graphne::pair_similarity(&a, &b, parse_kernel(kernel)?, tau).map_err(err)
}

fn parse_kernel(kernel: &str) -> PyResult<graphne::CneKernel> {
    match kernel {
        "cosine" => Ok(graphne::CneKernel::CosineTemperature),
        "cauchy" => Ok(graphne::CneKernel::Cauchy),
        other => Err(PyValueError::new_err(format!("unknown kernel {other:?}"))),
    }
}

/// Graph t-SNE: momentum gradient descent on the KL loss.
#[pyfunction]
#[pyo3(signature = (
    affinity, init, *, total_iters = 750, exaggeration_iters = 250,
    exaggeration_factor = 12.0, learning_rate = None, bh_theta = 0.5,
    exact_threshold = 5000, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn run_tsne(
    affinity: &PyAffinity,
    init: &PyEmbedding,
    total_iters: usize,
    exaggeration_iters: usize,
    exaggeration_factor: f64,
    learning_rate: Option<f64>,
    bh_theta: f64,
    exact_threshold: usize,
    seed: u64,
) -> PyResult<PyEmbedding> {
    let params = graphne::TsneParams {
        total_iters,
        exaggeration_iters,
        exaggeration_factor,
        learning_rate,
        bh_theta,
        exact_threshold,
        seed,
        ..graphne::TsneParams::default()
    };
    Ok(PyEmbedding {
        inner: graphne::run_tsne(&affinity.inner, &init.inner, &params).map_err(err)?,
    })
}

/// Graph CNE: Adam on the InfoNCE loss over graph edges. Returns the
/// embedding and per-epoch (epoch, mean_loss, tau) stats.
#[pyfunction]
#[pyo3(signature = (
    graph, init, *, kernel = "cosine", tau = 0.05, learnable_tau = false,
    epochs = 100, batch_pairs = None, negatives = None, adam_lr = 1e-3, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn run_cne(
    graph: &PyGraph,
    init: &PyEmbedding,
    kernel: &str,
    tau: f64,
    learnable_tau: bool,
    epochs: usize,
    batch_pairs: Option<usize>,
    negatives: Option<usize>,
    adam_lr: f64,
    seed: u64,
) -> PyResult<(PyEmbedding, Vec<(usize, f64, f64)>)> {
    let params = graphne::CneParams {
        d: init.inner.d(),
        kernel: parse_kernel(kernel)?,
        tau,
        learnable_tau,
        epochs,
        batch_pairs,
        negatives,
        adam_lr,
        seed,
        ..graphne::CneParams::default()
    };
    let (emb, stats) = graphne::run_cne(&graph.inner, &params, &init.inner).map_err(err)?;
    Ok((
        PyEmbedding { inner: emb },
        stats.iter().map(|s| (s.epoch, s.mean_loss, s.tau)).collect(),
    ))
}

/// Average fraction of graph neighbors recovered among each node's nearest
/// embedding neighbors.
#[pyfunction]
fn neighbor_recall(graph: &PyGraph, embedding: &PyEmbedding) -> PyResult<f64> {
    graphne::neighbor_recall(&graph.inner, &embedding.inner).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (embedding, labels, seed = 0, k = 10, train_fraction = 0.9))]
fn knn_accuracy(
    embedding: &PyEmbedding,
    labels: Vec<usize>,
    seed: u64,
    k: usize,
    train_fraction: f64,
) -> PyResult<f64> {
    let labels = labels_from_vec(labels)?;
    let split = graphne::make_split(embedding.inner.n(), train_fraction, seed).map_err(err)?;
    graphne::knn_accuracy(&embedding.inner, &labels, &split, k).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (embedding, labels, seed = 0, train_fraction = 0.9))]
fn linear_accuracy(
    embedding: &PyEmbedding,
    labels: Vec<usize>,
    seed: u64,
    train_fraction: f64,
) -> PyResult<f64> {
    let labels = labels_from_vec(labels)?;
    let split = graphne::make_split(embedding.inner.n(), train_fraction, seed).map_err(err)?;
    graphne::linear_accuracy(&embedding.inner, &labels, &split).map_err(err)
}

/// All three metrics with a fresh 90/10 split; returns
/// (recall, knn_accuracy, linear_accuracy).
#[pyfunction]
#[pyo3(signature = (graph, embedding, labels, seed = 0))]
fn evaluate(
    graph: &PyGraph,
    embedding: &PyEmbedding,
    labels: Vec<usize>,
    seed: u64,
) -> PyResult<(f64, f64, f64)> {
    let labels = labels_from_vec(labels)?;
    let report = graphne::evaluate(&graph.inner, &embedding.inner, &labels, seed).map_err(err)?;
    Ok((report.recall, report.knn_accuracy, report.linear_accuracy))
}

#[pymodule]
fn _graphne(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyAffinity>()?;
    m.add_class::<PyEmbedding>()?;
    m.add_function(wrap_pyfunction!(sbm_generate, m)?)?;
    m.add_function(wrap_pyfunction!(knn_graph, m)?)?;
    m.add_function(wrap_pyfunction!(parse_label_file, m)?)?;
    m.add_function(wrap_pyfunction!(degree_normalized_affinity, m)?)?;
    m.add_function(wrap_pyfunction!(global_normalized_affinity, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian_eigenmaps, m)?)?;
    m.add_function(wrap_pyfunction!(random_init, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_init, m)?)?;
    m.add_function(wrap_pyfunction!(kl_loss, m)?)?;
    m.add_function(wrap_pyfunction!(pair_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(run_tsne, m)?)?;
    m.add_function(wrap_pyfunction!(run_cne, m)?)?;
    m.add_function(wrap_pyfunction!(neighbor_recall, m)?)?;
    m.add_function(wrap_pyfunction!(knn_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(linear_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
