//! Graph layouts and node embeddings via neighbor embeddings.
//!
//! Two optimizers share one affinity model derived directly from graph
//! adjacency: `tsne` minimizes the Kullback-Leibler divergence between the
//! affinities and a Cauchy kernel in 2D (graph t-SNE), and `cne` optimizes
//! high-dimensional coordinates with the InfoNCE contrastive loss over graph
//! edges (graph CNE). The crate also provides graph ingestion and generation
//! (`graph`, `sbm`, `knn`), spectral and random initializations (`spectral`),
//! and the evaluation metrics used to benchmark both methods (`eval`).

pub mod affinity;
pub mod cne;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod knn;
pub mod sbm;
pub mod spectral;
pub mod tsne;

pub use affinity::{degree_normalized_affinity, global_normalized_affinity, SparseAffinity};
pub use cne::{
    infonce_batch_loss, pair_similarity, run_cne, run_cne_observed, sample_epoch, BatchLoss,
    CneKernel, CneParams, EdgeBatch, EpochStats, SparseRowGrad,
};
pub use embedding::{Embedding, Metric};
pub use error::{Error, Result};
pub use eval::{
    evaluate, knn_accuracy, linear_accuracy, make_split, neighbor_recall, EvalReport, Split,
};
pub use graph::{
    largest_connected_component, parse_edge_list, parse_label_file, Graph, LabelSet,
};
pub use knn::{knn_graph, VectorSet};
pub use sbm::sbm_generate;
pub use spectral::{laplacian_eigenmaps, random_init, rescale_init};
pub use tsne::{bh_gradient, exact_gradient, kl_loss, run_tsne, run_tsne_logged, Gradient2D, TsneParams};
