use thiserror::Error;

/// Errors produced by graph construction, optimization, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty edge set")]
    EmptyEdgeSet,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph is disconnected ({components} components); extract the largest connected component first")]
    Disconnected { components: usize },

    #[error("node {node} is isolated (degree 0); extract the largest connected component first")]
    IsolatedNode { node: usize },

    #[error(
        "eigensolver did not converge after {iters} iterations: max residual {residual:.3e} (tolerance {tol:.1e})"
    )]
    EigenNonConvergence {
        residual: f64,
        iters: usize,
        tol: f64,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("NaN in coordinates at iteration {iter}")]
    TsneNan { iter: usize },

    #[error("NaN loss at epoch {epoch}, batch {batch}")]
    CneNan { epoch: usize, batch: usize },

    #[error("node {original_id} has no label")]
    MissingLabel { original_id: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
