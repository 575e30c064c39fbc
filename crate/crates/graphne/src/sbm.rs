//! Stochastic block model graph generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelSet};

/// Samples an undirected SBM graph: each unordered node pair is connected
/// independently with probability `p_in` (same block) or `p_out` (different
/// blocks). Labels are block indices.
///
/// Row `i` draws its pairs `(i, j)` for `j > i` from ChaCha stream `i` of
/// `seed`, so serial and row-parallel runs produce identical graphs.
pub fn sbm_generate(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Graph, LabelSet)> {
    if block_sizes.is_empty() {
        return Err(Error::InvalidInput("block_sizes is empty".into()));
    }
    if block_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidInput("block of size 0".into()));
    }
    if !(0.0..=1.0).contains(&p_out) || !(0.0..=1.0).contains(&p_in) || p_out > p_in {
        return Err(Error::InvalidInput(format!(
            "probabilities must satisfy 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    let n: usize = block_sizes.iter().sum();
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat(b).take(size));
    }

    let row_edges: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut edges = Vec::new();
            for j in (i + 1)..n {
                let p = if block_of[i] == block_of[j] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
            edges
        })
        .collect();
    let edges: Vec<(usize, usize)> = row_edges.into_iter().flatten().collect();

    let graph = Graph::from_edges(n, &edges, None)?;
    let labels = LabelSet::new(block_of, block_sizes.len())?;
    Ok((graph, labels))
}
