//! Exact k-nearest-neighbor graph construction from vector data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A dense set of `n` real vectors of dimension `p`, stored row-major.
#[derive(Debug, Clone)]
pub struct VectorSet {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl VectorSet {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<VectorSet> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 vectors, got {n}")));
        }
        if p == 0 || data.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "expected {n}x{p} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector entry".into()));
        }
        Ok(VectorSet { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<VectorSet> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("ragged vector rows".into()));
        }
        VectorSet::new(n, p, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Builds the exact Euclidean kNN graph, symmetrized as the union: an
/// undirected edge exists if either endpoint is among the other's k nearest.
/// Distance ties are broken by lower node index.
pub fn knn_graph(vectors: &VectorSet, k: usize) -> Result<Graph> {
    let n = vectors.n();
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if k >= n {
        return Err(Error::InvalidInput(format!("k = {k} must be < n = {n}")));
    }
    let row_edges: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(vectors.row(i), vectors.row(j)), j))
                .collect();
            cand.select_nth_unstable_by(k - 1, |a, b| {
                a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
            });
            cand[..k].iter().map(|&(_, j)| (i, j)).collect()
        })
        .collect();
    let edges: Vec<(usize, usize)> = row_edges.into_iter().flatten().collect();
    Graph::from_edges(n, &edges, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points() {
        let v = VectorSet::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let g = knn_graph(&v, 1).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn k_equals_n_minus_one_is_complete() {
        let v = VectorSet::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![5.0, 5.0],
        ])
        .unwrap();
        let g = knn_graph(&v, 3).unwrap();
        assert_eq!(g.num_edges(), 6);
    }

    #[test]
    fn rejects_bad_k() {
        let v = VectorSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(knn_graph(&v, 0).is_err());
        assert!(knn_graph(&v, 2).is_err());
    }

    #[test]
    fn matches_brute_force_oracle() {
        // 100 seeded pseudo-random 2D points, k = 5
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 100;
        let k = 5;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![next(), next()]).collect();
        let v = VectorSet::from_rows(&rows).unwrap();
        let g = knn_graph(&v, k).unwrap();
        g.validate().unwrap();

        // oracle: full sort of all distances per node, union-symmetrized
        let mut expected: std::collections::BTreeSet<(usize, usize)> = Default::default();
        let mut out_degree_ok = true;
        for i in 0..n {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(&rows[i], &rows[j]), j))
                .collect();
            cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut own = 0;
            for &(_, j) in &cand[..k] {
                expected.insert((i.min(j), i.max(j)));
                if g.neighbors(i).binary_search(&j).is_ok() {
                    own += 1;
                }
            }
            out_degree_ok &= own == k;
        }
        let got: std::collections::BTreeSet<(usize, usize)> = g.edges().collect();
        assert_eq!(got, expected);
        // every node keeps at least its own k out-edges after symmetrization
        assert!(out_degree_ok);
    }
}
