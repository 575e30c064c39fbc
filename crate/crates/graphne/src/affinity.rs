//! Sparse affinity matrices derived from graph adjacency.
//!
//! Both constructions place all affinity mass on the edge set and normalize
//! the full symmetric matrix to sum to 1: the degree-normalized form weights
//! each edge by the endpoint degrees, the global form spreads mass uniformly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A symmetric sparse affinity matrix with unit total mass.
///
/// Entries are stored once with `i < j` and interpreted symmetrically, so the
/// full-matrix sum is twice the stored sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
    total_mass: f64,
}

impl SparseAffinity {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored upper-triangular entries `(i, j, p_ij)` with `i < j`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Sum over the full symmetric matrix.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Per-node neighbor lists `(j, p_ij)` covering both directions.
    pub fn row_structure(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for &(i, j, p) in &self.entries {
            rows[i].push((j, p));
            rows[j].push((i, p));
        }
        rows
    }

    /// Text dump "i j p_ij", one stored entry per line, 17 significant digits.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for &(i, j, p) in &self.entries {
            let _ = writeln!(out, "{i} {j} {p:.16e}");
        }
        out
    }
}

/// Degree-normalized affinities: each adjacency row is divided by its degree,
/// the result symmetrized and scaled to unit total mass, giving
/// `p_ij = (1/k_i + 1/k_j) / (2n)` per edge.
pub fn degree_normalized_affinity(g: &Graph) -> Result<SparseAffinity> {
    if let Some(node) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::IsolatedNode { node });
    }
    let n = g.n();
    let scale = 1.0 / (2.0 * n as f64);
    let entries: Vec<(usize, usize, f64)> = g
        .edges()
        .map(|(i, j)| {
            let p = (1.0 / g.degree(i) as f64 + 1.0 / g.degree(j) as f64) * scale;
            (i, j, p)
        })
        .collect();
    finish(n, entries)
}

/// Globally normalized affinities: the adjacency matrix divided by the sum of
/// its elements, giving the uniform `p_ij = 1 / (2|E|)` per edge.
pub fn global_normalized_affinity(g: &Graph) -> Result<SparseAffinity> {
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let p = 1.0 / (2.0 * m as f64);
    let entries: Vec<(usize, usize, f64)> = g.edges().map(|(i, j)| (i, j, p)).collect();
    finish(g.n(), entries)
}

fn finish(n: usize, entries: Vec<(usize, usize, f64)>) -> Result<SparseAffinity> {
    if entries.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let total_mass = 2.0 * entries.iter().map(|&(_, _, p)| p).sum::<f64>();
    Ok(SparseAffinity {
        n,
        entries,
        total_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;

    fn lookup(p: &SparseAffinity, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        p.entries()
            .iter()
            .find(|&&(x, y, _)| x == a && y == b)
            .map(|&(_, _, v)| v)
            .expect("entry present")
    }

    #[test]
    fn path_graph_hand_values() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        let p = degree_normalized_affinity(&g).unwrap();
        assert!((lookup(&p, 0, 1) - 0.25).abs() < 1e-15);
        assert!((lookup(&p, 1, 2) - 0.25).abs() < 1e-15);
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn star_graph_hand_values() {
        let g = parse_edge_list("0 1\n0 2\n0 3\n0 4").unwrap();
        let p = degree_normalized_affinity(&g).unwrap();
        for leaf in 1..5 {
            assert!((lookup(&p, 0, leaf) - 0.125).abs() < 1e-15);
        }
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regular_graph_collapses_to_uniform() {
        // cycle C_5 is 2-regular: every p_ij = 1/(n k) = 1/10
        let g = parse_edge_list("0 1\n1 2\n2 3\n3 4\n4 0").unwrap();
        let p = degree_normalized_affinity(&g).unwrap();
        for &(_, _, v) in p.entries() {
            assert!((v - 0.1).abs() < 1e-15);
        }
        let q = global_normalized_affinity(&g).unwrap();
        for &(_, _, v) in q.entries() {
            assert!((v - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn global_norm_is_uniform() {
        let g = parse_edge_list("0 1\n1 2\n2 0").unwrap();
        let p = global_normalized_affinity(&g).unwrap();
        for &(_, _, v) in p.entries() {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
        let path = parse_edge_list("0 1\n1 2").unwrap();
        let p = global_normalized_affinity(&path).unwrap();
        for &(_, _, v) in p.entries() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_rejected() {
        // node 2 appears only in a self-loop and ends up isolated
        let g = crate::graph::Graph::from_edges(3, &[(0, 1)], None).unwrap();
        assert!(matches!(
            degree_normalized_affinity(&g),
            Err(Error::IsolatedNode { node: 2 })
        ));
    }

    #[test]
    fn relabeling_permutes_entries() {
        let g = parse_edge_list("0 1\n1 2\n2 3\n3 0\n0 2").unwrap();
        // relabel via the permutation 0->3, 1->2, 2->1, 3->0
        let perm = [3usize, 2, 1, 0];
        let edges: Vec<(usize, usize)> = g.edges().map(|(i, j)| (perm[i], perm[j])).collect();
        let h = crate::graph::Graph::from_edges(4, &edges, None).unwrap();
        let pg = degree_normalized_affinity(&g).unwrap();
        let ph = degree_normalized_affinity(&h).unwrap();
        for &(i, j, v) in pg.entries() {
            assert!((lookup(&ph, perm[i], perm[j]) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn dump_has_17_significant_digits() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        let p = degree_normalized_affinity(&g).unwrap();
        let dump = p.to_dump();
        let first = dump.lines().next().unwrap();
        assert_eq!(first, "0 1 2.5000000000000000e-1");
    }
}
