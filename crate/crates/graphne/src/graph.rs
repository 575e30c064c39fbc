//! Undirected simple graphs in compressed sparse row form, edge-list parsing,
//! node labels, and largest-connected-component extraction.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// An undirected, unweighted, simple graph stored in CSR form.
///
/// Every undirected edge is stored in both directions; rows are sorted
/// ascending and contain no duplicates or self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_offsets: Vec<usize>,
    col_targets: Vec<usize>,
    degrees: Vec<usize>,
    original_ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph from undirected edge pairs over nodes `0..n`.
    ///
    /// Duplicate edges are collapsed and self-loops dropped. `original_ids`
    /// maps each internal index back to its source-file id; pass
    /// `None` for generated graphs (identity mapping).
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        original_ids: Option<Vec<u64>>,
    ) -> Result<Graph> {
        let original_ids = match original_ids {
            Some(ids) => {
                if ids.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "original_ids has length {}, expected {}",
                        ids.len(),
                        n
                    )));
                }
                ids
            }
            None => (0..n as u64).collect(),
        };
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_targets = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        row_offsets.push(0);
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
            col_targets.extend_from_slice(row);
            degrees.push(row.len());
            row_offsets.push(col_targets.len());
        }
        Ok(Graph {
            n,
            row_offsets,
            col_targets,
            degrees,
            original_ids,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_targets.len() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.degrees[node]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Sorted neighbor list of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.col_targets[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Iterates each undirected edge once, with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    /// Checks the structural invariants: symmetry, sorted rows, no duplicate
    /// neighbors, no self-loops, consistent degrees.
    pub fn validate(&self) -> Result<()> {
        if self.row_offsets.len() != self.n + 1 || self.degrees.len() != self.n {
            return Err(Error::InvalidInput("inconsistent CSR lengths".into()));
        }
        for i in 0..self.n {
            let row = self.neighbors(i);
            if self.degrees[i] != row.len() {
                return Err(Error::InvalidInput(format!("degree mismatch at node {i}")));
            }
            for (k, &j) in row.iter().enumerate() {
                if j == i {
                    return Err(Error::InvalidInput(format!("self-loop at node {i}")));
                }
                if j >= self.n {
                    return Err(Error::InvalidInput(format!("out-of-range neighbor {j}")));
                }
                if k > 0 && row[k - 1] >= j {
                    return Err(Error::InvalidInput(format!(
                        "row {i} not sorted strictly ascending"
                    )));
                }
                if self.neighbors(j).binary_search(&i).is_err() {
                    return Err(Error::InvalidInput(format!(
                        "edge ({i}, {j}) is not symmetric"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes as an edge-list document, one undirected edge per line
    /// using original node ids.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{} {}", self.original_ids[i], self.original_ids[j]);
        }
        out
    }

    /// Connected components as a per-node component id plus component count.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let mut component = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.n {
            if component[start] != usize::MAX {
                continue;
            }
            component[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if component[v] == usize::MAX {
                        component[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (component, count)
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().1 == 1
    }
}

/// Per-node integer class labels with a dense class id range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<usize>,
    class_count: usize,
}

impl LabelSet {
    pub fn new(labels: Vec<usize>, class_count: usize) -> Result<LabelSet> {
        if labels.iter().any(|&c| c >= class_count) {
            return Err(Error::InvalidInput(
                "label id outside 0..class_count".into(),
            ));
        }
        Ok(LabelSet {
            labels,
            class_count,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Restricts to the given node subset, re-compacting class ids (order
    /// preserved) if any class disappears.
    pub fn filter(&self, keep: &[usize]) -> LabelSet {
        let kept: Vec<usize> = keep.iter().map(|&i| self.labels[i]).collect();
        let mut present = vec![false; self.class_count];
        for &c in &kept {
            present[c] = true;
        }
        let mut remap = vec![usize::MAX; self.class_count];
        let mut next = 0;
        for (c, &p) in present.iter().enumerate() {
            if p {
                remap[c] = next;
                next += 1;
            }
        }
        LabelSet {
            labels: kept.into_iter().map(|c| remap[c]).collect(),
            class_count: next,
        }
    }
}

/// Parses an edge-list document: one edge per line, two non-negative integer
/// ids separated by whitespace, `#` lines ignored.
///
/// Node ids are compacted to `0..n` in first-appearance order; duplicate
/// edges are collapsed and self-loops dropped.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut id_map: HashMap<u64, usize> = HashMap::new();
    let mut original_ids: Vec<u64> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    let intern = |id: u64, map: &mut HashMap<u64, usize>, ids: &mut Vec<u64>| -> usize {
        *map.entry(id).or_insert_with(|| {
            ids.push(id);
            ids.len() - 1
        })
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected two integer tokens, got {line:?}"),
                })
            }
        };
        let parse_id = |tok: &str| -> Result<u64> {
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid node id {tok:?}"),
            })
        };
        let u = intern(parse_id(a)?, &mut id_map, &mut original_ids);
        let v = intern(parse_id(b)?, &mut id_map, &mut original_ids);
        if u != v {
            edges.push((u, v));
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    Graph::from_edges(original_ids.len(), &edges, Some(original_ids))
}

/// Parses a label file: one `node_id label_string` per line, `#` lines
/// ignored. Label strings are remapped to dense integers in file order;
/// node ids refer to the graph's original ids.
pub fn parse_label_file(text: &str, graph: &Graph) -> Result<LabelSet> {
    let mut class_map: HashMap<String, usize> = HashMap::new();
    let mut by_original: HashMap<u64, usize> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_tok, label) = match line.split_once(char::is_whitespace) {
            Some((a, b)) if !b.trim().is_empty() => (a, b.trim()),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected \"node_id label\", got {line:?}"),
                })
            }
        };
        let id: u64 = id_tok.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: format!("invalid node id {id_tok:?}"),
        })?;
        let next = class_map.len();
        let class = *class_map.entry(label.to_string()).or_insert(next);
        by_original.insert(id, class);
    }
    let mut labels = Vec::with_capacity(graph.n());
    for &orig in graph.original_ids() {
        match by_original.get(&orig) {
            Some(&c) => labels.push(c),
            None => return Err(Error::MissingLabel { original_id: orig }),
        }
    }
    LabelSet::new(labels, class_map.len())
}

/// Extracts the induced subgraph on the largest connected component.
///
/// Ties between equal-sized components are broken by the smallest minimum
/// original id. Returns the subgraph, consistently filtered labels, and an
/// old-to-new index map (`None` for dropped nodes).
pub fn largest_connected_component(
    g: &Graph,
    labels: Option<&LabelSet>,
) -> Result<(Graph, Option<LabelSet>, Vec<Option<usize>>)> {
    if let Some(l) = labels {
        if l.len() != g.n() {
            return Err(Error::InvalidInput(format!(
                "label count {} does not match node count {}",
                l.len(),
                g.n()
            )));
        }
    }
    let (component, count) = g.connected_components();
    let mut sizes = vec![0usize; count];
    let mut min_orig = vec![u64::MAX; count];
    for (node, &c) in component.iter().enumerate() {
        sizes[c] += 1;
        min_orig[c] = min_orig[c].min(g.original_ids()[node]);
    }
    let best = (0..count)
        .max_by(|&a, &b| {
            sizes[a]
                .cmp(&sizes[b])
                .then(min_orig[b].cmp(&min_orig[a]))
        })
        .expect("graph has at least one node");

    let keep: Vec<usize> = (0..g.n()).filter(|&i| component[i] == best).collect();
    let mut index_map = vec![None; g.n()];
    for (new, &old) in keep.iter().enumerate() {
        index_map[old] = Some(new);
    }
    let mut edges = Vec::new();
    for (new, &old) in keep.iter().enumerate() {
        for &nb in g.neighbors(old) {
            if let Some(nb_new) = index_map[nb] {
                if nb_new > new {
                    edges.push((new, nb_new));
                }
            }
        }
    }
    let original_ids: Vec<u64> = keep.iter().map(|&i| g.original_ids()[i]).collect();
    let sub = Graph::from_edges(keep.len(), &edges, Some(original_ids))?;
    let sub_labels = labels.map(|l| l.filter(&keep));
    Ok((sub, sub_labels, index_map))
}
