//! Graph storage, edge-list ingestion, and serialization.
//!
//! Nodes are dense integer ids `0..node_count`. External string labels are
//! kept in a [`NodeIdMap`] so files round-trip exactly. Edges are stored once
//! in canonical order (undirected edges as `src < dst`) with CSR adjacency
//! built at construction; graphs are immutable afterwards.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type NodeId = usize;

/// Bijection between external labels and dense internal ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIdMap {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeIdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Map for graphs whose labels are their own ids (`"0"`, `"1"`, ...).
    pub fn identity(node_count: usize) -> Self {
        let mut map = Self::new();
        for v in 0..node_count {
            map.intern(&v.to_string());
        }
        map
    }

    /// Returns the id for `label`, interning it if unseen. Ids are assigned
    /// in first-seen order, which keeps ingestion deterministic.
    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<F> {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: F,
}

/// Counters for input rows silently normalized during construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph<F> {
    directed: bool,
    node_count: usize,
    edges: Vec<Edge<F>>,
    row_ptr: Vec<usize>,
    col: Vec<NodeId>,
    in_degrees: Vec<usize>,
}

impl<F: Real> Graph<F> {
    /// Builds a graph from raw `(src, dst, weight)` triples.
    ///
    /// Self-loops are dropped, duplicate edges merged with summed weights
    /// (undirected duplicates match regardless of endpoint order), and both
    /// events are counted in the report. Weights must be finite and > 0.
    pub fn build(
        directed: bool,
        node_count: usize,
        raw: impl IntoIterator<Item = (NodeId, NodeId, F)>,
    ) -> Result<(Self, BuildReport)> {
        let mut report = BuildReport::default();
        let mut merged: BTreeMap<(NodeId, NodeId), F> = BTreeMap::new();
        for (src, dst, weight) in raw {
            if src >= node_count {
                return Err(Error::NodeOutOfRange(src, node_count));
            }
            if dst >= node_count {
                return Err(Error::NodeOutOfRange(dst, node_count));
            }
            if !(weight.is_finite() && weight > F::zero()) {
                return Err(Error::InvalidParam(format!(
                    "edge ({src}, {dst}) has non-positive weight {weight}"
                )));
            }
            if src == dst {
                report.self_loops_dropped += 1;
                continue;
            }
            let key = if directed || src < dst {
                (src, dst)
            } else {
                (dst, src)
            };
            match merged.entry(key) {
                Entry::Vacant(slot) => {
                    slot.insert(weight);
                }
                Entry::Occupied(mut slot) => {
                    *slot.get_mut() += weight;
                    report.duplicates_merged += 1;
                }
            }
        }

        let edges: Vec<Edge<F>> = merged
            .into_iter()
            .map(|((src, dst), weight)| Edge { src, dst, weight })
            .collect();

        let mut out_deg = vec![0usize; node_count];
        let mut in_degrees = vec![0usize; node_count];
        for e in &edges {
            out_deg[e.src] += 1;
            in_degrees[e.dst] += 1;
            if !directed {
                out_deg[e.dst] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(node_count + 1);
        row_ptr.push(0);
        for v in 0..node_count {
            row_ptr.push(row_ptr[v] + out_deg[v]);
        }
        let mut cursor = row_ptr.clone();
        let mut col = vec![0 as NodeId; row_ptr[node_count]];
        for e in &edges {
            col[cursor[e.src]] = e.dst;
            cursor[e.src] += 1;
            if !directed {
                col[cursor[e.dst]] = e.src;
                cursor[e.dst] += 1;
            }
        }

        Ok((
            Self {
                directed,
                node_count,
                edges,
                row_ptr,
                col,
                in_degrees,
            },
            report,
        ))
    }

    /// Unweighted undirected graph from node pairs; weights default to 1.
    pub fn from_pairs(
        directed: bool,
        node_count: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let triples = pairs.into_iter().map(|(u, v)| (u, v, F::one()));
        Ok(Self::build(directed, node_count, triples)?.0)
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of stored edges (each undirected edge counted once).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<F>] {
        &self.edges
    }

    /// Neighbors of `v`: out-neighbors when directed, all neighbors when
    /// undirected. Sorted ascending. Panics if `v` is out of range.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.col[self.row_ptr[v]..self.row_ptr[v + 1]]
    }

    /// Undirected degree; for directed graphs this is in-degree + out-degree.
    pub fn degree(&self, v: NodeId) -> Result<usize> {
        if v >= self.node_count {
            return Err(Error::NodeOutOfRange(v, self.node_count));
        }
        let out = self.row_ptr[v + 1] - self.row_ptr[v];
        if self.directed {
            Ok(out + self.in_degrees[v])
        } else {
            Ok(out)
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count)
            .map(|v| self.degree(v).expect("node in range"))
            .collect()
    }

    /// Symmetrized neighbor sets: direction ignored, reciprocal edges
    /// deduplicated, each list sorted. This is the view used by peeling and
    /// community detection, which are defined on undirected structure.
    pub fn undirected_neighbor_sets(&self) -> Vec<Vec<NodeId>> {
        let mut sets = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            sets[e.src].push(e.dst);
            sets[e.dst].push(e.src);
        }
        for set in &mut sets {
            set.sort_unstable();
            set.dedup();
        }
        sets
    }

    /// Edge set with direction ignored and reciprocal duplicates merged
    /// (weights summed), as `(u, v, weight)` with `u < v`, sorted.
    pub fn undirected_edge_set(&self) -> Vec<(NodeId, NodeId, F)> {
        if !self.directed {
            return self.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect();
        }
        let mut merged: BTreeMap<(NodeId, NodeId), F> = BTreeMap::new();
        for e in &self.edges {
            let key = if e.src < e.dst {
                (e.src, e.dst)
            } else {
                (e.dst, e.src)
            };
            *merged.entry(key).or_insert_with(F::zero) += e.weight;
        }
        merged.into_iter().map(|((u, v), w)| (u, v, w)).collect()
    }
}

/// Options controlling [`load_edge_list`].
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub directed: bool,
    /// Require and parse a third weight column. When false a weight column is
    /// ignored and every edge gets weight 1.
    pub weighted: bool,
    /// Swap src and dst on every line (e.g. "A retweets B" lists written as
    /// `A B` but meaning information flow B to A).
    pub reverse: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            directed: false,
            weighted: false,
            reverse: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Loaded<F> {
    pub graph: Graph<F>,
    pub ids: NodeIdMap,
    pub report: BuildReport,
}

/// Parses a whitespace-separated edge list.
///
/// Lines starting with `#` and blank lines are skipped. Each remaining line
/// is `src dst` or `src dst weight`. Labels are arbitrary non-whitespace
/// strings, interned in first-seen order.
pub fn load_edge_list<F: Real>(source: impl BufRead, opts: &LoadOptions) -> Result<Loaded<F>> {
    let mut ids = NodeIdMap::new();
    let mut triples: Vec<(NodeId, NodeId, F)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let weight = match (tokens.len(), opts.weighted) {
            (2, false) => F::one(),
            (2, true) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected a weight column".into(),
                })
            }
            (3, false) => F::one(),
            (3, true) => {
                let w: f64 = tokens[2].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid weight {:?}", tokens[2]),
                })?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("weight must be finite and positive, got {w}"),
                    });
                }
                F::from_f64_lossy(w)
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 2 or 3 columns, got {}", tokens.len()),
                })
            }
        };
        let (a, b) = if opts.reverse {
            (tokens[1], tokens[0])
        } else {
            (tokens[0], tokens[1])
        };
        let src = ids.intern(a);
        let dst = ids.intern(b);
        triples.push((src, dst, weight));
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (graph, report) = Graph::build(opts.directed, ids.len(), triples)?;
    Ok(Loaded { graph, ids, report })
}

/// Writes the canonical edge list. With `include_weights`, weights are
/// printed in shortest round-trip form so re-loading reproduces them exactly.
pub fn write_edge_list<F: Real>(
    graph: &Graph<F>,
    ids: &NodeIdMap,
    mut out: impl Write,
    include_weights: bool,
) -> Result<()> {
    for e in graph.edges() {
        if include_weights {
            writeln!(
                out,
                "{} {} {}",
                ids.label(e.src),
                ids.label(e.dst),
                e.weight.to_f64_lossy()
            )?;
        } else {
            writeln!(out, "{} {}", ids.label(e.src), ids.label(e.dst))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn load(text: &str, opts: &LoadOptions) -> Result<Loaded<f64>> {
        load_edge_list(Cursor::new(text.as_bytes()), opts)
    }

    #[test]
    fn minimal_path_graph() {
        let loaded = load("0 1\n1 2\n", &LoadOptions::default()).unwrap();
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.graph.edge_count(), 2);
        assert!(loaded.graph.edges().iter().all(|e| e.weight == 1.0));
        assert_eq!(loaded.report, BuildReport::default());
    }

    #[test]
    fn duplicate_directed_edges_merge_with_summed_weight() {
        let opts = LoadOptions {
            directed: true,
            weighted: true,
            reverse: false,
        };
        let loaded = load("a b 3\na b 2\n", &opts).unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.graph.edges()[0].weight, 5.0);
        assert_eq!(loaded.report.duplicates_merged, 1);
        assert_eq!(loaded.ids.label(0), "a");
        assert_eq!(loaded.ids.label(1), "b");
    }

    #[test]
    fn self_loops_are_dropped_and_counted() {
        let loaded = load("0 0\n0 1\n", &LoadOptions::default()).unwrap();
        assert_eq!(loaded.graph.node_count(), 2);
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.report.self_loops_dropped, 1);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let loaded = load("# header\n\n0 1\n  # indented comment\n1 2\n", &LoadOptions::default())
            .unwrap();
        assert_eq!(loaded.graph.edge_count(), 2);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = load("0 1\nonly_one_token\n", &LoadOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let opts = LoadOptions {
            weighted: true,
            ..LoadOptions::default()
        };
        let err = load("0 1 2.5\n0 2\n", &opts).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let err = load("0 1 not_a_number\n", &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            load("", &LoadOptions::default()),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            load("# only comments\n", &LoadOptions::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn reverse_flag_swaps_direction() {
        let opts = LoadOptions {
            directed: true,
            weighted: false,
            reverse: true,
        };
        let loaded = load("a b\n", &opts).unwrap();
        let e = loaded.graph.edges()[0];
        assert_eq!(loaded.ids.label(e.src), "b");
        assert_eq!(loaded.ids.label(e.dst), "a");
    }

    #[test]
    fn undirected_duplicates_merge_regardless_of_order() {
        let loaded = load("0 1\n1 0\n", &LoadOptions::default()).unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.graph.edges()[0].weight, 2.0);
        assert_eq!(loaded.report.duplicates_merged, 1);
    }

    #[test]
    fn degree_examples() {
        // Star K(1,4): center 0.
        let star = Graph::<f64>::from_pairs(false, 5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(star.degree(0).unwrap(), 4);
        assert_eq!(star.degree(1).unwrap(), 1);

        // Clique K5.
        let mut pairs = Vec::new();
        for u in 0..5 {
            for v in (u + 1)..5 {
                pairs.push((u, v));
            }
        }
        let clique = Graph::<f64>::from_pairs(false, 5, pairs).unwrap();
        for v in 0..5 {
            assert_eq!(clique.degree(v).unwrap(), 4);
        }

        // Isolated node.
        let lonely = Graph::<f64>::from_pairs(false, 2, [(0, 1)]).unwrap();
        let g = Graph::<f64>::from_pairs(false, 3, [(0, 1)]).unwrap();
        assert_eq!(g.degree(2).unwrap(), 0);
        assert!(matches!(
            lonely.degree(5),
            Err(Error::NodeOutOfRange(5, 2))
        ));
    }

    #[test]
    fn directed_degree_counts_both_directions() {
        let g = Graph::<f64>::from_pairs(true, 3, [(0, 1), (2, 1), (1, 2)]).unwrap();
        assert_eq!(g.degree(1).unwrap(), 3);
        assert_eq!(g.degree(0).unwrap(), 1);
        assert_eq!(g.neighbors(1), &[2]);
    }

    #[test]
    fn degree_sum_is_twice_edge_count_for_undirected() {
        let g = Graph::<f64>::from_pairs(false, 6, [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5)])
            .unwrap();
        let total: usize = g.degrees().iter().sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn neighbors_are_sorted() {
        let g = Graph::<f64>::from_pairs(false, 5, [(3, 1), (3, 4), (0, 3), (3, 2)]).unwrap();
        assert_eq!(g.neighbors(3), &[0, 1, 2, 4]);
    }

    #[test]
    fn symmetrized_view_merges_reciprocal_edges() {
        let g = Graph::<f64>::build(true, 3, [(0, 1, 2.0), (1, 0, 3.0), (1, 2, 1.0)])
            .unwrap()
            .0;
        let sets = g.undirected_neighbor_sets();
        assert_eq!(sets[0], vec![1]);
        assert_eq!(sets[1], vec![0, 2]);
        let edges = g.undirected_edge_set();
        assert_eq!(edges, vec![(0, 1, 5.0), (1, 2, 1.0)]);
    }

    #[test]
    fn round_trip_preserves_edge_multiset() {
        let opts = LoadOptions {
            directed: true,
            weighted: true,
            reverse: false,
        };
        let input = "b a 2\na c 1.5\nc b 0.25\na c 0.5\n";
        let first = load(input, &opts).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&first.graph, &first.ids, &mut buf, true).unwrap();
        let second = load_edge_list::<f64>(Cursor::new(&buf), &opts).unwrap();

        let canonical = |loaded: &Loaded<f64>| {
            let mut edges: Vec<(String, String, f64)> = loaded
                .graph
                .edges()
                .iter()
                .map(|e| {
                    (
                        loaded.ids.label(e.src).to_string(),
                        loaded.ids.label(e.dst).to_string(),
                        e.weight,
                    )
                })
                .collect();
            edges.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
            edges
        };
        assert_eq!(canonical(&first), canonical(&second));
    }

    #[test]
    fn zero_weight_rejected() {
        let opts = LoadOptions {
            directed: false,
            weighted: true,
            reverse: false,
        };
        assert!(matches!(load("0 1 0\n", &opts), Err(Error::Parse { .. })));
    }

    #[test]
    fn generic_over_f32() {
        let loaded: Loaded<f32> = load_edge_list(
            Cursor::new(b"0 1 0.5\n1 2 0.25\n".as_slice()),
            &LoadOptions {
                directed: false,
                weighted: true,
                reverse: false,
            },
        )
        .unwrap();
        assert_eq!(loaded.graph.edges()[0].weight, 0.5_f32);
    }
}
