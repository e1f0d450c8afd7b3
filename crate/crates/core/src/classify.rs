//! Directed edge taxonomy over a core/periphery partition, and the
//! mean-weight ordering check used to validate interaction graphs.
//!
//! Classes are named sender-first: CC and CP originate in the core, PC, PP0,
//! and PP1 in the periphery. PP edges split by community: PP0 inside one
//! community, PP1 across communities. Core endpoints ignore community labels.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeIdMap};
use crate::scalar::Real;
use crate::structure::{NodePartition, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum EdgeClass {
    CC,
    CP,
    PC,
    PP0,
    PP1,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 5] = [
        EdgeClass::CC,
        EdgeClass::CP,
        EdgeClass::PC,
        EdgeClass::PP0,
        EdgeClass::PP1,
    ];

    pub fn index(self) -> usize {
        match self {
            EdgeClass::CC => 0,
            EdgeClass::CP => 1,
            EdgeClass::PC => 2,
            EdgeClass::PP0 => 3,
            EdgeClass::PP1 => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::CC => "cc",
            EdgeClass::CP => "cp",
            EdgeClass::PC => "pc",
            EdgeClass::PP0 => "pp0",
            EdgeClass::PP1 => "pp1",
        }
    }
}

/// Classifies a directed edge by sender role, receiver role, and (for
/// periphery-periphery edges) whether the endpoints share a community.
pub fn classify_edge(
    src_role: Role,
    dst_role: Role,
    src_community: u32,
    dst_community: u32,
) -> EdgeClass {
    match (src_role, dst_role) {
        (Role::Core, Role::Core) => EdgeClass::CC,
        (Role::Core, Role::Periphery) => EdgeClass::CP,
        (Role::Periphery, Role::Core) => EdgeClass::PC,
        (Role::Periphery, Role::Periphery) => {
            if src_community == dst_community {
                EdgeClass::PP0
            } else {
                EdgeClass::PP1
            }
        }
    }
}

/// Per-class edge counts and mean weights, plus the ordering verdict.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WeightReport<F> {
    /// Directed edge count per class, indexed by [`EdgeClass::index`].
    pub counts: [usize; 5],
    /// Mean weight per class; `None` when the class has no edges.
    pub mean_weights: [Option<F>; 5],
    /// Whether mean weights satisfy cc > cp > pp0 > pp1 > pc. Indeterminate
    /// (`None`) when any class is empty.
    pub ordering_holds: Option<bool>,
    /// Defined classes sorted by mean weight, descending.
    pub ordering: Vec<(EdgeClass, F)>,
    /// Directed edges classified.
    pub classified_edges: usize,
    /// Directed edges skipped because an endpoint had no partition entry.
    pub skipped_edges: usize,
}

impl<F: Real> WeightReport<F> {
    pub fn count(&self, class: EdgeClass) -> usize {
        self.counts[class.index()]
    }

    pub fn mean_weight(&self, class: EdgeClass) -> Option<F> {
        self.mean_weights[class.index()]
    }
}

/// Computes the weight report for a graph whose partition covers every node.
///
/// Undirected edges contribute once per direction, so class counts always
/// refer to directed edges.
pub fn weight_report<F: Real>(g: &Graph<F>, part: &NodePartition) -> Result<WeightReport<F>> {
    part.check_against(g)?;
    let info: Vec<Option<(Role, u32)>> = (0..g.node_count())
        .map(|v| Some((part.roles[v], part.communities[v])))
        .collect();
    weight_report_partial(g, &info)
}

/// Weight report over the subset of edges whose endpoints both carry labels.
///
/// `node_info[v]` is the role and community of node `v`, or `None` when the
/// partition does not cover it; such edges are counted as skipped.
pub fn weight_report_partial<F: Real>(
    g: &Graph<F>,
    node_info: &[Option<(Role, u32)>],
) -> Result<WeightReport<F>> {
    if node_info.len() != g.node_count() {
        return Err(Error::InvalidParam(format!(
            "node info covers {} nodes but graph has {}",
            node_info.len(),
            g.node_count()
        )));
    }
    let mut counts = [0usize; 5];
    let mut sums = [F::zero(); 5];
    let mut skipped = 0usize;
    let mut tally = |src: usize, dst: usize, w: F| match (node_info[src], node_info[dst]) {
        (Some((sr, sc)), Some((dr, dc))) => {
            let class = classify_edge(sr, dr, sc, dc);
            counts[class.index()] += 1;
            sums[class.index()] += w;
        }
        _ => skipped += 1,
    };
    for e in g.edges() {
        tally(e.src, e.dst, e.weight);
        if !g.is_directed() {
            tally(e.dst, e.src, e.weight);
        }
    }

    let mut mean_weights = [None; 5];
    for class in EdgeClass::ALL {
        let i = class.index();
        if counts[i] > 0 {
            mean_weights[i] = Some(sums[i] / F::from_usize_lossy(counts[i]));
        }
    }

    let ordering_holds = if counts.iter().any(|&c| c == 0) {
        None
    } else {
        // Claimed hierarchy: cc > cp > pp0 > pp1 > pc, strictly.
        let w = |c: EdgeClass| mean_weights[c.index()].unwrap();
        Some(
            w(EdgeClass::CC) > w(EdgeClass::CP)
                && w(EdgeClass::CP) > w(EdgeClass::PP0)
                && w(EdgeClass::PP0) > w(EdgeClass::PP1)
                && w(EdgeClass::PP1) > w(EdgeClass::PC),
        )
    };

    let mut ordering: Vec<(EdgeClass, F)> = EdgeClass::ALL
        .iter()
        .filter_map(|&c| mean_weights[c.index()].map(|w| (c, w)))
        .collect();
    ordering.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.index().cmp(&b.0.index())));

    Ok(WeightReport {
        counts,
        mean_weights,
        ordering_holds,
        ordering,
        classified_edges: counts.iter().sum(),
        skipped_edges: skipped,
    })
}

/// Joins a partition computed on one graph onto another graph's nodes by
/// external label.
///
/// Returns per-node `(role, community)` entries for `target_ids`. Labels
/// absent from `source_ids` error with a sample of the missing labels, or
/// become `None` when `allow_missing` is set.
pub fn align_roles(
    target_ids: &NodeIdMap,
    source_ids: &NodeIdMap,
    part: &NodePartition,
    allow_missing: bool,
) -> Result<Vec<Option<(Role, u32)>>> {
    let mut info = Vec::with_capacity(target_ids.len());
    let mut missing = Vec::new();
    for v in 0..target_ids.len() {
        let label = target_ids.label(v);
        match source_ids.id(label) {
            Some(u) => info.push(Some((part.roles[u], part.communities[u]))),
            None => {
                missing.push(label.to_string());
                info.push(None);
            }
        }
    }
    if !missing.is_empty() && !allow_missing {
        let count = missing.len();
        missing.truncate(5);
        return Err(Error::UnmatchedLabels {
            count,
            sample: missing,
        });
    }
    Ok(info)
}
