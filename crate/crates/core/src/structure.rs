//! Structural analysis: k-shell coreness, core/periphery split, and greedy
//! modularity communities.
//!
//! All three operate on undirected structure; directed graphs are
//! symmetrized (reciprocal edges merged) before analysis.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeIdMap};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Core,
    Periphery,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Core => "core",
            Role::Periphery => "periphery",
        }
    }
}

/// Per-node structural labels: core/periphery role, community, coreness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePartition {
    pub roles: Vec<Role>,
    pub communities: Vec<u32>,
    pub coreness: Vec<u32>,
}

impl NodePartition {
    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn is_core(&self, v: NodeId) -> bool {
        self.roles[v] == Role::Core
    }

    pub fn core_count(&self) -> usize {
        self.roles.iter().filter(|r| **r == Role::Core).count()
    }

    /// Number of distinct community labels (labels are dense, so max+1).
    pub fn community_count(&self) -> usize {
        self.communities.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Checks the partition covers `g` exactly.
    pub fn check_against<F: Real>(&self, g: &Graph<F>) -> Result<()> {
        let n = g.node_count();
        if self.roles.len() != n || self.communities.len() != n || self.coreness.len() != n {
            return Err(Error::InvalidParam(format!(
                "partition covers {} nodes but graph has {n}",
                self.roles.len()
            )));
        }
        Ok(())
    }
}

/// Core quota for `n` nodes. Uses ceil, but snaps products that land within
/// 1e-9 of an integer first so that e.g. 0.1 * 10 counts as exactly 1.
pub(crate) fn core_quota(n: usize, fraction: f64) -> usize {
    let prod = fraction * n as f64;
    let nearest = prod.round();
    let quota = if (prod - nearest).abs() < 1e-9 {
        nearest
    } else {
        prod.ceil()
    };
    (quota as usize).min(n)
}

/// K-shell decomposition by bucket peeling in O(|E|).
///
/// `coreness[v]` is the largest k such that v lies in a subgraph of minimum
/// degree k. Isolated nodes get 0. Directed input is symmetrized.
pub fn k_shell<F: Real>(g: &Graph<F>) -> Vec<u32> {
    let sets = g.undirected_neighbor_sets();
    let n = sets.len();
    if n == 0 {
        return Vec::new();
    }
    let mut core: Vec<usize> = sets.iter().map(Vec::len).collect();
    let max_degree = core.iter().max().copied().unwrap_or(0);

    // Counting sort of nodes by degree; bin[d] = start offset of degree d.
    let mut bin = vec![0usize; max_degree + 1];
    for &d in &core {
        bin[d] += 1;
    }
    let mut start = 0;
    for d in 0..=max_degree {
        let count = bin[d];
        bin[d] = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0 as NodeId; n];
    for v in 0..n {
        pos[v] = bin[core[v]];
        vert[pos[v]] = v;
        bin[core[v]] += 1;
    }
    for d in (1..=max_degree).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    // Peel in degree order; when v is removed, demote each higher neighbor
    // by one bucket. core[u] tracks u's degree among unpeeled nodes and
    // freezes at u's coreness once u is reached.
    for i in 0..n {
        let v = vert[i];
        for &u in &sets[v] {
            if core[u] > core[v] {
                let du = core[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                core[u] -= 1;
            }
        }
    }
    core.into_iter().map(|c| c as u32).collect()
}

/// Flags the top `fraction` of nodes as core.
///
/// Exactly `ceil(fraction * n)` nodes are selected, ranking candidates by
/// coreness desc, then degree desc, then node id asc, so the result is fully
/// deterministic.
pub fn select_core<F: Real>(coreness: &[u32], g: &Graph<F>, fraction: f64) -> Result<Vec<Role>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "core fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = g.node_count();
    if coreness.len() != n {
        return Err(Error::InvalidParam(format!(
            "coreness covers {} nodes but graph has {n}",
            coreness.len()
        )));
    }
    let quota = core_quota(n, fraction);
    let mut order: Vec<NodeId> = (0..n).collect();
    let degrees = g.degrees();
    order.sort_by(|&a, &b| {
        coreness[b]
            .cmp(&coreness[a])
            .then(degrees[b].cmp(&degrees[a]))
            .then(a.cmp(&b))
    });
    let mut roles = vec![Role::Periphery; n];
    for &v in order.iter().take(quota) {
        roles[v] = Role::Core;
    }
    Ok(roles)
}

/// Newman-style modularity of a labeling: Q = sum_c (e_c/M - (a_c/2M)^2)
/// with e_c the intra-community edge count, a_c the community degree sum,
/// and M the (symmetrized) edge count. Q lies in [-0.5, 1).
pub fn modularity<F: Real>(g: &Graph<F>, labels: &[u32]) -> Result<F> {
    if labels.len() != g.node_count() {
        return Err(Error::InvalidParam(format!(
            "labels cover {} nodes but graph has {}",
            labels.len(),
            g.node_count()
        )));
    }
    let sets = g.undirected_neighbor_sets();
    let m2: usize = sets.iter().map(Vec::len).sum();
    if m2 == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let mut intra: BTreeMap<u32, u64> = BTreeMap::new();
    let mut deg_sum: BTreeMap<u32, u64> = BTreeMap::new();
    for (v, set) in sets.iter().enumerate() {
        *deg_sum.entry(labels[v]).or_insert(0) += set.len() as u64;
        for &u in set {
            if u > v && labels[u] == labels[v] {
                *intra.entry(labels[v]).or_insert(0) += 1;
            }
        }
    }
    let m = F::from_usize_lossy(m2 / 2);
    let two_m = F::from_usize_lossy(m2);
    let mut q = F::zero();
    for (&label, &a) in &deg_sum {
        let e = intra.get(&label).copied().unwrap_or(0);
        let e = F::from_f64_lossy(e as f64);
        let a = F::from_f64_lossy(a as f64);
        q += e / m - (a / two_m) * (a / two_m);
    }
    Ok(q)
}

/// Heap entry for the greedy merge queue. Ordered by gain, then by the
/// smaller community pair, so ties resolve deterministically.
#[derive(Debug, PartialEq)]
struct MergeCandidate {
    gain: f64,
    a: usize,
    b: usize,
    version_a: u64,
    version_b: u64,
}

impl Eq for MergeCandidate {}

impl Ord for MergeCandidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for MergeCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy agglomerative modularity optimization.
///
/// Starts from singleton communities and repeatedly merges the pair with the
/// largest modularity gain until no positive gain remains. Gain ties break by
/// the smaller community-id pair. Returns dense labels (numbered by first
/// occurrence in node order) and the final modularity.
///
/// Errors on graphs with no nodes or no edges.
pub fn detect_communities<F: Real>(g: &Graph<F>) -> Result<(Vec<u32>, F)> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let sets = g.undirected_neighbor_sets();
    let m2: usize = sets.iter().map(Vec::len).sum();
    if m2 == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let m = (m2 / 2) as f64;

    // Per-community state. e_between holds undirected edge counts to
    // neighboring communities; deg_sum is a_c. Versions invalidate stale
    // heap entries after merges.
    let mut alive = vec![true; n];
    let mut version = vec![0u64; n];
    let mut deg_sum: Vec<u64> = sets.iter().map(|s| s.len() as u64).collect();
    let mut e_between: Vec<HashMap<usize, u64>> = sets
        .iter()
        .map(|s| s.iter().map(|&u| (u, 1u64)).collect())
        .collect();

    let gain = |e_cd: u64, a_c: u64, a_d: u64| -> f64 {
        e_cd as f64 / m - (a_c as f64 * a_d as f64) / (2.0 * m * m)
    };

    let mut heap = std::collections::BinaryHeap::new();
    for (v, set) in sets.iter().enumerate() {
        for &u in set {
            if v < u {
                heap.push(MergeCandidate {
                    gain: gain(1, deg_sum[v], deg_sum[u]),
                    a: v,
                    b: u,
                    version_a: 0,
                    version_b: 0,
                });
            }
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    while let Some(top) = heap.pop() {
        let MergeCandidate {
            gain: g_ab,
            a,
            b,
            version_a,
            version_b,
        } = top;
        if !alive[a] || !alive[b] || version[a] != version_a || version[b] != version_b {
            continue;
        }
        if g_ab <= 0.0 {
            break;
        }

        // Merge b into a (a < b by construction).
        alive[b] = false;
        parent[b] = a;
        version[a] += 1;
        deg_sum[a] += deg_sum[b];
        let b_neighbors = std::mem::take(&mut e_between[b]);
        e_between[a].remove(&b);
        for (x, e_bx) in b_neighbors {
            if x == a {
                continue;
            }
            e_between[x].remove(&b);
            *e_between[a].entry(x).or_insert(0) += e_bx;
            *e_between[x].entry(a).or_insert(0) = e_between[a][&x];
        }
        for (&x, &e_ax) in &e_between[a] {
            let (lo, hi) = if a < x { (a, x) } else { (x, a) };
            heap.push(MergeCandidate {
                gain: gain(e_ax, deg_sum[a], deg_sum[x]),
                a: lo,
                b: hi,
                version_a: version[lo],
                version_b: version[hi],
            });
        }
    }

    // Resolve merge forest to roots, then renumber densely in node order.
    let mut root = vec![0usize; n];
    for v in 0..n {
        let mut r = v;
        while parent[r] != r {
            r = parent[r];
        }
        root[v] = r;
    }
    let mut relabel: HashMap<usize, u32> = HashMap::new();
    let mut labels = vec![0u32; n];
    for v in 0..n {
        let next = relabel.len() as u32;
        labels[v] = *relabel.entry(root[v]).or_insert(next);
    }

    let q = modularity(g, &labels)?;
    // The greedy result never scores below the one-community partition; fall
    // back to it in the degenerate case where no merge had positive gain yet
    // singletons score negative.
    let all_in_one = vec![0u32; n];
    let q_one = modularity(g, &all_in_one)?;
    if q < q_one {
        return Ok((all_in_one, q_one));
    }
    Ok((labels, q))
}

/// Full structural pipeline: coreness, core selection, communities.
pub fn analyze<F: Real>(g: &Graph<F>, core_fraction: f64) -> Result<(NodePartition, F)> {
    let coreness = k_shell(g);
    let roles = select_core(&coreness, g, core_fraction)?;
    let (communities, q) = detect_communities(g)?;
    Ok((
        NodePartition {
            roles,
            communities,
            coreness,
        },
        q,
    ))
}

/// Writes the per-node sidecar table: `node community coreness role`.
pub fn write_partition(
    part: &NodePartition,
    ids: &NodeIdMap,
    mut out: impl Write,
) -> Result<()> {
    writeln!(out, "# node community coreness role")?;
    for v in 0..part.len() {
        writeln!(
            out,
            "{} {} {} {}",
            ids.label(v),
            part.communities[v],
            part.coreness[v],
            part.roles[v].as_str()
        )?;
    }
    Ok(())
}

/// Partition rows keyed by external label, as read from a sidecar table.
#[derive(Debug, Clone)]
pub struct PartitionTable {
    rows: HashMap<String, (u32, u32, Role)>,
}

impl PartitionTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Role and community for an external label, if present.
    pub fn lookup(&self, label: &str) -> Option<(Role, u32)> {
        self.rows.get(label).map(|&(community, _, role)| (role, community))
    }

    /// Aligns rows to a graph's node ids. Every graph label must have a row;
    /// rows for labels absent from the graph are ignored.
    pub fn align(&self, ids: &NodeIdMap) -> Result<NodePartition> {
        let mut missing = Vec::new();
        let n = ids.len();
        let mut part = NodePartition {
            roles: Vec::with_capacity(n),
            communities: Vec::with_capacity(n),
            coreness: Vec::with_capacity(n),
        };
        for v in 0..n {
            let label = ids.label(v);
            match self.rows.get(label) {
                Some(&(community, coreness, role)) => {
                    part.communities.push(community);
                    part.coreness.push(coreness);
                    part.roles.push(role);
                }
                None => missing.push(label.to_string()),
            }
        }
        if !missing.is_empty() {
            let count = missing.len();
            missing.truncate(5);
            return Err(Error::UnmatchedLabels {
                count,
                sample: missing,
            });
        }
        Ok(part)
    }
}

/// Reads a sidecar table written by [`write_partition`].
pub fn read_partition(source: impl BufRead) -> Result<PartitionTable> {
    let mut rows = HashMap::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 4 columns (node community coreness role), got {}", tokens.len()),
            });
        }
        let community: u32 = tokens[1].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("invalid community label {:?}", tokens[1]),
        })?;
        let coreness: u32 = tokens[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("invalid coreness {:?}", tokens[2]),
        })?;
        let role = match tokens[3] {
            "core" => Role::Core,
            "periphery" => Role::Periphery,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("invalid role {other:?}, expected core or periphery"),
                })
            }
        };
        rows.insert(tokens[0].to_string(), (community, coreness, role));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PartitionTable { rows })
}
