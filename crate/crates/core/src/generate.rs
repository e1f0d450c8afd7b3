//! Synthetic network generation: community-structured core-periphery graphs
//! grown by preferential attachment, plus uniform random baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::scalar::Real;
use crate::structure::{k_shell, select_core, NodePartition, Role};

/// Parameters for [`generate_sccp`].
///
/// The graph starts as `communities` disjoint cliques of `clique_size` nodes.
/// Growth then adds `new_nodes[c]` nodes to community `c`, one per community
/// per round. Each new node draws its edge budget `m` uniformly from
/// `degree_min..=degree_max` and splits it `round(intra_fraction * m)` edges
/// into its own community, the rest into other communities, all targets
/// chosen preferentially by degree. Finally the top `core_fraction` of nodes
/// by coreness are relabeled into an extra community (label = `communities`).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SccpParams {
    pub communities: usize,
    pub clique_size: usize,
    pub new_nodes: Vec<usize>,
    pub intra_fraction: f64,
    pub degree_min: usize,
    pub degree_max: usize,
    pub core_fraction: f64,
    pub rng_seed: u64,
}

impl SccpParams {
    pub fn node_count(&self) -> usize {
        self.communities * self.clique_size + self.new_nodes.iter().sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.communities == 0 {
            return Err(Error::InvalidParam("community count must be positive".into()));
        }
        if self.clique_size < 2 {
            return Err(Error::InvalidParam(format!(
                "clique size must be at least 2, got {}",
                self.clique_size
            )));
        }
        if self.communities * self.clique_size < 2 {
            return Err(Error::InvalidParam("seed cliques must hold at least 2 nodes".into()));
        }
        if self.new_nodes.len() != self.communities {
            return Err(Error::InvalidParam(format!(
                "expected {} per-community growth quotas, got {}",
                self.communities,
                self.new_nodes.len()
            )));
        }
        if !(0.5..=1.0).contains(&self.intra_fraction) {
            return Err(Error::InvalidParam(format!(
                "intra-community fraction must lie in [0.5, 1], got {}",
                self.intra_fraction
            )));
        }
        if self.degree_min == 0 || self.degree_min > self.degree_max {
            return Err(Error::InvalidParam(format!(
                "degree range must satisfy 1 <= min <= max, got [{}, {}]",
                self.degree_min, self.degree_max
            )));
        }
        if !(self.core_fraction > 0.0 && self.core_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "core fraction must lie in (0, 1), got {}",
                self.core_fraction
            )));
        }
        Ok(())
    }
}

/// Counters from the growth phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GrowthStats {
    pub intra_edges: usize,
    pub inter_edges: usize,
    /// Nodes whose edge budget or split was reduced because a target pool
    /// was smaller than requested.
    pub capped_nodes: usize,
}

/// A generated graph together with its structural labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph<F> {
    pub graph: Graph<F>,
    pub partition: NodePartition,
    pub growth: GrowthStats,
}

/// Splits an edge budget into (intra, inter) counts using
/// round-half-to-even on `intra_fraction * m`.
pub(crate) fn intra_inter_split(intra_fraction: f64, m: usize) -> (usize, usize) {
    let intra = (intra_fraction * m as f64).round_ties_even() as usize;
    let intra = intra.min(m);
    (intra, m - intra)
}

/// Samples `count` distinct nodes from `candidates` with probability
/// proportional to degree + 1 (so zero-degree nodes stay reachable).
///
/// `degrees` is indexed by node id. Draw order is preserved. Errors when
/// `count` exceeds the pool; callers cap first.
pub fn preferential_select(
    candidates: &[NodeId],
    degrees: &[usize],
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<NodeId>> {
    if count > candidates.len() {
        return Err(Error::PoolTooSmall {
            what: "preferential attachment targets".into(),
            requested: count,
            available: candidates.len(),
        });
    }
    let weights: Vec<u64> = candidates.iter().map(|&v| degrees[v] as u64 + 1).collect();
    let mut fenwick = Fenwick::new(&weights);
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let total = fenwick.total();
        debug_assert!(total > 0);
        let x = rng.gen_range(0..total);
        let idx = fenwick.find(x);
        picked.push(candidates[idx]);
        fenwick.clear(idx);
    }
    Ok(picked)
}

/// Fenwick tree over u64 weights supporting prefix search and removal.
struct Fenwick {
    tree: Vec<u64>,
    weights: Vec<u64>,
}

impl Fenwick {
    fn new(weights: &[u64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            let mut j = i + 1;
            while j <= n {
                tree[j] += w;
                j += j & j.wrapping_neg();
            }
        }
        Self {
            tree,
            weights: weights.to_vec(),
        }
    }

    fn total(&self) -> u64 {
        let n = self.tree.len() - 1;
        let mut sum = 0;
        let mut j = n;
        while j > 0 {
            sum += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        sum
    }

    /// Smallest index whose prefix sum exceeds `target` (0-based).
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }

    fn clear(&mut self, idx: usize) {
        let n = self.tree.len() - 1;
        let w = self.weights[idx];
        self.weights[idx] = 0;
        let mut j = idx + 1;
        while j <= n {
            self.tree[j] -= w;
            j += j & j.wrapping_neg();
        }
    }
}

/// Generates a community-structured core-periphery graph.
///
/// Uses a dedicated seeded generator, so equal parameters reproduce the
/// graph bit for bit.
pub fn generate_sccp<F: Real>(params: &SccpParams) -> Result<LabeledGraph<F>> {
    params.validate()?;
    let k = params.communities;
    let s = params.clique_size;
    let n = params.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut communities: Vec<u32> = Vec::with_capacity(n);
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    let mut degrees = vec![0usize; n];
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();

    for c in 0..k {
        for i in 0..s {
            let v = c * s + i;
            communities.push(c as u32);
            members[c].push(v);
            for j in 0..i {
                let u = c * s + j;
                pairs.push((u, v));
                degrees[u] += 1;
                degrees[v] += 1;
            }
        }
    }

    let mut growth = GrowthStats::default();
    let rounds = params.new_nodes.iter().max().copied().unwrap_or(0);
    let mut next_id = k * s;
    let mut inter_pool: Vec<NodeId> = Vec::new();
    for round in 0..rounds {
        for c in 0..k {
            if round >= params.new_nodes[c] {
                continue;
            }
            let v = next_id;
            next_id += 1;

            let m: usize = rng.gen_range(params.degree_min..=params.degree_max);
            inter_pool.clear();
            for (d, group) in members.iter().enumerate() {
                if d != c {
                    inter_pool.extend_from_slice(group);
                }
            }
            let eligible = members[c].len() + inter_pool.len();
            let m_eff = m.min(eligible);
            let (intra_want, inter_want) = intra_inter_split(params.intra_fraction, m_eff);
            let intra_n = intra_want.min(members[c].len());
            let inter_n = inter_want.min(inter_pool.len());
            if m_eff < m || intra_n < intra_want || inter_n < inter_want {
                growth.capped_nodes += 1;
            }

            let intra = preferential_select(&members[c], &degrees, intra_n, &mut rng)?;
            let inter = preferential_select(&inter_pool, &degrees, inter_n, &mut rng)?;
            for &t in intra.iter().chain(&inter) {
                pairs.push((t, v));
                degrees[t] += 1;
                degrees[v] += 1;
            }
            growth.intra_edges += intra.len();
            growth.inter_edges += inter.len();

            communities.push(c as u32);
            members[c].push(v);
        }
    }
    debug_assert_eq!(next_id, n);

    let graph = Graph::from_pairs(false, n, pairs)?;
    let coreness = k_shell(&graph);
    let roles = select_core(&coreness, &graph, params.core_fraction)?;
    for v in 0..n {
        if roles[v] == Role::Core {
            communities[v] = k as u32;
        }
    }
    Ok(LabeledGraph {
        graph,
        partition: NodePartition {
            roles,
            communities,
            coreness,
        },
        growth,
    })
}

/// Uniform random graph with exactly `m_edges` distinct undirected edges.
pub fn generate_er<F: Real>(n: usize, m_edges: usize, rng_seed: u64) -> Result<Graph<F>> {
    if n == 0 {
        return Err(Error::InvalidParam("node count must be positive".into()));
    }
    let max_edges = n as u64 * (n as u64 - 1) / 2;
    if m_edges as u64 > max_edges {
        return Err(Error::InvalidParam(format!(
            "{m_edges} edges requested but {n} nodes admit at most {max_edges}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // Floyd's algorithm: a uniform m-subset of pair indices in O(m) draws.
    let m = m_edges as u64;
    let mut chosen = std::collections::BTreeSet::new();
    for j in (max_edges - m)..max_edges {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }

    let pairs = chosen.into_iter().map(|idx| decode_pair(idx, n as u64));
    Graph::from_pairs(false, n, pairs)
}

/// Maps a linear index in [0, n(n-1)/2) to the pair (u, v), u < v, in
/// lexicographic order.
fn decode_pair(idx: u64, n: u64) -> (NodeId, NodeId) {
    // cum(u) = number of pairs whose first node is < u.
    let cum = |u: u64| u * (n - 1) - u * (u.saturating_sub(1)) / 2;
    let mut lo = 0u64;
    let mut hi = n - 1;
    // Largest u with cum(u) <= idx.
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if cum(mid) <= idx {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let u = lo;
    let v = u + 1 + (idx - cum(u));
    (u as NodeId, v as NodeId)
}
