//! Randomized invariants across the whole pipeline. Each property states a
//! structural guarantee and checks it against an independent brute-force
//! oracle where one exists.

use std::collections::BTreeSet;

use proptest::prelude::*;

use sccp_core::cascade::{
    select_seeds, simulate, simulate_with, ProbabilityTable, SeedSpec, SeedStrategy, SimOptions,
    StopReason,
};
use sccp_core::graph::{load_edge_list, write_edge_list, Graph, LoadOptions, NodeId, NodeIdMap};
use sccp_core::structure::{
    detect_communities, k_shell, modularity, read_partition, select_core, write_partition,
    NodePartition, Role,
};

type G = Graph<f64>;

/// Arbitrary undirected simple graph with 2..=max_n nodes.
fn undirected_graph(max_n: usize) -> impl Strategy<Value = G> {
    (2..=max_n).prop_flat_map(|n| {
        let pair = (0..n, 0..n).prop_filter_map("self loop", |(u, v)| (u != v).then_some((u, v)));
        proptest::collection::vec(pair, 0..3 * n)
            .prop_map(move |pairs| Graph::from_pairs(false, n, pairs).unwrap())
    })
}

fn connected_ish_graph(max_n: usize) -> impl Strategy<Value = G> {
    // At least a spanning path, plus random extra edges: keeps cascades busy.
    (2..=max_n).prop_flat_map(|n| {
        let pair = (0..n, 0..n).prop_filter_map("self loop", |(u, v)| (u != v).then_some((u, v)));
        proptest::collection::vec(pair, 0..2 * n).prop_map(move |mut pairs| {
            pairs.extend((1..n).map(|v| (v - 1, v)));
            Graph::from_pairs(false, n, pairs).unwrap()
        })
    })
}

fn table(cc: f64, cp: f64, pc: f64, pp0: f64, pp1: f64) -> ProbabilityTable<f64> {
    ProbabilityTable {
        core_core: cc,
        core_periphery: cp,
        periphery_core: pc,
        periphery_same: pp0,
        periphery_cross: pp1,
    }
}

/// Iterated minimum-degree peeling, the textbook definition of coreness.
fn brute_force_coreness(g: &G) -> Vec<u32> {
    let adj = g.undirected_neighbor_sets();
    let n = g.node_count();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut out = vec![0u32; n];
    let mut k = 0usize;
    let mut left = n;
    while left > 0 {
        let victim = (0..n).find(|&v| alive[v] && deg[v] <= k);
        match victim {
            Some(v) => {
                alive[v] = false;
                out[v] = k as u32;
                left -= 1;
                for &w in &adj[v] {
                    if alive[w] {
                        deg[w] -= 1;
                    }
                }
            }
            None => k += 1,
        }
    }
    out
}

/// Deterministic uniform draw from the edge-trial coordinates, so two
/// simulations over the same graph share randomness exactly.
fn hash_draw(t: usize, u: NodeId, v: NodeId) -> f64 {
    let mut z = (t as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((u as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add((v as u64).wrapping_mul(0x94D0_49BB_1331_11EB));
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip_is_lossless(g in undirected_graph(24)) {
        let ids = NodeIdMap::identity(g.node_count());
        let mut buf = Vec::new();
        write_edge_list(&g, &ids, &mut buf, true).unwrap();
        if g.edge_count() == 0 {
            return Ok(()); // empty files are rejected by design
        }
        let loaded = load_edge_list::<f64>(
            buf.as_slice(),
            &LoadOptions { directed: false, weighted: true, reverse: false },
        ).unwrap();
        // Loader ids follow first appearance, so internal canonical order can
        // flip; undirected edges compare as unordered label pairs.
        let relabel = |g2: &G, ids2: &NodeIdMap| -> BTreeSet<(String, String, String)> {
            g2.edges().iter().map(|e| {
                let mut a = ids2.label(e.src).to_string();
                let mut b = ids2.label(e.dst).to_string();
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                (a, b, format!("{}", e.weight))
            }).collect()
        };
        prop_assert_eq!(relabel(&g, &ids), relabel(&loaded.graph, &loaded.ids));
    }

    #[test]
    fn degree_sum_is_twice_edge_count(g in undirected_graph(30)) {
        let total: usize = g.degrees().iter().sum();
        prop_assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn k_shell_matches_iterated_peeling(g in undirected_graph(24)) {
        prop_assert_eq!(k_shell(&g), brute_force_coreness(&g));
    }

    #[test]
    fn coreness_is_bounded_by_degree(g in undirected_graph(30)) {
        let coreness = k_shell(&g);
        let degrees = g.degrees();
        for v in 0..g.node_count() {
            prop_assert!(coreness[v] as usize <= degrees[v]);
        }
    }

    #[test]
    fn detected_communities_report_their_own_modularity(g in undirected_graph(20)) {
        prop_assume!(g.edge_count() > 0);
        let (labels, q) = detect_communities(&g).unwrap();
        let recomputed: f64 = modularity(&g, &labels).unwrap();
        prop_assert!((recomputed - q).abs() < 1e-12, "q={q} recomputed={recomputed}");
        // Never worse than the trivial one-community split (Q = 0), since
        // that is the fallback.
        prop_assert!(q >= 0.0);
        // Labels are dense 0..count.
        let distinct: BTreeSet<u32> = labels.iter().copied().collect();
        let count = distinct.len() as u32;
        prop_assert!(distinct.iter().copied().eq(0..count));
    }

    #[test]
    fn select_core_meets_its_quota(g in undirected_graph(30), fraction in 0.05f64..0.95) {
        let coreness = k_shell(&g);
        let roles = select_core(&coreness, &g, fraction).unwrap();
        let n = g.node_count() as f64;
        let cores = roles.iter().filter(|r| matches!(r, Role::Core)).count() as f64;
        prop_assert!(cores >= 1.0);
        // ceil semantics, allowing the float-snap at exact integers.
        prop_assert!(cores >= fraction * n - 1e-6);
        prop_assert!(cores < fraction * n + 1.0 + 1e-6);
    }

    #[test]
    fn core_nodes_dominate_coreness(g in undirected_graph(30), fraction in 0.05f64..0.95) {
        // Every selected core node has coreness >= every periphery node's,
        // except where the quota cut falls inside a coreness tie.
        let coreness = k_shell(&g);
        let roles = select_core(&coreness, &g, fraction).unwrap();
        let min_core = (0..g.node_count())
            .filter(|&v| matches!(roles[v], Role::Core))
            .map(|v| coreness[v])
            .min()
            .unwrap();
        let max_peri = (0..g.node_count())
            .filter(|&v| matches!(roles[v], Role::Periphery))
            .map(|v| coreness[v])
            .max();
        if let Some(max_peri) = max_peri {
            prop_assert!(max_peri <= min_core);
        }
    }

    #[test]
    fn partition_sidecar_round_trips(
        g in undirected_graph(20),
        fraction in 0.1f64..0.9,
    ) {
        prop_assume!(g.edge_count() > 0);
        let coreness = k_shell(&g);
        let roles = select_core(&coreness, &g, fraction).unwrap();
        let (communities, _) = detect_communities(&g).unwrap();
        let part = NodePartition { roles, communities, coreness };
        let ids = NodeIdMap::identity(part.len());
        let mut buf = Vec::new();
        write_partition(&part, &ids, &mut buf).unwrap();
        let back = read_partition(buf.as_slice()).unwrap().align(&ids).unwrap();
        prop_assert_eq!(back, part);
    }

    #[test]
    fn seed_selection_respects_strategy(
        g in undirected_graph(24),
        seed in any::<u64>(),
        raw_count in 1usize..6,
        which in 0u8..3,
    ) {
        let n = g.node_count();
        let coreness = k_shell(&g);
        let roles = select_core(&coreness, &g, 0.3).unwrap();
        let part = NodePartition { roles, communities: vec![0; n], coreness };
        let (strategy, pool): (SeedStrategy, Vec<NodeId>) = match which {
            0 => (SeedStrategy::RandomCore, (0..n).filter(|&v| part.is_core(v)).collect()),
            1 => (SeedStrategy::RandomPeriphery, (0..n).filter(|&v| !part.is_core(v)).collect()),
            _ => (SeedStrategy::UniformRandom, (0..n).collect()),
        };
        let count = raw_count.min(pool.len().max(1));
        let spec = SeedSpec { strategy, count, rng_seed: seed };
        match select_seeds(&spec, &part) {
            Ok(seeds) => {
                prop_assert_eq!(seeds.len(), count);
                prop_assert!(seeds.windows(2).all(|w| w[0] < w[1]), "sorted and unique");
                prop_assert!(seeds.iter().all(|s| pool.contains(s)));
                // Deterministic under the same seed.
                prop_assert_eq!(select_seeds(&spec, &part).unwrap(), seeds);
            }
            Err(_) => prop_assert!(pool.is_empty() || count > pool.len()),
        }
    }

    #[test]
    fn cascade_accounting_is_consistent(
        g in connected_ish_graph(16),
        part_seed in 0usize..1000,
        p in 0.0f64..1.0,
        rng_seed in any::<u64>(),
    ) {
        let n = g.node_count();
        let part = {
            let coreness = k_shell(&g);
            let roles = select_core(&coreness, &g, 0.25).unwrap();
            let communities: Vec<u32> = (0..n).map(|v| ((v + part_seed) % 3) as u32).collect();
            NodePartition { roles, communities, coreness }
        };
        let seeds = vec![part_seed % n];
        let opts = SimOptions { max_iters: 60, patience: Some(5), rng_seed };
        let trace = simulate(&g, &part, &ProbabilityTable::uniform(p), &seeds, &opts).unwrap();

        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        let mut running = 0usize;
        for (t, rec) in trace.records.iter().enumerate() {
            prop_assert_eq!(rec.iteration, t);
            running += rec.newly_infected.len();
            prop_assert_eq!(rec.cumulative, running);
            prop_assert!(rec.cumulative <= n);
            prop_assert_eq!(rec.cumulative_core + rec.cumulative_periphery, rec.cumulative);
            let by_comm: usize = rec.cumulative_by_community.iter().sum();
            prop_assert_eq!(by_comm, rec.cumulative);
            for &v in &rec.newly_infected {
                prop_assert!(seen.insert(v), "node {v} infected twice");
            }
        }
        prop_assert_eq!(&trace.records[0].newly_infected, &seeds);
        if trace.stop == StopReason::Saturated {
            prop_assert_eq!(trace.records.last().unwrap().cumulative, n);
        }
        // Every recorded transmission uses a real edge into a non-seed,
        // and each non-seed infected node is claimed exactly once.
        let mut claimed: BTreeSet<NodeId> = BTreeSet::new();
        for inf in &trace.infections {
            prop_assert!(g.neighbors(inf.src).contains(&inf.dst));
            prop_assert!(!seeds.contains(&inf.dst));
            prop_assert!(claimed.insert(inf.dst));
        }
        let infected_non_seed: BTreeSet<NodeId> =
            seen.iter().copied().filter(|v| !seeds.contains(v)).collect();
        prop_assert_eq!(claimed, infected_non_seed);
    }

    #[test]
    fn certain_transmission_is_breadth_first_search(
        g in connected_ish_graph(20),
        start in 0usize..20,
    ) {
        let n = g.node_count();
        let seeds = vec![start % n];
        let part = NodePartition {
            roles: vec![Role::Periphery; n],
            communities: vec![0; n],
            coreness: vec![0; n],
        };
        let opts = SimOptions { max_iters: n + 1, patience: Some(1), rng_seed: 7 };
        let trace = simulate(&g, &part, &ProbabilityTable::uniform(1.0), &seeds, &opts).unwrap();

        // BFS layers from the seed are exactly the per-iteration frontiers.
        let mut dist = vec![usize::MAX; n];
        dist[seeds[0]] = 0;
        let mut frontier = seeds.clone();
        let mut layer = 0usize;
        while !frontier.is_empty() {
            prop_assert!(layer < trace.records.len());
            let mut expect = frontier.clone();
            expect.sort_unstable();
            prop_assert_eq!(&trace.records[layer].newly_infected, &expect);
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in g.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = layer + 1;
                        next.push(v);
                    }
                }
            }
            frontier = next;
            layer += 1;
        }
        for rec in &trace.records[layer..] {
            prop_assert!(rec.newly_infected.is_empty());
        }
    }

    #[test]
    fn raising_probabilities_never_shrinks_the_cascade(
        g in connected_ish_graph(16),
        lo in proptest::array::uniform5(0.0f64..0.6),
        bump in proptest::array::uniform5(0.0f64..0.4),
        start in 0usize..16,
    ) {
        let n = g.node_count();
        let coreness = k_shell(&g);
        let roles = select_core(&coreness, &g, 0.25).unwrap();
        let communities: Vec<u32> = (0..n).map(|v| (v % 2) as u32).collect();
        let part = NodePartition { roles, communities, coreness };
        let seeds = vec![start % n];

        let low = table(lo[0], lo[1], lo[2], lo[3], lo[4]);
        let high = table(
            lo[0] + bump[0], lo[1] + bump[1], lo[2] + bump[2],
            lo[3] + bump[3], lo[4] + bump[4],
        );
        // Shared randomness: the draw depends only on (iteration, src, dst),
        // so whenever the low run fires an edge the high run fires it too.
        let run = |tbl: &ProbabilityTable<f64>| {
            simulate_with(&g, &part, tbl, &seeds, 40, None, hash_draw).unwrap()
        };
        let a = run(&low);
        let b = run(&high);
        let mut low_set: BTreeSet<NodeId> = BTreeSet::new();
        let mut high_set: BTreeSet<NodeId> = BTreeSet::new();
        for t in 0..a.records.len().min(b.records.len()) {
            low_set.extend(a.records[t].newly_infected.iter().copied());
            high_set.extend(b.records[t].newly_infected.iter().copied());
            prop_assert!(
                low_set.is_subset(&high_set),
                "iteration {t}: low run infected nodes the high run missed"
            );
        }
    }

    #[test]
    fn stalled_stops_honor_patience(
        g in connected_ish_graph(12),
        window in 1usize..5,
    ) {
        let n = g.node_count();
        let part = NodePartition {
            roles: vec![Role::Periphery; n],
            communities: vec![0; n],
            coreness: vec![0; n],
        };
        let opts = SimOptions { max_iters: 100, patience: Some(window), rng_seed: 1 };
        let trace = simulate(&g, &part, &ProbabilityTable::uniform(0.0), &vec![0], &opts).unwrap();
        prop_assert_eq!(trace.stop, StopReason::Stalled);
        // Seeds at iteration 0, then exactly `window` empty iterations.
        prop_assert_eq!(trace.len(), window + 1);
        prop_assert_eq!(trace.records.last().unwrap().cumulative, 1);
    }
}

mod sigmoid_equivariance {
    use super::*;
    use sccp_core::analysis::{fit_sigmoid, fit_sigmoid_xy};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn amplitude_scale_and_x_shift(
            amp in 50.0f64..5000.0,
            rate in 0.1f64..1.5,
            mid_frac in 0.3f64..0.7,
            scale in 0.2f64..8.0,
            shift in -40.0f64..40.0,
        ) {
            let len = 41usize;
            let mid = mid_frac * (len - 1) as f64;
            let ys: Vec<f64> = (0..len)
                .map(|x| amp / (1.0 + (-(rate * (x as f64 - mid))).exp()))
                .collect();
            let base = fit_sigmoid(&ys).unwrap();

            let scaled_ys: Vec<f64> = ys.iter().map(|y| y * scale).collect();
            let scaled = fit_sigmoid(&scaled_ys).unwrap();
            prop_assert!((scaled.amplitude / base.amplitude / scale - 1.0).abs() < 1e-4);
            prop_assert!((scaled.rate / base.rate - 1.0).abs() < 1e-4);
            prop_assert!((scaled.midpoint - base.midpoint).abs() < 1e-3);

            let xs: Vec<f64> = (0..len).map(|x| x as f64).collect();
            let moved_xs: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let moved = fit_sigmoid_xy(&moved_xs, &ys).unwrap();
            prop_assert!((moved.rate / base.rate - 1.0).abs() < 1e-4);
            prop_assert!((moved.midpoint - shift - base.midpoint).abs() < 1e-3);
        }
    }
}
