//! Edge-class spreading model (EBH) and its Monte-Carlo harness.
//!
//! Infected nodes stay infectious and retry every live edge each iteration
//! with the class probability (SI-style persistent attempts, no recovery).
//! Updates are synchronous: a node infected in iteration t first transmits
//! in t+1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classify::{classify_edge, EdgeClass};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::scalar::Real;
use crate::structure::{NodePartition, Role};

/// Per-class transmission probabilities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbabilityTable<F> {
    pub core_core: F,
    pub core_periphery: F,
    pub periphery_core: F,
    pub periphery_same: F,
    pub periphery_cross: F,
}

impl<F: Real> ProbabilityTable<F> {
    /// Every class gets probability `p` (the simple-contagion baseline).
    pub fn uniform(p: F) -> Self {
        Self {
            core_core: p,
            core_periphery: p,
            periphery_core: p,
            periphery_same: p,
            periphery_cross: p,
        }
    }

    /// Default EBH parameterization: 0.006, 0.004, 0.0003, 0.0001, 0.00001
    /// down the class hierarchy.
    pub fn ebh_default() -> Self {
        Self {
            core_core: F::from_f64_lossy(0.006),
            core_periphery: F::from_f64_lossy(0.004),
            periphery_core: F::from_f64_lossy(0.00001),
            periphery_same: F::from_f64_lossy(0.0003),
            periphery_cross: F::from_f64_lossy(0.0001),
        }
    }

    pub fn get(&self, class: EdgeClass) -> F {
        match class {
            EdgeClass::CC => self.core_core,
            EdgeClass::CP => self.core_periphery,
            EdgeClass::PC => self.periphery_core,
            EdgeClass::PP0 => self.periphery_same,
            EdgeClass::PP1 => self.periphery_cross,
        }
    }

    /// Advisory check of the strict hierarchy cc > cp > pp0 > pp1 > pc.
    /// The uniform baseline intentionally violates it.
    pub fn hierarchy_ok(&self) -> bool {
        self.core_core > self.core_periphery
            && self.core_periphery > self.periphery_same
            && self.periphery_same > self.periphery_cross
            && self.periphery_cross > self.periphery_core
    }

    pub fn validate(&self) -> Result<()> {
        for class in EdgeClass::ALL {
            let p = self.get(class);
            if !(p >= F::zero() && p <= F::one()) {
                return Err(Error::InvalidParam(format!(
                    "probability for class {} must lie in [0, 1], got {p}",
                    class.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// How the initially infected set is chosen.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SeedStrategy {
    /// Exactly these nodes; `count` is ignored.
    Explicit(Vec<NodeId>),
    /// Uniform draw from periphery nodes.
    RandomPeriphery,
    /// Uniform draw from core nodes.
    RandomCore,
    /// Uniform draw from the periphery of one community.
    SingleCommunity(u32),
    /// Count split as evenly as possible across the peripheries of the
    /// given communities (earlier entries get the remainder).
    MultiCommunity(Vec<u32>),
    /// Uniform draw from all nodes.
    UniformRandom,
}

impl SeedStrategy {
    fn describe(&self) -> String {
        match self {
            SeedStrategy::Explicit(_) => "explicit seed list".into(),
            SeedStrategy::RandomPeriphery => "random periphery seeds".into(),
            SeedStrategy::RandomCore => "random core seeds".into(),
            SeedStrategy::SingleCommunity(c) => format!("community {c} periphery seeds"),
            SeedStrategy::MultiCommunity(_) => "multi-community periphery seeds".into(),
            SeedStrategy::UniformRandom => "uniform random seeds".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeedSpec {
    pub strategy: SeedStrategy,
    pub count: usize,
    pub rng_seed: u64,
}

/// Draws the seed set for a spec. Deterministic given `spec.rng_seed`;
/// the result is sorted ascending.
pub fn select_seeds(spec: &SeedSpec, part: &NodePartition) -> Result<Vec<NodeId>> {
    let n = part.len();
    if let SeedStrategy::Explicit(list) = &spec.strategy {
        if list.is_empty() {
            return Err(Error::InvalidParam("explicit seed list is empty".into()));
        }
        let mut seeds = Vec::with_capacity(list.len());
        for &v in list {
            if v >= n {
                return Err(Error::NodeOutOfRange(v, n));
            }
            seeds.push(v);
        }
        seeds.sort_unstable();
        seeds.dedup();
        return Ok(seeds);
    }

    if spec.count == 0 {
        return Err(Error::InvalidParam("seed count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let periphery_of = |c: u32| -> Vec<NodeId> {
        (0..n)
            .filter(|&v| part.roles[v] == Role::Periphery && part.communities[v] == c)
            .collect()
    };
    let mut draw = |pool: &[NodeId], count: usize, what: String| -> Result<Vec<NodeId>> {
        if count > pool.len() {
            return Err(Error::PoolTooSmall {
                what,
                requested: count,
                available: pool.len(),
            });
        }
        let picked = rand::seq::index::sample(&mut rng, pool.len(), count);
        Ok(picked.into_iter().map(|i| pool[i]).collect())
    };

    let mut seeds = match &spec.strategy {
        SeedStrategy::Explicit(_) => unreachable!(),
        SeedStrategy::RandomPeriphery => {
            let pool: Vec<NodeId> = (0..n).filter(|&v| part.roles[v] == Role::Periphery).collect();
            draw(&pool, spec.count, spec.strategy.describe())?
        }
        SeedStrategy::RandomCore => {
            let pool: Vec<NodeId> = (0..n).filter(|&v| part.roles[v] == Role::Core).collect();
            draw(&pool, spec.count, spec.strategy.describe())?
        }
        SeedStrategy::SingleCommunity(c) => {
            draw(&periphery_of(*c), spec.count, spec.strategy.describe())?
        }
        SeedStrategy::MultiCommunity(communities) => {
            if communities.is_empty() {
                return Err(Error::InvalidParam(
                    "multi-community seeding needs at least one community".into(),
                ));
            }
            let mut distinct = communities.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != communities.len() {
                return Err(Error::InvalidParam(
                    "multi-community seeding lists a community twice".into(),
                ));
            }
            let base = spec.count / communities.len();
            let remainder = spec.count % communities.len();
            let mut seeds = Vec::with_capacity(spec.count);
            for (i, &c) in communities.iter().enumerate() {
                let share = base + usize::from(i < remainder);
                seeds.extend(draw(
                    &periphery_of(c),
                    share,
                    format!("community {c} periphery seeds"),
                )?);
            }
            seeds
        }
        SeedStrategy::UniformRandom => {
            let pool: Vec<NodeId> = (0..n).collect();
            draw(&pool, spec.count, spec.strategy.describe())?
        }
    };
    seeds.sort_unstable();
    Ok(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SimOptions {
    /// Hard cap on spreading iterations (iteration 0 is the seed round).
    pub max_iters: usize,
    /// Stop after this many consecutive iterations without a new infection.
    pub patience: Option<usize>,
    pub rng_seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            patience: None,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every node infected.
    Saturated,
    /// Hit the iteration cap.
    IterationCap,
    /// Patience window elapsed with no new infection.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub newly_infected: Vec<NodeId>,
    pub cumulative: usize,
    pub cumulative_core: usize,
    pub cumulative_periphery: usize,
    pub cumulative_by_community: Vec<usize>,
}

/// One successful transmission: `src` infected `dst` at `iteration`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfectionEdge {
    pub iteration: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub class: EdgeClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeTrace {
    pub records: Vec<IterationRecord>,
    pub infections: Vec<InfectionEdge>,
    pub stop: StopReason,
    pub node_count: usize,
    pub community_count: usize,
}

impl CascadeTrace {
    /// Number of recorded iterations (including iteration 0).
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cumulative_series(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.cumulative).collect()
    }

    pub fn new_counts(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.newly_infected.len()).collect()
    }

    /// First iteration whose cumulative core count is positive.
    pub fn first_core_infection(&self) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.cumulative_core > 0)
            .map(|r| r.iteration)
    }
}

/// Runs the cascade with an injected uniform-draw source.
///
/// `draw(iteration, src, dst)` must return a value in [0, 1); the edge
/// transmits when the draw falls below its class probability. Every live
/// edge (infected source, target uninfected at iteration start) consumes
/// exactly one draw per iteration. Injecting a pure function of
/// `(iteration, src, dst)` yields coupled randomness across runs, which is
/// how the monotonicity property is checked.
pub fn simulate_with<F: Real>(
    g: &Graph<F>,
    part: &NodePartition,
    probs: &ProbabilityTable<F>,
    seeds: &[NodeId],
    max_iters: usize,
    patience: Option<usize>,
    mut draw: impl FnMut(usize, NodeId, NodeId) -> f64,
) -> Result<CascadeTrace> {
    probs.validate()?;
    part.check_against(g)?;
    if max_iters == 0 {
        return Err(Error::InvalidParam("max_iters must be positive".into()));
    }
    if patience == Some(0) {
        return Err(Error::InvalidParam("patience must be positive".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidParam("seed set is empty".into()));
    }
    let n = g.node_count();
    let mut seed_set: Vec<NodeId> = seeds.to_vec();
    seed_set.sort_unstable();
    seed_set.dedup();
    if let Some(&v) = seed_set.iter().find(|&&v| v >= n) {
        return Err(Error::NodeOutOfRange(v, n));
    }

    let community_count = part.community_count();
    let p_of = |u: NodeId, v: NodeId| -> f64 {
        probs
            .get(classify_edge(
                part.roles[u],
                part.roles[v],
                part.communities[u],
                part.communities[v],
            ))
            .to_f64_lossy()
    };

    let mut infected = vec![false; n];
    let mut cumulative = 0usize;
    let mut cumulative_core = 0usize;
    let mut cumulative_periphery = 0usize;
    let mut cumulative_by_community = vec![0usize; community_count];
    let mut records = Vec::new();
    let mut infections = Vec::new();

    let absorb = |newly: &Vec<NodeId>,
                      infected: &mut Vec<bool>,
                      cumulative: &mut usize,
                      cumulative_core: &mut usize,
                      cumulative_periphery: &mut usize,
                      by_community: &mut Vec<usize>| {
        for &v in newly {
            infected[v] = true;
            *cumulative += 1;
            match part.roles[v] {
                Role::Core => *cumulative_core += 1,
                Role::Periphery => *cumulative_periphery += 1,
            }
            by_community[part.communities[v] as usize] += 1;
        }
    };

    absorb(
        &seed_set,
        &mut infected,
        &mut cumulative,
        &mut cumulative_core,
        &mut cumulative_periphery,
        &mut cumulative_by_community,
    );
    records.push(IterationRecord {
        iteration: 0,
        newly_infected: seed_set,
        cumulative,
        cumulative_core,
        cumulative_periphery,
        cumulative_by_community: cumulative_by_community.clone(),
    });

    let mut stop = StopReason::IterationCap;
    if cumulative == n {
        stop = StopReason::Saturated;
    } else {
        let mut stalled_for = 0usize;
        let mut pending = vec![false; n];
        for t in 1..=max_iters {
            // Sweep live edges in fixed (source id, neighbor id) order. A
            // target claimed earlier this iteration still consumes draws
            // from later senders; only the first success records the edge.
            let mut newly: Vec<NodeId> = Vec::new();
            for u in 0..n {
                if !infected[u] {
                    continue;
                }
                for &v in g.neighbors(u) {
                    if infected[v] {
                        continue;
                    }
                    let p = p_of(u, v);
                    if draw(t, u, v) < p && !pending[v] {
                        pending[v] = true;
                        newly.push(v);
                        infections.push(InfectionEdge {
                            iteration: t,
                            src: u,
                            dst: v,
                            class: classify_edge(
                                part.roles[u],
                                part.roles[v],
                                part.communities[u],
                                part.communities[v],
                            ),
                        });
                    }
                }
            }
            newly.sort_unstable();
            for &v in &newly {
                pending[v] = false;
            }
            absorb(
                &newly,
                &mut infected,
                &mut cumulative,
                &mut cumulative_core,
                &mut cumulative_periphery,
                &mut cumulative_by_community,
            );
            let new_count = newly.len();
            records.push(IterationRecord {
                iteration: t,
                newly_infected: newly,
                cumulative,
                cumulative_core,
                cumulative_periphery,
                cumulative_by_community: cumulative_by_community.clone(),
            });
            if cumulative == n {
                stop = StopReason::Saturated;
                break;
            }
            if let Some(window) = patience {
                if new_count == 0 {
                    stalled_for += 1;
                    if stalled_for >= window {
                        stop = StopReason::Stalled;
                        break;
                    }
                } else {
                    stalled_for = 0;
                }
            }
        }
    }

    Ok(CascadeTrace {
        records,
        infections,
        stop,
        node_count: n,
        community_count,
    })
}

/// Runs one seeded cascade. One uniform draw per live edge per iteration,
/// taken from a dedicated stream, so equal inputs give equal traces.
pub fn simulate<F: Real>(
    g: &Graph<F>,
    part: &NodePartition,
    probs: &ProbabilityTable<F>,
    seeds: &[NodeId],
    opts: &SimOptions,
) -> Result<CascadeTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    simulate_with(g, part, probs, seeds, opts.max_iters, opts.patience, |_, _, _| {
        rng.gen::<f64>()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanStd<F> {
    pub mean: F,
    /// Population standard deviation across trials.
    pub std: F,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AggregateRecord<F> {
    pub iteration: usize,
    pub new: MeanStd<F>,
    pub cumulative: MeanStd<F>,
    pub cumulative_core: MeanStd<F>,
    pub cumulative_periphery: MeanStd<F>,
    pub communities: Vec<MeanStd<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun<F> {
    pub trials: usize,
    pub records: Vec<AggregateRecord<F>>,
    /// Individual traces, kept only on request.
    pub traces: Option<Vec<CascadeTrace>>,
}

impl<F: Real> MonteCarloRun<F> {
    pub fn mean_cumulative(&self) -> Vec<F> {
        self.records.iter().map(|r| r.cumulative.mean).collect()
    }
}

/// Runs `trials` independent cascades in parallel and aggregates them.
///
/// Trial i simulates with rng_seed = opts.rng_seed + i and draws its seed
/// set with spec.rng_seed + i (explicit seed lists repeat unchanged).
/// Shorter runs are padded with their final cumulative values (new = 0) so
/// iterations align.
pub fn monte_carlo<F: Real>(
    g: &Graph<F>,
    part: &NodePartition,
    probs: &ProbabilityTable<F>,
    spec: &SeedSpec,
    trials: usize,
    opts: &SimOptions,
    retain_traces: bool,
) -> Result<MonteCarloRun<F>> {
    if trials == 0 {
        return Err(Error::InvalidParam("trial count must be positive".into()));
    }
    let traces: Vec<CascadeTrace> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let spec_i = SeedSpec {
                rng_seed: spec.rng_seed.wrapping_add(i as u64),
                ..spec.clone()
            };
            let seeds = select_seeds(&spec_i, part)?;
            let opts_i = SimOptions {
                rng_seed: opts.rng_seed.wrapping_add(i as u64),
                ..*opts
            };
            simulate(g, part, probs, &seeds, &opts_i)
        })
        .collect::<Result<_>>()?;

    let records = aggregate(&traces);
    Ok(MonteCarloRun {
        trials,
        records,
        traces: retain_traces.then_some(traces),
    })
}

fn aggregate<F: Real>(traces: &[CascadeTrace]) -> Vec<AggregateRecord<F>> {
    let len = traces.iter().map(CascadeTrace::len).max().unwrap_or(0);
    let community_count = traces.first().map_or(0, |t| t.community_count);
    let trials = F::from_usize_lossy(traces.len());

    let mean_std = |value_at: &dyn Fn(&CascadeTrace) -> usize| -> MeanStd<F> {
        let mut sum = F::zero();
        for t in traces {
            sum += F::from_usize_lossy(value_at(t));
        }
        let mean = sum / trials;
        let mut var = F::zero();
        for t in traces {
            let d = F::from_usize_lossy(value_at(t)) - mean;
            var += d * d;
        }
        MeanStd {
            mean,
            std: (var / trials).sqrt(),
        }
    };

    // Shorter trials are padded: cumulative columns hold at their final
    // value, new-infection counts drop to zero.
    fn row(t: &CascadeTrace, j: usize) -> &IterationRecord {
        &t.records[j.min(t.records.len() - 1)]
    }

    (0..len)
        .map(|j| {
            let new = mean_std(&|t| {
                if j < t.records.len() {
                    row(t, j).newly_infected.len()
                } else {
                    0
                }
            });
            let cumulative = mean_std(&|t| row(t, j).cumulative);
            let cumulative_core = mean_std(&|t| row(t, j).cumulative_core);
            let cumulative_periphery = mean_std(&|t| row(t, j).cumulative_periphery);
            let communities = (0..community_count)
                .map(|c| mean_std(&|t| row(t, j).cumulative_by_community[c]))
                .collect();
            AggregateRecord {
                iteration: j,
                new,
                cumulative,
                cumulative_core,
                cumulative_periphery,
                communities,
            }
        })
        .collect()
}

/// Builds the who-infected-whom interaction graph: a directed graph whose
/// edge weights count how often each transmission edge fired across traces.
pub fn infection_graph<F: Real>(traces: &[CascadeTrace]) -> Result<Graph<F>> {
    let first = traces.first().ok_or(Error::EmptyInput)?;
    let n = first.node_count;
    if traces.iter().any(|t| t.node_count != n) {
        return Err(Error::InvalidParam(
            "traces come from graphs of different sizes".into(),
        ));
    }
    let mut counts: std::collections::BTreeMap<(NodeId, NodeId), u64> =
        std::collections::BTreeMap::new();
    for t in traces {
        for inf in &t.infections {
            *counts.entry((inf.src, inf.dst)).or_insert(0) += 1;
        }
    }
    let triples = counts
        .into_iter()
        .map(|((src, dst), c)| (src, dst, F::from_f64_lossy(c as f64)));
    Ok(Graph::build(true, n, triples)?.0)
}
