//! Sensing-set selection policies: top-n random, top-n greedy, the
//! context-aware policy built on node observability and coverage utility,
//! and an exhaustive hindsight oracle used for testing.
//!
//! Every policy implements [`CoverStrategy`] and is looked up by name, so the
//! simulator and CLI stay agnostic of which variant runs.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::IntervalGraph;
use crate::model::DeviceId;

/// Observability of each non-sensing node: how many sensing-set neighbors it
/// has in the interval graph. Sensing nodes carry no entry.
pub type ObservabilityMap = BTreeMap<DeviceId, u32>;

/// Coverage utility of each sensing node: sum of 1/sigma(v) over its
/// non-sensing neighbors. Rewards observing hard-to-see nodes.
pub type UtilityMap = BTreeMap<DeviceId, f64>;

pub fn observability(graph: &IntervalGraph, sensing_set: &BTreeSet<DeviceId>) -> ObservabilityMap {
    let mut map = BTreeMap::new();
    for &v in &graph.nodes {
        if sensing_set.contains(&v) {
            continue;
        }
        let sigma = graph
            .neighbors(v)
            .map_or(0, |ns| ns.iter().filter(|u| sensing_set.contains(u)).count());
        map.insert(v, sigma as u32);
    }
    map
}

/// Utility per sensing node. Summation order is ascending neighbor id so the
/// floating-point result is deterministic.
pub fn coverage_utility(
    graph: &IntervalGraph,
    sensing_set: &BTreeSet<DeviceId>,
    obs: &ObservabilityMap,
) -> Result<UtilityMap> {
    let mut map = BTreeMap::new();
    for &u in sensing_set {
        let mut delta = 0.0;
        if let Some(ns) = graph.neighbors(u) {
            for v in ns {
                if sensing_set.contains(v) {
                    continue;
                }
                let sigma = obs.get(v).copied().unwrap_or(0);
                if sigma == 0 {
                    return Err(Error::Internal(format!(
                        "non-sensing node {v} adjacent to sensing node {u} has sigma = 0"
                    )));
                }
                delta += 1.0 / sigma as f64;
            }
        }
        map.insert(u, delta);
    }
    Ok(map)
}

/// Internal nodes with at least one remaining incident edge, ascending id.
fn edge_bearing(
    remaining: &BTreeMap<DeviceId, BTreeSet<DeviceId>>,
    v_in: &BTreeSet<DeviceId>,
    selected: &BTreeSet<DeviceId>,
) -> Vec<DeviceId> {
    v_in.iter()
        .filter(|d| !selected.contains(d))
        .filter(|d| remaining.get(d).is_some_and(|ns| !ns.is_empty()))
        .copied()
        .collect()
}

fn remove_incident(remaining: &mut BTreeMap<DeviceId, BTreeSet<DeviceId>>, u: DeviceId) {
    if let Some(ns) = remaining.remove(&u) {
        for v in ns {
            if let Some(back) = remaining.get_mut(&v) {
                back.remove(&u);
            }
        }
    }
}

/// Fill `selected` up to `n` uniformly without replacement from the
/// unselected part of `v_in`.
fn random_fill(
    selected: &mut BTreeSet<DeviceId>,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
    rng: &mut ChaCha8Rng,
) {
    let mut pool: Vec<DeviceId> = v_in.iter().filter(|d| !selected.contains(d)).copied().collect();
    while selected.len() < n && !pool.is_empty() {
        let i = rng.gen_range(0..pool.len());
        selected.insert(pool.swap_remove(i));
    }
}

/// Top-n random cover: draw uniformly among internal nodes that still have an
/// incident edge, deleting covered edges as we go; once edges run out, fill
/// the budget uniformly from the remaining internal nodes.
pub fn select_random(
    graph: &IntervalGraph,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> BTreeSet<DeviceId> {
    let n = n.min(v_in.len());
    let mut remaining = graph.adjacency.clone();
    let mut selected = BTreeSet::new();
    while selected.len() < n {
        let eligible = edge_bearing(&remaining, v_in, &selected);
        if eligible.is_empty() {
            break;
        }
        let u = eligible[rng.gen_range(0..eligible.len())];
        selected.insert(u);
        remove_incident(&mut remaining, u);
    }
    random_fill(&mut selected, v_in, n, rng);
    selected
}

/// Top-n greedy cover: repeatedly take the internal node with the highest
/// remaining degree (ties to the smallest id), deleting its incident edges;
/// once every remaining internal node has degree zero, fill by ascending id.
pub fn select_greedy(
    graph: &IntervalGraph,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
) -> BTreeSet<DeviceId> {
    let n = n.min(v_in.len());
    let mut remaining = graph.adjacency.clone();
    let mut selected = BTreeSet::new();
    while selected.len() < n {
        let best = v_in
            .iter()
            .filter(|d| !selected.contains(*d))
            .map(|&d| (remaining.get(&d).map_or(0, |ns| ns.len()), d))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .filter(|&(deg, _)| deg > 0);
        match best {
            Some((_, u)) => {
                selected.insert(u);
                remove_incident(&mut remaining, u);
            }
            None => break,
        }
    }
    // budget unfilled: ascending id
    for &d in v_in.iter() {
        if selected.len() >= n {
            break;
        }
        selected.insert(d);
    }
    selected
}

/// Context-aware selection: keep the k members of the previous sensing set
/// with the highest coverage utility, then fill the open slots with internal
/// non-sensing nodes ranked by observability. Ties break to the smallest id;
/// exhausted rankings fall back to a seeded uniform fill.
pub fn select_hcontext(
    graph: &IntervalGraph,
    v_in: &BTreeSet<DeviceId>,
    prev_sensing: &BTreeSet<DeviceId>,
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeSet<DeviceId>> {
    let n = n.min(v_in.len());
    let obs = observability(graph, prev_sensing);
    let util = coverage_utility(graph, prev_sensing, &obs)?;

    // keep: highest-utility k of the previous set
    let mut kept: Vec<(f64, DeviceId)> = prev_sensing
        .iter()
        .map(|&u| (util.get(&u).copied().unwrap_or(0.0), u))
        .collect();
    kept.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut selected: BTreeSet<DeviceId> =
        kept.iter().take(k.min(n)).map(|&(_, u)| u).collect();

    // replace: internal non-sensing nodes with sigma > 0, descending sigma
    let mut candidates: Vec<(u32, DeviceId)> = obs
        .iter()
        .filter(|(d, &sigma)| v_in.contains(d) && sigma > 0)
        .map(|(&d, &sigma)| (sigma, d))
        .collect();
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, d) in candidates {
        if selected.len() >= n {
            break;
        }
        selected.insert(d);
    }

    random_fill(&mut selected, v_in, n, rng);
    Ok(selected)
}

/// Exhaustive hindsight oracle: the n-subset of internal devices that covers
/// the most edges of the given (truth) graph. Only edge-bearing internal
/// nodes are enumerated; the guard refuses instances beyond 10^7 subsets.
/// Ties resolve to the lexicographically smallest subset.
pub fn select_optimal_bruteforce(
    truth_graph: &IntervalGraph,
    v_in: &BTreeSet<DeviceId>,
    n: usize,
) -> Result<(BTreeSet<DeviceId>, usize)> {
    const GUARD: f64 = 1e7;
    let n = n.min(v_in.len());
    let relevant: Vec<DeviceId> = v_in
        .iter()
        .filter(|&&d| truth_graph.degree(d) > 0)
        .copied()
        .collect();
    let choose = n.min(relevant.len());

    let mut combos = 1f64;
    for i in 0..choose {
        combos = combos * (relevant.len() - i) as f64 / (i + 1) as f64;
        if combos > GUARD {
            return Err(Error::OracleGuard(format!(
                "C({}, {choose}) exceeds 10^7 subsets",
                relevant.len()
            )));
        }
    }

    let mut best_set: Option<Vec<DeviceId>> = None;
    let mut best_count = 0usize;
    let mut indices: Vec<usize> = (0..choose).collect();
    loop {
        let subset: Vec<DeviceId> = indices.iter().map(|&i| relevant[i]).collect();
        let members: BTreeSet<DeviceId> = subset.iter().copied().collect();
        let count = truth_graph
            .edges
            .iter()
            .filter(|(a, b)| members.contains(a) || members.contains(b))
            .count();
        // lex enumeration: strict improvement keeps the smallest winner
        if best_set.is_none() || count > best_count {
            best_count = count;
            best_set = Some(subset);
        }

        // next combination in lexicographic order
        if choose == 0 {
            break;
        }
        let mut i = choose as isize - 1;
        while i >= 0 && indices[i as usize] == i as usize + relevant.len() - choose {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        indices[i] += 1;
        for j in i + 1..choose {
            indices[j] = indices[j - 1] + 1;
        }
    }

    let mut selected: BTreeSet<DeviceId> = best_set.unwrap_or_default().into_iter().collect();
    // pad to n with ascending unselected ids; padding cannot change the count
    for &d in v_in.iter() {
        if selected.len() >= n {
            break;
        }
        selected.insert(d);
    }
    Ok((selected, best_count))
}

/// Context handed to a strategy each round: the previous sensing set, the
/// resolved budget, the keep count, and the selection RNG stream.
pub struct SelectCtx<'a> {
    pub prev_sensing: &'a BTreeSet<DeviceId>,
    pub n: usize,
    pub k: usize,
    pub rng: &'a mut ChaCha8Rng,
}

/// A sensing-set selection policy, selected by name at runtime.
pub trait CoverStrategy {
    fn name(&self) -> &'static str;
    fn select(
        &self,
        graph: &IntervalGraph,
        v_in: &BTreeSet<DeviceId>,
        ctx: &mut SelectCtx<'_>,
    ) -> Result<BTreeSet<DeviceId>>;
}

struct RandomStrategy;
struct GreedyStrategy;
struct HContextStrategy;

impl CoverStrategy for RandomStrategy {
    fn name(&self) -> &'static str {
        "random"
    }
    fn select(
        &self,
        graph: &IntervalGraph,
        v_in: &BTreeSet<DeviceId>,
        ctx: &mut SelectCtx<'_>,
    ) -> Result<BTreeSet<DeviceId>> {
        Ok(select_random(graph, v_in, ctx.n, ctx.rng))
    }
}

impl CoverStrategy for GreedyStrategy {
    fn name(&self) -> &'static str {
        "greedy"
    }
    fn select(
        &self,
        graph: &IntervalGraph,
        v_in: &BTreeSet<DeviceId>,
        ctx: &mut SelectCtx<'_>,
    ) -> Result<BTreeSet<DeviceId>> {
        Ok(select_greedy(graph, v_in, ctx.n))
    }
}

impl CoverStrategy for HContextStrategy {
    fn name(&self) -> &'static str {
        "hcontext"
    }
    fn select(
        &self,
        graph: &IntervalGraph,
        v_in: &BTreeSet<DeviceId>,
        ctx: &mut SelectCtx<'_>,
    ) -> Result<BTreeSet<DeviceId>> {
        select_hcontext(graph, v_in, ctx.prev_sensing, ctx.n, ctx.k, ctx.rng)
    }
}

pub fn cover_strategy(name: &str) -> Option<Box<dyn CoverStrategy>> {
    match name {
        "random" => Some(Box::new(RandomStrategy)),
        "greedy" => Some(Box::new(GreedyStrategy)),
        "hcontext" => Some(Box::new(HContextStrategy)),
        _ => None,
    }
}

pub const COVER_STRATEGIES: &[&str] = &["random", "greedy", "hcontext"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ground_truth_graph;
    use crate::model::{ContactEvent, ContactTrace, DeviceRegistry};
    use crate::rng::{derive_rng, Stream};

    fn ids(v: &[u32]) -> BTreeSet<DeviceId> {
        v.iter().map(|&i| DeviceId(i)).collect()
    }

    fn graph_of(edges: &[(u32, u32)]) -> IntervalGraph {
        // build via a throwaway trace so construction invariants apply
        let mut internal = BTreeSet::new();
        let mut seen_only = BTreeSet::new();
        for &(a, b) in edges {
            internal.insert(DeviceId(a));
            seen_only.insert(DeviceId(b));
        }
        let external: BTreeSet<DeviceId> =
            seen_only.difference(&internal).copied().collect();
        let reg = DeviceRegistry::new(internal, external).unwrap();
        let events = edges
            .iter()
            .map(|&(a, b)| ContactEvent { time_s: 0, scanner: DeviceId(a), seen: DeviceId(b) })
            .collect();
        let trace = ContactTrace::new(events, reg, 1, 0).unwrap();
        ground_truth_graph(&trace, 0, 1)
    }

    #[test]
    fn observability_counts_sensing_neighbors() {
        // edges {s1,x},{s2,x}, sensing {s1,s2} -> sigma(x) = 2
        let g = graph_of(&[(1, 9), (2, 9)]);
        let obs = observability(&g, &ids(&[1, 2]));
        assert_eq!(obs.get(&DeviceId(9)), Some(&2));
        assert!(!obs.contains_key(&DeviceId(1)));
    }

    #[test]
    fn observability_zero_without_sensing_neighbor() {
        // y touched only by non-sensing p
        let g = graph_of(&[(1, 9), (2, 8)]);
        let obs = observability(&g, &ids(&[1]));
        assert_eq!(obs.get(&DeviceId(8)), Some(&0));
    }

    #[test]
    fn utility_weights_by_inverse_observability() {
        // u=1 adjacent to v1=8 (sigma 1) and v2=9 (sigma 2, also seen by 2)
        let g = graph_of(&[(1, 8), (1, 9), (2, 9)]);
        let sensing = ids(&[1, 2]);
        let obs = observability(&g, &sensing);
        let util = coverage_utility(&g, &sensing, &obs).unwrap();
        assert!((util[&DeviceId(1)] - 1.5).abs() < 1e-9);
        assert!((util[&DeviceId(2)] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn utility_zero_for_sensing_only_neighbors_and_isolated() {
        let g = graph_of(&[(1, 2)]);
        let sensing = ids(&[1, 2]);
        let obs = observability(&g, &sensing);
        let util = coverage_utility(&g, &sensing, &obs).unwrap();
        assert_eq!(util[&DeviceId(1)], 0.0);
        assert_eq!(util[&DeviceId(2)], 0.0);

        // isolated sensing node
        let g2 = graph_of(&[(1, 9)]);
        let sensing2 = ids(&[1, 3]);
        // node 3 not in the graph; give it membership by extending nodes
        let mut g2 = g2;
        g2.nodes.insert(DeviceId(3));
        let obs2 = observability(&g2, &sensing2);
        let util2 = coverage_utility(&g2, &sensing2, &obs2).unwrap();
        assert_eq!(util2[&DeviceId(3)], 0.0);
    }

    #[test]
    fn utility_conservation() {
        let g = graph_of(&[(1, 8), (1, 9), (2, 9), (2, 3), (3, 7), (4, 7)]);
        let sensing = ids(&[1, 2]);
        let obs = observability(&g, &sensing);
        let util = coverage_utility(&g, &sensing, &obs).unwrap();
        let total: f64 = util.values().sum();
        let touched = obs.values().filter(|&&s| s > 0).count();
        assert!((total - touched as f64).abs() < 1e-9);
    }

    #[test]
    fn random_single_eligible_node() {
        let g = graph_of(&[(1, 9)]);
        let mut rng = derive_rng(42, Stream::Selection);
        let s = select_random(&g, &ids(&[1, 2, 3]), 1, &mut rng);
        assert_eq!(s, ids(&[1]));
    }

    #[test]
    fn random_full_budget_returns_all() {
        let g = graph_of(&[(1, 9)]);
        let mut rng = derive_rng(42, Stream::Selection);
        let v_in = ids(&[1, 2, 3]);
        assert_eq!(select_random(&g, &v_in, 3, &mut rng), v_in);
    }

    #[test]
    fn random_deterministic_per_seed() {
        let g = graph_of(&[(1, 9), (2, 9), (3, 8), (4, 7), (5, 7)]);
        let v_in = ids(&[1, 2, 3, 4, 5]);
        let a = select_random(&g, &v_in, 2, &mut derive_rng(42, Stream::Selection));
        let b = select_random(&g, &v_in, 2, &mut derive_rng(42, Stream::Selection));
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_star_center() {
        let g = graph_of(&[(1, 7), (1, 8), (1, 9), (2, 9)]);
        assert_eq!(select_greedy(&g, &ids(&[1, 2]), 1), ids(&[1]));
    }

    #[test]
    fn greedy_path_takes_middle_pair() {
        // path a=1 - b=2 - c=3 - d=4, all internal, n=2 -> {2, 3}
        let g = graph_of(&[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(select_greedy(&g, &ids(&[1, 2, 3, 4]), 2), ids(&[2, 3]));
    }

    #[test]
    fn greedy_triangle_tie_breaks_low_id() {
        let g = graph_of(&[(1, 2), (2, 3), (1, 3)]);
        assert_eq!(select_greedy(&g, &ids(&[1, 2, 3]), 1), ids(&[1]));
    }

    #[test]
    fn hcontext_keeps_high_utility_and_recruits_observed() {
        // prev {1,2}; Delta(1)=1.5 via v 8 (sigma 1) + v 9 (sigma 2),
        // Delta(2)=0.5 via v 9; internal non-sensing 3 has sigma 2, 4 has sigma 1.
        let g = graph_of(&[(1, 8), (1, 9), (2, 9), (1, 3), (2, 3), (1, 4)]);
        let mut g = g;
        // 3 and 4 are internal here
        let v_in = ids(&[1, 2, 3, 4]);
        g.nodes.extend(v_in.iter().copied());
        let prev = ids(&[1, 2]);
        let mut rng = derive_rng(1, Stream::Selection);
        let s = select_hcontext(&g, &v_in, &prev, 2, 1, &mut rng).unwrap();
        assert_eq!(s, ids(&[1, 3]));
    }

    #[test]
    fn hcontext_k_equals_n_is_identity() {
        let g = graph_of(&[(1, 9), (2, 9)]);
        let prev = ids(&[1, 2]);
        let mut rng = derive_rng(1, Stream::Selection);
        let s = select_hcontext(&g, &ids(&[1, 2, 3]), &prev, 2, 2, &mut rng).unwrap();
        assert_eq!(s, prev);
    }

    #[test]
    fn hcontext_fills_randomly_when_no_observable_candidates() {
        // no internal non-sensing node has sigma > 0
        let g = graph_of(&[(1, 9)]);
        let prev = ids(&[1]);
        let v_in = ids(&[1, 2, 3, 4]);
        let mut rng = derive_rng(5, Stream::Selection);
        let s = select_hcontext(&g, &v_in, &prev, 3, 1, &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains(&DeviceId(1)));
        assert!(s.is_subset(&v_in));
    }

    #[test]
    fn hcontext_k_larger_than_prev_keeps_all() {
        let g = graph_of(&[(1, 9), (2, 9)]);
        let prev = ids(&[1]);
        let mut rng = derive_rng(5, Stream::Selection);
        let s = select_hcontext(&g, &ids(&[1, 2, 3]), &prev, 2, 2, &mut rng).unwrap();
        assert!(s.contains(&DeviceId(1)));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn oracle_star_center() {
        let g = graph_of(&[(1, 7), (1, 8), (1, 9)]);
        let (s, count) = select_optimal_bruteforce(&g, &ids(&[1, 2]), 1).unwrap();
        assert_eq!(s, ids(&[1]));
        assert_eq!(count, 3);
    }

    #[test]
    fn oracle_full_budget_covers_everything() {
        let g = graph_of(&[(1, 7), (2, 8), (3, 9)]);
        let v_in = ids(&[1, 2, 3]);
        let (_, count) = select_optimal_bruteforce(&g, &v_in, 3).unwrap();
        assert_eq!(count, g.edges.len());
    }

    #[test]
    fn oracle_dominates_greedy_on_fixture() {
        // 8 internal, a spread of edges to externals and each other
        let edges = [
            (1, 2), (1, 3), (1, 20), (2, 21), (2, 22), (3, 23), (4, 24), (4, 25),
            (5, 20), (5, 26), (6, 27), (6, 2), (7, 28), (7, 29), (8, 21), (8, 30),
            (3, 31), (4, 32), (5, 33), (6, 34),
        ];
        let g = graph_of(&edges);
        let v_in = ids(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let (_, oracle) = select_optimal_bruteforce(&g, &v_in, 3).unwrap();
        let greedy = select_greedy(&g, &v_in, 3);
        let covered = g
            .edges
            .iter()
            .filter(|(a, b)| greedy.contains(a) || greedy.contains(b))
            .count();
        assert!(oracle >= covered);
    }

    #[test]
    fn oracle_guard_refuses_large_instances() {
        let edges: Vec<(u32, u32)> = (1..=60).map(|i| (i, 1000 + i)).collect();
        let g = graph_of(&edges);
        let v_in: BTreeSet<DeviceId> = (1..=60).map(DeviceId).collect();
        assert!(matches!(
            select_optimal_bruteforce(&g, &v_in, 20),
            Err(Error::OracleGuard(_))
        ));
    }

    #[test]
    fn strategy_registry_resolves_names() {
        for name in COVER_STRATEGIES {
            assert_eq!(cover_strategy(name).unwrap().name(), *name);
        }
        assert!(cover_strategy("simulated-annealing").is_none());
    }

    #[test]
    fn selectors_via_registry_match_direct_calls() {
        let g = graph_of(&[(1, 2), (2, 3), (3, 4)]);
        let v_in = ids(&[1, 2, 3, 4]);
        let prev = ids(&[1, 2]);
        let mut rng = derive_rng(9, Stream::Selection);
        let mut ctx = SelectCtx { prev_sensing: &prev, n: 2, k: 1, rng: &mut rng };
        let via_trait = cover_strategy("greedy").unwrap().select(&g, &v_in, &mut ctx).unwrap();
        assert_eq!(via_trait, select_greedy(&g, &v_in, 2));
    }
}
