//! Allocation solvers over orderings of providers.
//!
//! All solvers maximize the objective `V * P_succ - sum_k w_k * P_k` for
//! per-provider weights `w` (virtual costs for the revenue-optimal auction,
//! plain costs for welfare-style benchmarks). The empty strategy, worth 0, is
//! always feasible, so no solver returns a negative objective.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::objective_from_laws;
use crate::model::{DurationModel, Environment, ProviderId, RecruitmentStrategy};
use crate::time_opt::{optimize_problem, OrderingProblem, TimeOptConfig, TimeOptResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub strategy: RecruitmentStrategy,
    pub objective: f64,
    pub nodes_explored: usize,
}

impl AllocationResult {
    fn empty(nodes_explored: usize) -> Self {
        AllocationResult { strategy: RecruitmentStrategy::empty(), objective: 0.0, nodes_explored }
    }
}

/// Set of orderings sharing a fixed prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingGroup {
    pub prefix: Vec<ProviderId>,
    pub lower: f64,
    pub upper: f64,
}

/// Time-optimizer results shared across solver calls on one environment.
///
/// Keys are orderings plus the weights' bit patterns, so reuse is exact.
/// A cache must not be shared between environments or time-optimizer
/// configurations.
#[derive(Debug, Default)]
pub struct TimeCache {
    map: Mutex<HashMap<Vec<u64>, TimeOptResult>>,
}

const CACHE_LIMIT: usize = 1 << 20;

impl TimeCache {
    pub fn new() -> Self {
        TimeCache::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_insert(&self, key: Vec<u64>, compute: impl FnOnce() -> TimeOptResult) -> TimeOptResult {
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let result = compute();
        let mut map = self.map.lock().unwrap();
        if map.len() >= CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, result.clone());
        result
    }
}

/// Options shared by the ordering searches.
#[derive(Debug, Clone, Default)]
pub struct SearchOptions<'c> {
    pub time_opt: TimeOptConfig,
    /// Candidate pool; `None` means every provider.
    pub pool: Option<Vec<ProviderId>>,
    /// Disables pruning in branch-and-bound (exhaustive group expansion).
    pub no_prune: bool,
    pub cache: Option<&'c TimeCache>,
}

impl<'c> SearchOptions<'c> {
    pub fn new(time_opt: &TimeOptConfig) -> Self {
        SearchOptions { time_opt: time_opt.clone(), ..Default::default() }
    }

    pub fn with_cache(mut self, cache: &'c TimeCache) -> Self {
        self.cache = Some(cache);
        self
    }
}

/// Marker bit distinguishing the dominating pseudo-provider in cache keys.
const DOMINATOR_BIT: u64 = 1 << 63;

/// Bound evaluation for one search call, memoized per prefix.
struct Bounds<'a, 'c> {
    env: &'a Environment,
    weights: &'a [f64],
    pool: Vec<ProviderId>,
    opts: &'a SearchOptions<'c>,
    lower_memo: HashMap<Vec<ProviderId>, TimeOptResult>,
    upper_memo: HashMap<Vec<ProviderId>, f64>,
}

impl<'a, 'c> Bounds<'a, 'c> {
    fn new(env: &'a Environment, weights: &'a [f64], opts: &'a SearchOptions<'c>) -> Self {
        let pool = opts.pool.clone().unwrap_or_else(|| env.ids().collect());
        Bounds { env, weights, pool, opts, lower_memo: HashMap::new(), upper_memo: HashMap::new() }
    }

    fn solve(&self, laws: Vec<&DurationModel>, w: Vec<f64>, key: impl FnOnce() -> Vec<u64>) -> TimeOptResult {
        let run = || {
            let problem = OrderingProblem::new(laws, w, self.env.value(), self.env.deadline());
            optimize_problem(&problem, &self.opts.time_opt)
        };
        match self.opts.cache {
            Some(cache) => cache.get_or_insert(key(), run),
            None => run(),
        }
    }

    fn remaining(&self, prefix: &[ProviderId]) -> Vec<ProviderId> {
        self.pool.iter().copied().filter(|id| !prefix.contains(id)).collect()
    }

    fn lower_result(&mut self, prefix: &[ProviderId]) -> TimeOptResult {
        if let Some(r) = self.lower_memo.get(prefix) {
            return r.clone();
        }
        let laws = prefix.iter().map(|&id| &self.env.provider(id).duration).collect();
        let w: Vec<f64> = prefix.iter().map(|id| self.weights[id.index()]).collect();
        let key = || {
            let mut k: Vec<u64> = prefix.iter().map(|id| id.0 as u64).collect();
            k.extend(w.iter().map(|x| x.to_bits()));
            k
        };
        let r = self.solve(laws, w.clone(), key);
        self.lower_memo.insert(prefix.to_vec(), r.clone());
        r
    }

    fn lower(&mut self, prefix: &[ProviderId]) -> f64 {
        if prefix.is_empty() {
            return 0.0;
        }
        self.lower_result(prefix).objective
    }

    fn upper(&mut self, prefix: &[ProviderId]) -> f64 {
        if let Some(&u) = self.upper_memo.get(prefix) {
            return u;
        }
        let lower = self.lower(prefix);
        let rest = self.remaining(prefix);
        let u = if rest.is_empty() {
            lower
        } else {
            let dominator = dominating_law(self.env, &rest);
            let w_min = rest.iter().map(|id| self.weights[id.index()]).fold(f64::INFINITY, f64::min);
            let mut laws: Vec<&DurationModel> =
                prefix.iter().map(|&id| &self.env.provider(id).duration).collect();
            laws.push(&dominator);
            let mut w: Vec<f64> = prefix.iter().map(|id| self.weights[id.index()]).collect();
            w.push(w_min);
            let key = || {
                let mut k: Vec<u64> = prefix.iter().map(|id| id.0 as u64).collect();
                k.push(DOMINATOR_BIT);
                k.extend(rest.iter().map(|id| id.0 as u64));
                k.extend(w.iter().map(|x| x.to_bits()));
                k
            };
            self.solve(laws, w.clone(), key).objective.max(lower)
        };
        self.upper_memo.insert(prefix.to_vec(), u);
        u
    }

    fn strategy(&mut self, prefix: &[ProviderId]) -> RecruitmentStrategy {
        if prefix.is_empty() {
            return RecruitmentStrategy::empty();
        }
        let times = self.lower_result(prefix).times;
        let entries = prefix.iter().copied().zip(times).collect();
        RecruitmentStrategy::new(entries, self.env.deadline()).expect("optimizer returns feasible times")
    }
}

/// Fastest-of law of a provider set: `1 - prod(1 - G_i)`.
pub fn dominating_law(env: &Environment, providers: &[ProviderId]) -> DurationModel {
    DurationModel::first_of(providers.iter().map(|&id| &env.provider(id).duration))
}

fn check_weights(weights: &[f64], env: &Environment) -> Result<()> {
    if weights.len() != env.n() {
        return Err(Error::InvalidBids(format!(
            "expected {} weights, got {}",
            env.n(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidBids("weights must be finite and non-negative".into()));
    }
    Ok(())
}

/// Objective of the best ordering starting with `group.prefix`, bounded
/// below by the prefix alone with optimized times.
pub fn lower_bound(prefix: &[ProviderId], weights: &[f64], env: &Environment, opts: &SearchOptions) -> f64 {
    Bounds::new(env, weights, opts).lower(prefix)
}

/// Prefix followed by a pseudo-provider that dominates every subset of the
/// remaining providers: fastest-of law at the smallest remaining weight.
pub fn upper_bound(prefix: &[ProviderId], weights: &[f64], env: &Environment, opts: &SearchOptions) -> f64 {
    Bounds::new(env, weights, opts).upper(prefix)
}

/// Exact search over orderings by branch-and-bound on shared prefixes.
/// Pools smaller than this are searched without a local-search incumbent.
const SEED_MIN_POOL: usize = 6;

pub fn bnb_search(weights: &[f64], env: &Environment, opts: &SearchOptions) -> Result<AllocationResult> {
    check_weights(weights, env)?;
    let mut bounds = Bounds::new(env, weights, opts);
    let mut u_low = 0.0;
    let mut best: Vec<ProviderId> = vec![];
    // A local-search incumbent, lowered slightly, only prunes groups that
    // cannot hold the optimum, so the result matches an unseeded search.
    let mut prune_at: f64 = 0.0;
    if !opts.no_prune && bounds.remaining(&[]).len() >= SEED_MIN_POOL {
        let (_, seed, _) = local_search(&mut bounds);
        prune_at = seed - 1e-9 * seed.abs().max(1.0);
    }
    let root_upper = bounds.upper(&[]);
    let mut frontier = vec![OrderingGroup { prefix: vec![], lower: 0.0, upper: root_upper }];
    let mut nodes = 0;

    loop {
        if !opts.no_prune {
            let cut = prune_at.max(u_low);
            frontier.retain(|g| g.upper > cut);
        }
        // Highest lower bound first; ties go to the lexicographically smallest prefix.
        let Some(pick) = (0..frontier.len()).max_by(|&a, &b| {
            let (ga, gb) = (&frontier[a], &frontier[b]);
            ga.lower.total_cmp(&gb.lower).then_with(|| gb.prefix.cmp(&ga.prefix))
        }) else {
            break;
        };
        let group = frontier.swap_remove(pick);
        nodes += 1;
        for child_id in bounds.remaining(&group.prefix) {
            let mut prefix = group.prefix.clone();
            prefix.push(child_id);
            let lower = bounds.lower(&prefix);
            if lower > u_low {
                u_low = lower;
                best = prefix.clone();
            }
            if bounds.remaining(&prefix).is_empty() {
                continue;
            }
            let upper = bounds.upper(&prefix);
            frontier.push(OrderingGroup { prefix, lower, upper });
        }
    }

    if best.is_empty() {
        return Ok(AllocationResult::empty(nodes));
    }
    let strategy = bounds.strategy(&best);
    Ok(AllocationResult { strategy, objective: u_low, nodes_explored: nodes })
}

/// Local search over orderings: add a provider at any position, remove one,
/// or swap two, moving to the best neighbour while it strictly improves.
pub fn heuristic_search(weights: &[f64], env: &Environment, opts: &SearchOptions) -> Result<AllocationResult> {
    check_weights(weights, env)?;
    let mut bounds = Bounds::new(env, weights, opts);
    let (current, u_best, nodes) = local_search(&mut bounds);
    if current.is_empty() {
        return Ok(AllocationResult::empty(nodes));
    }
    let strategy = bounds.strategy(&current);
    Ok(AllocationResult { strategy, objective: u_best, nodes_explored: nodes })
}

fn local_search(bounds: &mut Bounds) -> (Vec<ProviderId>, f64, usize) {
    let mut current: Vec<ProviderId> = vec![];
    let mut u_best = 0.0;
    let mut nodes = 0;
    loop {
        let mut best_move: Option<(Vec<ProviderId>, f64)> = None;
        let mut consider = |cand: Vec<ProviderId>, bounds: &mut Bounds| {
            let value = bounds.lower(&cand);
            if best_move.as_ref().is_none_or(|(_, v)| value > *v) {
                best_move = Some((cand, value));
            }
        };
        for id in bounds.remaining(&current) {
            for pos in 0..=current.len() {
                let mut cand = current.clone();
                cand.insert(pos, id);
                consider(cand, bounds);
            }
        }
        for pos in 0..current.len() {
            let mut cand = current.clone();
            cand.remove(pos);
            consider(cand, bounds);
        }
        for a in 0..current.len() {
            for b in a + 1..current.len() {
                let mut cand = current.clone();
                cand.swap(a, b);
                consider(cand, bounds);
            }
        }
        nodes += 1;
        match best_move {
            Some((cand, value)) if value > u_best => {
                current = cand;
                u_best = value;
            }
            _ => break,
        }
    }
    (current, u_best, nodes)
}

/// Exhaustive oracle over ordered subsets and sorted grid times. Limited to
/// four providers.
pub fn brute_force_search(weights: &[f64], env: &Environment, time_grid_step: f64) -> Result<AllocationResult> {
    let n = env.n();
    if n > 4 {
        return Err(Error::TooManyProviders(n));
    }
    check_weights(weights, env)?;
    if !(time_grid_step > 0.0) {
        return Err(Error::InvalidConfig("time grid step must be positive".into()));
    }
    let d = env.deadline();
    let cells = d / time_grid_step;
    let grid: Vec<f64> = if (cells - cells.round()).abs() < 1e-9 {
        let k = cells.round() as usize;
        (0..=k).map(|j| d * j as f64 / k as f64).collect()
    } else {
        (0..=cells.floor() as usize).map(|j| j as f64 * time_grid_step).collect()
    };

    let ids: Vec<ProviderId> = env.ids().collect();
    let mut best = AllocationResult::empty(0);
    let mut nodes = 0;
    let mut orderings = vec![];
    permutations_of_subsets(&ids, &mut vec![], &mut orderings);
    for ordering in orderings {
        let laws: Vec<&DurationModel> = ordering.iter().map(|&id| &env.provider(id).duration).collect();
        let w: Vec<f64> = ordering.iter().map(|id| weights[id.index()]).collect();
        let mut idx = vec![0usize; ordering.len()];
        let mut times = vec![0.0; ordering.len()];
        loop {
            for (t, &i) in times.iter_mut().zip(&idx) {
                *t = grid[i];
            }
            nodes += 1;
            let f = objective_from_laws(&laws, &times, &w, env.value(), d);
            if f > best.objective {
                let entries = ordering.iter().copied().zip(times.iter().copied()).collect();
                best.strategy = RecruitmentStrategy::new(entries, d)?;
                best.objective = f;
            }
            if !next_sorted_tuple(&mut idx, grid.len()) {
                break;
            }
        }
    }
    best.nodes_explored = nodes;
    Ok(best)
}

fn permutations_of_subsets(ids: &[ProviderId], current: &mut Vec<ProviderId>, out: &mut Vec<Vec<ProviderId>>) {
    if !current.is_empty() {
        out.push(current.clone());
    }
    for &id in ids {
        if !current.contains(&id) {
            current.push(id);
            permutations_of_subsets(ids, current, out);
            current.pop();
        }
    }
}

/// Advances a nondecreasing index tuple; false once exhausted.
fn next_sorted_tuple(idx: &mut [usize], k: usize) -> bool {
    let m = idx.len();
    let mut p = m;
    while p > 0 {
        p -= 1;
        if idx[p] + 1 < k {
            idx[p] += 1;
            for q in p + 1..m {
                idx[q] = idx[p];
            }
            return true;
        }
    }
    false
}

/// Best set recruited together at time 0, found by include/exclude
/// branch-and-bound over providers in id order.
pub fn simultaneous_search(weights: &[f64], env: &Environment) -> Result<AllocationResult> {
    check_weights(weights, env)?;
    let d = env.deadline();
    let v = env.value();
    let survival: Vec<f64> = env.providers.iter().map(|p| p.duration.survival(d)).collect();
    let n = env.n();
    // suffix_surv[k] = prod of survivals over providers k..n; suffix_min[k] = min weight.
    let mut suffix_surv = vec![1.0; n + 1];
    let mut suffix_min = vec![f64::INFINITY; n + 1];
    for k in (0..n).rev() {
        suffix_surv[k] = suffix_surv[k + 1] * survival[k];
        suffix_min[k] = suffix_min[k + 1].min(weights[k]);
    }

    struct Dfs<'a> {
        survival: &'a [f64],
        weights: &'a [f64],
        suffix_surv: &'a [f64],
        suffix_min: &'a [f64],
        v: f64,
        best_value: f64,
        best_set: Vec<usize>,
        set: Vec<usize>,
        nodes: usize,
    }

    impl Dfs<'_> {
        fn visit(&mut self, k: usize, fail: f64, cost: f64) {
            self.nodes += 1;
            let here = self.v * (1.0 - fail) - cost;
            if !self.set.is_empty() && here > self.best_value {
                self.best_value = here;
                self.best_set = self.set.clone();
            }
            if k == self.survival.len() {
                return;
            }
            let bound = self.v * (1.0 - fail * self.suffix_surv[k]) - cost - self.suffix_min[k];
            if bound <= self.best_value {
                return;
            }
            self.set.push(k);
            self.visit(k + 1, fail * self.survival[k], cost + self.weights[k]);
            self.set.pop();
            self.visit(k + 1, fail, cost);
        }
    }

    let mut dfs = Dfs {
        survival: &survival,
        weights,
        suffix_surv: &suffix_surv,
        suffix_min: &suffix_min,
        v,
        best_value: 0.0,
        best_set: vec![],
        set: vec![],
        nodes: 0,
    };
    dfs.visit(0, 1.0, 0.0);
    let entries = dfs.best_set.iter().map(|&k| (ProviderId::from_index(k), 0.0)).collect();
    Ok(AllocationResult {
        strategy: RecruitmentStrategy::new(entries, d)?,
        objective: dfs.best_value,
        nodes_explored: dfs.nodes,
    })
}

/// Best single provider recruited at time 0, if any has positive value.
pub fn single_search(weights: &[f64], env: &Environment) -> Result<AllocationResult> {
    check_weights(weights, env)?;
    let d = env.deadline();
    let mut best: Option<(ProviderId, f64)> = None;
    for p in &env.providers {
        let score = env.value() * p.duration.cdf(d) - weights[p.id.index()];
        if score > 0.0 && best.is_none_or(|(_, s)| score > s) {
            best = Some((p.id, score));
        }
    }
    Ok(match best {
        None => AllocationResult::empty(env.n()),
        Some((id, score)) => AllocationResult {
            strategy: RecruitmentStrategy::new(vec![(id, 0.0)], d)?,
            objective: score,
            nodes_explored: env.n(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::strategy_objective;
    use crate::model::{CostModel, Task};

    fn env_with(value: f64, deadline: f64, rates: &[f64]) -> Environment {
        let n = rates.len();
        Environment::from_parts(
            Task::new(value, deadline).unwrap(),
            rates.iter().map(|&r| DurationModel::exponential(r)).collect(),
            vec![CostModel::uniform(0.0, 1.0).unwrap(); n],
            vec![0.5; n],
        )
        .unwrap()
    }

    fn opts() -> SearchOptions<'static> {
        SearchOptions::new(&TimeOptConfig::default())
    }

    #[test]
    fn expensive_providers_give_empty_strategy() {
        let env = env_with(4.0, 1.0, &[1.0, 2.0, 0.5]);
        let w = [5.0, 6.0, 7.0];
        for r in [
            bnb_search(&w, &env, &opts()).unwrap(),
            heuristic_search(&w, &env, &opts()).unwrap(),
            simultaneous_search(&w, &env).unwrap(),
            single_search(&w, &env).unwrap(),
        ] {
            assert!(r.strategy.is_empty());
            assert_eq!(r.objective, 0.0);
        }
    }

    #[test]
    fn example_two_cheap_bids_recruit_both_at_zero() {
        let env = env_with(4.0, 1.0, &[1.0, 1.0]);
        let w = [0.4, 0.4];
        let r = bnb_search(&w, &env, &opts()).unwrap();
        assert_eq!(r.strategy.len(), 2);
        assert!(r.strategy.times().all(|t| t < 1e-6));
        let s = simultaneous_search(&w, &env).unwrap();
        assert_eq!(s.strategy.len(), 2);
    }

    #[test]
    fn bounds_bracket_group_members() {
        let env = env_with(10.0, 3.0, &[0.4, 0.9, 0.2]);
        let w = [0.8, 1.5, 0.3];
        let o = opts();
        assert_eq!(lower_bound(&[], &w, &env, &o), 0.0);
        let full = [ProviderId(2), ProviderId(1), ProviderId(3)];
        assert_eq!(upper_bound(&full, &w, &env, &o), lower_bound(&full, &w, &env, &o));
        let brute = brute_force_search(&w, &env, 3.0 / 40.0).unwrap();
        let prefix = [brute.strategy.entries()[0].0];
        assert!(upper_bound(&prefix, &w, &env, &o) >= brute.objective - 1e-9);
    }

    #[test]
    fn dominating_law_is_fastest_of() {
        let env = Environment::from_parts(
            Task::new(4.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0), DurationModel::deterministic(0.5)],
            vec![CostModel::uniform(0.0, 1.0).unwrap(); 2],
            vec![0.5; 2],
        )
        .unwrap();
        let g = dominating_law(&env, &[ProviderId(1), ProviderId(2)]);
        for x in [0.2, 0.5, 0.9] {
            let expected = 1.0 - (-x as f64).exp() * (1.0 - env.providers[1].duration.cdf(x));
            assert!((g.cdf(x) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn brute_force_guard_and_single_provider() {
        let env = env_with(4.0, 1.0, &[1.0; 5]);
        assert!(matches!(
            brute_force_search(&[0.1; 5], &env, 0.1),
            Err(Error::TooManyProviders(5))
        ));
        let one = env_with(4.0, 1.0, &[1.0]);
        let r = brute_force_search(&[0.93], &one, 1.0 / 40.0).unwrap();
        let expected = 4.0 * (1.0 - (-1.0f64).exp()) - 0.93;
        assert!((r.objective - expected).abs() < 1e-12);
        assert_eq!(r.strategy.entries(), &[(ProviderId(1), 0.0)]);
    }

    #[test]
    fn bnb_matches_brute_force_small() {
        let env = env_with(10.0, 3.0, &[0.3, 0.7, 0.15]);
        let w = [1.2, 1.9, 0.4];
        let exact = bnb_search(&w, &env, &opts()).unwrap();
        let brute = brute_force_search(&w, &env, 3.0 / 40.0).unwrap();
        assert!(exact.objective >= brute.objective - 1e-3 * 10.0);
        assert!((strategy_objective(&exact.strategy, &w, &env) - exact.objective).abs() < 1e-9);
    }

    #[test]
    fn pruning_does_not_change_optimum() {
        let env = env_with(4.0, 3.0, &[0.3, 0.7, 0.15, 0.9]);
        let w = [0.6, 1.1, 0.2, 1.6];
        let pruned = bnb_search(&w, &env, &opts()).unwrap();
        let mut full = opts();
        full.no_prune = true;
        let exhaustive = bnb_search(&w, &env, &full).unwrap();
        assert!((pruned.objective - exhaustive.objective).abs() < 1e-9);
        assert!(exhaustive.nodes_explored >= pruned.nodes_explored);
    }

    #[test]
    fn single_and_simultaneous_containment() {
        let env = env_with(4.0, 1.0, &[1.0, 1.0]);
        let single = single_search(&[0.4, 0.6], &env).unwrap();
        assert_eq!(single.strategy.entries(), &[(ProviderId(1), 0.0)]);
        let simul = simultaneous_search(&[0.4, 0.6], &env).unwrap();
        let exact = bnb_search(&[0.4, 0.6], &env, &opts()).unwrap();
        assert!(single.objective <= simul.objective + 1e-12);
        assert!(simul.objective <= exact.objective + 1e-9);
    }

    #[test]
    fn cache_gives_identical_results() {
        let env = env_with(10.0, 1.0, &[0.3, 0.7, 0.15, 0.5]);
        let w = [1.2, 1.9, 0.4, 0.7];
        let cache = TimeCache::new();
        let cached = opts().with_cache(&cache);
        let a = bnb_search(&w, &env, &cached).unwrap();
        let b = bnb_search(&w, &env, &cached).unwrap();
        let c = bnb_search(&w, &env, &opts()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(!cache.is_empty());
    }
}
