//! Allocation rules: maps from a bid vector to a recruitment strategy.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Environment, ProviderId, RecruitmentStrategy};
use crate::search::{
    bnb_search, heuristic_search, simultaneous_search, single_search, AllocationResult,
    SearchOptions, TimeCache,
};
use crate::time_opt::TimeOptConfig;

pub trait Allocator: Sync {
    fn allocate(&self, bids: &[f64], env: &Environment) -> Result<RecruitmentStrategy>;
}

impl<F> Allocator for F
where
    F: Fn(&[f64], &Environment) -> Result<RecruitmentStrategy> + Sync,
{
    fn allocate(&self, bids: &[f64], env: &Environment) -> Result<RecruitmentStrategy> {
        self(bids, env)
    }
}

/// What the solver weighs each provider by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    /// Virtual cost of the bid: revenue maximization.
    Virtual,
    /// The bid itself: welfare maximization / full information.
    Bid,
}

impl Weighting {
    pub fn weights(self, bids: &[f64], env: &Environment) -> Result<Vec<f64>> {
        match self {
            Weighting::Virtual => env.virtual_costs(bids),
            Weighting::Bid => {
                env.check_bids(bids)?;
                Ok(bids.to_vec())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    BranchAndBound,
    Heuristic,
    Simultaneous,
    Single,
}

/// Search-based allocation rule.
#[derive(Debug, Clone)]
pub struct SearchAllocator<'c> {
    pub solver: Solver,
    pub weighting: Weighting,
    pub time_opt: TimeOptConfig,
    pub cache: Option<&'c TimeCache>,
}

impl<'c> SearchAllocator<'c> {
    pub fn new(solver: Solver, weighting: Weighting, time_opt: &TimeOptConfig) -> Self {
        SearchAllocator { solver, weighting, time_opt: time_opt.clone(), cache: None }
    }

    pub fn with_cache(mut self, cache: &'c TimeCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn solve(&self, bids: &[f64], env: &Environment) -> Result<AllocationResult> {
        let weights = self.weighting.weights(bids, env)?;
        let mut opts = SearchOptions::new(&self.time_opt);
        opts.cache = self.cache;
        match self.solver {
            Solver::BranchAndBound => bnb_search(&weights, env, &opts),
            Solver::Heuristic => heuristic_search(&weights, env, &opts),
            Solver::Simultaneous => simultaneous_search(&weights, env),
            Solver::Single => single_search(&weights, env),
        }
    }
}

impl Allocator for SearchAllocator<'_> {
    fn allocate(&self, bids: &[f64], env: &Environment) -> Result<RecruitmentStrategy> {
        Ok(self.solve(bids, env)?.strategy)
    }
}

/// Hand-tuned staged rule with fixed thresholds: the lowest bidder starts at
/// time 0; every other bidder joins at 0 if its bid is at most
/// `simultaneous_threshold`, at `delay` if at most `inclusion_threshold`,
/// and is left out otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedDelayAllocator {
    pub simultaneous_threshold: f64,
    pub inclusion_threshold: f64,
    pub delay: f64,
}

impl FixedDelayAllocator {
    /// Thresholds of the two-provider example with unit rates, `V = 4`, `D = 1`.
    pub fn example() -> Self {
        FixedDelayAllocator { simultaneous_threshold: 0.27, inclusion_threshold: 0.465, delay: 0.3 }
    }
}

impl Allocator for FixedDelayAllocator {
    fn allocate(&self, bids: &[f64], env: &Environment) -> Result<RecruitmentStrategy> {
        env.check_bids(bids)?;
        if bids.is_empty() {
            return Ok(RecruitmentStrategy::empty());
        }
        let mut order: Vec<usize> = (0..bids.len()).collect();
        order.sort_by(|&a, &b| bids[a].total_cmp(&bids[b]).then(a.cmp(&b)));
        let mut now = vec![(ProviderId::from_index(order[0]), 0.0)];
        let mut later = vec![];
        for &k in &order[1..] {
            if bids[k] <= self.simultaneous_threshold {
                now.push((ProviderId::from_index(k), 0.0));
            } else if bids[k] <= self.inclusion_threshold {
                later.push((ProviderId::from_index(k), self.delay.min(env.deadline())));
            }
        }
        now.extend(later);
        RecruitmentStrategy::for_env(now, env)
    }
}

/// Recruits nobody.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverAllocator;

impl Allocator for NeverAllocator {
    fn allocate(&self, bids: &[f64], env: &Environment) -> Result<RecruitmentStrategy> {
        env.check_bids(bids)?;
        Ok(RecruitmentStrategy::empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, DurationModel, Task};

    fn example_env() -> Environment {
        Environment::from_parts(
            Task::new(4.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0); 2],
            vec![CostModel::uniform(0.0, 1.0).unwrap(); 2],
            vec![0.2, 0.2],
        )
        .unwrap()
    }

    #[test]
    fn fixed_delay_regions() {
        let env = example_env();
        let a = FixedDelayAllocator::example();
        let s = a.allocate(&[0.2, 0.25], &env).unwrap();
        assert_eq!(s.entries(), &[(ProviderId(1), 0.0), (ProviderId(2), 0.0)]);
        let s = a.allocate(&[0.4, 0.2], &env).unwrap();
        assert_eq!(s.entries(), &[(ProviderId(2), 0.0), (ProviderId(1), 0.3)]);
        let s = a.allocate(&[0.2, 0.6], &env).unwrap();
        assert_eq!(s.entries(), &[(ProviderId(1), 0.0)]);
    }

    #[test]
    fn optimal_rule_example_regions() {
        let env = example_env();
        let wgpa = SearchAllocator::new(Solver::BranchAndBound, Weighting::Virtual, &TimeOptConfig::default());
        let s = wgpa.allocate(&[0.2, 0.2], &env).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.times().all(|t| t < 1e-9));
        let s = wgpa.allocate(&[0.3, 0.6], &env).unwrap();
        assert_eq!(s.entries()[0], (ProviderId(1), 0.0));
        let bm2 = SearchAllocator::new(Solver::Simultaneous, Weighting::Virtual, &TimeOptConfig::default());
        assert_eq!(bm2.allocate(&[0.46, 0.46], &env).unwrap().len(), 2);
        assert_eq!(bm2.allocate(&[0.2, 0.47], &env).unwrap().len(), 1);
    }

    #[test]
    fn closures_are_allocators() {
        let env = example_env();
        let rule = |_: &[f64], _: &Environment| Ok(RecruitmentStrategy::empty());
        assert!(rule.allocate(&[0.1, 0.1], &env).unwrap().is_empty());
        assert!(NeverAllocator.allocate(&[0.1, 0.1], &env).unwrap().is_empty());
    }
}
