//! Complete mechanisms (allocation rule plus payment rule) and a verifier
//! for their incentive properties.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::allocation::{Allocator, NeverAllocator, SearchAllocator, Solver, Weighting};
use crate::error::{Error, Result};
use crate::eval::{evaluate, strategy_objective};
use crate::model::{BidVector, Environment, ProviderId, RecruitmentStrategy};
use crate::payments::{
    bid_response_curve, conditional_invocation_curve, interim_utilities, OpponentSampler,
    PaymentConfig, PaymentRule, PaymentSchedule, WeightedThreshold,
};
use crate::search::{bnb_search, SearchOptions, TimeCache};
use crate::time_opt::TimeOptConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(rename = "wgpa")]
    Wgpa,
    #[serde(rename = "wgpa-heuristic")]
    WgpaHeuristic,
    #[serde(rename = "bm1")]
    Bm1,
    #[serde(rename = "bm2")]
    Bm2,
    #[serde(rename = "bm3")]
    Bm3,
    #[serde(rename = "bm4")]
    Bm4,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 6] = [
        MechanismKind::Wgpa,
        MechanismKind::WgpaHeuristic,
        MechanismKind::Bm1,
        MechanismKind::Bm2,
        MechanismKind::Bm3,
        MechanismKind::Bm4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Wgpa => "wgpa",
            MechanismKind::WgpaHeuristic => "wgpa-heuristic",
            MechanismKind::Bm1 => "bm1",
            MechanismKind::Bm2 => "bm2",
            MechanismKind::Bm3 => "bm3",
            MechanismKind::Bm4 => "bm4",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownMechanism(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MechanismConfig {
    pub time_opt: TimeOptConfig,
    pub payment: PaymentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutcome {
    pub mechanism: String,
    pub strategy: RecruitmentStrategy,
    pub payments: PaymentSchedule,
    pub success_prob: f64,
    pub expected_cost: f64,
    pub expected_revenue: f64,
    pub expected_social_welfare: f64,
}

impl MechanismOutcome {
    /// Builds the outcome from a strategy and payments aligned with it.
    pub fn from_parts(
        mechanism: &str,
        strategy: RecruitmentStrategy,
        payments: PaymentSchedule,
        env: &Environment,
    ) -> Self {
        let aligned = payments.aligned(&strategy);
        let e = evaluate(&strategy, &aligned, env);
        let welfare = strategy_objective(&strategy, &env.true_costs(), env);
        MechanismOutcome {
            mechanism: mechanism.to_string(),
            strategy,
            payments,
            success_prob: e.success_prob,
            expected_cost: e.expected_cost,
            expected_revenue: e.expected_revenue,
            expected_social_welfare: welfare,
        }
    }
}

/// An allocation rule paired with a payment rule.
pub struct Mechanism<'a> {
    pub name: String,
    pub allocator: Box<dyn Allocator + 'a>,
    pub rule: Box<dyn PaymentRule + 'a>,
}

impl<'a> Mechanism<'a> {
    pub fn new(name: &str, allocator: impl Allocator + 'a, rule: impl PaymentRule + 'a) -> Self {
        Mechanism { name: name.to_string(), allocator: Box::new(allocator), rule: Box::new(rule) }
    }

    fn searching(name: &str, solver: Solver, config: &MechanismConfig, cache: Option<&'a TimeCache>) -> Self {
        let mut allocator = SearchAllocator::new(solver, Weighting::Virtual, &config.time_opt);
        allocator.cache = cache;
        Mechanism::new(name, allocator, WeightedThreshold::new(config.payment.clone()))
    }

    /// Optimal allocation on virtual costs with weighted threshold payments.
    pub fn wgpa(config: &MechanismConfig, cache: Option<&'a TimeCache>) -> Self {
        Self::searching("wgpa", Solver::BranchAndBound, config, cache)
    }

    pub fn wgpa_heuristic(config: &MechanismConfig, cache: Option<&'a TimeCache>) -> Self {
        Self::searching("wgpa-heuristic", Solver::Heuristic, config, cache)
    }

    pub fn bm1(config: &MechanismConfig) -> Self {
        Self::searching("bm1", Solver::Single, config, None)
    }

    pub fn bm2(config: &MechanismConfig) -> Self {
        Self::searching("bm2", Solver::Simultaneous, config, None)
    }

    /// Mechanisms expressible as an allocator and a payment rule. The pairing
    /// and full-information benchmarks are not.
    pub fn for_kind(kind: MechanismKind, config: &MechanismConfig, cache: Option<&'a TimeCache>) -> Result<Self> {
        match kind {
            MechanismKind::Wgpa => Ok(Self::wgpa(config, cache)),
            MechanismKind::WgpaHeuristic => Ok(Self::wgpa_heuristic(config, cache)),
            MechanismKind::Bm1 => Ok(Self::bm1(config)),
            MechanismKind::Bm2 => Ok(Self::bm2(config)),
            MechanismKind::Bm3 | MechanismKind::Bm4 => Err(Error::InvalidConfig(format!(
                "{} has no bid-driven allocation rule to verify",
                kind.name()
            ))),
        }
    }

    /// Never recruits and never pays.
    pub fn empty(config: &MechanismConfig) -> Self {
        Mechanism::new("empty", NeverAllocator, WeightedThreshold::new(config.payment.clone()))
    }

    pub fn run(&self, bids: &BidVector, env: &Environment) -> Result<MechanismOutcome> {
        let b = bids.as_slice();
        let strategy = self.allocator.allocate(b, env)?;
        let payments = self.rule.schedule(self.allocator.as_ref(), env, b, &strategy)?;
        Ok(MechanismOutcome::from_parts(&self.name, strategy, payments, env))
    }
}

pub fn wgpa(bids: &BidVector, env: &Environment, config: &MechanismConfig) -> Result<MechanismOutcome> {
    let cache = TimeCache::new();
    let mech = Mechanism::wgpa(config, Some(&cache));
    mech.run(bids, env)
}

pub fn wgpa_heuristic(bids: &BidVector, env: &Environment, config: &MechanismConfig) -> Result<MechanismOutcome> {
    let cache = TimeCache::new();
    let mech = Mechanism::wgpa_heuristic(config, Some(&cache));
    mech.run(bids, env)
}

pub fn bm1_single(bids: &BidVector, env: &Environment, config: &MechanismConfig) -> Result<MechanismOutcome> {
    Mechanism::bm1(config).run(bids, env)
}

pub fn bm2_simultaneous(bids: &BidVector, env: &Environment, config: &MechanismConfig) -> Result<MechanismOutcome> {
    Mechanism::bm2(config).run(bids, env)
}

/// Random pairing: each pair's lower bidder (ties to the lower id) becomes a
/// candidate priced at its partner's bid; an unpaired provider is dropped.
/// Returns `(candidate, price)` in pairing order.
pub fn pair_candidates<R: Rng + ?Sized>(bids: &[f64], rng: &mut R) -> Vec<(ProviderId, f64)> {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.shuffle(rng);
    order
        .chunks_exact(2)
        .map(|pair| {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if bids[b] < bids[a] {
                (ProviderId::from_index(b), bids[a])
            } else {
                (ProviderId::from_index(a), bids[b])
            }
        })
        .collect()
}

/// Welfare-optimal plan over the pair candidates, with the per-provider
/// prices (zero for non-candidates).
pub fn pairing_allocation<R: Rng + ?Sized>(
    bids: &[f64],
    env: &Environment,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<(RecruitmentStrategy, Vec<f64>)> {
    env.check_bids(bids)?;
    let candidates = pair_candidates(bids, rng);
    let mut prices = vec![0.0; env.n()];
    for &(id, price) in &candidates {
        prices[id.index()] = price;
    }
    let cache = TimeCache::new();
    let mut opts = SearchOptions::new(&config.time_opt).with_cache(&cache);
    opts.pool = Some(candidates.iter().map(|c| c.0).collect());
    let strategy = bnb_search(&prices, env, &opts)?.strategy;
    Ok((strategy, prices))
}

/// Pairing benchmark: candidates are planned for welfare at their pair
/// prices and each recruit is paid its price.
pub fn bm3_pairing<R: Rng + ?Sized>(
    bids: &BidVector,
    env: &Environment,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<MechanismOutcome> {
    let (strategy, prices) = pairing_allocation(bids.as_slice(), env, config, rng)?;
    let payments = PaymentSchedule {
        payments: strategy.providers().map(|id| (id, prices[id.index()])).collect(),
        grid_step: None,
    };
    Ok(MechanismOutcome::from_parts("bm3", strategy, payments, env))
}

/// Full-information benchmark: optimal plan at true costs, paying costs.
pub fn bm4_full_info(true_costs: &[f64], env: &Environment, config: &MechanismConfig) -> Result<MechanismOutcome> {
    let cache = TimeCache::new();
    let allocator = SearchAllocator::new(Solver::BranchAndBound, Weighting::Bid, &config.time_opt).with_cache(&cache);
    let strategy = allocator.allocate(true_costs, env)?;
    let payments = PaymentSchedule {
        payments: strategy.providers().map(|id| (id, true_costs[id.index()])).collect(),
        grid_step: None,
    };
    Ok(MechanismOutcome::from_parts("bm4", strategy, payments, env))
}

/// Allocation of a named mechanism without computing payments.
pub fn allocate_for<R: Rng + ?Sized>(
    kind: MechanismKind,
    bids: &BidVector,
    env: &Environment,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<RecruitmentStrategy> {
    let b = bids.as_slice();
    let solver = match kind {
        MechanismKind::Wgpa => Solver::BranchAndBound,
        MechanismKind::WgpaHeuristic => Solver::Heuristic,
        MechanismKind::Bm1 => Solver::Single,
        MechanismKind::Bm2 => Solver::Simultaneous,
        MechanismKind::Bm3 => return Ok(pairing_allocation(b, env, config, rng)?.0),
        MechanismKind::Bm4 => {
            let cache = TimeCache::new();
            let a = SearchAllocator::new(Solver::BranchAndBound, Weighting::Bid, &config.time_opt).with_cache(&cache);
            return a.allocate(b, env);
        }
    };
    let cache = TimeCache::new();
    SearchAllocator::new(solver, Weighting::Virtual, &config.time_opt).with_cache(&cache).allocate(b, env)
}

/// Runs a named mechanism on truthful or given bids. `rng` drives pairing.
pub fn run_mechanism<R: Rng + ?Sized>(
    kind: MechanismKind,
    bids: &BidVector,
    env: &Environment,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<MechanismOutcome> {
    match kind {
        MechanismKind::Wgpa => wgpa(bids, env, config),
        MechanismKind::WgpaHeuristic => wgpa_heuristic(bids, env, config),
        MechanismKind::Bm1 => bm1_single(bids, env, config),
        MechanismKind::Bm2 => bm2_simultaneous(bids, env, config),
        MechanismKind::Bm3 => bm3_pairing(bids, env, config, rng),
        MechanismKind::Bm4 => bm4_full_info(bids.as_slice(), env, config),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    /// Equally spaced deviation bids across the support.
    pub deviations: usize,
    /// IC slack as a fraction of `c_max`.
    pub ic_tolerance: f64,
    pub sampler: OpponentSampler,
    /// True costs to test IC at; `None` uses each provider's own true cost.
    pub ic_costs: Option<Vec<f64>>,
    /// Opponent scenarios whose response curves are checked for monotonicity.
    pub curve_scenarios: usize,
    pub curve_tolerance: f64,
    /// Bid vectors drawn from the prior for the IR and revenue checks.
    pub prior_samples: usize,
    pub q_se_multiple: f64,
    pub seed: u64,
}

impl SuiteConfig {
    /// Coarser grids and fewer opponent draws, for interactive use.
    pub fn quick() -> Self {
        SuiteConfig {
            deviations: 11,
            sampler: OpponentSampler::MonteCarlo { samples: 300, seed: 0x0990_5eed },
            curve_scenarios: 4,
            prior_samples: 5,
            ..Default::default()
        }
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            deviations: 25,
            ic_tolerance: 1e-3,
            sampler: OpponentSampler::default(),
            ic_costs: None,
            curve_scenarios: 8,
            curve_tolerance: 1e-6,
            prior_samples: 20,
            q_se_multiple: 2.0,
            seed: 0x5e1f_7e57,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst slack observed; negative beyond tolerance means failure.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub mechanism: String,
    pub checks: Vec<CheckResult>,
    /// Smallest `T_i - b_i` over every payment computed during the run.
    pub min_payment_surplus: Option<f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mechanism {}", self.mechanism)?;
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  {status} {:<26} margin {:+.3e}  {}", c.name, c.margin, c.detail)?;
        }
        Ok(())
    }
}

fn deviation_grid(env: &Environment, id: ProviderId, k: usize) -> Vec<f64> {
    let cm = &env.provider(id).cost_model;
    let (lo, hi) = (cm.lo(), cm.c_max());
    let k = k.max(2);
    (0..k).map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64).collect()
}

fn check_ic(alloc: &dyn Allocator, rule: &dyn PaymentRule, env: &Environment, suite: &SuiteConfig) -> Result<CheckResult> {
    let mut ic_margin = f64::INFINITY;
    let mut ic_detail = String::new();
    let mut ic_pass = true;
    for p in &env.providers {
        let devs = deviation_grid(env, p.id, suite.deviations);
        let costs = suite.ic_costs.clone().unwrap_or_else(|| vec![p.true_cost]);
        let tol = suite.ic_tolerance * p.cost_model.c_max();
        for c in costs {
            let mut own = vec![c];
            own.extend(&devs);
            let u = interim_utilities(alloc, rule, env, p.id, c, &own, &suite.sampler)?;
            for (k, &ub) in u.iter().enumerate().skip(1) {
                let slack = u[0] - ub;
                if slack < ic_margin {
                    ic_margin = slack;
                    ic_detail = format!("provider {} cost {c:.4} bid {:.4}", p.id, own[k]);
                }
                if slack < -tol {
                    ic_pass = false;
                }
            }
        }
    }
    Ok(CheckResult {
        name: "incentive-compatibility".into(),
        passed: ic_pass,
        margin: if ic_margin.is_finite() { ic_margin } else { 0.0 },
        detail: ic_detail,
    })
}

/// Monotone response curves under a few opponent scenarios.
fn check_curves(alloc: &dyn Allocator, env: &Environment, suite: &SuiteConfig) -> Result<CheckResult> {
    let mut curve_margin: f64 = 0.0;
    for p in &env.providers {
        let scenarios = suite.sampler.scenarios(env, p.id);
        for (_, bids) in scenarios.iter().take(suite.curve_scenarios.max(1)) {
            let curve = bid_response_curve(alloc, env, bids, p.id, &PaymentConfig::default().dense())?;
            curve_margin = curve_margin.max(curve.max_increase());
        }
    }
    Ok(CheckResult {
        name: "response-curve-monotone".into(),
        passed: curve_margin <= suite.curve_tolerance,
        margin: -curve_margin,
        detail: format!("largest increase {curve_margin:.2e}"),
    })
}

fn check_q(alloc: &dyn Allocator, env: &Environment, suite: &SuiteConfig) -> Result<CheckResult> {
    let mut q_margin = f64::INFINITY;
    let mut q_pass = true;
    for p in &env.providers {
        let grid = deviation_grid(env, p.id, suite.deviations);
        let q = conditional_invocation_curve(alloc, env, p.id, &grid, &suite.sampler)?;
        for w in q.windows(2) {
            let allowed = suite.q_se_multiple * w[0].1.max(w[1].1) + 1e-9;
            let slack = w[0].0 - w[1].0;
            q_margin = q_margin.min(slack);
            if slack < -allowed {
                q_pass = false;
            }
        }
    }
    Ok(CheckResult {
        name: "q-monotone".into(),
        passed: q_pass,
        margin: if q_margin.is_finite() { q_margin } else { 0.0 },
        detail: format!("{} bid points per provider", suite.deviations),
    })
}

/// Ex-post IR and revenue over bid vectors drawn from the prior. Also
/// returns the smallest payment surplus seen.
fn check_ir_revenue(
    alloc: &dyn Allocator,
    rule: &dyn PaymentRule,
    env: &Environment,
    suite: &SuiteConfig,
) -> Result<([CheckResult; 2], Option<f64>)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(suite.seed);
    let mut vectors = vec![env.true_costs()];
    for _ in 0..suite.prior_samples {
        vectors.push(env.providers.iter().map(|p| p.cost_model.sample(&mut rng)).collect());
    }
    let mut ir_margin = f64::INFINITY;
    let mut revenues = vec![];
    for bids in &vectors {
        let strategy = alloc.allocate(bids, env)?;
        let schedule = rule.schedule(alloc, env, bids, &strategy)?;
        for &(id, t) in &schedule.payments {
            ir_margin = ir_margin.min(t - bids[id.index()]);
        }
        revenues.push(evaluate(&strategy, &schedule.aligned(&strategy), env).expected_revenue);
    }
    let k = revenues.len() as f64;
    let mean = revenues.iter().sum::<f64>() / k;
    let var = revenues.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k.max(2.0) - 1.0);
    let se = (var / k).sqrt();
    let ir = CheckResult {
        name: "ex-post-ir".into(),
        passed: ir_margin >= 0.0,
        margin: if ir_margin.is_finite() { ir_margin } else { 0.0 },
        detail: format!("{} bid vectors", vectors.len()),
    };
    let revenue = CheckResult {
        name: "nonnegative-revenue".into(),
        passed: mean >= -3.0 * se - 1e-12,
        margin: mean,
        detail: format!("mean {mean:.4} (se {se:.4})"),
    };
    Ok(([ir, revenue], ir_margin.is_finite().then_some(ir_margin)))
}

/// Interim IC, ex-post IR, monotonicity of response curves and of `Q_i`,
/// and nonnegative expected revenue. The checks run concurrently; the
/// report lists them in a fixed order.
pub fn verify_mechanism(mech: &Mechanism, env: &Environment, suite: &SuiteConfig) -> Result<VerificationReport> {
    let alloc = mech.allocator.as_ref();
    let rule = mech.rule.as_ref();
    let ((ic, curves), (q, ir)) = rayon::join(
        || rayon::join(|| check_ic(alloc, rule, env, suite), || check_curves(alloc, env, suite)),
        || rayon::join(|| check_q(alloc, env, suite), || check_ir_revenue(alloc, rule, env, suite)),
    );
    let ([ir, revenue], min_payment_surplus) = ir?;
    Ok(VerificationReport {
        mechanism: mech.name.clone(),
        checks: vec![ic?, curves?, q?, ir, revenue],
        min_payment_surplus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::FixedDelayAllocator;
    use crate::model::{CostModel, DurationModel, Task};
    use crate::payments::BidAsPayment;
    use rand_chacha::ChaCha8Rng;

    fn example_env(costs: [f64; 2]) -> Environment {
        Environment::from_parts(
            Task::new(4.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0); 2],
            vec![CostModel::uniform(0.0, 1.0).unwrap(); 2],
            costs.to_vec(),
        )
        .unwrap()
    }

    fn quick_suite() -> SuiteConfig {
        SuiteConfig {
            sampler: OpponentSampler::TensorGrid { points_per_dim: 6 },
            curve_scenarios: 3,
            prior_samples: 4,
            ..Default::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for k in MechanismKind::ALL {
            assert_eq!(k.name().parse::<MechanismKind>().unwrap(), k);
        }
        assert!(matches!("vcg".parse::<MechanismKind>(), Err(Error::UnknownMechanism(_))));
    }

    #[test]
    fn wgpa_cheap_bids_both_recruited() {
        let env = example_env([0.2, 0.2]);
        let out = wgpa(&BidVector::truthful(&env), &env, &MechanismConfig::default()).unwrap();
        assert_eq!(out.strategy.len(), 2);
        for &(id, t) in &out.payments.payments {
            assert!(t >= env.provider(id).true_cost);
        }
    }

    #[test]
    fn fixed_delay_variant_payments() {
        let env = example_env([0.2, 0.2]);
        let config = MechanismConfig { payment: PaymentConfig::with_step(1.0 / 400.0).refined(), ..Default::default() };
        let mech = Mechanism::new("fixed", FixedDelayAllocator::example(), WeightedThreshold::new(config.payment));
        let out = mech.run(&BidVector::truthful(&env), &env).unwrap();
        for &(_, t) in &out.payments.payments {
            assert!((t - 0.414).abs() < 0.005, "{t}");
        }
    }

    #[test]
    fn expensive_bids_empty_outcome() {
        let env = Environment::from_parts(
            Task::new(1.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0); 2],
            vec![CostModel::uniform(0.0, 1.0).unwrap(); 2],
            vec![0.9, 0.95],
        )
        .unwrap();
        let out = wgpa(&BidVector::truthful(&env), &env, &MechanismConfig::default()).unwrap();
        assert!(out.strategy.is_empty());
        assert!(out.payments.payments.is_empty());
        assert_eq!(out.expected_revenue, 0.0);
    }

    #[test]
    fn pairing_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(pair_candidates(&[0.2, 0.9], &mut rng), vec![(ProviderId(1), 0.9)]);
        assert_eq!(pair_candidates(&[0.5, 0.5], &mut rng), vec![(ProviderId(1), 0.5)]);
        let c = pair_candidates(&[0.1, 0.2, 0.3], &mut rng);
        assert_eq!(c.len(), 1);
        let env = example_env([0.2, 0.9]);
        let out = bm3_pairing(&BidVector::truthful(&env), &env, &MechanismConfig::default(), &mut rng).unwrap();
        assert_eq!(out.strategy.providers().collect::<Vec<_>>(), vec![ProviderId(1)]);
        assert_eq!(out.payments.get(ProviderId(1)), Some(0.9));
    }

    #[test]
    fn full_information_pays_costs() {
        let env = example_env([0.3, 0.6]);
        let out = bm4_full_info(&env.true_costs(), &env, &MechanismConfig::default()).unwrap();
        assert!((out.expected_revenue - out.expected_social_welfare).abs() < 1e-12);
        let one = Environment::from_parts(
            Task::new(4.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0)],
            vec![CostModel::uniform(0.0, 1.0).unwrap()],
            vec![0.3],
        )
        .unwrap();
        let out = bm4_full_info(&[0.3], &one, &MechanismConfig::default()).unwrap();
        assert_eq!(out.payments.get(ProviderId(1)), Some(0.3));
    }

    #[test]
    fn verifier_accepts_wgpa_and_empty() {
        let env = example_env([0.2, 0.35]);
        let config = MechanismConfig::default();
        let cache = TimeCache::new();
        let report = verify_mechanism(&Mechanism::wgpa(&config, Some(&cache)), &env, &quick_suite()).unwrap();
        assert!(report.passed(), "{report}");
        let report = verify_mechanism(&Mechanism::empty(&config), &env, &quick_suite()).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn verifier_rejects_pay_as_bid() {
        let env = example_env([0.2, 0.35]);
        let config = MechanismConfig::default();
        let alloc = SearchAllocator::new(Solver::BranchAndBound, Weighting::Virtual, &config.time_opt);
        let mech = Mechanism::new("pay-bid", alloc, BidAsPayment);
        let report = verify_mechanism(&mech, &env, &quick_suite()).unwrap();
        assert!(!report.check("incentive-compatibility").unwrap().passed, "{report}");
    }
}
