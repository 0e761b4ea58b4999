//! Weighted threshold payments and the interim quantities used to check
//! incentive compatibility.
//!
//! A recruited provider `i` bidding `b_i` is paid
//! `T_i = b_i + (1 / P_i(b)) * integral_{b_i}^{c_max} P_i(x, b_{-i}) dx`,
//! where `P_i(x, b_{-i})` is its invocation probability under the allocation
//! chosen when it bids `x` instead. The integrand is sampled at grid
//! midpoints and integrated as a step function.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::Allocator;
use crate::error::{Error, Result};
use crate::eval::invocation_probability;
use crate::model::{Environment, ProviderId, RecruitmentStrategy};

/// Minimum number of grid cells across a cost support.
pub const MIN_CELLS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaymentConfig {
    /// Integration step; `None` splits each cost support into `cells` cells.
    pub grid_step: Option<f64>,
    pub cells: usize,
    /// Localize jumps of the integrand by bisection.
    pub refine_breakpoints: bool,
    /// Jump size that triggers refinement.
    pub jump_threshold: f64,
    pub max_bisections: usize,
    /// Skip samples between two equal values, which monotonicity implies
    /// are constant. Same result as dense sampling for monotone rules.
    pub skip_flat_spans: bool,
}

impl Default for PaymentConfig {
    fn default() -> Self {
        PaymentConfig { grid_step: None, cells: 200, refine_breakpoints: false, jump_threshold: 0.05, max_bisections: 12, skip_flat_spans: true }
    }
}

impl PaymentConfig {
    pub fn with_step(step: f64) -> Self {
        PaymentConfig { grid_step: Some(step), ..Default::default() }
    }

    pub fn with_cells(cells: usize) -> Self {
        PaymentConfig { cells, ..Default::default() }
    }

    pub fn dense(mut self) -> Self {
        self.skip_flat_spans = false;
        self
    }

    pub fn refined(mut self) -> Self {
        self.refine_breakpoints = true;
        self
    }

    /// Number of cells covering `[lo, hi]`.
    pub fn cells(&self, lo: f64, hi: f64) -> Result<usize> {
        let width = hi - lo;
        let cells = match self.grid_step {
            None => self.cells,
            Some(h) if h > 0.0 => (width / h - 1e-9).ceil().max(1.0) as usize,
            Some(h) => return Err(Error::InvalidConfig(format!("payment grid step must be positive, got {h}"))),
        };
        if cells < MIN_CELLS {
            return Err(Error::InvalidConfig(format!(
                "payment grid step leaves {cells} cells on the cost support; need at least {MIN_CELLS}"
            )));
        }
        Ok(cells)
    }
}

/// Invocation probability of one provider as a function of its own bid,
/// opponents' bids fixed. Each sample owns the interval between the
/// midpoints to its neighbours, so uniform midpoint samples reproduce the
/// midpoint rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidResponseCurve {
    pub provider: ProviderId,
    /// `(bid, probability)`, strictly increasing in bid.
    pub samples: Vec<(f64, f64)>,
    pub lo: f64,
    pub hi: f64,
    pub grid_step: f64,
}

impl BidResponseCurve {
    fn cell_bounds(&self, k: usize) -> (f64, f64) {
        let s = &self.samples;
        let left = if k == 0 { self.lo.min(s[0].0) } else { 0.5 * (s[k - 1].0 + s[k].0) };
        let right = if k + 1 == s.len() { self.hi } else { 0.5 * (s[k].0 + s[k + 1].0) };
        (left, right)
    }

    /// Step-function value at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        let k = self.samples.partition_point(|&(b, _)| b <= x);
        if k == 0 {
            return self.samples.first().map_or(0.0, |s| s.1);
        }
        let (_, right) = self.cell_bounds(k - 1);
        if x < right || k == self.samples.len() {
            self.samples[k - 1].1
        } else {
            self.samples[k].1
        }
    }

    /// Integral of the step function over `[from, hi]`.
    pub fn integral_from(&self, from: f64) -> f64 {
        (0..self.samples.len())
            .map(|k| {
                let (left, right) = self.cell_bounds(k);
                let left = left.max(from);
                if right > left {
                    (right - left) * self.samples[k].1
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Largest increase between consecutive samples (0 for a nonincreasing curve).
    pub fn max_increase(&self) -> f64 {
        self.samples.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0, f64::max)
    }
}

/// Invocation probability of `id` when it bids `x` and the others bid `bids`.
pub fn response_at(
    allocator: &dyn Allocator,
    env: &Environment,
    bids: &[f64],
    id: ProviderId,
    x: f64,
) -> Result<f64> {
    let mut b = bids.to_vec();
    b[id.index()] = x;
    let strategy = allocator.allocate(&b, env)?;
    Ok(invocation_probability(&strategy, id, env))
}

/// Samples the response curve on `[from, c_max]`: every grid midpoint above
/// `from`, `from` itself and any `extra` points. Evaluation stops at the
/// first zero, which by monotonicity holds for all higher bids.
pub fn bid_response_curve_from(
    allocator: &dyn Allocator,
    env: &Environment,
    bids: &[f64],
    id: ProviderId,
    from: f64,
    extra: &[f64],
    config: &PaymentConfig,
) -> Result<BidResponseCurve> {
    let cm = &env.provider(id).cost_model;
    let (lo, hi) = (cm.lo(), cm.c_max());
    let cells = config.cells(lo, hi)?;
    let h = (hi - lo) / cells as f64;
    let mut points: Vec<f64> = (0..cells)
        .map(|k| lo + (k as f64 + 0.5) * h)
        .filter(|&x| x > from)
        .collect();
    points.push(from);
    points.extend(extra.iter().copied().filter(|&x| x >= from && x <= hi));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut values = vec![None; points.len()];
    let eval = |x: f64| response_at(allocator, env, bids, id, x);
    if config.skip_flat_spans && points.len() > 2 {
        let last = points.len() - 1;
        values[0] = Some(eval(points[0])?);
        values[last] = Some(eval(points[last])?);
        let mut stack = vec![(0, last)];
        while let Some((a, b)) = stack.pop() {
            let (pa, pb) = (values[a].unwrap(), values[b].unwrap());
            if b - a < 2 {
                continue;
            }
            if pa == pb {
                values[a + 1..b].fill(Some(pa));
                continue;
            }
            let m = (a + b) / 2;
            values[m] = Some(eval(points[m])?);
            stack.push((m, b));
            stack.push((a, m));
        }
    } else {
        let mut zero = false;
        for (v, &x) in values.iter_mut().zip(&points) {
            let p = if zero { 0.0 } else { eval(x)? };
            zero = zero || p == 0.0;
            *v = Some(p);
        }
    }
    let mut samples: Vec<(f64, f64)> = points.into_iter().zip(values.into_iter().map(Option::unwrap)).collect();

    if config.refine_breakpoints {
        samples = refine(allocator, env, bids, id, samples, config)?;
    }
    Ok(BidResponseCurve { provider: id, samples, lo, hi, grid_step: h })
}

/// Bisects every jump larger than the threshold, keeping all new samples.
fn refine(
    allocator: &dyn Allocator,
    env: &Environment,
    bids: &[f64],
    id: ProviderId,
    samples: Vec<(f64, f64)>,
    config: &PaymentConfig,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(samples.len());
    for w in samples.windows(2) {
        out.push(w[0]);
        let (mut a, mut b) = (w[0], w[1]);
        if (a.1 - b.1).abs() <= config.jump_threshold {
            continue;
        }
        let mut added = vec![];
        for _ in 0..config.max_bisections {
            let x = 0.5 * (a.0 + b.0);
            if x <= a.0 || x >= b.0 {
                break;
            }
            let p = response_at(allocator, env, bids, id, x)?;
            added.push((x, p));
            if (a.1 - p).abs() >= (p - b.1).abs() {
                b = (x, p);
            } else {
                a = (x, p);
            }
        }
        added.sort_by(|p, q| p.0.total_cmp(&q.0));
        out.extend(added);
    }
    if let Some(&last) = samples.last() {
        out.push(last);
    }
    Ok(out)
}

/// Response curve over the whole support.
pub fn bid_response_curve(
    allocator: &dyn Allocator,
    env: &Environment,
    bids: &[f64],
    id: ProviderId,
    config: &PaymentConfig,
) -> Result<BidResponseCurve> {
    let cm = &env.provider(id).cost_model;
    bid_response_curve_from(allocator, env, bids, id, cm.lo(), &[], config)
}

/// Payment to a recruited provider; `strategy` must be the allocation at `bids`.
pub fn weighted_threshold_payment_for(
    allocator: &dyn Allocator,
    env: &Environment,
    bids: &[f64],
    id: ProviderId,
    strategy: &RecruitmentStrategy,
    config: &PaymentConfig,
) -> Result<f64> {
    let p = invocation_probability(strategy, id, env);
    if !(p > 0.0) {
        return Err(Error::PaymentUndefined(id));
    }
    let b = bids[id.index()];
    let curve = bid_response_curve_from(allocator, env, bids, id, b, &[], config)?;
    Ok(b + curve.integral_from(b) / p)
}

pub fn weighted_threshold_payment(
    allocator: &dyn Allocator,
    env: &Environment,
    bids: &[f64],
    id: ProviderId,
    config: &PaymentConfig,
) -> Result<f64> {
    let strategy = allocator.allocate(bids, env)?;
    weighted_threshold_payment_for(allocator, env, bids, id, &strategy, config)
}

/// Payments to the providers that may be invoked, in strategy order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PaymentSchedule {
    pub payments: Vec<(ProviderId, f64)>,
    pub grid_step: Option<f64>,
}

impl PaymentSchedule {
    pub fn get(&self, id: ProviderId) -> Option<f64> {
        self.payments.iter().find(|p| p.0 == id).map(|p| p.1)
    }

    /// One amount per strategy entry; never-invoked entries get 0.
    pub fn aligned(&self, strategy: &RecruitmentStrategy) -> Vec<f64> {
        strategy.providers().map(|id| self.get(id).unwrap_or(0.0)).collect()
    }
}

/// How a mechanism pays recruited providers.
pub trait PaymentRule: Sync {
    fn name(&self) -> &str;

    fn payment(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        id: ProviderId,
        strategy: &RecruitmentStrategy,
    ) -> Result<f64>;

    /// Realized-utility term `P_i(b)(T_i(b) - c)` of provider `id` with cost
    /// `true_cost` for each own bid in `own_bids`, opponents bidding `bids`.
    fn utilities(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        id: ProviderId,
        true_cost: f64,
        own_bids: &[f64],
    ) -> Result<Vec<f64>> {
        own_bids
            .iter()
            .map(|&x| {
                let mut b = bids.to_vec();
                b[id.index()] = x;
                let strategy = allocator.allocate(&b, env)?;
                let p = invocation_probability(&strategy, id, env);
                if p > 0.0 {
                    Ok(p * (self.payment(allocator, env, &b, id, &strategy)? - true_cost))
                } else {
                    Ok(0.0)
                }
            })
            .collect()
    }

    fn schedule(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        strategy: &RecruitmentStrategy,
    ) -> Result<PaymentSchedule> {
        let mut payments = vec![];
        for id in strategy.providers() {
            if invocation_probability(strategy, id, env) > 0.0 {
                payments.push((id, self.payment(allocator, env, bids, id, strategy)?));
            }
        }
        Ok(PaymentSchedule { payments, grid_step: None })
    }
}

#[derive(Debug, Clone, Default)]
pub struct WeightedThreshold {
    pub config: PaymentConfig,
}

impl WeightedThreshold {
    pub fn new(config: PaymentConfig) -> Self {
        WeightedThreshold { config }
    }
}

impl PaymentRule for WeightedThreshold {
    fn name(&self) -> &str {
        "weighted-threshold"
    }

    fn payment(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        id: ProviderId,
        strategy: &RecruitmentStrategy,
    ) -> Result<f64> {
        weighted_threshold_payment_for(allocator, env, bids, id, strategy, &self.config)
    }

    /// One curve serves every own bid: `P(b)(T(b) - c) = P(b)(b - c) + integral_b P`.
    fn utilities(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        id: ProviderId,
        true_cost: f64,
        own_bids: &[f64],
    ) -> Result<Vec<f64>> {
        let from = own_bids.iter().copied().fold(f64::INFINITY, f64::min);
        let curve = bid_response_curve_from(allocator, env, bids, id, from, own_bids, &self.config)?;
        Ok(own_bids
            .iter()
            .map(|&b| {
                let p = curve.value_at(b);
                if p > 0.0 {
                    p * (b - true_cost) + curve.integral_from(b)
                } else {
                    0.0
                }
            })
            .collect())
    }

    fn schedule(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        strategy: &RecruitmentStrategy,
    ) -> Result<PaymentSchedule> {
        let mut payments = vec![];
        for id in strategy.providers() {
            if invocation_probability(strategy, id, env) > 0.0 {
                payments.push((id, self.payment(allocator, env, bids, id, strategy)?));
            }
        }
        let step = env
            .providers
            .first()
            .map(|p| {
                let (lo, hi) = (p.cost_model.lo(), p.cost_model.c_max());
                self.config.cells(lo, hi).map(|c| (hi - lo) / c as f64)
            })
            .transpose()?;
        Ok(PaymentSchedule { payments, grid_step: step })
    }
}

/// Pays each provider its own bid. Not incentive compatible.
#[derive(Debug, Clone, Copy, Default)]
pub struct BidAsPayment;

impl PaymentRule for BidAsPayment {
    fn name(&self) -> &str {
        "pay-bid"
    }

    fn payment(
        &self,
        _allocator: &dyn Allocator,
        _env: &Environment,
        bids: &[f64],
        id: ProviderId,
        _strategy: &RecruitmentStrategy,
    ) -> Result<f64> {
        Ok(bids[id.index()])
    }

    fn utilities(
        &self,
        allocator: &dyn Allocator,
        env: &Environment,
        bids: &[f64],
        id: ProviderId,
        true_cost: f64,
        own_bids: &[f64],
    ) -> Result<Vec<f64>> {
        own_bids
            .iter()
            .map(|&x| Ok(response_at(allocator, env, bids, id, x)? * (x - true_cost)))
            .collect()
    }
}

/// Source of opponents' cost vectors for interim quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpponentSampler {
    /// Seeded draws from the opponents' cost laws.
    MonteCarlo { samples: usize, seed: u64 },
    /// Product grid of quantile midpoints, `points_per_dim` per opponent.
    TensorGrid { points_per_dim: usize },
}

impl Default for OpponentSampler {
    fn default() -> Self {
        OpponentSampler::MonteCarlo { samples: 2000, seed: 0x0990_5eed }
    }
}

impl OpponentSampler {
    /// Weighted bid vectors; entry `id` is a placeholder to be overwritten.
    pub fn scenarios(&self, env: &Environment, id: ProviderId) -> Vec<(f64, Vec<f64>)> {
        let n = env.n();
        let others: Vec<usize> = (0..n).filter(|&k| k != id.index()).collect();
        let base = env.true_costs();
        if others.is_empty() {
            return vec![(1.0, base)];
        }
        match *self {
            OpponentSampler::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w = 1.0 / samples.max(1) as f64;
                (0..samples.max(1))
                    .map(|_| {
                        let mut b = base.clone();
                        for &k in &others {
                            b[k] = env.providers[k].cost_model.sample(&mut rng);
                        }
                        (w, b)
                    })
                    .collect()
            }
            OpponentSampler::TensorGrid { points_per_dim } => {
                let q = points_per_dim.max(1);
                let total = q.pow(others.len() as u32);
                let w = 1.0 / total as f64;
                (0..total)
                    .map(|mut code| {
                        let mut b = base.clone();
                        for &k in &others {
                            let u = ((code % q) as f64 + 0.5) / q as f64;
                            code /= q;
                            b[k] = env.providers[k].cost_model.quantile(u);
                        }
                        (w, b)
                    })
                    .collect()
            }
        }
    }
}

/// `Q_i(b)`: invocation probability of `id` bidding `bid`, averaged over opponents.
pub fn conditional_invocation_prob(
    allocator: &dyn Allocator,
    env: &Environment,
    id: ProviderId,
    bid: f64,
    sampler: &OpponentSampler,
) -> Result<f64> {
    let mut total = 0.0;
    for (w, bids) in sampler.scenarios(env, id) {
        total += w * response_at(allocator, env, &bids, id, bid)?;
    }
    Ok(total)
}

/// `Q_i` at several bids with the same opponent scenarios, plus the standard
/// error of each average across scenarios.
pub fn conditional_invocation_curve(
    allocator: &dyn Allocator,
    env: &Environment,
    id: ProviderId,
    own_bids: &[f64],
    sampler: &OpponentSampler,
) -> Result<Vec<(f64, f64)>> {
    let scenarios = sampler.scenarios(env, id);
    let mut sums = vec![(0.0, 0.0); own_bids.len()];
    let mut weight_sq = 0.0;
    for (w, bids) in &scenarios {
        weight_sq += w * w;
        for (k, &x) in own_bids.iter().enumerate() {
            let p = response_at(allocator, env, bids, id, x)?;
            sums[k].0 += w * p;
            sums[k].1 += w * p * p;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(m1, m2)| {
            let var = (m2 - m1 * m1).max(0.0);
            (m1, (var * weight_sq).sqrt())
        })
        .collect())
}

/// Interim expected utility of `id` with cost `true_cost` at each own bid.
pub fn interim_utilities(
    allocator: &dyn Allocator,
    rule: &dyn PaymentRule,
    env: &Environment,
    id: ProviderId,
    true_cost: f64,
    own_bids: &[f64],
    sampler: &OpponentSampler,
) -> Result<Vec<f64>> {
    let mut totals = vec![0.0; own_bids.len()];
    for (w, bids) in sampler.scenarios(env, id) {
        let u = rule.utilities(allocator, env, &bids, id, true_cost, own_bids)?;
        for (t, x) in totals.iter_mut().zip(u) {
            *t += w * x;
        }
    }
    Ok(totals)
}

pub fn interim_expected_utility(
    allocator: &dyn Allocator,
    rule: &dyn PaymentRule,
    env: &Environment,
    id: ProviderId,
    true_cost: f64,
    bid: f64,
    sampler: &OpponentSampler,
) -> Result<f64> {
    Ok(interim_utilities(allocator, rule, env, id, true_cost, &[bid], sampler)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{FixedDelayAllocator, NeverAllocator, SearchAllocator, Solver, Weighting};
    use crate::model::{CostModel, DurationModel, Task};
    use crate::time_opt::TimeOptConfig;

    fn example_env() -> Environment {
        Environment::from_parts(
            Task::new(4.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0); 2],
            vec![CostModel::uniform(0.0, 1.0).unwrap(); 2],
            vec![0.2, 0.2],
        )
        .unwrap()
    }

    fn fine() -> PaymentConfig {
        PaymentConfig::with_step(1.0 / 400.0).refined()
    }

    #[test]
    fn fixed_delay_subregion_payment() {
        let env = example_env();
        let a = FixedDelayAllocator::example();
        let t = weighted_threshold_payment(&a, &env, &[0.2, 0.2], ProviderId(1), &fine()).unwrap();
        let expected = 0.27 + 0.195 * (-0.3f64).exp();
        assert!((t - expected).abs() < 1e-3, "{t} vs {expected}");
    }

    #[test]
    fn simultaneous_rule_pays_threshold() {
        let env = example_env();
        let bm2 = SearchAllocator::new(Solver::Simultaneous, Weighting::Virtual, &TimeOptConfig::default());
        let t = weighted_threshold_payment(&bm2, &env, &[0.2, 0.3], ProviderId(1), &fine()).unwrap();
        // Both are hired while 4 (1 - e^-1) e^-1 exceeds 2b.
        let threshold = 2.0 * ((-1.0f64).exp() - (-2.0f64).exp());
        assert!((t - threshold).abs() < 1e-3, "{t} vs {threshold}");
    }

    #[test]
    fn indicator_curve_recovers_threshold() {
        let env = example_env();
        let rule = |bids: &[f64], env: &Environment| {
            let entries = if bids[0] <= 0.6 { vec![(ProviderId(1), 0.0)] } else { vec![] };
            RecruitmentStrategy::for_env(entries, env)
        };
        let t = weighted_threshold_payment(&rule, &env, &[0.1, 0.5], ProviderId(1), &fine()).unwrap();
        assert!((t - 0.6).abs() < 1e-6, "{t}");
        let coarse = weighted_threshold_payment(&rule, &env, &[0.1, 0.5], ProviderId(1), &PaymentConfig::default()).unwrap();
        assert!((coarse - 0.6).abs() <= 0.5 / 200.0 + 1e-12);
    }

    #[test]
    fn non_candidates_have_no_payment() {
        let env = example_env();
        let err = weighted_threshold_payment(&NeverAllocator, &env, &[0.1, 0.1], ProviderId(1), &fine());
        assert!(matches!(err, Err(Error::PaymentUndefined(ProviderId(1)))));
        let curve = bid_response_curve(&NeverAllocator, &env, &[0.1, 0.1], ProviderId(2), &fine()).unwrap();
        assert!(curve.samples.iter().all(|s| s.1 == 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(PaymentConfig::with_step(0.05).cells(0.0, 1.0).is_err());
        assert_eq!(PaymentConfig::default().cells(0.0, 1.0).unwrap(), 200);
        assert_eq!(PaymentConfig::with_step(1.0 / 400.0).cells(0.0, 1.0).unwrap(), 400);
    }

    #[test]
    fn step_function_integral() {
        let curve = BidResponseCurve {
            provider: ProviderId(1),
            samples: vec![(0.25, 1.0), (0.5, 0.5), (0.75, 0.0)],
            lo: 0.0,
            hi: 1.0,
            grid_step: 0.25,
        };
        // cells: [0, .375) -> 1, [.375, .625) -> .5, [.625, 1] -> 0
        assert!((curve.integral_from(0.0) - 0.5).abs() < 1e-15);
        assert!((curve.integral_from(0.5) - 0.0625).abs() < 1e-15);
        assert_eq!(curve.value_at(0.6), 0.5);
        assert_eq!(curve.value_at(0.7), 0.0);
        assert_eq!(curve.max_increase(), 0.0);
    }

    #[test]
    fn tensor_grid_covers_opponents() {
        let env = example_env();
        let s = OpponentSampler::TensorGrid { points_per_dim: 4 }.scenarios(&env, ProviderId(1));
        assert_eq!(s.len(), 4);
        let xs: Vec<f64> = s.iter().map(|(_, b)| b[1]).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
        assert!((s.iter().map(|x| x.0).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn example_hiring_probability() {
        let env = example_env();
        let wgpa = SearchAllocator::new(Solver::BranchAndBound, Weighting::Virtual, &TimeOptConfig::default());
        let sampler = OpponentSampler::TensorGrid { points_per_dim: 200 };
        // Any opponent below 0.1 also lies in the simultaneous region.
        let low = conditional_invocation_prob(&wgpa, &env, ProviderId(1), 0.1, &sampler).unwrap();
        assert!((low - 1.0).abs() < 1e-12);
        let mid = conditional_invocation_prob(&wgpa, &env, ProviderId(1), 0.35, &sampler).unwrap();
        assert!(mid > 0.74 && mid < 1.0, "{mid}");
    }

    #[test]
    fn single_provider_interim_quantities() {
        let env = Environment::from_parts(
            Task::new(4.0, 1.0).unwrap(),
            vec![DurationModel::exponential(1.0)],
            vec![CostModel::uniform(0.0, 1.0).unwrap()],
            vec![0.3],
        )
        .unwrap();
        let wgpa = SearchAllocator::new(Solver::BranchAndBound, Weighting::Virtual, &TimeOptConfig::default());
        let sampler = OpponentSampler::default();
        let q = conditional_invocation_prob(&wgpa, &env, ProviderId(1), 0.3, &sampler).unwrap();
        assert_eq!(q, 1.0);
        let rule = WeightedThreshold::new(fine());
        let u = interim_expected_utility(&wgpa, &rule, &env, ProviderId(1), 1.0, 1.0, &sampler).unwrap();
        assert!(u.abs() < 1e-9);
        // Truthful utility equals the integral of Q above the cost: here 1 - c.
        let u = interim_expected_utility(&wgpa, &rule, &env, ProviderId(1), 0.3, 0.3, &sampler).unwrap();
        assert!((u - 0.7).abs() < 1e-9, "{u}");
    }
}
