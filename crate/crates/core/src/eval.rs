//! Closed-form evaluation of recruitment strategies.
//!
//! Provider `s_k` is invoked at `tau_k` only if no earlier recruit has
//! delivered by then, so its invocation probability is the product of the
//! earlier recruits' survival functions at the elapsed time. Equal times are
//! ordered by list position; `G(0) = 0` makes simultaneous recruits
//! non-blocking.

use serde::{Deserialize, Serialize};

use crate::model::{DurationModel, Environment, ProviderId, RecruitmentStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEvaluation {
    pub success_prob: f64,
    /// Aligned with the strategy's entries.
    pub invocation_probs: Vec<f64>,
    pub expected_value: f64,
    pub expected_cost: f64,
    pub expected_revenue: f64,
}

/// `1 - prod(1 - G_k(D - tau_k))` over the given laws and times.
pub fn success_from_laws(laws: &[&DurationModel], times: &[f64], deadline: f64) -> f64 {
    let fail: f64 = laws
        .iter()
        .zip(times)
        .map(|(g, &tau)| g.survival(deadline - tau))
        .product();
    1.0 - fail
}

/// Invocation probability of every position, in list order.
pub fn invocation_from_laws(laws: &[&DurationModel], times: &[f64]) -> Vec<f64> {
    (0..laws.len())
        .map(|k| {
            (0..k)
                .map(|j| laws[j].survival(times[k] - times[j]))
                .product()
        })
        .collect()
}

/// `V * P_succ - sum_k w_k * P_k` for an ordering given as laws and
/// per-position weights.
pub fn objective_from_laws(
    laws: &[&DurationModel],
    times: &[f64],
    weights: &[f64],
    value: f64,
    deadline: f64,
) -> f64 {
    let success = success_from_laws(laws, times, deadline);
    let cost: f64 = invocation_from_laws(laws, times)
        .iter()
        .zip(weights)
        .map(|(p, w)| p * w)
        .sum();
    value * success - cost
}

fn strategy_laws<'a>(strategy: &RecruitmentStrategy, env: &'a Environment) -> Vec<&'a DurationModel> {
    strategy
        .providers()
        .map(|id| &env.provider(id).duration)
        .collect()
}

fn strategy_times(strategy: &RecruitmentStrategy) -> Vec<f64> {
    strategy.times().collect()
}

pub fn success_probability(strategy: &RecruitmentStrategy, env: &Environment) -> f64 {
    success_from_laws(&strategy_laws(strategy, env), &strategy_times(strategy), env.deadline())
}

/// Invocation probabilities aligned with the strategy's entries.
pub fn invocation_probabilities(strategy: &RecruitmentStrategy, env: &Environment) -> Vec<f64> {
    invocation_from_laws(&strategy_laws(strategy, env), &strategy_times(strategy))
}

/// Zero when `id` is not part of the strategy.
pub fn invocation_probability(
    strategy: &RecruitmentStrategy,
    id: ProviderId,
    env: &Environment,
) -> f64 {
    match strategy.position(id) {
        None => 0.0,
        Some(k) => {
            let e = strategy.entries();
            let tau = e[k].1;
            e[..k]
                .iter()
                .map(|&(j, tau_j)| env.provider(j).duration.survival(tau - tau_j))
                .product()
        }
    }
}

/// `payments[k]` is the amount paid to the k-th recruit if invoked.
pub fn expected_cost(strategy: &RecruitmentStrategy, payments: &[f64], env: &Environment) -> f64 {
    assert_eq!(payments.len(), strategy.len(), "one payment per strategy entry");
    invocation_probabilities(strategy, env)
        .iter()
        .zip(payments)
        .map(|(p, t)| p * t)
        .sum()
}

pub fn expected_revenue(strategy: &RecruitmentStrategy, payments: &[f64], env: &Environment) -> f64 {
    evaluate(strategy, payments, env).expected_revenue
}

pub fn evaluate(
    strategy: &RecruitmentStrategy,
    payments: &[f64],
    env: &Environment,
) -> StrategyEvaluation {
    assert_eq!(payments.len(), strategy.len(), "one payment per strategy entry");
    let laws = strategy_laws(strategy, env);
    let times = strategy_times(strategy);
    let success_prob = success_from_laws(&laws, &times, env.deadline());
    let invocation_probs = invocation_from_laws(&laws, &times);
    let expected_cost: f64 = invocation_probs.iter().zip(payments).map(|(p, t)| p * t).sum();
    let expected_value = env.value() * success_prob;
    StrategyEvaluation {
        success_prob,
        invocation_probs,
        expected_value,
        expected_cost,
        expected_revenue: expected_value - expected_cost,
    }
}

/// Objective of an ordering at given times, where `weights` is indexed by
/// provider (`weights[id.index()]`), typically virtual costs.
pub fn virtual_objective(
    ordering: &[ProviderId],
    times: &[f64],
    weights: &[f64],
    env: &Environment,
) -> f64 {
    assert_eq!(ordering.len(), times.len(), "one time per provider");
    let laws: Vec<&DurationModel> = ordering.iter().map(|&id| &env.provider(id).duration).collect();
    let w: Vec<f64> = ordering.iter().map(|id| weights[id.index()]).collect();
    objective_from_laws(&laws, times, &w, env.value(), env.deadline())
}

/// Objective of a full strategy with per-provider weights.
pub fn strategy_objective(strategy: &RecruitmentStrategy, weights: &[f64], env: &Environment) -> f64 {
    let ordering: Vec<ProviderId> = strategy.providers().collect();
    virtual_objective(&ordering, &strategy_times(strategy), weights, env)
}

/// Expected welfare at the providers' true costs.
pub fn social_welfare(strategy: &RecruitmentStrategy, env: &Environment) -> f64 {
    strategy_objective(strategy, &env.true_costs(), env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, Task};

    fn exp_env(n: usize, value: f64, deadline: f64, costs: &[f64]) -> Environment {
        Environment::from_parts(
            Task::new(value, deadline).unwrap(),
            vec![DurationModel::exponential(1.0); n],
            vec![CostModel::uniform(0.0, 1.0).unwrap(); n],
            costs.to_vec(),
        )
        .unwrap()
    }

    fn strat(entries: &[(usize, f64)], d: f64) -> RecruitmentStrategy {
        RecruitmentStrategy::new(entries.iter().map(|&(i, t)| (ProviderId(i), t)).collect(), d)
            .unwrap()
    }

    #[test]
    fn success_probability_examples() {
        let env = exp_env(2, 4.0, 1.0, &[0.2, 0.2]);
        assert_eq!(success_probability(&RecruitmentStrategy::empty(), &env), 0.0);
        let one = strat(&[(1, 0.0)], 1.0);
        assert!((success_probability(&one, &env) - 0.632_120_558_828_557_7).abs() < 1e-12);
        let two = strat(&[(1, 0.0), (2, 0.0)], 1.0);
        assert!((success_probability(&two, &env) - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn invocation_probability_examples() {
        let env = exp_env(3, 4.0, 1.0, &[0.2, 0.2, 0.2]);
        let s = strat(&[(1, 0.0), (2, 0.3)], 1.0);
        assert_eq!(invocation_probability(&s, ProviderId(1), &env), 1.0);
        assert!((invocation_probability(&s, ProviderId(2), &env) - 0.7408).abs() < 1e-4);
        assert_eq!(invocation_probability(&s, ProviderId(3), &env), 0.0);
        let s3 = strat(&[(1, 0.0), (2, 0.0), (3, 0.3)], 1.0);
        assert!((invocation_probability(&s3, ProviderId(3), &env) - (-0.6f64).exp()).abs() < 1e-12);
        assert_eq!(invocation_probabilities(&s3, &env)[1], 1.0);
    }

    #[test]
    fn cost_and_revenue_examples() {
        let env = exp_env(2, 4.0, 1.0, &[0.2, 0.2]);
        let empty = RecruitmentStrategy::empty();
        assert_eq!(expected_cost(&empty, &[], &env), 0.0);
        assert_eq!(expected_revenue(&empty, &[], &env), 0.0);
        let one = strat(&[(1, 0.0)], 1.0);
        assert!((expected_cost(&one, &[0.465], &env) - 0.465).abs() < 1e-15);
        assert!((expected_revenue(&one, &[0.465], &env) - 2.0635).abs() < 1e-3);
        let staged = strat(&[(1, 0.0), (2, 0.3)], 1.0);
        assert!((expected_cost(&staged, &[0.5, 0.5], &env) - 0.8704).abs() < 1e-4);
        let both = strat(&[(1, 0.0), (2, 0.0)], 1.0);
        assert!((expected_revenue(&both, &[0.414, 0.414], &env) - 2.6306).abs() < 1e-4);
    }

    #[test]
    fn virtual_objective_and_welfare() {
        let env = exp_env(2, 4.0, 1.0, &[0.3, 0.3]);
        assert_eq!(virtual_objective(&[], &[], &[0.0, 0.0], &env), 0.0);
        let f = virtual_objective(&[ProviderId(1)], &[0.0], &[0.93, 0.93], &env);
        assert!((f - 1.5985).abs() < 1e-3);
        let one = strat(&[(1, 0.0)], 1.0);
        assert!((social_welfare(&one, &env) - 2.2285).abs() < 1e-3);
        // Relabeling identical providers leaves the objective unchanged.
        let a = virtual_objective(&[ProviderId(1), ProviderId(2)], &[0.0, 0.4], &[0.5, 0.5], &env);
        let b = virtual_objective(&[ProviderId(2), ProviderId(1)], &[0.0, 0.4], &[0.5, 0.5], &env);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn revenue_identity() {
        let env = exp_env(3, 10.0, 3.0, &[0.1, 0.5, 0.9]);
        let s = strat(&[(3, 0.0), (1, 0.7), (2, 2.1)], 3.0);
        let e = evaluate(&s, &[1.0, 0.6, 0.2], &env);
        assert_eq!(e.expected_revenue, e.expected_value - e.expected_cost);
        assert!(e.invocation_probs.windows(2).all(|w| w[1] <= w[0]));
    }
}
