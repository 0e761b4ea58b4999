//! Monte Carlo execution of a recruitment plan.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Environment, ProviderId, RecruitmentStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// Delivery time each candidate would need, in strategy order.
    pub delivery_times: Vec<f64>,
    pub hired: Vec<ProviderId>,
    /// Completion time if the task was delivered by the deadline.
    pub completion: Option<f64>,
    /// Payments of the hired prefix, in hiring order.
    pub payments: Vec<f64>,
    pub revenue: f64,
    pub welfare: f64,
}

impl ExecutionTrace {
    pub fn succeeded(&self) -> bool {
        self.completion.is_some()
    }
}

/// Runs the plan once. Candidate `k` is hired when its slot `tau_k` comes
/// before every already-hired provider has delivered; a delivery exactly at
/// `tau_k` counts as completed first, as in the closed-form probabilities.
/// `payments` is aligned with the strategy entries.
pub fn simulate_execution<R: Rng + ?Sized>(
    strategy: &RecruitmentStrategy,
    payments: &[f64],
    env: &Environment,
    rng: &mut R,
) -> ExecutionTrace {
    assert_eq!(payments.len(), strategy.len(), "one payment per strategy entry");
    let delivery_times: Vec<f64> =
        strategy.providers().map(|id| env.provider(id).duration.sample(rng)).collect();
    let d = env.deadline();
    let mut earliest = f64::INFINITY;
    let mut hired = vec![];
    let mut paid = vec![];
    let mut costs = 0.0;
    for (k, &(id, tau)) in strategy.entries().iter().enumerate() {
        if tau >= earliest || tau > d {
            break;
        }
        hired.push(id);
        paid.push(payments[k]);
        costs += env.provider(id).true_cost;
        earliest = earliest.min(tau + delivery_times[k]);
    }
    let completion = (earliest <= d).then_some(earliest);
    let gain = if completion.is_some() { env.value() } else { 0.0 };
    let total_paid: f64 = paid.iter().sum();
    ExecutionTrace {
        delivery_times,
        hired,
        completion,
        payments: paid,
        revenue: gain - total_paid,
        welfare: gain - costs,
    }
}
