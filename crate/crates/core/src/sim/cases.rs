//! Named reference cases shared by the command line and the test suites.

use serde::{Deserialize, Serialize};

use crate::allocation::{Allocator, FixedDelayAllocator, SearchAllocator, Solver, Weighting};
use crate::error::Result;
use crate::eval::invocation_probability;
use crate::mechanism::{MechanismConfig, MechanismKind};
use crate::model::{CostModel, DurationModel, Environment, ProviderId, Task};
use crate::payments::{weighted_threshold_payment, PaymentConfig};
use crate::sim::experiment::{ExperimentConfig, Setting};
use crate::sim::generate::{generate_environment, GeneratorSpec};
use crate::time_opt::TimeOptConfig;

/// Two unit-rate exponential providers with `U(0, 1)` costs, `V = 4`, `D = 1`.
pub fn example2_env(costs: [f64; 2]) -> Result<Environment> {
    Environment::from_parts(
        Task::new(4.0, 1.0)?,
        vec![DurationModel::exponential(1.0); 2],
        vec![CostModel::uniform(0.0, 1.0)?; 2],
        costs.to_vec(),
    )
}

/// Thresholds and payments of the two-provider example, with the
/// reference values alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example2Report {
    /// Largest common bid at which the simultaneous rule recruits both.
    pub simultaneous_threshold: f64,
    /// Simultaneous-rule payment to each provider at bids `(0.2, 0.2)`.
    pub simultaneous_payment: f64,
    /// Fixed-delay variant payment at bids `(0.2, 0.2)`.
    pub fixed_delay_payment: f64,
    /// Invocation probability of the provider recruited at `0.3`.
    pub second_invocation: f64,
    /// Largest common bid at which the optimal rule recruits both at time 0.
    pub optimal_boundary: f64,
}

impl Example2Report {
    pub const REFERENCE: Example2Report = Example2Report {
        simultaneous_threshold: 0.465,
        simultaneous_payment: 0.465,
        fixed_delay_payment: 0.414,
        second_invocation: 0.7408,
        optimal_boundary: 0.27,
    };
}

/// Largest `b` in `[lo, hi]` with `pred(b)` true, assuming `pred` switches
/// from true to false once.
pub fn bisect_switch(lo: f64, hi: f64, mut pred: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        if pred(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn example2_report(payment: &PaymentConfig, time_opt: &TimeOptConfig) -> Result<Example2Report> {
    let env = example2_env([0.2, 0.2])?;
    let simultaneous = SearchAllocator::new(Solver::Simultaneous, Weighting::Virtual, time_opt);
    let optimal = SearchAllocator::new(Solver::BranchAndBound, Weighting::Virtual, time_opt);
    let fixed = FixedDelayAllocator::example();

    let simultaneous_threshold =
        bisect_switch(0.05, 0.95, |b| Ok(simultaneous.allocate(&[b, b], &env)?.len() == 2))?;
    let optimal_boundary = bisect_switch(0.05, 0.45, |b| {
        let s = optimal.allocate(&[b, b], &env)?;
        Ok(s.len() == 2 && s.times().all(|t| t < 1e-6))
    })?;

    let bids = [0.2, 0.2];
    let id = ProviderId(1);
    let simultaneous_payment = weighted_threshold_payment(&simultaneous, &env, &bids, id, payment)?;
    let fixed_delay_payment = weighted_threshold_payment(&fixed, &env, &bids, id, payment)?;
    let s = fixed.allocate(&[0.2, 0.35], &env)?;
    let second_invocation = invocation_probability(&s, ProviderId(2), &env);
    Ok(Example2Report {
        simultaneous_threshold,
        simultaneous_payment,
        fixed_delay_payment,
        second_invocation,
        optimal_boundary,
    })
}

/// Expected revenue ordering among the benchmarks: each pair reads
/// "first beats second".
pub const REVENUE_ORDERING: [(MechanismKind, MechanismKind); 4] = [
    (MechanismKind::Bm4, MechanismKind::Wgpa),
    (MechanismKind::Wgpa, MechanismKind::Bm2),
    (MechanismKind::Bm2, MechanismKind::Bm1),
    (MechanismKind::Wgpa, MechanismKind::Bm3),
];

/// Rate perturbation sizes, in percent, of the robustness study.
pub const ROBUSTNESS_DELTAS: [f64; 4] = [5.0, 10.0, 20.0, 30.0];

/// Revenue comparison across the four standard settings.
pub fn settings_config(replications: usize) -> ExperimentConfig {
    ExperimentConfig { replications, ..Default::default() }
}

/// Exact search against the heuristic: `replications` instances per setting.
pub fn heuristic_config(replications: usize) -> ExperimentConfig {
    ExperimentConfig { replications, mechanisms: vec![MechanismKind::Wgpa, MechanismKind::WgpaHeuristic], ..Default::default() }
}

/// Plan shape against the deadline: `V` in `{4, 10}`, `D` in `{0.5, 1, 2, 3}`.
pub fn efficiency_config(replications: usize) -> ExperimentConfig {
    let mut settings = vec![];
    for v in [4.0, 10.0] {
        for d in [0.5, 1.0, 2.0, 3.0] {
            settings.push(Setting::new(format!("V={v},D={d}"), v, d));
        }
    }
    ExperimentConfig {
        settings,
        replications,
        mechanisms: vec![MechanismKind::Wgpa],
        allocation_only: true,
        ..Default::default()
    }
}

/// Expensive fixed-delay providers against cheap bimodal ones, `V = 4`,
/// `D = 1`, two providers (one of each).
pub fn multimodal_config(replications: usize) -> ExperimentConfig {
    ExperimentConfig {
        settings: vec![Setting::new("multimodal", 4.0, 1.0)],
        generator: GeneratorSpec::MultiModal { fixed_costs: (2.0, 2.5), bimodal_costs: (0.0, 0.25) },
        n_min: 2,
        n_max: 2,
        replications,
        mechanisms: vec![MechanismKind::Wgpa, MechanismKind::Bm1, MechanismKind::Bm2, MechanismKind::Bm4],
        ..Default::default()
    }
}

/// Rate-misestimation study in setting 1.
pub fn robustness_config(replications: usize) -> ExperimentConfig {
    ExperimentConfig {
        settings: vec![Setting::standard(1).expect("valid id")],
        replications,
        mechanisms: vec![MechanismKind::Wgpa, MechanismKind::Bm1, MechanismKind::Bm2],
        mechanism: MechanismConfig { payment: PaymentConfig::with_step(0.02).refined(), ..Default::default() },
        ..Default::default()
    }
}

/// One hundred providers with rates `0.01 i` and costs equal to the rates.
pub fn continuum_env(value: f64, deadline: f64) -> Result<Environment> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    generate_environment(&GeneratorSpec::Continuum { providers: 100, step: 0.01 }, 100, value, deadline, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_switch() {
        let x = bisect_switch(0.0, 1.0, |b| Ok(b <= 0.3)).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn example2_matches_reference() {
        let r = example2_report(&PaymentConfig::default().refined(), &TimeOptConfig::default()).unwrap();
        let p = Example2Report::REFERENCE;
        assert!((r.simultaneous_threshold - p.simultaneous_threshold).abs() < 0.01);
        assert!((r.simultaneous_payment - p.simultaneous_payment).abs() < 0.005);
        assert!((r.fixed_delay_payment - p.fixed_delay_payment).abs() < 0.005);
        assert!((r.second_invocation - p.second_invocation).abs() < 1e-4);
        assert!((r.optimal_boundary - p.optimal_boundary).abs() < 0.02);
    }
}
