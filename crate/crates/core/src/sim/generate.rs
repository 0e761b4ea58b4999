//! Random environment generators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostModel, DurationModel, Environment, Task};

/// How providers are drawn. Every generator gives providers exponential
/// service times unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Costs and rates drawn independently from `U(0, 1)`.
    Independent,
    /// As `Independent`, then sorted so the k-th highest cost goes with the
    /// k-th highest rate.
    Correlated,
    /// A fraction `theta` of cheap, slow providers with cost and rate in
    /// `(0, 0.5)`; the rest have both in `(0.5, 1)`. Each group's cost prior
    /// is uniform on its own interval.
    Heterogeneous { theta: f64 },
    /// `providers` providers with rate `step * i` and cost equal to the rate.
    Continuum {
        #[serde(default = "default_continuum_providers")]
        providers: usize,
        #[serde(default = "default_continuum_step")]
        step: f64,
    },
    /// Alternating groups: odd ids deliver after exactly `D / 2`; even ids
    /// deliver after `D / 2` or `2 D` with equal probability.
    MultiModal {
        #[serde(default = "default_fixed_costs")]
        fixed_costs: (f64, f64),
        #[serde(default = "default_bimodal_costs")]
        bimodal_costs: (f64, f64),
    },
}

fn default_continuum_providers() -> usize {
    100
}

fn default_continuum_step() -> f64 {
    0.01
}

fn default_fixed_costs() -> (f64, f64) {
    (2.0, 2.5)
}

fn default_bimodal_costs() -> (f64, f64) {
    (0.0, 0.25)
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::Correlated
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::Heterogeneous { theta } if !(0.0..=1.0).contains(theta) => {
                Err(Error::InvalidConfig(format!("theta must lie in [0, 1], got {theta}")))
            }
            GeneratorSpec::Continuum { providers, step } if *providers == 0 || !(*step > 0.0) => {
                Err(Error::InvalidConfig("continuum needs providers >= 1 and a positive step".into()))
            }
            GeneratorSpec::MultiModal { fixed_costs, bimodal_costs } => {
                CostModel::uniform(fixed_costs.0, fixed_costs.1)?;
                CostModel::uniform(bimodal_costs.0, bimodal_costs.1)?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Provider count fixed by the generator, if any.
    pub fn fixed_n(&self) -> Option<usize> {
        match self {
            GeneratorSpec::Continuum { providers, .. } => Some(*providers),
            _ => None,
        }
    }
}

/// Draw from `(lo, hi]`, avoiding an exact zero rate.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    hi - (hi - lo) * rng.random::<f64>()
}

/// Draws an environment with `n` providers (ignored by fixed-size specs)
/// for a task worth `value` with deadline `deadline`. True costs are drawn
/// here too.
pub fn generate_environment<R: Rng + ?Sized>(
    spec: &GeneratorSpec,
    n: usize,
    value: f64,
    deadline: f64,
    rng: &mut R,
) -> Result<Environment> {
    spec.validate()?;
    let task = Task::new(value, deadline)?;
    let unit = CostModel::uniform(0.0, 1.0)?;
    let (durations, models, costs): (Vec<DurationModel>, Vec<CostModel>, Vec<f64>) = match spec {
        GeneratorSpec::Independent | GeneratorSpec::Correlated => {
            let mut rates: Vec<f64> = (0..n).map(|_| open_uniform(rng, 0.0, 1.0)).collect();
            let mut costs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            if *spec == GeneratorSpec::Correlated {
                rates.sort_by(|a, b| b.total_cmp(a));
                costs.sort_by(|a, b| b.total_cmp(a));
            }
            (rates.into_iter().map(DurationModel::exponential).collect(), vec![unit; n], costs)
        }
        GeneratorSpec::Heterogeneous { theta } => {
            let slow = (theta * n as f64).round() as usize;
            let mut d = Vec::with_capacity(n);
            let mut m = Vec::with_capacity(n);
            let mut c = Vec::with_capacity(n);
            for k in 0..n {
                let (lo, hi) = if k < slow { (0.0, 0.5) } else { (0.5, 1.0) };
                d.push(DurationModel::exponential(open_uniform(rng, lo, hi)));
                let model = CostModel::uniform(lo, hi)?;
                c.push(model.sample(rng));
                m.push(model);
            }
            (d, m, c)
        }
        GeneratorSpec::Continuum { providers, step } => {
            let rates: Vec<f64> = (1..=*providers).map(|i| step * i as f64).collect();
            let hi = rates.last().copied().unwrap_or(1.0).max(1.0);
            let model = CostModel::uniform(0.0, hi)?;
            (
                rates.iter().map(|&r| DurationModel::exponential(r)).collect(),
                vec![model; *providers],
                rates,
            )
        }
        GeneratorSpec::MultiModal { fixed_costs, bimodal_costs } => {
            let fixed = DurationModel::deterministic(deadline / 2.0);
            let bimodal = DurationModel::mixture(
                vec![0.5, 0.5],
                vec![DurationModel::deterministic(deadline / 2.0), DurationModel::deterministic(2.0 * deadline)],
            )?;
            let fixed_model = CostModel::uniform(fixed_costs.0, fixed_costs.1)?;
            let bimodal_model = CostModel::uniform(bimodal_costs.0, bimodal_costs.1)?;
            let mut d = Vec::with_capacity(n);
            let mut m = Vec::with_capacity(n);
            let mut c = Vec::with_capacity(n);
            for k in 0..n {
                let (law, model) =
                    if k % 2 == 0 { (&fixed, &fixed_model) } else { (&bimodal, &bimodal_model) };
                d.push(law.clone());
                c.push(model.sample(rng));
                m.push(model.clone());
            }
            (d, m, c)
        }
    };
    Environment::from_parts(task, durations, models, costs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProviderId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn continuum_rates_and_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = GeneratorSpec::Continuum { providers: 100, step: 0.01 };
        let env = generate_environment(&spec, 3, 10.0, 3.0, &mut rng).unwrap();
        assert_eq!(env.n(), 100);
        for (k, p) in env.providers.iter().enumerate() {
            let rate = p.duration.exponential_rate().unwrap();
            assert!((rate - 0.01 * (k + 1) as f64).abs() < 1e-12);
            assert_eq!(p.true_cost, rate);
        }
    }

    #[test]
    fn correlated_ranks_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let env = generate_environment(&GeneratorSpec::Correlated, 5, 10.0, 3.0, &mut rng).unwrap();
        let mut by_rate: Vec<usize> = (0..5).collect();
        by_rate.sort_by(|&a, &b| {
            let ra = env.providers[a].duration.exponential_rate().unwrap();
            let rb = env.providers[b].duration.exponential_rate().unwrap();
            ra.total_cmp(&rb)
        });
        let mut by_cost: Vec<usize> = (0..5).collect();
        by_cost.sort_by(|&a, &b| env.providers[a].true_cost.total_cmp(&env.providers[b].true_cost));
        assert_eq!(by_rate, by_cost);
    }

    #[test]
    fn heterogeneous_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = GeneratorSpec::Heterogeneous { theta: 0.5 };
        let env = generate_environment(&spec, 10, 10.0, 3.0, &mut rng).unwrap();
        let slow = env
            .providers
            .iter()
            .filter(|p| p.true_cost < 0.5 && p.duration.exponential_rate().unwrap() < 0.5)
            .count();
        let fast = env
            .providers
            .iter()
            .filter(|p| p.true_cost > 0.5 && p.duration.exponential_rate().unwrap() > 0.5)
            .count();
        assert_eq!((slow, fast), (5, 5));
        assert!(generate_environment(&GeneratorSpec::Heterogeneous { theta: 1.5 }, 4, 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn multimodal_groups_alternate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = GeneratorSpec::MultiModal { fixed_costs: (0.0, 1.0), bimodal_costs: (0.0, 1.0) };
        let env = generate_environment(&spec, 2, 4.0, 2.0, &mut rng).unwrap();
        let fixed = &env.provider(ProviderId(1)).duration;
        let bimodal = &env.provider(ProviderId(2)).duration;
        assert_eq!(fixed.cdf(1.0), 1.0);
        assert_eq!(bimodal.cdf(1.0), 0.5);
        assert_eq!(bimodal.cdf(4.0), 1.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_environment(&GeneratorSpec::Independent, 6, 4.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = generate_environment(&GeneratorSpec::Independent, 6, 4.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.unwrap(), b.unwrap());
    }
}
