//! Planning with misestimated service rates.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{evaluate, social_welfare, success_probability};
use crate::mechanism::run_mechanism;
use crate::model::{BidVector, DurationModel, Environment};
use crate::sim::execution::simulate_execution;
use crate::sim::experiment::{
    replication_environment, stream, with_jobs, EfficiencyMetrics, ExperimentConfig, ResultRow,
};

const STREAM_BELIEF: u64 = 2;
const STREAM_TRUTH: u64 = 64;

/// Exponential rates of `env` moved to a uniform point of the ball of
/// radius `0.01 * delta_percent * |rates|` around them. Draws that make a
/// rate non-positive are discarded and redrawn.
pub fn perturb_rates<R: Rng + ?Sized>(env: &Environment, delta_percent: f64, rng: &mut R) -> Result<Environment> {
    let rates: Vec<f64> = env
        .providers
        .iter()
        .map(|p| {
            p.duration
                .exponential_rate()
                .ok_or_else(|| Error::InvalidConfig("rate perturbation needs exponential service times".into()))
        })
        .collect::<Result<_>>()?;
    let n = rates.len();
    let norm = rates.iter().map(|r| r * r).sum::<f64>().sqrt();
    let radius = 0.01 * delta_percent * norm;
    for _ in 0..10_000 {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            continue;
        }
        let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
        let moved: Vec<f64> = rates.iter().zip(&dir).map(|(l, u)| l + r * u / len).collect();
        if moved.iter().all(|&l| l > 0.0) {
            return env.with_durations(moved.into_iter().map(DurationModel::exponential).collect());
        }
    }
    Err(Error::InvalidConfig(format!("no positive perturbation found for delta {delta_percent}")))
}

/// Mechanisms plan on perturbed rates; revenue, success and welfare are then
/// evaluated, and traces simulated, with the true rates. Rows follow the
/// experiment schema with the setting label suffixed by `@delta=<delta>`.
pub fn run_robustness(config: &ExperimentConfig, delta_percent: f64) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if !(delta_percent > 0.0 && delta_percent < 40.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 40), got {delta_percent}")));
    }
    let tasks: Vec<(usize, usize)> = (0..config.settings.len())
        .flat_map(|s| (0..config.replications).map(move |r| (s, r)))
        .collect();
    let chunks = with_jobs(config.jobs, || {
        tasks
            .par_iter()
            .map(|&(s, rep)| -> Result<Vec<ResultRow>> {
                let setting = &config.settings[s];
                let label = format!("{}@delta={}", setting.label, delta_percent);
                let (seed, truth) = replication_environment(config, setting, rep)?;
                let belief = perturb_rates(&truth, delta_percent, &mut stream(seed, STREAM_BELIEF))?;
                let bids = BidVector::truthful(&truth);
                let mut rows = vec![];
                for (k, &kind) in config.mechanisms.iter().enumerate() {
                    let mut pairing = stream(seed, 1);
                    let row = match run_mechanism(kind, &bids, &belief, &config.mechanism, &mut pairing) {
                        Ok(out) => {
                            let paid = out.payments.aligned(&out.strategy);
                            let e = evaluate(&out.strategy, &paid, &truth);
                            let metrics = EfficiencyMetrics::of(&out.strategy, &truth);
                            let realized = (config.traces > 0).then(|| {
                                let mut rng = stream(seed, STREAM_TRUTH + k as u64);
                                let total: f64 = (0..config.traces)
                                    .map(|_| simulate_execution(&out.strategy, &paid, &truth, &mut rng).revenue)
                                    .sum();
                                total / config.traces as f64
                            });
                            ResultRow {
                                setting: label.clone(),
                                mechanism: kind.name().to_string(),
                                replication: rep,
                                seed,
                                n: truth.n(),
                                revenue: Some(e.expected_revenue),
                                welfare: Some(social_welfare(&out.strategy, &truth)),
                                success: Some(success_probability(&out.strategy, &truth)),
                                cost: Some(e.expected_cost),
                                m: Some(metrics.m),
                                m_h: Some(metrics.m_h),
                                d_i: Some(metrics.d_i),
                                realized_revenue: realized,
                                error: None,
                            }
                        }
                        Err(e) => ResultRow {
                            setting: label.clone(),
                            mechanism: kind.name().to_string(),
                            replication: rep,
                            seed,
                            n: truth.n(),
                            revenue: None,
                            welfare: None,
                            success: None,
                            cost: None,
                            m: None,
                            m_h: None,
                            d_i: None,
                            realized_revenue: None,
                            error: Some(e.to_string()),
                        },
                    };
                    rows.push(row);
                }
                Ok(rows)
            })
            .collect::<Vec<_>>()
    })?;
    let mut rows = vec![];
    for chunk in chunks {
        rows.extend(chunk?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::MechanismKind;
    use crate::sim::experiment::Setting;
    use crate::sim::generate::{generate_environment, GeneratorSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perturbation_stays_in_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let env = generate_environment(&GeneratorSpec::Independent, 6, 10.0, 3.0, &mut rng).unwrap();
        let rates: Vec<f64> = env.providers.iter().map(|p| p.duration.exponential_rate().unwrap()).collect();
        let norm = rates.iter().map(|r| r * r).sum::<f64>().sqrt();
        for _ in 0..50 {
            let p = perturb_rates(&env, 20.0, &mut rng).unwrap();
            let dist = p
                .providers
                .iter()
                .zip(&rates)
                .map(|(q, r)| (q.duration.exponential_rate().unwrap() - r).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= 0.2 * norm + 1e-12);
            assert!(p.providers.iter().all(|q| q.duration.exponential_rate().unwrap() > 0.0));
        }
    }

    #[test]
    fn tiny_delta_matches_plain_run() {
        let config = ExperimentConfig {
            settings: vec![Setting::standard(4).unwrap()],
            n_min: 2,
            n_max: 3,
            replications: 3,
            mechanisms: vec![MechanismKind::Bm1],
            ..Default::default()
        };
        let plain = crate::sim::experiment::run_experiment(&config).unwrap();
        let robust = run_robustness(&config, 1e-9).unwrap();
        for (a, b) in plain.iter().zip(&robust) {
            assert!((a.revenue.unwrap() - b.revenue.unwrap()).abs() < 1e-6);
        }
        assert!(run_robustness(&config, 45.0).is_err());
    }
}
