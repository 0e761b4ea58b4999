//! Replicated experiments over random environments.
//!
//! Seeds: the master seed and replication index give a replication seed;
//! each replication then draws from independent ChaCha streams keyed by
//! purpose (environment, pairing, one execution stream per mechanism), so
//! adding a mechanism or a setting never shifts another's draws. Settings
//! share replication seeds, so every setting and mechanism sees the same
//! provider draws.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{SearchAllocator, Solver, Weighting};
use crate::error::{Error, Result};
use crate::eval::{evaluate, invocation_probabilities, social_welfare, strategy_objective, success_probability};
use crate::mechanism::{allocate_for, run_mechanism, MechanismConfig, MechanismKind};
use crate::model::{BidVector, Environment, RecruitmentStrategy};
use crate::sim::execution::simulate_execution;
use crate::sim::generate::{generate_environment, GeneratorSpec};

const STREAM_ENV: u64 = 0;
const STREAM_PAIRING: u64 = 1;
const STREAM_EXEC: u64 = 16;

/// A task value and deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub label: String,
    pub value: f64,
    pub deadline: f64,
}

impl Setting {
    pub fn new(label: impl Into<String>, value: f64, deadline: f64) -> Self {
        Setting { label: label.into(), value, deadline }
    }

    /// The four standard settings: 1 `(10, 3)`, 2 `(4, 3)`, 3 `(10, 1)`, 4 `(4, 1)`.
    pub fn standard(id: u8) -> Result<Self> {
        let (v, d) = match id {
            1 => (10.0, 3.0),
            2 => (4.0, 3.0),
            3 => (10.0, 1.0),
            4 => (4.0, 1.0),
            _ => return Err(Error::InvalidConfig(format!("setting must be 1-4, got {id}"))),
        };
        Ok(Setting::new(format!("setting{id}"), v, d))
    }

    pub fn all_standard() -> Vec<Self> {
        (1..=4).map(|k| Setting::standard(k).expect("valid id")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub settings: Vec<Setting>,
    pub generator: GeneratorSpec,
    pub n_min: usize,
    pub n_max: usize,
    pub replications: usize,
    pub seed: u64,
    pub mechanisms: Vec<MechanismKind>,
    pub mechanism: MechanismConfig,
    /// Execution traces simulated per outcome.
    pub traces: usize,
    /// Skip payments; revenue and cost are then left empty.
    pub allocation_only: bool,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            settings: Setting::all_standard(),
            generator: GeneratorSpec::Correlated,
            n_min: 2,
            n_max: 8,
            replications: 300,
            seed: 0,
            mechanisms: vec![
                MechanismKind::Wgpa,
                MechanismKind::Bm1,
                MechanismKind::Bm2,
                MechanismKind::Bm3,
                MechanismKind::Bm4,
            ],
            mechanism: MechanismConfig::default(),
            traces: 0,
            allocation_only: false,
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    /// Full scale: `n` in `[2, 20]`, 1000 replications.
    pub fn paper_scale(mut self) -> Self {
        self.n_min = 2;
        self.n_max = 20;
        self.replications = 1000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.settings.is_empty() {
            return Err(Error::InvalidConfig("no settings given".into()));
        }
        if self.generator.fixed_n().is_none() && (self.n_min == 0 || self.n_min > self.n_max) {
            return Err(Error::InvalidConfig(format!("bad provider range [{}, {}]", self.n_min, self.n_max)));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        self.generator.validate()?;
        for s in &self.settings {
            crate::model::Task::new(s.value, s.deadline)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

/// One mechanism on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub setting: String,
    pub mechanism: String,
    pub replication: usize,
    pub seed: u64,
    pub n: usize,
    pub revenue: Option<f64>,
    pub welfare: Option<f64>,
    pub success: Option<f64>,
    pub cost: Option<f64>,
    pub m: Option<usize>,
    /// Expected number of hires.
    pub m_h: Option<f64>,
    #[serde(rename = "D_I")]
    pub d_i: Option<f64>,
    /// Mean realized revenue over the simulated traces.
    pub realized_revenue: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(setting: &str, mechanism: &str, replication: usize, seed: u64, n: usize, err: &Error) -> Self {
        ResultRow {
            setting: setting.to_string(),
            mechanism: mechanism.to_string(),
            replication,
            seed,
            n,
            revenue: None,
            welfare: None,
            success: None,
            cost: None,
            m: None,
            m_h: None,
            d_i: None,
            realized_revenue: None,
            error: Some(err.to_string()),
        }
    }
}

/// Candidate count, expected hires and dispersion index of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMetrics {
    pub m: usize,
    pub m_h: f64,
    pub d_i: f64,
}

impl EfficiencyMetrics {
    pub fn of(strategy: &RecruitmentStrategy, env: &Environment) -> Self {
        EfficiencyMetrics {
            m: strategy.len(),
            m_h: invocation_probabilities(strategy, env).iter().sum(),
            d_i: strategy.dispersion_index(),
        }
    }
}

/// Seed of replication `rep` under `master`.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(rep as u64);
    rng.next_u64()
}

/// Random stream `purpose` of a replication.
pub fn stream(rep_seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    rng.set_stream(purpose);
    rng
}

fn mechanism_stream(kind: MechanismKind) -> u64 {
    STREAM_EXEC + MechanismKind::ALL.iter().position(|&k| k == kind).expect("listed") as u64
}

/// Environment of one replication under `setting`.
pub fn replication_environment(config: &ExperimentConfig, setting: &Setting, rep: usize) -> Result<(u64, Environment)> {
    let seed = replication_seed(config.seed, rep);
    let mut rng = stream(seed, STREAM_ENV);
    let n = config.generator.fixed_n().unwrap_or_else(|| rng.random_range(config.n_min..=config.n_max));
    let env = generate_environment(&config.generator, n, setting.value, setting.deadline, &mut rng)?;
    Ok((seed, env))
}

fn run_one(
    config: &ExperimentConfig,
    setting: &Setting,
    env: &Environment,
    seed: u64,
    rep: usize,
    kind: MechanismKind,
) -> Result<ResultRow> {
    let bids = BidVector::truthful(env);
    let mut pairing = stream(seed, STREAM_PAIRING);
    let (strategy, aligned) = if config.allocation_only {
        (allocate_for(kind, &bids, env, &config.mechanism, &mut pairing)?, None)
    } else {
        let out = run_mechanism(kind, &bids, env, &config.mechanism, &mut pairing)?;
        let aligned = out.payments.aligned(&out.strategy);
        (out.strategy, Some(aligned))
    };
    let metrics = EfficiencyMetrics::of(&strategy, env);
    let (revenue, cost) = match &aligned {
        Some(p) => {
            let e = evaluate(&strategy, p, env);
            (Some(e.expected_revenue), Some(e.expected_cost))
        }
        None => (None, None),
    };
    let realized_revenue = match (&aligned, config.traces) {
        (Some(p), k) if k > 0 => {
            let mut rng = stream(seed, mechanism_stream(kind));
            let total: f64 = (0..k).map(|_| simulate_execution(&strategy, p, env, &mut rng).revenue).sum();
            Some(total / k as f64)
        }
        _ => None,
    };
    Ok(ResultRow {
        setting: setting.label.clone(),
        mechanism: kind.name().to_string(),
        replication: rep,
        seed,
        n: env.n(),
        revenue,
        welfare: Some(social_welfare(&strategy, env)),
        success: Some(success_probability(&strategy, env)),
        cost,
        m: Some(metrics.m),
        m_h: Some(metrics.m_h),
        d_i: Some(metrics.d_i),
        realized_revenue,
        error: None,
    })
}

fn replication_rows(config: &ExperimentConfig, setting: &Setting, rep: usize) -> Vec<ResultRow> {
    let (seed, env) = match replication_environment(config, setting, rep) {
        Ok(x) => x,
        Err(e) => {
            let seed = replication_seed(config.seed, rep);
            return config
                .mechanisms
                .iter()
                .map(|k| ResultRow::failed(&setting.label, k.name(), rep, seed, 0, &e))
                .collect();
        }
    };
    config
        .mechanisms
        .iter()
        .map(|&kind| {
            run_one(config, setting, &env, seed, rep, kind)
                .unwrap_or_else(|e| ResultRow::failed(&setting.label, kind.name(), rep, seed, env.n(), &e))
        })
        .collect()
}

/// Runs `f` on a pool with `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Every mechanism on every replication of every setting, with truthful
/// bids. Rows come back in (setting, replication, mechanism) order whatever
/// the thread count; a failed solve yields a row carrying the error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> = (0..config.settings.len())
        .flat_map(|s| (0..config.replications).map(move |r| (s, r)))
        .collect();
    let chunks = with_jobs(config.jobs, || {
        tasks
            .par_iter()
            .map(|&(s, r)| replication_rows(config, &config.settings[s], r))
            .collect::<Vec<_>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Heuristic against exact search on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRow {
    pub setting: String,
    pub replication: usize,
    pub n: usize,
    /// Virtual objective of the exact and heuristic plans.
    pub optimal: f64,
    pub heuristic: f64,
    pub ratio: f64,
    pub bnb_seconds: f64,
    pub heuristic_seconds: f64,
}

/// Compares heuristic and exact allocation on the virtual objective, which
/// is the instance's expected revenue under the optimal payments. Runs
/// sequentially so the timings are comparable.
pub fn run_heuristic_study(config: &ExperimentConfig) -> Result<Vec<HeuristicRow>> {
    config.validate()?;
    let mut rows = vec![];
    for setting in &config.settings {
        for rep in 0..config.replications {
            let (_, env) = replication_environment(config, setting, rep)?;
            let bids = env.true_costs();
            let weights = env.virtual_costs(&bids)?;
            let solve = |solver| -> Result<(f64, f64)> {
                let a = SearchAllocator::new(solver, Weighting::Virtual, &config.mechanism.time_opt);
                let start = Instant::now();
                let strategy = a.solve(&bids, &env)?.strategy;
                let secs = start.elapsed().as_secs_f64();
                Ok((strategy_objective(&strategy, &weights, &env), secs))
            };
            let (optimal, bnb_seconds) = solve(Solver::BranchAndBound)?;
            let (heuristic, heuristic_seconds) = solve(Solver::Heuristic)?;
            let ratio = if optimal <= 1e-12 { 1.0 } else { heuristic / optimal };
            rows.push(HeuristicRow {
                setting: setting.label.clone(),
                replication: rep,
                n: env.n(),
                optimal,
                heuristic,
                ratio,
                bnb_seconds,
                heuristic_seconds,
            });
        }
    }
    Ok(rows)
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, se, count: n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub setting: String,
    pub mechanism: String,
    pub rows: usize,
    pub errors: usize,
    pub revenue: Option<Stat>,
    pub welfare: Option<Stat>,
    pub success: Option<Stat>,
    pub cost: Option<Stat>,
    pub m: Option<Stat>,
    pub m_h: Option<Stat>,
    #[serde(rename = "D_I")]
    pub d_i: Option<Stat>,
    pub realized_revenue: Option<Stat>,
}

/// Per-(setting, mechanism) means and standard errors, in order of first
/// appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryEntry> {
    let mut keys: Vec<(String, String)> = vec![];
    for r in rows {
        let key = (r.setting.clone(), r.mechanism.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(setting, mechanism)| {
            let group: Vec<&ResultRow> =
                rows.iter().filter(|r| r.setting == setting && r.mechanism == mechanism).collect();
            let stat = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
                let v: Vec<f64> = group.iter().filter_map(|r| f(r)).collect();
                Stat::of(&v)
            };
            SummaryEntry {
                rows: group.len(),
                errors: group.iter().filter(|r| r.error.is_some()).count(),
                revenue: stat(&|r| r.revenue),
                welfare: stat(&|r| r.welfare),
                success: stat(&|r| r.success),
                cost: stat(&|r| r.cost),
                m: stat(&|r| r.m.map(|m| m as f64)),
                m_h: stat(&|r| r.m_h),
                d_i: stat(&|r| r.d_i),
                realized_revenue: stat(&|r| r.realized_revenue),
                setting,
                mechanism,
            }
        })
        .collect()
}

/// Mean of `metric(a) - metric(b)` over replications where both have a
/// value; with common random numbers this is a paired comparison.
pub fn paired_difference(
    rows: &[ResultRow],
    setting: &str,
    a: &str,
    b: &str,
    metric: impl Fn(&ResultRow) -> Option<f64>,
) -> Option<Stat> {
    let find = |mech: &str, rep: usize| {
        rows.iter().find(|r| r.setting == setting && r.mechanism == mech && r.replication == rep)
    };
    let diffs: Vec<f64> = rows
        .iter()
        .filter(|r| r.setting == setting && r.mechanism == a)
        .filter_map(|ra| {
            let rb = find(b, ra.replication)?;
            Some(metric(ra)? - metric(rb)?)
        })
        .collect();
    Stat::of(&diffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            settings: vec![Setting::standard(1).unwrap()],
            n_min: 2,
            n_max: 3,
            replications: 4,
            seed: 11,
            mechanisms: vec![MechanismKind::Wgpa, MechanismKind::Bm1],
            ..Default::default()
        }
    }

    #[test]
    fn standard_settings() {
        let s = Setting::standard(3).unwrap();
        assert_eq!((s.value, s.deadline), (10.0, 1.0));
        assert!(Setting::standard(5).is_err());
    }

    #[test]
    fn rows_are_ordered_and_reproducible() {
        let config = small();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&ExperimentConfig { jobs: Some(1), ..config }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert_eq!(a[0].mechanism, "wgpa");
        assert_eq!(a[1].mechanism, "bm1");
        assert_eq!(a[0].seed, a[1].seed);
        assert_eq!(a[0].n, a[1].n);
        assert!(a.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn adding_a_mechanism_keeps_draws() {
        let base = run_experiment(&small()).unwrap();
        let mut more = small();
        more.mechanisms.insert(0, MechanismKind::Bm3);
        more.traces = 0;
        let rows = run_experiment(&more).unwrap();
        let wgpa: Vec<_> = rows.iter().filter(|r| r.mechanism == "wgpa").cloned().collect();
        let wgpa_base: Vec<_> = base.iter().filter(|r| r.mechanism == "wgpa").cloned().collect();
        assert_eq!(wgpa, wgpa_base);
    }

    #[test]
    fn invalid_configs() {
        assert!(run_experiment(&ExperimentConfig { replications: 0, ..small() }).is_err());
        assert!(run_experiment(&ExperimentConfig { n_min: 5, n_max: 2, ..small() }).is_err());
    }

    #[test]
    fn summary_and_pairs() {
        let rows = run_experiment(&small()).unwrap();
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].revenue.unwrap().count, 4);
        let d = paired_difference(&rows, "setting1", "wgpa", "bm1", |r| r.revenue).unwrap();
        let direct = summary[0].revenue.unwrap().mean - summary[1].revenue.unwrap().mean;
        assert!((d.mean - direct).abs() < 1e-12);
    }

    #[test]
    fn allocation_only_leaves_money_empty() {
        let config = ExperimentConfig { allocation_only: true, ..small() };
        let rows = run_experiment(&config).unwrap();
        assert!(rows.iter().all(|r| r.revenue.is_none() && r.m.is_some()));
    }
}
