//! Domain types: the task, providers with their delivery-time and cost laws,
//! recruitment strategies and bid vectors.
//!
//! Every type here is immutable once constructed. Sampling functions take the
//! caller's random source; nothing in this module holds global state.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Grid size used to validate regularity when an environment is built.
pub const REGULARITY_GRID: usize = 1024;

/// Slack allowed when checking that a value lies inside a closed support.
const SUPPORT_SLACK: f64 = 1e-12;

/// Relative slack when comparing elapsed time against a deterministic delay.
const DELAY_SLACK: f64 = 1e-12;

/// 1-based provider index, mirroring `{1, ..., n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProviderId(pub usize);

impl ProviderId {
    pub fn from_index(index: usize) -> Self {
        ProviderId(index + 1)
    }

    /// Zero-based position in `Environment::providers`.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub value: f64,
    pub deadline: f64,
}

impl Task {
    pub fn new(value: f64, deadline: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidModel(format!("task value must be positive, got {value}")));
        }
        if !(deadline > 0.0 && deadline.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "task deadline must be positive, got {deadline}"
            )));
        }
        Ok(Task { value, deadline })
    }
}

/// Law of a provider's delivery time `X`, evaluated through its CDF `G(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DurationModel {
    Exponential {
        rate: f64,
    },
    Deterministic {
        delay: f64,
    },
    FiniteMixture {
        weights: Vec<f64>,
        components: Vec<DurationModel>,
    },
    /// Completion time of several independent attempts started together:
    /// `G(t) = 1 - prod(1 - G_k(t))`.
    FirstOf {
        components: Vec<DurationModel>,
    },
}

impl DurationModel {
    pub fn exponential(rate: f64) -> Self {
        DurationModel::Exponential { rate }
    }

    pub fn deterministic(delay: f64) -> Self {
        DurationModel::Deterministic { delay }
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<DurationModel>) -> Result<Self> {
        let model = DurationModel::FiniteMixture { weights, components };
        model.validate()?;
        Ok(model)
    }

    /// Fastest-of law for a set of providers launched at the same instant.
    /// Collapses to a single exponential when every component is exponential.
    pub fn first_of<'a, I>(models: I) -> Self
    where
        I: IntoIterator<Item = &'a DurationModel>,
    {
        let components: Vec<DurationModel> = models.into_iter().cloned().collect();
        if components.len() == 1 {
            return components.into_iter().next().unwrap();
        }
        let total_rate: Option<f64> = components.iter().map(|m| m.exponential_rate()).sum();
        match total_rate {
            Some(rate) => DurationModel::Exponential { rate },
            None => DurationModel::FirstOf { components },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DurationModel::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "exponential rate must be positive, got {rate}"
                    )));
                }
            }
            DurationModel::Deterministic { delay } => {
                if !(*delay >= 0.0 && delay.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "deterministic delay must be non-negative, got {delay}"
                    )));
                }
            }
            DurationModel::FiniteMixture { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(Error::InvalidModel(
                        "mixture needs one positive weight per component".into(),
                    ));
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::InvalidModel("mixture weights must be positive".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "mixture weights must sum to 1, got {total}"
                    )));
                }
                components.iter().try_for_each(DurationModel::validate)?;
            }
            DurationModel::FirstOf { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidModel("first_of needs at least one component".into()));
                }
                components.iter().try_for_each(DurationModel::validate)?;
            }
        }
        Ok(())
    }

    /// `G(t) = P(X <= t)`, with `G(t) = 0` for `t <= 0`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            DurationModel::Exponential { rate } => -(-rate * t).exp_m1(),
            DurationModel::Deterministic { delay } => {
                // Tolerate rounding when t is computed as a difference of times.
                if t >= *delay - DELAY_SLACK * delay.max(1.0) {
                    1.0
                } else {
                    0.0
                }
            }
            DurationModel::FiniteMixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(t))
                .sum::<f64>()
                .min(1.0),
            DurationModel::FirstOf { components } => {
                1.0 - components.iter().map(|c| 1.0 - c.cdf(t)).product::<f64>()
            }
        }
    }

    /// `1 - G(t)`, computed without cancellation for exponentials.
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            DurationModel::Exponential { rate } if t > 0.0 => (-rate * t).exp(),
            _ => 1.0 - self.cdf(t),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DurationModel::Exponential { rate } => {
                let u: f64 = rng.random();
                -(-u).ln_1p() / rate
            }
            DurationModel::Deterministic { delay } => *delay,
            DurationModel::FiniteMixture { weights, components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    acc += w;
                    if u < acc {
                        return c.sample(rng);
                    }
                }
                components.last().expect("validated mixture").sample(rng)
            }
            DurationModel::FirstOf { components } => components
                .iter()
                .map(|c| c.sample(rng))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn exponential_rate(&self) -> Option<f64> {
        match self {
            DurationModel::Exponential { rate } => Some(*rate),
            _ => None,
        }
    }

    /// Returns a copy with every exponential rate replaced through `f`.
    pub fn map_rates(&self, f: &mut impl FnMut(f64) -> f64) -> DurationModel {
        match self {
            DurationModel::Exponential { rate } => DurationModel::Exponential { rate: f(*rate) },
            DurationModel::Deterministic { delay } => DurationModel::Deterministic { delay: *delay },
            DurationModel::FiniteMixture { weights, components } => DurationModel::FiniteMixture {
                weights: weights.clone(),
                components: components.iter().map(|c| c.map_rates(f)).collect(),
            },
            DurationModel::FirstOf { components } => DurationModel::FirstOf {
                components: components.iter().map(|c| c.map_rates(f)).collect(),
            },
        }
    }
}

/// A provider's private-cost distribution `F` on `[lo, c_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum CostModel {
    Uniform {
        lo: f64,
        hi: f64,
    },
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        lo: f64,
        hi: f64,
    },
    /// Piecewise-constant density: bin `k` spans `edges[k]..edges[k + 1]` and
    /// carries probability mass proportional to `weights[k]`.
    Histogram {
        edges: Vec<f64>,
        weights: Vec<f64>,
    },
}

fn standard_normal() -> Normal {
    Normal::standard()
}

impl CostModel {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let m = CostModel::Uniform { lo, hi };
        m.validate()?;
        Ok(m)
    }

    pub fn truncated_normal(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        let m = CostModel::TruncatedNormal { mu, sigma, lo, hi };
        m.validate()?;
        Ok(m)
    }

    pub fn histogram(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = CostModel::Histogram { edges, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lo(), self.c_max());
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "cost support must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        match self {
            CostModel::Uniform { .. } => {}
            CostModel::TruncatedNormal { mu, sigma, .. } => {
                if !(*sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "truncated normal needs finite mu and sigma > 0, got ({mu}, {sigma})"
                    )));
                }
            }
            CostModel::Histogram { edges, weights } => {
                if edges.len() < 2 || weights.len() + 1 != edges.len() {
                    return Err(Error::InvalidModel(
                        "histogram needs k + 1 edges for k weights".into(),
                    ));
                }
                if edges.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidModel("histogram edges must increase".into()));
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::InvalidModel("histogram weights must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn lo(&self) -> f64 {
        match self {
            CostModel::Uniform { lo, .. } | CostModel::TruncatedNormal { lo, .. } => *lo,
            CostModel::Histogram { edges, .. } => edges[0],
        }
    }

    /// Upper support endpoint.
    pub fn c_max(&self) -> f64 {
        match self {
            CostModel::Uniform { hi, .. } | CostModel::TruncatedNormal { hi, .. } => *hi,
            CostModel::Histogram { edges, .. } => *edges.last().unwrap(),
        }
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.lo() - SUPPORT_SLACK && c <= self.c_max() + SUPPORT_SLACK
    }

    pub fn cdf(&self, c: f64) -> f64 {
        let (lo, hi) = (self.lo(), self.c_max());
        if c <= lo {
            return 0.0;
        }
        if c >= hi {
            return 1.0;
        }
        match self {
            CostModel::Uniform { lo, hi } => (c - lo) / (hi - lo),
            CostModel::TruncatedNormal { mu, sigma, lo, hi } => {
                let n = standard_normal();
                let a = n.cdf((lo - mu) / sigma);
                let b = n.cdf((hi - mu) / sigma);
                (n.cdf((c - mu) / sigma) - a) / (b - a)
            }
            CostModel::Histogram { edges, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    let (a, b) = (edges[k], edges[k + 1]);
                    if c >= b {
                        acc += w;
                    } else {
                        acc += w * (c - a) / (b - a);
                        break;
                    }
                }
                acc / total
            }
        }
    }

    /// Density, right-continuous at histogram edges and positive on the closed support.
    pub fn pdf(&self, c: f64) -> f64 {
        if !self.contains(c) {
            return 0.0;
        }
        match self {
            CostModel::Uniform { lo, hi } => 1.0 / (hi - lo),
            CostModel::TruncatedNormal { mu, sigma, lo, hi } => {
                let n = standard_normal();
                let z = n.cdf((hi - mu) / sigma) - n.cdf((lo - mu) / sigma);
                n.pdf((c - mu) / sigma) / (sigma * z)
            }
            CostModel::Histogram { edges, weights } => {
                let total: f64 = weights.iter().sum();
                let k = histogram_bin(edges, c);
                weights[k] / (total * (edges[k + 1] - edges[k]))
            }
        }
    }

    /// Inverse CDF on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            CostModel::Uniform { lo, hi } => lo + u * (hi - lo),
            CostModel::TruncatedNormal { mu, sigma, lo, hi } => {
                let n = standard_normal();
                let a = n.cdf((lo - mu) / sigma);
                let b = n.cdf((hi - mu) / sigma);
                (mu + sigma * n.inverse_cdf(a + u * (b - a))).clamp(*lo, *hi)
            }
            CostModel::Histogram { edges, weights } => {
                let total: f64 = weights.iter().sum();
                let target = u * total;
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    if acc + w >= target {
                        let frac = (target - acc) / w;
                        return edges[k] + frac * (edges[k + 1] - edges[k]);
                    }
                    acc += w;
                }
                *edges.last().unwrap()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random())
    }

    /// `phi(c) = c + F(c) / f(c)`.
    pub fn virtual_cost(&self, c: f64) -> Result<f64> {
        if !self.contains(c) {
            return Err(Error::InvalidBids(format!(
                "cost {c} outside support [{}, {}]",
                self.lo(),
                self.c_max()
            )));
        }
        let c = c.clamp(self.lo(), self.c_max());
        let density = self.pdf(c);
        if !(density > 0.0) {
            return Err(Error::DegenerateDensity(c));
        }
        Ok(c + self.cdf(c) / density)
    }

    /// True iff the virtual cost is nondecreasing over `grid_size` equally
    /// spaced points spanning the support.
    pub fn check_regularity(&self, grid_size: usize) -> bool {
        let grid_size = grid_size.max(2);
        let (lo, hi) = (self.lo(), self.c_max());
        let mut prev = f64::NEG_INFINITY;
        for k in 0..grid_size {
            let c = lo + (hi - lo) * k as f64 / (grid_size - 1) as f64;
            let phi = match self.virtual_cost(c) {
                Ok(v) => v,
                Err(_) => return false,
            };
            if phi < prev - 1e-12 * (1.0 + prev.abs()) {
                return false;
            }
            prev = phi;
        }
        true
    }
}

fn histogram_bin(edges: &[f64], c: f64) -> usize {
    let bins = edges.len() - 1;
    (0..bins).find(|&k| c < edges[k + 1]).unwrap_or(bins - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provider {
    pub id: ProviderId,
    pub duration: DurationModel,
    pub cost_model: CostModel,
    pub true_cost: f64,
}

/// The task plus the providers able to perform it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub task: Task,
    pub providers: Vec<Provider>,
}

impl Environment {
    /// Validates ids, models, true costs and regularity of every cost law.
    pub fn new(task: Task, providers: Vec<Provider>) -> Result<Self> {
        Task::new(task.value, task.deadline)?;
        for (k, p) in providers.iter().enumerate() {
            if p.id != ProviderId::from_index(k) {
                return Err(Error::InvalidModel(format!(
                    "provider ids must be 1..=n in order; position {} has id {}",
                    k + 1,
                    p.id
                )));
            }
            p.duration.validate()?;
            p.cost_model.validate()?;
            if !p.cost_model.contains(p.true_cost) {
                return Err(Error::InvalidModel(format!(
                    "true cost {} of provider {} outside its support",
                    p.true_cost, p.id
                )));
            }
            if !p.cost_model.check_regularity(REGULARITY_GRID) {
                return Err(Error::NotRegular(p.id));
            }
        }
        Ok(Environment { task, providers })
    }

    /// Builds providers from parallel lists, numbering them from 1.
    pub fn from_parts(
        task: Task,
        durations: Vec<DurationModel>,
        cost_models: Vec<CostModel>,
        true_costs: Vec<f64>,
    ) -> Result<Self> {
        if durations.len() != cost_models.len() || durations.len() != true_costs.len() {
            return Err(Error::InvalidModel("provider field lists differ in length".into()));
        }
        let providers = durations
            .into_iter()
            .zip(cost_models)
            .zip(true_costs)
            .enumerate()
            .map(|(k, ((duration, cost_model), true_cost))| Provider {
                id: ProviderId::from_index(k),
                duration,
                cost_model,
                true_cost,
            })
            .collect();
        Environment::new(task, providers)
    }

    pub fn n(&self) -> usize {
        self.providers.len()
    }

    pub fn value(&self) -> f64 {
        self.task.value
    }

    pub fn deadline(&self) -> f64 {
        self.task.deadline
    }

    pub fn provider(&self, id: ProviderId) -> &Provider {
        &self.providers[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = ProviderId> + '_ {
        self.providers.iter().map(|p| p.id)
    }

    pub fn true_costs(&self) -> Vec<f64> {
        self.providers.iter().map(|p| p.true_cost).collect()
    }

    pub fn durations(&self) -> Vec<&DurationModel> {
        self.providers.iter().map(|p| &p.duration).collect()
    }

    /// Virtual costs `phi_i(b_i)` of a bid vector.
    pub fn virtual_costs(&self, bids: &[f64]) -> Result<Vec<f64>> {
        self.check_bids(bids)?;
        self.providers
            .iter()
            .zip(bids)
            .map(|(p, &b)| p.cost_model.virtual_cost(b))
            .collect()
    }

    pub fn check_bids(&self, bids: &[f64]) -> Result<()> {
        if bids.len() != self.n() {
            return Err(Error::InvalidBids(format!(
                "expected {} bids, got {}",
                self.n(),
                bids.len()
            )));
        }
        for (p, &b) in self.providers.iter().zip(bids) {
            if !p.cost_model.contains(b) {
                return Err(Error::InvalidBids(format!(
                    "bid {b} of provider {} outside [{}, {}]",
                    p.id,
                    p.cost_model.lo(),
                    p.cost_model.c_max()
                )));
            }
        }
        Ok(())
    }

    pub fn with_true_costs(&self, costs: &[f64]) -> Result<Self> {
        let mut env = self.clone();
        if costs.len() != env.n() {
            return Err(Error::InvalidModel("cost vector length mismatch".into()));
        }
        for (p, &c) in env.providers.iter_mut().zip(costs) {
            if !p.cost_model.contains(c) {
                return Err(Error::InvalidModel(format!("cost {c} outside support")));
            }
            p.true_cost = c;
        }
        Ok(env)
    }

    /// Same environment with replaced delivery-time laws (planning beliefs).
    pub fn with_durations(&self, durations: Vec<DurationModel>) -> Result<Self> {
        if durations.len() != self.n() {
            return Err(Error::InvalidModel("duration list length mismatch".into()));
        }
        let mut env = self.clone();
        for (p, d) in env.providers.iter_mut().zip(durations) {
            d.validate()?;
            p.duration = d;
        }
        Ok(env)
    }

    /// Draws fresh private costs from every provider's cost law.
    pub fn resample_costs<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut env = self.clone();
        for p in &mut env.providers {
            p.true_cost = p.cost_model.sample(rng);
        }
        env
    }

    pub fn from_json_str<R: Rng + ?Sized>(text: &str, rng: &mut R) -> Result<Self> {
        let file: EnvironmentFile = serde_json::from_str(text)?;
        file.into_environment(rng)
    }

    pub fn load<R: Rng + ?Sized>(path: &Path, rng: &mut R) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, rng)
    }

    pub fn to_file(&self) -> EnvironmentFile {
        EnvironmentFile {
            task: self.task,
            providers: self
                .providers
                .iter()
                .map(|p| ProviderSpec {
                    duration: p.duration.clone(),
                    cost_model: p.cost_model.clone(),
                    true_cost: Some(p.true_cost),
                })
                .collect(),
        }
    }
}

/// On-disk environment description. A missing `true_cost` is drawn from the
/// provider's cost law at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentFile {
    pub task: Task,
    pub providers: Vec<ProviderSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub duration: DurationModel,
    pub cost_model: CostModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_cost: Option<f64>,
}

impl EnvironmentFile {
    pub fn into_environment<R: Rng + ?Sized>(self, rng: &mut R) -> Result<Environment> {
        let task = Task::new(self.task.value, self.task.deadline)?;
        let providers = self
            .providers
            .into_iter()
            .enumerate()
            .map(|(k, spec)| {
                spec.cost_model.validate()?;
                let true_cost = match spec.true_cost {
                    Some(c) => c,
                    None => spec.cost_model.sample(rng),
                };
                Ok(Provider {
                    id: ProviderId::from_index(k),
                    duration: spec.duration,
                    cost_model: spec.cost_model,
                    true_cost,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Environment::new(task, providers)
    }
}

/// Contingent plan: provider `s_k` is recruited at `tau_k` unless the task
/// has already been completed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecruitmentStrategy {
    entries: Vec<(ProviderId, f64)>,
}

impl RecruitmentStrategy {
    pub fn empty() -> Self {
        RecruitmentStrategy::default()
    }

    /// Rejects duplicate providers, decreasing times and times outside `[0, deadline]`.
    pub fn new(entries: Vec<(ProviderId, f64)>, deadline: f64) -> Result<Self> {
        for (k, &(id, tau)) in entries.iter().enumerate() {
            if id.0 == 0 {
                return Err(Error::InvalidStrategy("provider ids start at 1".into()));
            }
            if !(0.0..=deadline).contains(&tau) {
                return Err(Error::InvalidStrategy(format!(
                    "invocation time {tau} of provider {id} outside [0, {deadline}]"
                )));
            }
            if entries[..k].iter().any(|&(other, _)| other == id) {
                return Err(Error::InvalidStrategy(format!("provider {id} listed twice")));
            }
            if k > 0 && tau < entries[k - 1].1 {
                return Err(Error::InvalidStrategy("invocation times must be nondecreasing".into()));
            }
        }
        Ok(RecruitmentStrategy { entries })
    }

    /// Like [`RecruitmentStrategy::new`] but also checks ids against the environment.
    pub fn for_env(entries: Vec<(ProviderId, f64)>, env: &Environment) -> Result<Self> {
        if let Some(&(id, _)) = entries.iter().find(|(id, _)| id.0 == 0 || id.0 > env.n()) {
            return Err(Error::InvalidStrategy(format!("unknown provider {id}")));
        }
        RecruitmentStrategy::new(entries, env.deadline())
    }

    pub fn entries(&self) -> &[(ProviderId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn providers(&self) -> impl Iterator<Item = ProviderId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    /// Zero-based position of `id` in the ordering, if present.
    pub fn position(&self, id: ProviderId) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == id)
    }

    pub fn contains(&self, id: ProviderId) -> bool {
        self.position(id).is_some()
    }

    /// Sum of invocation times.
    pub fn dispersion_index(&self) -> f64 {
        self.times().sum()
    }
}

impl fmt::Display for RecruitmentStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(id, tau)| format!("({id}, {tau:.4})"))
            .collect();
        write!(f, "{}", parts.join(" -> "))
    }
}

/// One bid per provider, each inside that provider's cost support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BidVector(Vec<f64>);

impl BidVector {
    pub fn new(bids: Vec<f64>, env: &Environment) -> Result<Self> {
        env.check_bids(&bids)?;
        Ok(BidVector(bids))
    }

    /// Truthful reports.
    pub fn truthful(env: &Environment) -> Self {
        BidVector(env.true_costs())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, id: ProviderId) -> f64 {
        self.0[id.index()]
    }

    /// Copy with provider `id`'s bid replaced.
    pub fn with_bid(&self, id: ProviderId, bid: f64) -> Self {
        let mut v = self.0.clone();
        v[id.index()] = bid;
        BidVector(v)
    }
}
