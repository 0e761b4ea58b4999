//! Optimal invocation times for a fixed provider ordering.
//!
//! The first recruit is always invoked at time 0: shifting every time earlier
//! by the same amount keeps all invocation probabilities and only raises the
//! success probability. The remaining times are parametrized by gaps
//! `tau_{k+1} = tau_k + g_k` with `g >= 0` and `sum(g) <= D`, searched by
//! projected gradient ascent from several starts and finished with a
//! coordinate pattern search on a fixed step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::objective_from_laws;
use crate::model::DurationModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeOptConfig {
    /// Pattern-search step; `None` means `D / 40`.
    pub grid_step: Option<f64>,
    pub n_starts: usize,
    pub max_iters: usize,
    /// Stop once an iteration improves the objective by less than `tol * V`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for TimeOptConfig {
    fn default() -> Self {
        TimeOptConfig {
            grid_step: None,
            n_starts: 8,
            max_iters: 500,
            tol: 1e-9,
            seed: 0x7157_0a11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeOptResult {
    pub times: Vec<f64>,
    pub objective: f64,
    pub starts_used: usize,
    pub converged: bool,
}

/// Objective of one ordering as a function of its invocation times.
#[derive(Debug, Clone)]
pub struct OrderingProblem<'a> {
    laws: Vec<&'a DurationModel>,
    weights: Vec<f64>,
    rates: Option<Vec<f64>>,
    value: f64,
    deadline: f64,
}

impl<'a> OrderingProblem<'a> {
    pub fn new(laws: Vec<&'a DurationModel>, weights: Vec<f64>, value: f64, deadline: f64) -> Self {
        assert_eq!(laws.len(), weights.len());
        let rates: Option<Vec<f64>> = laws.iter().map(|g| g.exponential_rate()).collect();
        OrderingProblem { laws, weights, rates, value, deadline }
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    pub fn objective(&self, tau: &[f64]) -> f64 {
        match &self.rates {
            Some(rates) => exp_objective(rates, &self.weights, tau, self.value, self.deadline),
            None => objective_from_laws(&self.laws, tau, &self.weights, self.value, self.deadline),
        }
    }

    /// Objective and gradient with respect to the gaps `g_1..g_{m-1}`.
    fn value_and_gap_gradient(&self, gaps: &[f64], tau: &mut [f64], grad: &mut [f64]) -> f64 {
        gaps_to_times(gaps, tau);
        match &self.rates {
            Some(rates) => {
                let f = exp_gradient(rates, &self.weights, tau, self.value, self.deadline, grad);
                // d/dg_k = sum of d/dtau_i over i > k; grad holds d/dtau for all m.
                let mut acc = 0.0;
                for k in (1..tau.len()).rev() {
                    acc += grad[k];
                    grad[k] = acc;
                }
                grad.copy_within(1.., 0);
                f
            }
            None => {
                let f = self.objective(tau);
                self.fd_gap_gradient(gaps, grad);
                f
            }
        }
    }

    fn gap_objective(&self, gaps: &[f64], tau: &mut [f64]) -> f64 {
        gaps_to_times(gaps, tau);
        self.objective(tau)
    }

    /// Central differences, one-sided where the box blocks a side.
    fn fd_gap_gradient(&self, gaps: &[f64], grad: &mut [f64]) {
        let h = 1e-5 * self.deadline;
        let total: f64 = gaps.iter().sum();
        let mut g = gaps.to_vec();
        let mut tau = vec![0.0; gaps.len() + 1];
        for k in 0..gaps.len() {
            let down = gaps[k] >= h;
            let up = total + h <= self.deadline;
            let (lo, hi) = (if down { gaps[k] - h } else { gaps[k] }, if up { gaps[k] + h } else { gaps[k] });
            if hi <= lo {
                grad[k] = 0.0;
                continue;
            }
            g[k] = hi;
            let fh = self.gap_objective(&g, &mut tau);
            g[k] = lo;
            let fl = self.gap_objective(&g, &mut tau);
            g[k] = gaps[k];
            grad[k] = (fh - fl) / (hi - lo);
        }
    }
}

fn gaps_to_times(gaps: &[f64], tau: &mut [f64]) {
    tau[0] = 0.0;
    for (k, g) in gaps.iter().enumerate() {
        tau[k + 1] = tau[k] + g;
    }
}

/// All-exponential objective in O(m): the earlier recruits' joint survival
/// at `tau_k` is `exp(-(tau_k * L - S))` with `L`, `S` running sums of
/// `lambda_j` and `lambda_j * tau_j`.
fn exp_objective(rates: &[f64], weights: &[f64], tau: &[f64], value: f64, deadline: f64) -> f64 {
    let (mut big_l, mut big_s, mut exposure, mut cost) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..rates.len() {
        cost += weights[k] * (-(tau[k] * big_l - big_s)).exp();
        big_l += rates[k];
        big_s += rates[k] * tau[k];
        exposure += rates[k] * (deadline - tau[k]).max(0.0);
    }
    -value * (-exposure).exp_m1() - cost
}

fn exp_gradient(
    rates: &[f64],
    weights: &[f64],
    tau: &[f64],
    value: f64,
    deadline: f64,
    grad: &mut [f64],
) -> f64 {
    let m = rates.len();
    let (mut big_l, mut big_s, mut exposure, mut cost) = (0.0, 0.0, 0.0, 0.0);
    // First pass: per-position cost terms C_k, stored in grad temporarily.
    for k in 0..m {
        let c = weights[k] * (-(tau[k] * big_l - big_s)).exp();
        grad[k] = c;
        cost += c;
        exposure += rates[k] * (deadline - tau[k]).max(0.0);
        big_l += rates[k];
        big_s += rates[k] * tau[k];
    }
    let fail = (-exposure).exp();
    let f = value * (1.0 - fail) - cost;
    // df/dtau_i = -V lambda_i e^{-A} + L_{i-1} C_i - lambda_i sum_{k>i} C_k
    let mut later = 0.0;
    let mut prefix_rate: f64 = rates.iter().sum();
    for i in (0..m).rev() {
        let c_i = grad[i];
        prefix_rate -= rates[i];
        grad[i] = -value * rates[i] * fail + prefix_rate * c_i - rates[i] * later;
        later += c_i;
    }
    f
}

/// Clamps negative gaps and rescales so the gaps sum to at most `D`.
fn project(gaps: &mut [f64], deadline: f64) {
    for g in gaps.iter_mut() {
        if *g < 0.0 {
            *g = 0.0;
        }
    }
    let total: f64 = gaps.iter().sum();
    if total > deadline {
        let scale = deadline / total;
        for g in gaps.iter_mut() {
            *g *= scale;
        }
        // Guard against rounding pushing the sum a hair past D.
        let total: f64 = gaps.iter().sum();
        if total > deadline {
            if let Some(last) = gaps.iter_mut().rev().find(|g| **g > 0.0) {
                *last = (*last - (total - deadline)).max(0.0);
            }
        }
    }
}

struct Ascent {
    gaps: Vec<f64>,
    objective: f64,
}

fn ascend(problem: &OrderingProblem, mut gaps: Vec<f64>, config: &TimeOptConfig) -> Ascent {
    let d = problem.deadline;
    let dim = gaps.len();
    let tol = config.tol * problem.value;
    let mut tau = vec![0.0; dim + 1];
    let mut grad = vec![0.0; dim + 1];
    let mut prev_grad = vec![0.0; dim + 1];
    let mut trial = vec![0.0; dim];
    project(&mut gaps, d);
    let mut f = problem.value_and_gap_gradient(&gaps, &mut tau, &mut grad);
    let mut step = d;
    for _ in 0..config.max_iters {
        let mut accepted = None;
        for _ in 0..60 {
            for k in 0..dim {
                trial[k] = gaps[k] + step * grad[k];
            }
            project(&mut trial, d);
            let predicted: f64 = (0..dim).map(|k| grad[k] * (trial[k] - gaps[k])).sum();
            let ft = problem.gap_objective(&trial, &mut tau);
            if ft >= f + 1e-4 * predicted && ft >= f {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
            if step < 1e-14 * d {
                break;
            }
        }
        let Some(ft) = accepted else { break };
        let improvement = ft - f;
        prev_grad[..dim].copy_from_slice(&grad[..dim]);
        // s = trial - gaps, kept in trial until gaps is overwritten.
        for k in 0..dim {
            std::mem::swap(&mut gaps[k], &mut trial[k]);
            trial[k] = gaps[k] - trial[k];
        }
        f = problem.value_and_gap_gradient(&gaps, &mut tau, &mut grad);
        if improvement < tol {
            break;
        }
        // Barzilai-Borwein step for ascent: s.s / s.y with y = g_prev - g.
        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..dim {
            ss += trial[k] * trial[k];
            sy += trial[k] * (prev_grad[k] - grad[k]);
        }
        step = if sy > 1e-300 { (ss / sy).min(1e6 * d) } else { (step * 4.0).min(1e6 * d) };
    }
    Ascent { gaps, objective: f }
}

/// Coordinate search over `tau_2..tau_m` with moves of `+-step`, clamped to
/// the neighbouring times, until no move improves.
fn polish(problem: &OrderingProblem, tau: &mut [f64], step: f64) -> f64 {
    let m = tau.len();
    let d = problem.deadline;
    let mut best = problem.objective(tau);
    for _ in 0..10_000 {
        let mut improved = false;
        for k in 1..m {
            let lo = tau[k - 1];
            let hi = if k + 1 < m { tau[k + 1] } else { d };
            let current = tau[k];
            for cand in [current - step, current + step] {
                let cand = cand.clamp(lo, hi);
                if cand == current {
                    continue;
                }
                tau[k] = cand;
                let f = problem.objective(tau);
                if f > best + 1e-15 * problem.value {
                    best = f;
                    improved = true;
                    break;
                }
                tau[k] = current;
            }
        }
        if !improved {
            break;
        }
    }
    best
}

/// Best invocation times found for `problem`. Deterministic given `config`.
///
/// All-exponential orderings are solved by projected Newton: with
/// `u_k = L_k * g_k` (`L_k` the summed rate of the first `k` recruits) the
/// objective is `V - V e^{-L_m D + sum a_k u_k} - sum w_k e^{-U_{k-1}}` with
/// `a_k = L_m / L_k - 1 >= 0` and `U` the running sum of `u`, which is
/// concave. Other laws use multi-start projected gradient ascent.
pub fn optimize_problem(problem: &OrderingProblem, config: &TimeOptConfig) -> TimeOptResult {
    let m = problem.len();
    if m == 0 {
        return TimeOptResult { times: vec![], objective: 0.0, starts_used: 0, converged: true };
    }
    if m == 1 {
        let times = vec![0.0];
        let objective = problem.objective(&times);
        return TimeOptResult { times, objective, starts_used: 1, converged: true };
    }
    match &problem.rates {
        Some(rates) => newton_exponential(problem, rates, config),
        None => multi_start(problem, config),
    }
}

/// Multi-start projected gradient ascent followed by a pattern-search polish.
pub fn multi_start(problem: &OrderingProblem, config: &TimeOptConfig) -> TimeOptResult {
    let m = problem.len();
    let d = problem.deadline;
    if m <= 1 {
        return optimize_problem(problem, config);
    }
    let dim = m - 1;
    let n_starts = config.n_starts.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; dim], vec![d / m as f64; dim]];
    while starts.len() < n_starts {
        let mut t: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * d).collect();
        t.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        let gaps = t
            .iter()
            .map(|&x| {
                let g = x - prev;
                prev = x;
                g
            })
            .collect();
        starts.push(gaps);
    }

    let mut results: Vec<Ascent> = starts.into_iter().map(|s| ascend(problem, s, config)).collect();
    let mut order: Vec<usize> = (0..results.len()).collect();
    // Best objective first; ties keep the lowest start index.
    order.sort_by(|&a, &b| results[b].objective.total_cmp(&results[a].objective).then(a.cmp(&b)));
    let converged = (results[order[0]].objective - results[order[1]].objective)
        <= 1e-4 * problem.value;
    let best = std::mem::replace(&mut results[order[0]], Ascent { gaps: vec![], objective: 0.0 });

    let mut times = vec![0.0; m];
    gaps_to_times(&best.gaps, &mut times);
    finish(problem, times, config, n_starts, converged)
}

fn finish(
    problem: &OrderingProblem,
    mut times: Vec<f64>,
    config: &TimeOptConfig,
    starts_used: usize,
    converged: bool,
) -> TimeOptResult {
    let d = problem.deadline;
    for t in times.iter_mut() {
        *t = t.clamp(0.0, d);
    }
    let step = config.grid_step.unwrap_or(d / 40.0);
    polish(problem, &mut times, step);
    let objective = problem.objective(&times);
    TimeOptResult { times, objective, starts_used, converged }
}

struct ExpForm<'p> {
    /// Cumulative rates `L_1..L_{m-1}`.
    cum: Vec<f64>,
    a: Vec<f64>,
    weights: &'p [f64],
    value: f64,
    /// `V e^{-L_m D}`.
    base_fail: f64,
}

impl<'p> ExpForm<'p> {
    fn new(rates: &[f64], weights: &'p [f64], value: f64, deadline: f64) -> Self {
        let mut cum = Vec::with_capacity(rates.len());
        let mut total = 0.0;
        for r in rates {
            total += r;
            cum.push(total);
        }
        let big_l = cum.pop().unwrap();
        ExpForm {
            a: cum.iter().map(|l| big_l / l - 1.0).collect(),
            cum,
            weights,
            value,
            base_fail: value * (-big_l * deadline).exp(),
        }
    }

    /// Objective and `V * P_fail`; fills the gradient and the suffix cost sums
    /// `S_j = sum_{k > j} C_k` when asked.
    fn eval(&self, u: &[f64], grad: Option<(&mut [f64], &mut [f64])>) -> (f64, f64) {
        let dim = u.len();
        let lin: f64 = (0..dim).map(|j| self.a[j] * u[j]).sum();
        let fail = self.base_fail * lin.exp();
        let mut cum_u = 0.0;
        let mut cost = self.weights[0];
        match grad {
            None => {
                for j in 0..dim {
                    cum_u += u[j];
                    cost += self.weights[j + 1] * (-cum_u).exp();
                }
            }
            Some((g, suffix)) => {
                for j in 0..dim {
                    cum_u += u[j];
                    let c = self.weights[j + 1] * (-cum_u).exp();
                    suffix[j] = c;
                    cost += c;
                }
                let mut acc = 0.0;
                for j in (0..dim).rev() {
                    acc += suffix[j];
                    suffix[j] = acc;
                    g[j] = -fail * self.a[j] + acc;
                }
            }
        }
        (self.value - fail - cost, fail)
    }

    fn span(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.cum).map(|(x, l)| x / l).sum()
    }

    fn times(&self, u: &[f64]) -> Vec<f64> {
        let mut times = Vec::with_capacity(u.len() + 1);
        times.push(0.0);
        let mut t = 0.0;
        for (x, l) in u.iter().zip(&self.cum) {
            t += x / l;
            times.push(t);
        }
        times
    }

    /// Projected Newton over `u >= 0`, ignoring the deadline on `tau_m`.
    fn maximize(&self, config: &TimeOptConfig) -> (Vec<f64>, bool) {
        let dim = self.a.len();
        let mut u = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        let mut suffix = vec![0.0; dim];
        let mut trial = vec![0.0; dim];
        let mut free: Vec<usize> = Vec::with_capacity(dim);
        let mut hess = vec![0.0; dim * dim];
        let mut work = vec![0.0; dim * dim];
        let mut g_free = Vec::with_capacity(dim);
        let mut dir = Vec::with_capacity(dim);
        let (mut f, mut fail) = self.eval(&u, Some((&mut grad, &mut suffix)));
        for _ in 0..config.max_iters {
            free.clear();
            free.extend((0..dim).filter(|&j| u[j] > 1e-13 || grad[j] > 0.0));
            if free.is_empty() {
                return (u, true);
            }
            // Negated Hessian on the free block: fail * a a^T + S_{max(i, j)}.
            let nf = free.len();
            for (p, &i) in free.iter().enumerate() {
                for (q, &j) in free.iter().enumerate() {
                    hess[p * nf + q] = fail * self.a[i] * self.a[j] + suffix[i.max(j)];
                }
            }
            g_free.clear();
            g_free.extend(free.iter().map(|&j| grad[j]));
            let solved = solve_regularized(&hess[..nf * nf], &g_free, nf, &mut work[..nf * nf], &mut dir);
            let dir = solved.then_some(&dir);
            if let Some(dv) = dir {
                let decrement: f64 = dv.iter().zip(&g_free).map(|(x, g)| x * g).sum();
                if decrement < 1e-13 * self.value {
                    return (u, true);
                }
            }
            let scale = (0..nf).map(|p| hess[p * nf + p]).fold(0.0, f64::max).max(1e-300);
            let mut accepted = false;
            for (candidate, t_init) in [(dir, 1.0), (Some(&g_free), 1.0 / scale)] {
                let Some(dv) = candidate else { continue };
                let mut t = t_init;
                for _ in 0..60 {
                    trial.copy_from_slice(&u);
                    for (p, &j) in free.iter().enumerate() {
                        trial[j] = (trial[j] + t * dv[p]).max(0.0);
                    }
                    let predicted: f64 = (0..dim).map(|j| grad[j] * (trial[j] - u[j])).sum();
                    let (ft, _) = self.eval(&trial, None);
                    if ft > f && ft >= f + 1e-4 * predicted {
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if accepted {
                    break;
                }
            }
            if !accepted {
                return (u, true);
            }
            let previous = f;
            u.copy_from_slice(&trial);
            (f, fail) = self.eval(&u, Some((&mut grad, &mut suffix)));
            if f - previous < config.tol * self.value * 1e-6 {
                return (u, true);
            }
        }
        (u, false)
    }
}

/// Optimal times for an all-exponential ordering. If the bound-constrained
/// optimum would invoke the last recruit after the deadline, concavity puts
/// the true optimum at `tau_m = D`; fixing it there leaves the shorter
/// ordering with value `V + w_m`.
fn exponential_times(
    rates: &[f64],
    weights: &[f64],
    value: f64,
    deadline: f64,
    config: &TimeOptConfig,
) -> (Vec<f64>, bool) {
    let m = rates.len();
    if m == 1 {
        return (vec![0.0], true);
    }
    let form = ExpForm::new(rates, weights, value, deadline);
    let (u, converged) = form.maximize(config);
    if form.span(&u) <= deadline {
        return (form.times(&u), converged);
    }
    let (mut times, inner) =
        exponential_times(&rates[..m - 1], &weights[..m - 1], value + weights[m - 1], deadline, config);
    times.push(deadline);
    (times, converged && inner)
}

fn newton_exponential(problem: &OrderingProblem, rates: &[f64], config: &TimeOptConfig) -> TimeOptResult {
    let m = rates.len();
    let d = problem.deadline;
    let (mut times, converged) = exponential_times(rates, &problem.weights, problem.value, d, config);
    if converged {
        let objective = problem.objective(&times);
        return TimeOptResult { times, objective, starts_used: 1, converged };
    }
    // Fallback for a stalled solve: the all-zeros and equally spaced plans
    // are candidates, then pattern search.
    let equal: Vec<f64> = (0..m).map(|k| d * k as f64 / m as f64).collect();
    for seed in [vec![0.0; m], equal] {
        if problem.objective(&seed) > problem.objective(&times) {
            times = seed;
        }
    }
    finish(problem, times, config, 1, converged)
}

/// Solves `a x = b` into `x`, adding diagonal regularization if `a` is only
/// semidefinite. `work` must hold `n * n` values.
fn solve_regularized(a: &[f64], b: &[f64], n: usize, work: &mut [f64], x: &mut Vec<f64>) -> bool {
    let scale = (0..n).map(|p| a[p * n + p]).fold(0.0, f64::max).max(1e-300);
    let mut mu = 0.0;
    for _ in 0..8 {
        work.copy_from_slice(a);
        for p in 0..n {
            work[p * n + p] += mu;
        }
        x.clear();
        x.extend_from_slice(b);
        if cholesky_solve(work, x, n) {
            return true;
        }
        mu = if mu == 0.0 { 1e-12 * scale } else { mu * 100.0 };
    }
    false
}

/// Cholesky solve of `a x = b` for a small symmetric positive definite `a`
/// (row-major, `n x n`). Returns false if `a` is not numerically definite.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) {
            return false;
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / diag;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * n + k] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= a[k * n + i] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    true
}

/// Convenience wrapper taking laws and per-position weights directly.
pub fn optimize_times(
    laws: Vec<&DurationModel>,
    weights: Vec<f64>,
    value: f64,
    deadline: f64,
    config: &TimeOptConfig,
) -> TimeOptResult {
    optimize_problem(&OrderingProblem::new(laws, weights, value, deadline), config)
}
